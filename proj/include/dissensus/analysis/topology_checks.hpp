#pragma once

#include "../engine.hpp"
#include "replay.hpp"
#include "report.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dissensus::analysis {

enum class ShapeFlag { Complete, Hole, Chain };

inline const char* to_string(ShapeFlag f) {
    switch (f) {
        case ShapeFlag::Complete: return "complete";
        case ShapeFlag::Hole: return "hole";
        case ShapeFlag::Chain: return "chain";
    }
    return "?";
}

inline bool has_flag(const TopologyShape& s, ShapeFlag f) {
    switch (f) {
        case ShapeFlag::Complete: return s.complete;
        case ShapeFlag::Hole: return s.hole;
        case ShapeFlag::Chain: return s.chain;
    }
    return false;
}

// Smallest agent count at which the shape is defined.
inline std::size_t min_agents(ShapeFlag f) {
    switch (f) {
        case ShapeFlag::Complete: return 1;
        case ShapeFlag::Hole: return 3;
        case ShapeFlag::Chain: return 2;
    }
    return 1;
}

// Asserts the flagged shape at every epoch. Hole and chain are only claimed
// under the partition duplication rule, completeness under the full rule.
inline InvariantReport check_topology_invariance(const Trace& t, ShapeFlag expected,
                                                 const std::vector<EpochSnapshot>* epochs = nullptr) {
    CheckBook book;
    const auto id = book.add(std::string("shape-invariance:") + to_string(expected));
    const auto needed = expected == ShapeFlag::Complete ? DuplicationRule::Full : DuplicationRule::Partition;
    if (t.config.rules.duplication != needed) {
        book.skip(id, std::string("needs the ") + (needed == DuplicationRule::Full ? "full" : "partition") +
                          " duplication rule");
        return std::move(book).finish();
    }
    std::vector<EpochSnapshot> own;
    if (!epochs) {
        own = replay(t);
        epochs = &own;
    }
    const std::size_t floor = min_agents(expected);
    std::size_t below = 0;
    std::int64_t first_below = -1;
    for (const auto& e : *epochs) {
        if (e.agents < floor) {
            if (below++ == 0) first_below = e.epoch;
            continue;
        }
        book.expect(id, has_flag(e.shape, expected), e.tick, e.epoch,
                    [&] { return "shape is " + to_string(e.shape) + " with n=" + std::to_string(e.agents); });
    }
    if (below > 0)
        book.note(id, std::to_string(below) + " epoch(s) from epoch " + std::to_string(first_below) + " had n < " +
                          std::to_string(floor) + ", where a " + to_string(expected) + " is undefined; not asserted");
    return std::move(book).finish();
}

struct DensityPoint {
    std::int64_t epoch = 0;
    std::int64_t tick = 0;
    std::size_t edges = 0;
    std::int64_t cycles = 0;
};

// Per agent count, the (epoch, |E|, cycles) sequence from the warm-up epoch on.
using DensitySeries = std::map<std::size_t, std::vector<DensityPoint>>;

inline DensitySeries density_series(const std::vector<EpochSnapshot>& epochs, std::int64_t warmup) {
    DensitySeries out;
    for (const auto& e : epochs)
        if (e.epoch >= warmup) out[e.agents].push_back({e.epoch, e.tick, e.edges, e.cycles});
    return out;
}

inline std::optional<std::int64_t> first_duplication_epoch(const Trace& t) {
    for (const auto& e : t.events)
        if (e.kind() == EventKind::Duplication) return e.epoch;
    return std::nullopt;
}

// Edge and cycle counts may not grow along any fixed agent count once past the
// warm-up epoch (default: first duplication). Only meaningful under the star
// death rule combined with the partition duplication rule.
inline InvariantReport check_density_trend(const Trace& t, std::optional<std::int64_t> warmup = std::nullopt,
                                           const std::vector<EpochSnapshot>* epochs = nullptr) {
    CheckBook book;
    const auto edges_id = book.add("density-edges");
    const auto cycles_id = book.add("density-cycles");
    const auto deltas_id = book.add("density-event-deltas");
    const auto& r = t.config.rules;
    if (r.death != DeathRule::Star || r.duplication != DuplicationRule::Partition) {
        for (auto id : {edges_id, cycles_id, deltas_id}) book.skip(id, "needs star death with partition duplication");
        return std::move(book).finish();
    }
    std::vector<EpochSnapshot> own;
    if (!epochs) {
        own = replay(t);
        epochs = &own;
    }
    for (std::size_t i = 1; i < epochs->size(); ++i) {
        const auto& prev = (*epochs)[i - 1];
        const auto& cur = (*epochs)[i];
        const auto before = static_cast<std::int64_t>(prev.edges), after = static_cast<std::int64_t>(cur.edges);
        const bool ok = cur.cause == EventKind::Duplication ? after == before + 1 : after <= before - 1;
        book.expect(deltas_id, ok, cur.tick, cur.epoch, [&] {
            return std::string(to_string(*cur.cause)) + " changed |E| " + std::to_string(before) + " -> " +
                   std::to_string(after);
        });
    }
    const auto start = warmup ? warmup : first_duplication_epoch(t);
    if (!start) {
        book.skip(edges_id, "no duplication, warm-up never reached");
        book.skip(cycles_id, "no duplication, warm-up never reached");
        return std::move(book).finish();
    }
    bool compared = false;
    for (const auto& [n, series] : density_series(*epochs, *start)) {
        compared = compared || series.size() > 1;
        for (std::size_t i = 1; i < series.size(); ++i) {
            const auto& a = series[i - 1];
            const auto& b = series[i];
            book.expect(edges_id, b.edges <= a.edges, b.tick, b.epoch, [&, n = n] {
                return "n=" + std::to_string(n) + ": |E| " + std::to_string(a.edges) + " -> " + std::to_string(b.edges);
            });
            book.expect(cycles_id, b.cycles <= a.cycles, b.tick, b.epoch, [&, n = n] {
                return "n=" + std::to_string(n) + ": cycles " + std::to_string(a.cycles) + " -> " + std::to_string(b.cycles);
            });
        }
    }
    if (!compared) return std::move(book).finish();
    const auto& last = epochs->back();
    std::int64_t at_warmup = last.cycles;
    for (const auto& e : *epochs)
        if (e.epoch == *start) at_warmup = e.cycles;
    book.note(cycles_id, "cycles " + std::to_string(at_warmup) + " at warm-up epoch " + std::to_string(*start) +
                             ", " + std::to_string(last.cycles) + " at the end");
    return std::move(book).finish();
}

}  // namespace dissensus::analysis
