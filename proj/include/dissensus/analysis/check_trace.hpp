#pragma once

#include "../engine.hpp"
#include "../events.hpp"
#include "report.hpp"

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

namespace dissensus::analysis {

namespace detail {

inline std::string str(Quanta v) { return std::to_string(v); }

// Histogram of state values with lazily maintained extremes.
class StateHistogram {
public:
    explicit StateHistogram(Quanta B) : counts_(static_cast<std::size_t>(B) + 1, 0), B_(B) {}

    void add(Quanta v) {
        ++counts_[slot(v)];
        ++size_;
    }
    void remove(Quanta v) {
        --counts_[slot(v)];
        --size_;
    }

    std::int64_t at(Quanta v) const { return counts_[slot(v)]; }

    Quanta min() const {
        for (std::size_t i = 0; i < counts_.size(); ++i)
            if (counts_[i]) return static_cast<Quanta>(i);
        return 0;
    }
    Quanta max() const {
        for (std::size_t i = counts_.size(); i-- > 0;)
            if (counts_[i]) return static_cast<Quanta>(i);
        return 0;
    }
    // All states equal (and at least two agents).
    bool uniform() const {
        if (size_ < 2) return false;
        for (auto c : counts_)
            if (c) return c == size_;
        return false;
    }
    bool has_threshold() const { return counts_.front() > 0 || counts_.back() > 0; }

private:
    std::size_t slot(Quanta v) const { return static_cast<std::size_t>(std::clamp<Quanta>(v, 0, B_)); }

    std::vector<std::int64_t> counts_;
    Quanta B_;
    std::int64_t size_ = 0;
};

// Structural application used after a patch failed validation, so that the
// remaining records can still be checked.
inline void force_apply(SystemState& s, const TopologyPatch& p) {
    const auto subject = subject_of(p);
    s.g.remove_node(subject);
    s.x.erase(subject);
    if (const auto* d = std::get_if<DuplicationPatch>(&p)) {
        s.g.add_node(d->child1);
        s.g.add_node(d->child2);
        s.x[d->child1] = d->alpha;
        s.x[d->child2] = d->beta;
        s.next_id = std::max(s.next_id, d->child2.value + 1);
    }
    std::visit(
        [&](const auto& q) {
            for (const auto& e : q.eps)
                if (s.g.contains(e.lo) && s.g.contains(e.hi)) s.g.add_edge(e.lo, e.hi);
        },
        p);
    ++s.epoch;
}

}  // namespace detail

// Replays a trace from its initial configuration, trusting the recorded
// post-exchange states, and evaluates every protocol, event and engine
// invariant along the way.
inline InvariantReport check_trace(const Trace& t) {
    CheckBook book;
    const auto sum_invariance = book.add("sum-invariance");
    const auto local_conservation = book.add("local-conservation");
    const auto gossip_rule = book.add("gossip-rule");
    const auto delta_bounds = book.add("delta-bounds");
    const auto state_range = book.add("state-range");
    const auto lyapunov = book.add("lyapunov-growth");
    const auto monotone = book.add("monotone-extremes");
    const auto consensus_timing = book.add("consensus-timing");
    const auto consensus_conditions = book.add("consensus-conditions");
    const auto schedule = book.add("schedule-validity");
    const auto tick_sequence = book.add("tick-sequence");
    const auto threshold_resolution = book.add("threshold-resolution");
    const auto event_order = book.add("event-order");
    const auto patch_validity = book.add("patch-validity");
    const auto connectivity = book.add("connectivity");
    const auto population = book.add("population-change");
    const auto count_bounds = book.add("agent-count-bounds");
    const auto dup_sum_bound = book.add("duplication-sum-bound");
    const auto interval = book.add("inter-event-interval");
    const auto edge_deltas = book.add("edge-deltas");
    const auto snapshot_consistency = book.add("snapshot-consistency");
    const auto final_state = book.add("final-state");
    const auto termination = book.add("termination");

    const auto& cfg = t.config;
    SystemState s;
    try {
        s = init(cfg);
    } catch (const Error& e) {
        const auto id = book.add("initial-config");
        book.expect(id, false, 0, 0, [&] { return std::string(e.what()); });
        return std::move(book).finish();
    }

    const Quanta B = s.B;
    const Quanta chi = s.chi;
    const auto n0 = static_cast<Quanta>(s.agent_count());
    const Quanta alpha = split_state(B, cfg.rules.split).alpha;
    const bool star_partition = cfg.rules.death == DeathRule::Star && cfg.rules.duplication == DuplicationRule::Partition;
    const bool round_robin = cfg.scheduler == SchedulerKind::RoundRobin;

    detail::StateHistogram hist(B);
    for (const auto& [_, v] : s.x) hist.add(v);
    Quanta sum = chi;
    std::int64_t clock = 0;
    bool duplicated = false;
    std::size_t snapshot_index = 0;
    std::vector<Threshold> group_order;
    std::size_t group_next = 0;
    bool group_open = false;
    std::int64_t interval_ticks = 0;
    Quanta interval_min = hist.min(), interval_max = hist.max();
    std::vector<std::pair<std::int64_t, std::string>> group_forms;  // for periodicity confirmation

    std::int64_t last_cycles = 0;
    auto epoch_checks = [&](std::optional<EventKind> cause) {
        const auto n = static_cast<Quanta>(s.agent_count());
        const auto snap = snapshot_of(s, cause);
        last_cycles = snap.cycles;
        book.expect(connectivity, is_connected_snapshot(snap), clock, s.epoch, [] { return std::string("graph is disconnected"); });
        const Quanta lower = (chi + B - 1) / B;
        const Quanta upper = duplicated ? chi - B + 2 : chi;
        book.expect(count_bounds, lower <= n && n <= upper, clock, s.epoch, [&] {
            return "n=" + detail::str(n) + " outside [" + detail::str(lower) + ", " + detail::str(upper) + "]";
        });
        if (cause == EventKind::Duplication)
            book.expect(dup_sum_bound, sum >= n - 2 + B, clock, s.epoch, [&] {
                return "sum " + detail::str(sum) + " < n - 2 + B = " + detail::str(n - 2 + B);
            });
        if (!t.snapshots.empty()) {
            const bool present = snapshot_index < t.snapshots.size();
            book.expect(snapshot_consistency, present && t.snapshots[snapshot_index] == snap, clock,
                        s.epoch, [&] { return present ? std::string("snapshot differs from replay") : std::string("missing snapshot"); });
            ++snapshot_index;
        }
    };

    // Critical time (or t0) with nothing pending.
    auto group_end = [&] {
        const auto n = static_cast<Quanta>(s.agent_count());
        if (hist.uniform()) {
            book.expect(consensus_timing, true, clock, s.epoch);
            const Quanta value = chi / n;
            const bool lower_ok = duplicated ? value >= alpha : n <= n0;
            book.expect(consensus_conditions, chi % n == 0 && value < B && lower_ok, clock, s.epoch, [&] {
                return "consensus with n=" + detail::str(n) + ", chi=" + detail::str(chi) +
                       (duplicated ? ", alpha=" + detail::str(alpha) : std::string());
            });
        }
        if (t.termination == Termination::Periodic) group_forms.emplace_back(s.epoch, canonical_form(s.g, s.x));
        interval_min = hist.min();
        interval_max = hist.max();
        interval_ticks = 0;
    };

    auto close_interval = [&] {
        if (!round_robin) return;
        const auto T = static_cast<std::int64_t>(s.g.edge_count());
        const std::int64_t bound = T * ((B * chi + 3) / 4 + 1);
        book.expect(interval, interval_ticks <= bound, clock, s.epoch, [&] {
            return std::to_string(interval_ticks) + " exchanges without a critical event, bound " + std::to_string(bound);
        });
    };

    auto close_group = [&] {
        if (!group_open) return;
        group_open = false;
        book.expect(event_order, group_next == group_order.size(), clock, s.epoch,
                    [] { return std::string("a pending threshold was left unresolved"); });
        group_end();
    };

    auto set_state = [&](AgentId a, Quanta v) {
        auto& slot = s.x.at(a);
        hist.remove(slot);
        sum -= slot;
        slot = v;
        hist.add(v);
        sum += v;
    };

    epoch_checks(std::nullopt);
    if (!hist.has_threshold()) group_end();

    auto on_gossip = [&](const GossipRecord& r) {
        close_group();
        const auto epoch = s.epoch;
        book.expect(tick_sequence, r.tick == clock, r.tick, epoch,
                    [&] { return "expected tick " + std::to_string(clock); });
        book.expect(threshold_resolution, !hist.has_threshold(), r.tick, epoch,
                    [] { return std::string("exchange while an agent sits at a threshold"); });
        const bool known = s.g.contains(r.edge.lo) && s.g.contains(r.edge.hi);
        book.expect(schedule, known && s.g.has_edge(r.edge), r.tick, epoch,
                    [&] { return "(" + std::to_string(r.edge.lo.value) + "," + std::to_string(r.edge.hi.value) + ") is not an edge"; });
        clock = r.tick + 1;
        s.tick = clock;
        ++interval_ticks;
        if (!known) return;
        const Quanta a = s.x.at(r.edge.lo), b = s.x.at(r.edge.hi);
        const Quanta d = r.delta;
        book.expect(local_conservation, r.x_lo + r.x_hi == a + b, r.tick, epoch, [&] {
            return "pair sum " + detail::str(a + b) + " -> " + detail::str(r.x_lo + r.x_hi);
        });
        bool rule_ok;
        if (a == b) rule_ok = d == 0 && r.x_lo == a && r.x_hi == b;
        else if (a > b) rule_ok = r.x_lo == a + d && r.x_hi == b - d;
        else rule_ok = r.x_lo == a - d && r.x_hi == b + d;
        book.expect(gossip_rule, rule_ok, r.tick, epoch, [&] {
            return "(" + detail::str(a) + "," + detail::str(b) + ") -> (" + detail::str(r.x_lo) + "," +
                   detail::str(r.x_hi) + ") with delta " + detail::str(d);
        });
        if (a != b) {
            const Quanta cap = delta_cap(a, b, B);
            bool ok = 1 <= d && d <= cap;
            if (cfg.delta == DeltaKind::Unit) ok = ok && d == 1;
            if (cfg.delta == DeltaKind::Max) ok = ok && d == cap;
            book.expect(delta_bounds, ok, r.tick, epoch,
                        [&] { return "delta " + detail::str(d) + " with cap " + detail::str(cap); });
        }
        book.expect(state_range, 0 <= r.x_lo && r.x_lo <= B && 0 <= r.x_hi && r.x_hi <= B, r.tick, epoch,
                    [&] { return "state outside [0, B]"; });
        const Quanta growth = r.x_lo * r.x_lo + r.x_hi * r.x_hi - a * a - b * b;
        const bool growth_ok = a == b ? growth == 0
                                      : growth >= 4 && growth == 2 * d * d + 2 * d * (a > b ? a - b : b - a);
        book.expect(lyapunov, growth_ok, r.tick, epoch, [&] { return "norm^2 changed by " + detail::str(growth); });
        set_state(r.edge.lo, r.x_lo);
        set_state(r.edge.hi, r.x_hi);
        book.expect(sum_invariance, sum == chi, r.tick, epoch,
                    [&] { return "sum " + detail::str(sum) + " != chi " + detail::str(chi); });
        const Quanta lo = hist.min(), hi = hist.max();
        book.expect(monotone, lo <= interval_min && hi >= interval_max, r.tick, epoch, [&] {
            return "extremes [" + detail::str(interval_min) + "," + detail::str(interval_max) + "] -> [" +
                   detail::str(lo) + "," + detail::str(hi) + "]";
        });
        interval_min = lo;
        interval_max = hi;
        book.expect(consensus_timing, !hist.uniform(), r.tick, epoch,
                    [] { return std::string("all states equal between critical times"); });
    };

    auto on_event = [&](const CriticalEventRecord& e) {
        if (!group_open) {
            close_interval();
            book.expect(tick_sequence, e.tick == clock + 1, e.tick, s.epoch,
                        [&] { return "critical event expected at tick " + std::to_string(clock + 1); });
            clock = e.tick;
            s.tick = clock;
            group_order.clear();
            for (auto kind : {ThresholdKind::Zero, ThresholdKind::Upper})
                for (const auto& th : detect_thresholds(s))
                    if (th.kind == kind) group_order.push_back(th);
            group_next = 0;
            group_open = true;
        } else {
            book.expect(tick_sequence, e.tick == clock, e.tick, s.epoch,
                        [&] { return "event group split across ticks " + std::to_string(clock) + " and " + std::to_string(e.tick); });
        }
        const auto kind = e.kind();
        const auto subject = e.subject();
        const bool in_order = group_next < group_order.size() && group_order[group_next].agent == subject &&
                              (group_order[group_next].kind == ThresholdKind::Zero) == (kind == EventKind::Death) &&
                              e.epoch == s.epoch + 1;
        book.expect(event_order, in_order, e.tick, s.epoch + 1, [&] {
            return std::string(to_string(kind)) + " of agent " + std::to_string(subject.value) + " out of order";
        });
        ++group_next;
        const auto violation = validate_patch(e.patch, s);
        book.expect(patch_validity, !violation, e.tick, s.epoch + 1,
                    [&] { return violation->condition + ": " + violation->detail; });
        const auto n_before = s.agent_count();
        const auto e_before = static_cast<std::int64_t>(s.g.edge_count());
        const auto c_before = last_cycles;
        if (s.x.count(subject)) {
            hist.remove(s.x.at(subject));
            sum -= s.x.at(subject);
        }
        detail::force_apply(s, e.patch);
        if (const auto* d = std::get_if<DuplicationPatch>(&e.patch)) {
            for (auto v : {d->alpha, d->beta}) {
                hist.add(v);
                sum += v;
            }
            duplicated = true;
        }
        const auto n_after = s.agent_count();
        book.expect(population, kind == EventKind::Death ? n_after + 1 == n_before : n_after == n_before + 1, e.tick,
                    s.epoch, [] { return std::string("agent count changed by the wrong amount"); });
        book.expect(sum_invariance, sum == chi, e.tick, s.epoch,
                    [&] { return "sum " + detail::str(sum) + " != chi " + detail::str(chi); });
        epoch_checks(kind);
        if (star_partition) {
            const auto e_after = static_cast<std::int64_t>(s.g.edge_count());
            const bool ok = (kind == EventKind::Duplication ? e_after == e_before + 1 : e_after <= e_before - 1) &&
                            last_cycles <= c_before;
            book.expect(edge_deltas, ok, e.tick, s.epoch, [&] {
                return std::string(to_string(kind)) + " changed |E| " + std::to_string(e_before) + " -> " +
                       std::to_string(e_after) + ", cycles " + std::to_string(c_before) + " -> " +
                       std::to_string(last_cycles);
            });
        }
    };

    for_each_record(t, [&](const auto& r) {
        if constexpr (std::is_same_v<std::decay_t<decltype(r)>, GossipRecord>) on_gossip(r);
        else on_event(r);
    });
    const bool ends_in_group = group_open;
    close_group();
    if (!ends_in_group) close_interval();

    if (!star_partition) book.skip(edge_deltas, "rules are not star+partition");
    if (!round_robin) book.skip(interval, "bound needs the round-robin scheduler");
    if (t.snapshots.empty()) book.skip(snapshot_consistency, "trace carries no snapshots");
    else
        book.expect(snapshot_consistency, snapshot_index == t.snapshots.size(), clock, s.epoch,
                    [] { return std::string("more snapshots than epochs"); });

    const auto& fin = t.final_state;
    book.expect(final_state, fin.x == s.x && fin.edges == s.g.edges() && fin.tick == clock && fin.epoch == s.epoch,
                clock, s.epoch, [] { return std::string("replayed configuration differs from the recorded end state"); });

    bool term_ok = false;
    switch (t.termination) {
        case Termination::Consensus: term_ok = hist.uniform() && !hist.has_threshold(); break;
        case Termination::SingleAgent: term_ok = s.agent_count() == 1; break;
        case Termination::MaxTicks: term_ok = clock >= cfg.max_ticks; break;
        case Termination::MaxEpochs: term_ok = cfg.max_epochs > 0 && s.epoch >= cfg.max_epochs; break;
        case Termination::Periodic: {
            if (!t.period || group_forms.empty()) break;
            const auto start = t.period->start_epoch;
            for (const auto& [epoch, form] : group_forms)
                if (epoch == start) term_ok = form == group_forms.back().second && s.epoch - start == t.period->length_epochs;
            break;
        }
    }
    book.expect(termination, term_ok, clock, s.epoch,
                [&] { return std::string("recorded termination ") + to_string(t.termination) + " does not match the replay"; });
    return std::move(book).finish();
}

}  // namespace dissensus::analysis
