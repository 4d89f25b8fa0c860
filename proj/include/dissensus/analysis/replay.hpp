#pragma once

#include "../engine.hpp"
#include "../events.hpp"

#include <functional>
#include <type_traits>
#include <vector>

namespace dissensus::analysis {

struct ReplayHooks {
    // After every gossip record.
    std::function<void(const SystemState&, const GossipRecord&)> on_gossip;
    // Just before the first event of a critical time, with the threshold
    // states still in place.
    std::function<void(const SystemState&)> on_threshold;
    // After every event (and once for epoch 0).
    std::function<void(const SystemState&, const EpochSnapshot&)> on_epoch;
};

// Rebuilds the epoch sequence of a trace from its records alone. Patches are
// re-validated on application, so a corrupt trace raises RuleViolation.
inline std::vector<EpochSnapshot> replay(const Trace& t, const ReplayHooks& hooks = {}) {
    SystemState s = init(t.config);
    std::vector<EpochSnapshot> epochs;
    epochs.push_back(snapshot_of(s, std::nullopt));
    if (hooks.on_epoch) hooks.on_epoch(s, epochs.back());
    std::int64_t group_tick = -1;
    for_each_record(t, [&](const auto& r) {
        if constexpr (std::is_same_v<std::decay_t<decltype(r)>, GossipRecord>) {
            s.x.at(r.edge.lo) = r.x_lo;
            s.x.at(r.edge.hi) = r.x_hi;
            s.tick = r.tick + 1;
            if (hooks.on_gossip) hooks.on_gossip(s, r);
        } else {
            if (r.tick != group_tick && hooks.on_threshold) hooks.on_threshold(s);
            group_tick = r.tick;
            s.tick = r.tick;
            apply_patch(s, r.patch);
            epochs.push_back(snapshot_of(s, r.kind()));
            if (hooks.on_epoch) hooks.on_epoch(s, epochs.back());
        }
    });
    return epochs;
}

}  // namespace dissensus::analysis
