#ifndef ALOHADYN_PROPAGATION_HPP
#define ALOHADYN_PROPAGATION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "alohadyn/config.hpp"
#include "alohadyn/point_process.hpp"
#include "alohadyn/protocol.hpp"
#include "alohadyn/records.hpp"
#include "alohadyn/rng.hpp"

namespace alohadyn {

constexpr std::int64_t kUnreached = std::numeric_limits<std::int64_t>::max();
constexpr std::int32_t kNoHops = std::numeric_limits<std::int32_t>::max();

/**
 * First-arrival wavefront from one source over the slot-by-slot link process.
 *
 * first_arrival[y] is the first slot whose cumulative causal history contains
 * a path source -> y (kUnreached if none by the horizon). min_hops[y] is the
 * fewest hops over all causal paths arriving by the horizon; fastest_hops[y]
 * is the fewest hops over paths arriving exactly at first_arrival[y], i.e.
 * the hop count of a fastest path.
 */
struct PropagationFront {
    /// One hop-count improvement at a node: at `slot` a link from `pred`
    /// established `hops`. The first entry per node is its first arrival.
    struct HopImprovement {
        std::int64_t slot;
        std::int32_t hops;
        std::uint32_t pred;
    };

    std::uint32_t source = 0;
    std::int64_t start_slot = 0;
    std::int64_t horizon = 0;
    std::vector<std::int64_t> first_arrival;
    std::vector<std::int32_t> min_hops;
    std::vector<std::int32_t> fastest_hops;
    std::vector<std::vector<HopImprovement>> trace; ///< filled when recording paths

    bool reached(std::uint32_t y) const { return first_arrival[y] != kUnreached; }

    /// Slots from the start offset to the first arrival (the path formation
    /// time); kUnreached when censored.
    std::int64_t delay(std::uint32_t y) const {
        return reached(y) ? first_arrival[y] - start_slot : kUnreached;
    }
};

struct PropagationOptions {
    std::int64_t start_slot = 0;
    /// Restrict relaying to flagged nodes; everyone still runs ALOHA and
    /// interferes. Null = no restriction.
    const std::vector<std::uint8_t>* members = nullptr;
    /// Stop as soon as all of these are reached. Null = run the full horizon.
    const std::vector<std::uint32_t>* stop_targets = nullptr;
    /// Keep the per-node improvement trace so fastest paths can be rebuilt.
    bool record_paths = false;
};

/**
 * Simulates slots start_slot+1 ... start_slot+max_slots. In each slot every
 * node flips its ALOHA coin (one Bernoulli per node, index order); each node
 * reached strictly before the slot and transmitting forwards over every
 * successful link. A node reached in slot k may relay from slot k+1 on, so
 * realized paths have strictly increasing slot stamps and first_arrival is
 * exactly the minimum causal-path time.
 *
 * Hop counts follow the per-slot recurrence H_k(y) = min(H_{k-1}(y),
 * min over slot-k links (u,y) of H_{k-1}(u) + 1), evaluated lazily: a link
 * is only tested while it could still improve an arrival or a hop count, so
 * the per-slot cost tracks the front surface rather than the node count.
 */
inline PropagationFront propagate(const PointSet& ps, std::uint32_t source,
                                  const NetworkConfig& cfg, RandomStream& stream,
                                  const PropagationOptions& opts = {}) {
    cfg.validate();
    const std::uint32_t n = static_cast<std::uint32_t>(ps.size());
    if (source >= n) throw std::invalid_argument("propagate: source index out of range");
    if (opts.members && !(*opts.members)[source])
        throw std::invalid_argument("propagate: source is not a member");

    PropagationFront front;
    front.source = source;
    front.start_slot = opts.start_slot;
    front.horizon = opts.start_slot;
    front.first_arrival.assign(n, kUnreached);
    front.min_hops.assign(n, kNoHops);
    front.fastest_hops.assign(n, kNoHops);
    front.first_arrival[source] = opts.start_slot;
    front.min_hops[source] = 0;
    front.fastest_hops[source] = 0;
    if (opts.record_paths) front.trace.resize(n);

    // Static link candidates; every hop must be shorter than eta.
    std::vector<std::vector<std::uint32_t>> adjacency(n);
    for (std::uint32_t i = 0; i < n; ++i) adjacency[i] = ps.range_query(i, cfg.eta);

    std::uint32_t targets_left = 0;
    std::vector<std::uint8_t> is_target;
    if (opts.stop_targets) {
        is_target.assign(n, 0);
        for (std::uint32_t t : *opts.stop_targets) {
            if (t >= n) throw std::invalid_argument("propagate: target index out of range");
            if (t != source && !is_target[t]) {
                is_target[t] = 1;
                ++targets_left;
            }
        }
        if (targets_left == 0) return front;
    }

    // A node stays active while some neighbor could still be improved
    // through it; it reactivates whenever its own hop count drops.
    std::vector<std::uint8_t> active(n, 0);
    active[source] = 1;
    std::vector<std::uint8_t> flags(n);

    struct Candidate {
        std::uint32_t node;
        std::int32_t hops;
        std::uint32_t pred;
    };
    std::vector<Candidate> updates;

    for (std::int64_t k = opts.start_slot + 1; k <= opts.start_slot + cfg.max_slots; ++k) {
        for (auto& f : flags) f = stream.bernoulli(cfg.p) ? 1 : 0;
        updates.clear();

        for (std::uint32_t u = 0; u < n; ++u) {
            if (!active[u] || !flags[u]) continue;
            if (front.first_arrival[u] >= k) continue; // holds the packet only after its slot
            bool any_potential = false;
            for (std::uint32_t y : adjacency[u]) {
                if (opts.members && !(*opts.members)[y]) continue;
                const bool unreached = front.first_arrival[y] == kUnreached;
                if (!unreached && front.min_hops[u] + 1 >= front.min_hops[y]) continue;
                any_potential = true;
                if (flags[y]) continue;
                const double guard = cfg.beta * ps.distance(u, y);
                if (exists_transmitter_within(ps, flags, ps.position(y), guard, u)) continue;
                updates.push_back({y, front.min_hops[u] + 1, u});
            }
            if (!any_potential) active[u] = 0; // nothing left to improve through u
        }

        // the trace mirrors every min_hops change; within a slot the minimal
        // candidate wins and earlier (smaller pred index) beats equal
        auto record = [&](std::uint32_t node, std::int32_t hops, std::uint32_t pred) {
            if (!opts.record_paths) return;
            auto& tr = front.trace[node];
            if (!tr.empty() && tr.back().slot == k)
                tr.back() = {k, hops, pred};
            else
                tr.push_back({k, hops, pred});
        };
        for (const Candidate& c : updates) {
            if (front.first_arrival[c.node] == kUnreached) {
                front.first_arrival[c.node] = k;
                front.fastest_hops[c.node] = c.hops;
                front.min_hops[c.node] = c.hops;
                active[c.node] = 1;
                record(c.node, c.hops, c.pred);
                if (!is_target.empty() && is_target[c.node]) {
                    is_target[c.node] = 0;
                    --targets_left;
                }
            } else {
                if (front.first_arrival[c.node] == k && c.hops < front.fastest_hops[c.node])
                    front.fastest_hops[c.node] = c.hops;
                if (c.hops < front.min_hops[c.node]) {
                    front.min_hops[c.node] = c.hops;
                    active[c.node] = 1;
                    record(c.node, c.hops, c.pred);
                }
            }
        }

        front.horizon = k;
        if (opts.stop_targets && targets_left == 0) break;
    }
    return front;
}

/// One hop of a realized path.
struct PathHop {
    std::uint32_t from;
    std::uint32_t to;
    std::int64_t slot;
};

/**
 * Rebuilds the canonical fastest path to `target` from a recorded front:
 * fastest_hops[target] hops with strictly increasing slot stamps, ties
 * resolved to the earliest improving slot and the smallest predecessor
 * index. Returns an empty path for the source or an unreached target.
 */
inline std::vector<PathHop> reconstruct_fastest_path(const PropagationFront& front,
                                                     std::uint32_t target) {
    if (front.trace.empty())
        throw std::invalid_argument(
            "reconstruct_fastest_path: propagate ran without record_paths");
    std::vector<PathHop> hops;
    if (target == front.source || !front.reached(target)) return hops;
    std::uint32_t cur = target;
    std::int64_t slot = front.first_arrival[target];
    std::int32_t want = front.fastest_hops[target];
    while (cur != front.source) {
        if (hops.size() > front.trace.size())
            throw std::logic_error("reconstruct_fastest_path: trace cycle");
        // the staircase value of `cur` at `slot` is the last entry not after it
        const PropagationFront::HopImprovement* entry = nullptr;
        for (const auto& e : front.trace[cur]) {
            if (e.slot > slot) break;
            entry = &e;
        }
        if (entry == nullptr || entry->hops != want)
            throw std::logic_error("reconstruct_fastest_path: inconsistent trace");
        hops.push_back({entry->pred, cur, entry->slot});
        cur = entry->pred;
        slot = entry->slot - 1;
        --want;
    }
    std::reverse(hops.begin(), hops.end());
    return hops;
}

/// Euclidean length of a realized path under the point-set metric.
inline double path_length(const PointSet& ps, const std::vector<PathHop>& hops) {
    double total = 0.0;
    for (const PathHop& hop : hops) total += ps.distance(hop.from, hop.to);
    return total;
}

/**
 * Path formation time between two query coordinates: each maps to the closest
 * node (smallest index on ties) and the wavefront runs until the destination
 * node is reached or max_slots expire. Coinciding endpoints give delay 0 and
 * consume no randomness.
 */
inline DelayRecord path_formation_time(const PointSet& ps, const Vec2& source_point,
                                       const Vec2& dest_point, const NetworkConfig& cfg,
                                       RandomStream& stream) {
    if (ps.size() == 0)
        throw std::invalid_argument("path_formation_time: empty point set");
    const std::uint32_t src = ps.nearest_node(source_point);
    const std::uint32_t dst = ps.nearest_node(dest_point);

    DelayRecord rec;
    rec.distance = ps.distance(src, dst);
    if (src == dst) return rec; // delay 0, hops 0

    const std::vector<std::uint32_t> targets{dst};
    PropagationOptions opts;
    opts.stop_targets = &targets;
    opts.record_paths = true;
    const PropagationFront front = propagate(ps, src, cfg, stream, opts);
    if (front.reached(dst)) {
        rec.delay = front.delay(dst);
        rec.hops = front.fastest_hops[dst];
        rec.path_length = path_length(ps, reconstruct_fastest_path(front, dst));
    } else {
        rec.delay = cfg.max_slots;
        rec.censored = true;
    }
    return rec;
}

} // namespace alohadyn

#endif
