#ifndef ALOHADYN_PROTOCOL_HPP
#define ALOHADYN_PROTOCOL_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "alohadyn/analytics.hpp"
#include "alohadyn/config.hpp"
#include "alohadyn/parallel.hpp"
#include "alohadyn/point_process.hpp"
#include "alohadyn/rng.hpp"
#include "alohadyn/stats.hpp"

namespace alohadyn {

/// One ALOHA slot: every node is either a transmitter or a receiver.
struct SlotState {
    std::int64_t slot = 0;
    std::vector<std::uint8_t> transmitter; // 1 = transmits, 0 = listens
};

/// Flags every node as a transmitter independently with probability p,
/// drawing one Bernoulli per node in index order.
inline SlotState sample_slot(const PointSet& ps, double p, RandomStream& stream,
                             std::int64_t slot = 0) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("sample_slot: p must lie strictly in (0,1)");
    SlotState state;
    state.slot = slot;
    state.transmitter.resize(ps.size());
    for (auto& flag : state.transmitter) flag = stream.bernoulli(p) ? 1 : 0;
    return state;
}

/// True when some flagged transmitter other than `exclude` lies strictly
/// within `radius` of `center`.
inline bool exists_transmitter_within(const PointSet& ps,
                                      const std::vector<std::uint8_t>& transmitter,
                                      const Vec2& center, double radius,
                                      std::uint32_t exclude =
                                          std::numeric_limits<std::uint32_t>::max()) {
    bool found = false;
    ps.for_each_within(center, radius, [&](std::uint32_t i) {
        if (i != exclude && transmitter[i]) {
            found = true;
            return false;
        }
        return true;
    });
    return found;
}

/**
 * Link-success rule: transmitter `tx` reaches receiver `rx` in this slot iff
 * dist(tx, rx) < eta and the open disk around rx of radius beta*dist(tx, rx)
 * contains no transmitter other than tx. Infinite eta drops the distance
 * condition. Role preconditions are enforced.
 */
inline bool edge_indicator(const PointSet& ps, const SlotState& slot, std::uint32_t tx,
                           std::uint32_t rx, double beta, double eta) {
    if (tx == rx) throw std::invalid_argument("edge_indicator: tx and rx coincide");
    if (!slot.transmitter[tx])
        throw std::invalid_argument("edge_indicator: tx is not flagged as a transmitter");
    if (slot.transmitter[rx])
        throw std::invalid_argument("edge_indicator: rx is not flagged as a receiver");
    const double d2 = ps.dist2(tx, rx);
    if (std::isfinite(eta) && !(d2 < eta * eta)) return false;
    const double guard = beta * std::sqrt(d2);
    return !exists_transmitter_within(ps, slot.transmitter, ps.position(rx), guard, tx);
}

/// Directed edges (tx, rx) of one slot.
struct SnapshotGraph {
    std::int64_t slot = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
};

/// All successful links of the slot. Candidate transmitters are enumerated
/// through the grid around each receiver; edges come out receiver-major with
/// ascending transmitter index.
inline SnapshotGraph snapshot_graph(const PointSet& ps, const SlotState& slot, double beta,
                                    double eta) {
    SnapshotGraph g;
    g.slot = slot.slot;
    const std::uint32_t n = static_cast<std::uint32_t>(ps.size());
    for (std::uint32_t rx = 0; rx < n; ++rx) {
        if (slot.transmitter[rx]) continue;
        for (std::uint32_t tx : ps.range_query(rx, eta)) {
            if (!slot.transmitter[tx]) continue;
            const double guard = beta * ps.distance(tx, rx);
            if (!exists_transmitter_within(ps, slot.transmitter, ps.position(rx), guard, tx))
                g.edges.emplace_back(tx, rx);
        }
    }
    return g;
}

/// Pooled degree statistics from independent network + slot draws.
struct DegreeStats {
    struct Replication {
        double mean_out = 0.0;
        double mean_in = 0.0;
        double isolated_fraction = 0.0;
        std::uint64_t n_tx = 0;
        std::uint64_t n_rx = 0;
    };
    std::vector<std::uint64_t> out_histogram; ///< out-degree counts over transmitters
    std::vector<std::uint64_t> in_histogram;  ///< in-degree counts over receivers
    std::vector<Replication> per_replication;
    double mean_out = 0.0;
    double se_out = 0.0;
    double mean_in = 0.0;
    double se_in = 0.0;
    double isolated_fraction = 0.0; ///< transmitters with out-degree zero
    double se_isolated = 0.0;
    double flow_gap = 0.0;    ///< mean of p*mean_out_r - (1-p)*mean_in_r
    double se_flow_gap = 0.0;
    std::uint64_t n_transmitters = 0;
    std::uint64_t n_receivers = 0;
    std::uint32_t replications = 0;
};

/**
 * Estimates degree statistics over `replications` independent PPP + slot
 * draws. Replication r uses the stream derived from (config.seed,
 * stream_tag::degrees, r); within it the draw order is the point process
 * followed by the slot flags. In window mode only nodes at least
 * max(eta, beta*eta) from the boundary are tallied; the torus needs no
 * margin. Standard errors come from per-replication means.
 */
inline DegreeStats estimate_degrees(const NetworkConfig& cfg, std::uint32_t replications,
                                    std::uint32_t jobs = 1) {
    cfg.validate();
    if (replications < 1)
        throw std::invalid_argument("estimate_degrees: replications must be >= 1");

    struct RepResult {
        std::vector<std::uint64_t> out_hist, in_hist;
        double mean_out = 0.0, mean_in = 0.0, isolated = 0.0, flow_gap = 0.0;
        std::uint64_t n_tx = 0, n_rx = 0;
    };
    std::vector<RepResult> reps(replications);

    const double margin = std::isfinite(cfg.eta) ? std::max(cfg.eta, cfg.beta * cfg.eta) : 0.0;
    parallel_for(replications, jobs, [&](std::uint32_t r) {
        RandomStream stream = derive_stream(cfg.seed, stream_tag::degrees, r);
        const PointSet ps = sample_ppp(cfg, stream);
        const SlotState slot = sample_slot(ps, cfg.p, stream);
        const SnapshotGraph g = snapshot_graph(ps, slot, cfg.beta, cfg.eta);

        const std::uint32_t n = static_cast<std::uint32_t>(ps.size());
        std::vector<std::uint32_t> out_deg(n, 0), in_deg(n, 0);
        for (const auto& [tx, rx] : g.edges) {
            ++out_deg[tx];
            ++in_deg[rx];
        }
        auto interior = [&](std::uint32_t i) {
            if (cfg.boundary == Boundary::torus) return true;
            const Vec2& q = ps.position(i);
            return cfg.window_half - std::fabs(q.x) >= margin &&
                   cfg.window_half - std::fabs(q.y) >= margin;
        };
        RepResult& res = reps[r];
        std::uint64_t out_sum = 0, in_sum = 0, isolated = 0;
        for (std::uint32_t i = 0; i < n; ++i) {
            if (!interior(i)) continue;
            const std::uint32_t deg = slot.transmitter[i] ? out_deg[i] : in_deg[i];
            auto& hist = slot.transmitter[i] ? res.out_hist : res.in_hist;
            if (hist.size() <= deg) hist.resize(deg + 1, 0);
            ++hist[deg];
            if (slot.transmitter[i]) {
                ++res.n_tx;
                out_sum += deg;
                if (deg == 0) ++isolated;
            } else {
                ++res.n_rx;
                in_sum += deg;
            }
        }
        if (res.n_tx > 0) {
            res.mean_out = static_cast<double>(out_sum) / static_cast<double>(res.n_tx);
            res.isolated = static_cast<double>(isolated) / static_cast<double>(res.n_tx);
        }
        if (res.n_rx > 0)
            res.mean_in = static_cast<double>(in_sum) / static_cast<double>(res.n_rx);
        res.flow_gap = cfg.p * res.mean_out - (1.0 - cfg.p) * res.mean_in;
    });

    DegreeStats stats;
    stats.replications = replications;
    stats.per_replication.reserve(replications);
    RunningStat out_stat, in_stat, iso_stat, gap_stat;
    for (const RepResult& res : reps) {
        stats.per_replication.push_back(
            {res.mean_out, res.mean_in, res.isolated, res.n_tx, res.n_rx});
        stats.n_transmitters += res.n_tx;
        stats.n_receivers += res.n_rx;
        if (res.out_hist.size() > stats.out_histogram.size())
            stats.out_histogram.resize(res.out_hist.size(), 0);
        for (std::size_t d = 0; d < res.out_hist.size(); ++d)
            stats.out_histogram[d] += res.out_hist[d];
        if (res.in_hist.size() > stats.in_histogram.size())
            stats.in_histogram.resize(res.in_hist.size(), 0);
        for (std::size_t d = 0; d < res.in_hist.size(); ++d)
            stats.in_histogram[d] += res.in_hist[d];
        if (res.n_tx > 0) {
            out_stat.add(res.mean_out);
            iso_stat.add(res.isolated);
        }
        if (res.n_rx > 0) in_stat.add(res.mean_in);
        if (res.n_tx > 0 && res.n_rx > 0) gap_stat.add(res.flow_gap);
    }
    stats.mean_out = out_stat.mean();
    stats.se_out = out_stat.std_error();
    stats.mean_in = in_stat.mean();
    stats.se_in = in_stat.std_error();
    stats.isolated_fraction = iso_stat.mean();
    stats.se_isolated = iso_stat.std_error();
    stats.flow_gap = gap_stat.mean();
    stats.se_flow_gap = gap_stat.std_error();
    return stats;
}

/// Slot count of one connect attempt; censored runs carry the horizon.
struct ConnectResult {
    std::int64_t slots = 0;
    bool censored = false;
};

/**
 * Slots until a probe at `probe` connects to the fixed node `z`
 * (interference-limited: no distance cutoff). Per slot the draws are: probe
 * flag, z flag, then one flag per interferer candidate in ascending index
 * order. Candidates are the points strictly within beta*dist(probe, z) of z,
 * except z itself; the probe is the transmitter and never interferes with its
 * own link.
 */
inline ConnectResult nn_connect_slots(const PointSet& ps, const Vec2& probe, std::uint32_t z,
                                      double p, double beta, RandomStream& stream,
                                      std::int64_t max_slots) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("nn_connect_slots: p must lie strictly in (0,1)");
    const double d = ps.metric().dist(probe, ps.position(z));
    std::vector<std::uint32_t> candidates;
    for (std::uint32_t i : ps.range_query(ps.position(z), beta * d))
        if (i != z) candidates.push_back(i);

    for (std::int64_t k = 1; k <= max_slots; ++k) {
        const bool probe_tx = stream.bernoulli(p);
        const bool z_tx = stream.bernoulli(p);
        bool interfered = false;
        for (std::size_t i = 0; i < candidates.size(); ++i)
            if (stream.bernoulli(p)) interfered = true;
        if (probe_tx && !z_tx && !interfered) return {k, false};
    }
    return {max_slots, true};
}

/**
 * Slots until a probe at `probe` connects to any receiver
 * (interference-limited). Per slot the draws are: probe flag, then one flag
 * per node in ascending index order. The slot succeeds when the probe
 * transmits and some listening node has no transmitter other than the probe
 * strictly within beta times its distance from the probe.
 */
inline ConnectResult opportunistic_connect_slots(const PointSet& ps, const Vec2& probe,
                                                 double p, double beta, RandomStream& stream,
                                                 std::int64_t max_slots) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("opportunistic_connect_slots: p must lie strictly in (0,1)");
    const std::uint32_t n = static_cast<std::uint32_t>(ps.size());
    std::vector<std::uint8_t> flags(n);
    for (std::int64_t k = 1; k <= max_slots; ++k) {
        const bool probe_tx = stream.bernoulli(p);
        for (auto& f : flags) f = stream.bernoulli(p) ? 1 : 0;
        if (!probe_tx) continue;
        for (std::uint32_t y = 0; y < n; ++y) {
            if (flags[y]) continue;
            const double guard = beta * ps.metric().dist(probe, ps.position(y));
            if (!exists_transmitter_within(ps, flags, ps.position(y), guard)) return {k, false};
        }
    }
    return {max_slots, true};
}

/// Monte Carlo estimate of a connect time. Censored runs enter the mean at
/// the horizon, so the estimate is a lower bound whenever censored_fraction
/// is nonzero.
struct ConnectTimeEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    std::uint32_t n = 0;
    double censored_fraction = 0.0;
    bool diverges = false; ///< the mean is infinite for these parameters
    std::vector<ConnectResult> per_replication;
};

namespace detail {

template <typename RunOnce>
ConnectTimeEstimate run_connect_estimator(const NetworkConfig& cfg, std::uint32_t replications,
                                          std::uint32_t jobs, std::uint64_t tag, bool diverges,
                                          RunOnce&& run_once, const char* name) {
    if (replications < 1)
        throw std::invalid_argument(std::string(name) + ": replications must be >= 1");
    std::vector<ConnectResult> results(replications);
    parallel_for(replications, jobs, [&](std::uint32_t r) {
        RandomStream stream = derive_stream(cfg.seed, tag, r);
        results[r] = run_once(stream);
    });
    ConnectTimeEstimate est;
    est.n = replications;
    est.diverges = diverges;
    RunningStat stat;
    std::uint32_t censored = 0;
    for (const ConnectResult& res : results) {
        stat.add(static_cast<double>(res.slots));
        if (res.censored) ++censored;
    }
    est.estimate = stat.mean();
    est.std_error = stat.std_error();
    est.censored_fraction = static_cast<double>(censored) / static_cast<double>(replications);
    est.per_replication = std::move(results);
    if (est.censored_fraction > 0.5 && !diverges)
        throw std::runtime_error(std::string(name) +
                                 ": over half the runs hit max_slots although the mean is "
                                 "finite; raise max_slots");
    return est;
}

} // namespace detail

/**
 * Mean slots until a probe at the origin connects to its nearest neighbor.
 * Requires the interference-limited regime (eta infinite, hence torus mode).
 * Each replication draws a fresh point process, locates the nearest node to
 * the origin, and plays slots until the link forms; runs are censored at
 * config.max_slots. The divergence flag is set when p >= 1/(1+nu(beta)).
 */
inline ConnectTimeEstimate estimate_nn_connect_time(const NetworkConfig& cfg,
                                                    std::uint32_t replications,
                                                    std::uint32_t jobs = 1) {
    cfg.validate();
    if (!cfg.interference_limited())
        throw std::invalid_argument(
            "estimate_nn_connect_time: requires infinite eta (interference-limited)");
    const bool diverges = !(cfg.p < nn_time_cutoff(cfg.beta));
    return detail::run_connect_estimator(
        cfg, replications, jobs, stream_tag::nn_time, diverges,
        [&](RandomStream& stream) {
            const PointSet ps = sample_ppp(cfg, stream);
            if (ps.size() < 1)
                throw std::runtime_error(
                    "estimate_nn_connect_time: empty point process; raise lambda or the window");
            const Vec2 origin{0.0, 0.0};
            const std::uint32_t z = ps.nearest_node(origin);
            return nn_connect_slots(ps, origin, z, cfg.p, cfg.beta, stream, cfg.max_slots);
        },
        "estimate_nn_connect_time");
}

/**
 * Mean slots until a probe at the origin connects to any receiver
 * (interference-limited). The divergence flag reflects the beta > 2 lower
 * bound: p >= (beta-1)^-2 forces an infinite mean.
 */
inline ConnectTimeEstimate estimate_opportunistic_time(const NetworkConfig& cfg,
                                                       std::uint32_t replications,
                                                       std::uint32_t jobs = 1) {
    cfg.validate();
    if (!cfg.interference_limited())
        throw std::invalid_argument(
            "estimate_opportunistic_time: requires infinite eta (interference-limited)");
    const double g = (cfg.beta - 1.0) * (cfg.beta - 1.0);
    const bool diverges = cfg.beta > 2.0 && !(cfg.p < 1.0 / g);
    return detail::run_connect_estimator(
        cfg, replications, jobs, stream_tag::opportunistic, diverges,
        [&](RandomStream& stream) {
            const PointSet ps = sample_ppp(cfg, stream);
            const Vec2 origin{0.0, 0.0};
            return opportunistic_connect_slots(ps, origin, cfg.p, cfg.beta, stream,
                                               cfg.max_slots);
        },
        "estimate_opportunistic_time");
}

} // namespace alohadyn

#endif
