#ifndef ALOHADYN_POINT_PROCESS_HPP
#define ALOHADYN_POINT_PROCESS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "alohadyn/config.hpp"
#include "alohadyn/geometry.hpp"
#include "alohadyn/rng.hpp"

namespace alohadyn {

/**
 * Immutable point set on [-L,L]^2 with a uniform-grid index.
 *
 * The grid is an exact index: every query filters candidates by true distance
 * under the configured metric, so results equal a brute-force scan for any
 * radius. Safe for concurrent reads once built.
 */
class PointSet {
public:
    static PointSet from_points(std::vector<Vec2> positions, double window_half,
                                Boundary boundary, double cell_size) {
        return PointSet(std::move(positions), window_half, boundary, cell_size);
    }

    std::size_t size() const { return positions_.size(); }
    const Vec2& position(std::uint32_t i) const { return positions_[i]; }
    const std::vector<Vec2>& positions() const { return positions_; }
    double window_half() const { return half_; }
    Boundary boundary() const { return metric_.mode(); }
    const Metric& metric() const { return metric_; }
    double cell_size() const { return cell_; }

    double dist2(std::uint32_t i, std::uint32_t j) const {
        return metric_.dist2(positions_[i], positions_[j]);
    }
    double distance(std::uint32_t i, std::uint32_t j) const { return std::sqrt(dist2(i, j)); }

    /**
     * Visits every point with distance(center, point) strictly below `radius`,
     * exactly once, in expanding grid rings so near points tend to come first.
     * The visitor returns false to stop early.
     */
    template <typename Visitor>
    void for_each_within(const Vec2& center, double radius, Visitor&& visit) const {
        if (!(radius > 0.0)) return;
        const double r2 = radius * radius;
        const bool wrap = metric_.mode() == Boundary::torus;
        const int cx = cell_coord(center.x);
        const int cy = cell_coord(center.y);
        for (int ring = 0;; ++ring) {
            // every cell on ring r is at least (r-1) cells from the center point
            if (ring >= 2 && static_cast<double>(ring - 1) * cell_ >= radius) return;
            if (wrap && 2 * ring + 1 > cells_) {
                // the ring would wrap onto itself; finish with one pass over
                // the cells no earlier ring has covered
                scan_outside_ball(cx, cy, ring, [&](std::uint32_t idx) {
                    if (metric_.dist2(center, positions_[idx]) < r2) return visit(idx);
                    return true;
                });
                return;
            }
            if (!wrap && ring >= cells_) return;
            bool keep_going = true;
            visit_ring(cx, cy, ring, wrap, [&](std::uint32_t idx) {
                if (metric_.dist2(center, positions_[idx]) < r2) keep_going = visit(idx);
                return keep_going;
            });
            if (!keep_going) return;
        }
    }

    /// Indices with distance(center, point) < radius, ascending. Exact.
    std::vector<std::uint32_t> range_query(const Vec2& center, double radius) const {
        std::vector<std::uint32_t> out;
        for_each_within(center, radius, [&](std::uint32_t i) {
            out.push_back(i);
            return true;
        });
        std::sort(out.begin(), out.end());
        return out;
    }

    std::vector<std::uint32_t> range_query(std::uint32_t center_index, double radius) const {
        return range_query(positions_[center_index], radius);
    }

    /// Closest point to `p` among those passing `keep`, skipping `exclude`.
    /// Ties broken by smallest index; UINT32_MAX when nothing qualifies.
    template <typename Pred>
    std::uint32_t nearest_where(const Vec2& p, Pred&& keep,
                                std::uint32_t exclude =
                                    std::numeric_limits<std::uint32_t>::max()) const {
        std::uint32_t best = std::numeric_limits<std::uint32_t>::max();
        double best_d2 = std::numeric_limits<double>::infinity();
        auto consider = [&](std::uint32_t idx) {
            if (idx == exclude || !keep(idx)) return true;
            const double d2 = metric_.dist2(p, positions_[idx]);
            if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
                best_d2 = d2;
                best = idx;
            }
            return true;
        };
        const bool wrap = metric_.mode() == Boundary::torus;
        const int cx = cell_coord(p.x);
        const int cy = cell_coord(p.y);
        for (int ring = 0;; ++ring) {
            if (best != std::numeric_limits<std::uint32_t>::max() && ring >= 2) {
                const double floor_d = static_cast<double>(ring - 1) * cell_;
                if (floor_d * floor_d > best_d2) break; // keep equality: ties may lie farther out
            }
            if (wrap && 2 * ring + 1 > cells_) {
                scan_outside_ball(cx, cy, ring, consider);
                break;
            }
            if (!wrap && ring >= cells_) break;
            visit_ring(cx, cy, ring, wrap, consider);
        }
        return best;
    }

    /// Closest point to `p`; requires size >= 1.
    std::uint32_t nearest_node(const Vec2& p) const {
        if (size() == 0) throw std::invalid_argument("nearest_node: empty point set");
        return nearest_where(p, [](std::uint32_t) { return true; });
    }

    /// Nearest other point to point `origin`: (index, distance).
    /// Requires size >= 2; ties broken by smallest index.
    std::pair<std::uint32_t, double> nearest_neighbor(std::uint32_t origin) const {
        if (size() < 2)
            throw std::invalid_argument("nearest_neighbor: need at least two points");
        const std::uint32_t idx =
            nearest_where(positions_[origin], [](std::uint32_t) { return true; }, origin);
        return {idx, std::sqrt(metric_.dist2(positions_[origin], positions_[idx]))};
    }

private:
    PointSet(std::vector<Vec2> positions, double window_half, Boundary boundary,
             double cell_size)
        : positions_(std::move(positions)), half_(window_half), metric_(boundary, window_half) {
        if (!(window_half > 0.0) || !std::isfinite(window_half))
            throw std::invalid_argument("PointSet: window_half must be finite and > 0");
        if (!(cell_size > 0.0))
            throw std::invalid_argument("PointSet: cell_size must be > 0");
        cell_size = std::min(cell_size, 2.0 * half_);
        cells_ = std::max(1, static_cast<int>(std::floor(2.0 * half_ / cell_size)));
        cell_ = 2.0 * half_ / static_cast<double>(cells_);
        buckets_.assign(static_cast<std::size_t>(cells_) * cells_, {});
        for (std::uint32_t i = 0; i < positions_.size(); ++i) {
            const Vec2& q = positions_[i];
            if (!(std::fabs(q.x) <= half_) || !(std::fabs(q.y) <= half_))
                throw std::invalid_argument("PointSet: point outside window");
            buckets_[bucket_of(cell_coord(q.x), cell_coord(q.y))].push_back(i);
        }
    }

    int cell_coord(double v) const {
        const int c = static_cast<int>(std::floor((v + half_) / cell_));
        return std::clamp(c, 0, cells_ - 1);
    }

    int wrap_index(int i) const {
        i %= cells_;
        return i < 0 ? i + cells_ : i;
    }

    std::size_t bucket_of(int ix, int iy) const {
        return static_cast<std::size_t>(iy) * cells_ + ix;
    }

    // Chebyshev cell ring `ring` around (cx, cy). Requires 2*ring+1 <= cells_
    // in torus mode so wrapped cells stay distinct. Visitor returns false to
    // stop.
    template <typename CellVisitor>
    void visit_ring(int cx, int cy, int ring, bool wrap, CellVisitor&& consider) const {
        for (int dy = -ring; dy <= ring; ++dy) {
            for (int dx = -ring; dx <= ring; ++dx) {
                if (std::max(std::abs(dx), std::abs(dy)) != ring) continue;
                int ix = cx + dx;
                int iy = cy + dy;
                if (wrap) {
                    ix = wrap_index(ix);
                    iy = wrap_index(iy);
                } else if (ix < 0 || iy < 0 || ix >= cells_ || iy >= cells_) {
                    continue;
                }
                for (std::uint32_t idx : buckets_[bucket_of(ix, iy)]) {
                    if (!consider(idx)) return;
                }
            }
        }
    }

    // Torus fallback: cells whose wrapped Chebyshev offset from (cx, cy) is
    // >= ring, i.e. everything rings 0..ring-1 have not covered.
    template <typename CellVisitor>
    void scan_outside_ball(int cx, int cy, int ring, CellVisitor&& consider) const {
        for (int iy = 0; iy < cells_; ++iy) {
            const int oy = wrapped_offset(iy, cy);
            for (int ix = 0; ix < cells_; ++ix) {
                if (std::max(wrapped_offset(ix, cx), oy) < ring) continue;
                for (std::uint32_t idx : buckets_[bucket_of(ix, iy)]) {
                    if (!consider(idx)) return;
                }
            }
        }
    }

    int wrapped_offset(int a, int b) const {
        const int d = std::abs(a - b);
        return std::min(d, cells_ - d);
    }

    std::vector<Vec2> positions_;
    double half_;
    Metric metric_;
    int cells_ = 1;
    double cell_ = 0.0;
    std::vector<std::vector<std::uint32_t>> buckets_;
};

/// Grid cell target for a config: the link radius when finite, else the mean
/// nearest-neighbor scale, clamped to the window.
inline double grid_cell_size(const NetworkConfig& cfg) {
    const double eta_term = std::isfinite(cfg.eta) ? cfg.eta : 0.0;
    const double cell = std::max(eta_term, 1.0 / std::sqrt(cfg.lambda));
    return std::min(cell, 2.0 * cfg.window_half);
}

/**
 * Samples a Poisson point process of intensity lambda on [-L,L]^2.
 *
 * Draw order is fixed: first the Poisson count, then per point x then y,
 * uniform on [-L,L). Identical (config, stream) pairs give bit-identical
 * point sets.
 */
inline PointSet sample_ppp(const NetworkConfig& cfg, RandomStream& stream) {
    cfg.validate();
    const double area = 4.0 * cfg.window_half * cfg.window_half;
    const std::uint64_t count = stream.poisson(cfg.lambda * area);
    if (count > (1ull << 31))
        throw std::invalid_argument("sample_ppp: expected point count too large");
    std::vector<Vec2> pts(count);
    for (auto& q : pts) {
        q.x = stream.uniform(-cfg.window_half, cfg.window_half);
        q.y = stream.uniform(-cfg.window_half, cfg.window_half);
    }
    return PointSet::from_points(std::move(pts), cfg.window_half, cfg.boundary,
                                 grid_cell_size(cfg));
}

/// Debug dump: one `index,x,y` row per point.
inline void write_points_csv(const PointSet& ps, std::ostream& os) {
    os << "index,x,y\n";
    char buf[80];
    for (std::uint32_t i = 0; i < ps.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%u,%.17g,%.17g\n", i, ps.position(i).x,
                      ps.position(i).y);
        os << buf;
    }
}

} // namespace alohadyn

#endif
