#ifndef ALOHADYN_GEOMETRY_HPP
#define ALOHADYN_GEOMETRY_HPP

#include <cmath>
#include <cstdint>

namespace alohadyn {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline bool operator==(const Vec2& a, const Vec2& b) { return a.x == b.x && a.y == b.y; }

/// Boundary treatment of the square window [-L, L]^2.
enum class Boundary : std::uint8_t {
    window, ///< plain Euclidean distance, edges are hard
    torus   ///< coordinates wrap with period 2L
};

/// Distance under a boundary mode. All comparisons in the library are done on
/// squared distances so that strict "< r" tests share one floating-point path.
class Metric {
public:
    Metric(Boundary mode, double window_half) : mode_(mode), half_(window_half) {}

    Boundary mode() const { return mode_; }
    double window_half() const { return half_; }

    double dist2(const Vec2& a, const Vec2& b) const {
        double dx = a.x - b.x;
        double dy = a.y - b.y;
        if (mode_ == Boundary::torus) {
            dx = fold(dx);
            dy = fold(dy);
        }
        return dx * dx + dy * dy;
    }

    double dist(const Vec2& a, const Vec2& b) const { return std::sqrt(dist2(a, b)); }

private:
    // shortest signed offset on a circle of circumference 2L
    double fold(double d) const {
        const double period = 2.0 * half_;
        d = std::fabs(d);
        if (d > half_) d = period - d;
        return d;
    }

    Boundary mode_;
    double half_;
};

} // namespace alohadyn

#endif
