#ifndef ALOHADYN_CONFIG_HPP
#define ALOHADYN_CONFIG_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include "alohadyn/geometry.hpp"

namespace alohadyn {

/// All model parameters of one network instance.
///
/// `eta` may be +infinity, which drops the link-distance condition
/// (interference-limited regime). `beta` is the guard factor of the
/// receiver-side exclusion disk.
struct NetworkConfig {
    double lambda = 1.0;      ///< node density per unit area, > 0
    double p = 0.2;           ///< ALOHA transmit probability, in (0,1)
    double beta = 1.2;        ///< interference guard factor, > 0
    double eta = 1.0;         ///< maximum link distance, > 0 or +inf
    double window_half = 50.0;///< half side length L of the window [-L,L]^2
    Boundary boundary = Boundary::window;
    std::uint64_t seed = 0;   ///< master seed for all derived streams
    std::int64_t max_slots = 1000; ///< propagation / estimator horizon

    bool interference_limited() const { return std::isinf(eta); }

    Metric metric() const { return Metric(boundary, window_half); }

    /// Throws std::invalid_argument naming the offending field.
    void validate() const {
        require(std::isfinite(lambda) && lambda > 0.0, "lambda must be finite and > 0");
        require(std::isfinite(p) && p > 0.0 && p < 1.0, "p must lie strictly in (0,1)");
        require(std::isfinite(beta) && beta > 0.0, "beta must be finite and > 0");
        require(eta > 0.0 && !std::isnan(eta), "eta must be > 0 (may be infinite)");
        require(std::isfinite(window_half) && window_half > 0.0,
                "window_half must be finite and > 0");
        require(max_slots >= 1, "max_slots must be >= 1");
        if (boundary == Boundary::window) {
            // Window-mode statistics are edge-biased unless the window dwarfs
            // the link scale; infinite eta therefore requires torus mode.
            require(std::isfinite(eta), "eta must be finite in window mode (use torus)");
            require(window_half >= 5.0 * eta,
                    "window_half must be >= 5*eta in window mode");
        }
    }

private:
    static void require(bool ok, const char* msg) {
        if (!ok) throw std::invalid_argument(std::string("NetworkConfig: ") + msg);
    }
};

} // namespace alohadyn

#endif
