#ifndef ALOHADYN_PERCOLATION_HPP
#define ALOHADYN_PERCOLATION_HPP

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "alohadyn/point_process.hpp"

namespace alohadyn {

/// Connected components of the undirected disc graph (edges where
/// dist < eta). Labels are canonical: the smallest member index.
struct ComponentLabeling {
    std::vector<std::uint32_t> label;
    std::uint32_t n_components = 0;

    std::uint32_t component_size(std::uint32_t lbl) const {
        std::uint32_t size = 0;
        for (std::uint32_t l : label)
            if (l == lbl) ++size;
        return size;
    }
};

/// Union-find labeling; neighbor pairs enumerated through the grid.
inline ComponentLabeling disc_components(const PointSet& ps, double eta) {
    if (!(eta > 0.0) || !std::isfinite(eta))
        throw std::invalid_argument("disc_components: eta must be finite and > 0");
    const std::uint32_t n = static_cast<std::uint32_t>(ps.size());
    std::vector<std::uint32_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0u);

    auto find = [&](std::uint32_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    auto unite = [&](std::uint32_t a, std::uint32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a < b) parent[b] = a; // root = smallest index, labels come out canonical
        else parent[a] = b;
    };

    for (std::uint32_t i = 0; i < n; ++i) {
        ps.for_each_within(ps.position(i), eta, [&](std::uint32_t j) {
            if (j > i) unite(i, j);
            return true;
        });
    }

    ComponentLabeling out;
    out.label.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        out.label[i] = find(i);
        if (out.label[i] == i) ++out.n_components;
    }
    return out;
}

/// Largest disc-graph component, plus whether eta clears the continuum
/// percolation threshold sqrt(1.435 / lambda).
struct GiantComponent {
    std::vector<std::uint8_t> member;
    std::uint32_t size = 0;
    double fraction = 0.0;
    bool threshold_ok = false;
};

inline GiantComponent giant_component(const PointSet& ps, double eta, double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("giant_component: lambda must be finite and > 0");
    const ComponentLabeling comps = disc_components(ps, eta);
    const std::uint32_t n = static_cast<std::uint32_t>(ps.size());

    GiantComponent giant;
    giant.threshold_ok = eta > std::sqrt(1.435 / lambda);
    giant.member.assign(n, 0);
    if (n == 0) return giant;

    std::vector<std::uint32_t> size_of(n, 0);
    for (std::uint32_t l : comps.label) ++size_of[l];
    std::uint32_t best_label = 0;
    for (std::uint32_t l = 0; l < n; ++l)
        if (size_of[l] > size_of[best_label]) best_label = l; // first max = smallest label
    for (std::uint32_t i = 0; i < n; ++i) giant.member[i] = comps.label[i] == best_label;
    giant.size = size_of[best_label];
    giant.fraction = static_cast<double>(giant.size) / static_cast<double>(n);
    return giant;
}

} // namespace alohadyn

#endif
