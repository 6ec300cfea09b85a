#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include <alohadyn/percolation.hpp>
#include <alohadyn/propagation.hpp>
#include <alohadyn/stats.hpp>

#include "support/oracles.hpp"

using namespace alohadyn;

TEST_CASE("components of three collinear points") {
    PointSet ps = PointSet::from_points({{0, 0}, {0.5, 0}, {2, 0}}, 5.0, Boundary::window, 1.0);
    const ComponentLabeling comps = disc_components(ps, 1.0);
    CHECK(comps.n_components == 2);
    CHECK(comps.label[0] == comps.label[1]);
    CHECK(comps.label[2] != comps.label[0]);
    CHECK(comps.label[0] == 0);
    CHECK(comps.component_size(0) == 2);
}

TEST_CASE("union-find labels equal BFS flood fill") {
    RandomStream rs(808);
    for (int trial = 0; trial < 100; ++trial) {
        NetworkConfig cfg;
        cfg.lambda = rs.uniform(0.5, 2.0);
        cfg.window_half = rs.uniform(3.0, 7.0);
        cfg.boundary = trial % 2 ? Boundary::torus : Boundary::window;
        cfg.eta = rs.uniform(0.3, 1.5);
        if (cfg.boundary == Boundary::window) cfg.window_half = 5.0 * cfg.eta + 1.0;
        const PointSet ps = sample_ppp(cfg, rs);
        if (ps.size() == 0) continue;
        const double eta = rs.uniform(0.3, 1.5);
        CHECK(disc_components(ps, eta).label == oracles::bfs_components(ps, eta));
    }
}

TEST_CASE("single tight cluster is one full component") {
    PointSet ps = PointSet::from_points({{0, 0}, {0.1, 0}, {0, 0.1}, {-0.1, 0}, {0, -0.1}},
                                        5.0, Boundary::window, 1.0);
    const GiantComponent giant = giant_component(ps, 0.5, 1.0);
    CHECK(giant.size == 5);
    CHECK(giant.fraction == doctest::Approx(1.0));
}

TEST_CASE("supercritical radius carries most nodes, subcritical does not") {
    NetworkConfig cfg;
    cfg.lambda = 1.0;
    cfg.window_half = 20.0;
    cfg.boundary = Boundary::torus;
    RandomStream rs(99);
    RunningStat sup, sub;
    for (int r = 0; r < 20; ++r) {
        const PointSet ps = sample_ppp(cfg, rs);
        sup.add(giant_component(ps, 1.5, cfg.lambda).fraction);
        sub.add(giant_component(ps, 1.0, cfg.lambda).fraction);
    }
    CHECK(sup.mean() > 0.5);  // eta above sqrt(1.435)
    CHECK(sub.mean() < 0.3);  // eta below it
    CHECK(giant_component(sample_ppp(cfg, rs), 1.5, cfg.lambda).threshold_ok);
    CHECK_FALSE(giant_component(sample_ppp(cfg, rs), 1.0, cfg.lambda).threshold_ok);
}

TEST_CASE("components only coarsen as eta grows") {
    NetworkConfig cfg;
    cfg.lambda = 1.2;
    cfg.window_half = 8.0;
    cfg.boundary = Boundary::torus;
    RandomStream rs(5);
    const PointSet ps = sample_ppp(cfg, rs);
    REQUIRE(ps.size() > 10);
    double prev_fraction = 0.0;
    std::vector<std::uint32_t> prev_label;
    for (double eta : {0.4, 0.7, 1.0, 1.4}) {
        const ComponentLabeling comps = disc_components(ps, eta);
        const GiantComponent giant = giant_component(ps, eta, cfg.lambda);
        CHECK(giant.fraction >= prev_fraction);
        if (!prev_label.empty()) {
            // every old component maps into exactly one new component
            std::map<std::uint32_t, std::uint32_t> image;
            for (std::uint32_t i = 0; i < ps.size(); ++i) {
                auto [it, inserted] = image.emplace(prev_label[i], comps.label[i]);
                CHECK(it->second == comps.label[i]);
            }
        }
        prev_fraction = giant.fraction;
        prev_label = comps.label;
    }
}

TEST_CASE("invalid radii are rejected") {
    PointSet ps = PointSet::from_points({{0, 0}}, 5.0, Boundary::window, 1.0);
    CHECK_THROWS_AS(disc_components(ps, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(disc_components(ps, std::numeric_limits<double>::infinity()),
                    std::invalid_argument);
    CHECK_THROWS_AS(giant_component(ps, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("propagation on the giant component eventually reaches every member") {
    NetworkConfig cfg;
    cfg.lambda = 1.0;
    cfg.p = 0.3;
    cfg.beta = 1.2;
    cfg.eta = 1.5;
    cfg.window_half = 12.0;
    cfg.boundary = Boundary::torus;
    cfg.max_slots = 10000;
    int full = 0, runs = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        RandomStream rs = derive_stream(seed, 1, 0);
        const PointSet ps = sample_ppp(cfg, rs);
        const GiantComponent giant = giant_component(ps, cfg.eta, cfg.lambda);
        if (giant.size < 100) continue;
        const std::uint32_t src =
            ps.nearest_where(Vec2{0, 0}, [&](std::uint32_t i) { return giant.member[i] != 0; });
        PropagationOptions opts;
        opts.members = &giant.member;
        RandomStream prop_rs = derive_stream(seed, 2, 0);
        const PropagationFront front = propagate(ps, src, cfg, prop_rs, opts);
        bool all = true;
        for (std::uint32_t i = 0; i < ps.size(); ++i)
            if (giant.member[i] && !front.reached(i)) all = false;
        ++runs;
        full += all;
    }
    REQUIRE(runs >= 15);
    CHECK(static_cast<double>(full) / runs >= 0.95);
}
