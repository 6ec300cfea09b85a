#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include <alohadyn/rng.hpp>
#include <alohadyn/stats.hpp>

using namespace alohadyn;

TEST_CASE("splitmix64 matches the reference sequence") {
    std::uint64_t state = 0;
    CHECK(splitmix64(state) == 0xe220a8397b1dcdafULL);
    CHECK(splitmix64(state) == 0x6e789e6aa1b965f4ULL);
    CHECK(splitmix64(state) == 0x06c45d188009454fULL);
}

TEST_CASE("xoshiro256++ stream matches an independent implementation") {
    RandomStream a(42);
    CHECK(a.next_u64() == 0xd0764d4f4476689fULL);
    CHECK(a.next_u64() == 0x519e4174576f3791ULL);
    CHECK(a.next_u64() == 0xfbe07cfb0c24ed8cULL);
    CHECK(a.next_u64() == 0xb37d9f600cd835b8ULL);

    RandomStream b(0);
    CHECK(b.next_u64() == 0x53175d61490b23dfULL);
    CHECK(b.next_u64() == 0x61da6f3dc380d507ULL);

    RandomStream c(42);
    CHECK(c.next_double() == doctest::Approx(0.8143051451229099).epsilon(1e-15));
}

TEST_CASE("identical seeds give identical sequences") {
    RandomStream a(12345), b(12345);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("derived streams differ across tags and indices") {
    std::set<std::uint64_t> seeds;
    for (std::uint64_t tag = 0; tag < 8; ++tag)
        for (std::uint64_t idx = 0; idx < 64; ++idx) seeds.insert(derive_seed(9, tag, idx));
    CHECK(seeds.size() == 8 * 64);
    CHECK(derive_seed(1, 2, 3) != derive_seed(2, 1, 3));
    CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
}

TEST_CASE("uniform doubles have the right range and mean") {
    RandomStream rs(7);
    RunningStat stat;
    for (int i = 0; i < 100000; ++i) {
        const double u = rs.next_double();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        stat.add(u);
    }
    // sigma of the mean = 1/sqrt(12 n)
    CHECK(std::fabs(stat.mean() - 0.5) < 3.0 / std::sqrt(12.0 * 100000));
}

TEST_CASE("bernoulli fraction concentrates on p") {
    RandomStream rs(11);
    const double p = 0.3;
    int hits = 0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) hits += rs.bernoulli(p);
    const double se = std::sqrt(p * (1 - p) / n);
    CHECK(std::fabs(static_cast<double>(hits) / n - p) < 3.0 * se);
}

TEST_CASE("poisson sampler: mean and variance at small and large means") {
    for (double mean : {0.5, 5.0, 800.0}) {
        RandomStream rs(static_cast<std::uint64_t>(mean * 1000) + 1);
        RunningStat stat;
        const int n = 4000;
        for (int i = 0; i < n; ++i) stat.add(static_cast<double>(rs.poisson(mean)));
        const double se_mean = std::sqrt(mean / n);
        CHECK(std::fabs(stat.mean() - mean) < 3.0 * se_mean);
        const double se_var = mean * std::sqrt(2.0 / (n - 1) + 1.0 / (mean * n));
        CHECK(std::fabs(stat.variance() - mean) < 3.0 * se_var);
    }
}

TEST_CASE("poisson edge cases") {
    RandomStream rs(3);
    CHECK(rs.poisson(0.0) == 0);
    CHECK_THROWS_AS(rs.poisson(-1.0), std::invalid_argument);
    CHECK_THROWS_AS(rs.poisson(std::numeric_limits<double>::infinity()),
                    std::invalid_argument);
}

TEST_CASE("ks_two_sample separates equal and shifted samples") {
    RandomStream rs(21);
    std::vector<double> a, b, c;
    for (int i = 0; i < 600; ++i) {
        a.push_back(rs.next_double());
        b.push_back(rs.next_double());
        c.push_back(rs.next_double() + 0.2);
    }
    CHECK(ks_two_sample(a, b).p_value > 0.01);
    CHECK(ks_two_sample(a, c).p_value < 0.01);
    CHECK_THROWS_AS(ks_two_sample({}, a), std::invalid_argument);
}
