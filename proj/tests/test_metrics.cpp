#include <doctest.h>

#include <cmath>

#include "genhints/metrics.hpp"

using namespace genhints;

TEST_SUITE_BEGIN("metrics");

TEST_CASE("accuracy") {
    CHECK(accuracy({0, 1, 2, 3}, {0, 1, 2, 3}) == 1.0);
    CHECK(accuracy({0, 0, 0, 0}, {0, 1, 2, 3}) == 0.25);
    CHECK(accuracy({1}, {0}) == 0.0);
    CHECK_THROWS_AS(accuracy({0, 1}, {0}), Error);
    CHECK_THROWS_AS(accuracy({}, {}), Error);
}

TEST_CASE("pearson hand cases") {
    CHECK(pearson({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pearson({1, 2, 3}, {6, 4, 2}) == doctest::Approx(-1.0).epsilon(1e-12));
    // covariance 0.5, both stddevs 1 (n-1 form): r = 0.5
    CHECK(pearson({1, 2, 3}, {1, 3, 2}) == doctest::Approx(0.5).epsilon(1e-12));

    CHECK_THROWS_AS(pearson({1, 2}, {3, 4}), Error);           // too short
    CHECK_THROWS_AS(pearson({1, 2, 3}, {5, 5, 5}), Error);     // constant series
    CHECK_THROWS_AS(pearson({1, 2, 3}, {1, 2}), Error);        // length mismatch
}

TEST_CASE("pearson is invariant under positive affine maps (property)") {
    Rng rng(101);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 3 + rng.uniform_int(20);
        std::vector<double> xs(n), ys(n);
        for (int i = 0; i < n; ++i) {
            xs[i] = rng.uniform(-2.0, 2.0);
            ys[i] = rng.uniform(-2.0, 2.0);
        }
        double r;
        try {
            r = pearson(xs, ys);
        } catch (const Error&) {
            continue;
        }
        CHECK(r >= -1.0);
        CHECK(r <= 1.0);
        const double a = 0.1 + rng.uniform(), b = rng.uniform(-3.0, 3.0);
        std::vector<double> xm = xs;
        for (auto& v : xm) v = a * v + b;
        CHECK(pearson(xm, ys) == doctest::Approx(r).epsilon(1e-9));
        // negative scale flips the sign
        for (auto& v : xm) v = -v;
        CHECK(pearson(xm, ys) == doctest::Approx(-r).epsilon(1e-9));
    }
}

TEST_CASE("correlation_study") {
    std::vector<HintLossSeries> series{
        {"good", {1, 2, 3, 4}, {1.1, 1.9, 3.2, 3.8}},
        {"bad", {1, 2, 3, 4}, {2.0, 1.0, 2.0, 1.0}},
    };
    std::vector<double> fids{0.1, 5.0};
    auto rows = correlation_study(series, fids);
    REQUIRE(rows.size() == 2);
    // sorted by fid_analog
    CHECK(rows[0].sampler == "good");
    CHECK(rows[1].sampler == "bad");
    CHECK(rows[0].fid_analog == 0.1);
    CHECK(rows[0].pearson_r > 0.95);
    CHECK(std::abs(rows[1].pearson_r) < 0.95);

    // deterministic
    auto again = correlation_study(series, fids);
    CHECK(again[0].pearson_r == rows[0].pearson_r);
    CHECK(again[1].pearson_r == rows[1].pearson_r);

    CHECK_THROWS_AS(correlation_study(series, {0.1}), Error);
    CHECK_THROWS_AS(correlation_study({}, {}), Error);
}

TEST_SUITE_END();
