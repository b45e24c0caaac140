#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "recmfg/rng.hpp"
#include "recmfg/stats.hpp"

using namespace recmfg;

TEST_CASE("sample stats on a known sample") {
    const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
    const auto s = sample_stats(xs);
    CHECK(s.mean == Catch::Approx(2.5));
    CHECK(s.variance == Catch::Approx(5.0 / 3.0));
    CHECK(s.se == Catch::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
}

TEST_CASE("quantiles interpolate") {
    std::vector<double> xs{4.0, 1.0, 3.0, 2.0};
    CHECK(quantile(xs, 0.0) == Catch::Approx(1.0));
    CHECK(quantile(xs, 1.0) == Catch::Approx(4.0));
    CHECK(quantile(xs, 0.5) == Catch::Approx(2.5));
}

TEST_CASE("wasserstein1 basics") {
    // Identical samples: zero distance.
    CHECK(wasserstein1({1, 2, 3}, {3, 2, 1}) == Catch::Approx(0.0).margin(1e-15));
    // A pure shift moves W1 by the shift.
    CHECK(wasserstein1({1, 2, 3}, {1.5, 2.5, 3.5}) == Catch::Approx(0.5));
    // Unequal sizes: W1({0},{0,1}) integrates |0 - F_b^{-1}| = 1/2.
    CHECK(wasserstein1({0.0}, {0.0, 1.0}) == Catch::Approx(0.5));
}

TEST_CASE("wasserstein1 between matching distributions shrinks with n") {
    auto draw = [](std::uint64_t stream, int n) {
        std::vector<double> xs(n);
        for (int i = 0; i < n; ++i)
            xs[i] = rng_normal(3, stream, static_cast<std::uint64_t>(i));
        return xs;
    };
    const double w_small = wasserstein1(draw(1, 200), draw(2, 200));
    const double w_large = wasserstein1(draw(3, 20000), draw(4, 20000));
    CHECK(w_large < w_small);
}

TEST_CASE("least squares recovers a quadratic") {
    LeastSquares ls(3);
    for (int i = 0; i < 50; ++i) {
        const double x = -2.0 + 4.0 * i / 49.0;
        const double row[3] = {1.0, x, x * x};
        ls.add(row, 2.0 - 0.5 * x + 0.25 * x * x);
    }
    const auto beta = ls.solve();
    CHECK(beta[0] == Catch::Approx(2.0).margin(1e-8));
    CHECK(beta[1] == Catch::Approx(-0.5).margin(1e-8));
    CHECK(beta[2] == Catch::Approx(0.25).margin(1e-8));
}

TEST_CASE("ols slope") {
    const std::vector<double> x{0, 1, 2, 3};
    const std::vector<double> y{1, 3, 5, 7};
    CHECK(ols_slope(x, y) == Catch::Approx(2.0));
}
