#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "oracles.hpp"
#include "recmfg/hjb.hpp"
#include "recmfg/rng.hpp"

using namespace recmfg;

namespace {

FeedbackSolution solve_reference_pop(int k, const PenaltySpec& penalty,
                                     double price_level) {
    const auto cfg = testing::reference_k2();
    return solve_backward(cfg.subpopulations[static_cast<std::size_t>(k)], penalty,
                          PricePath::constant(price_level, cfg.time_grid().nodes()),
                          cfg.time_grid(), cfg.x_grid(), cfg.a_grid());
}

} // namespace

TEST_CASE("linear penalty gives constant YX and linear-in-time YA") {
    const double lambda = 1.0;
    const auto sol = solve_reference_pop(0, PenaltySpec::linear(lambda), 0.625 / 0.75);
    const auto tg = sol.tg;

    double max_yx_err = 0.0, max_ya_err = 0.0;
    for (int n = 0; n <= tg.steps; ++n) {
        const double target_ya = -lambda * (tg.horizon - tg.t(n));
        for (int i = 0; i < sol.xg.points; ++i)
            for (int j = 0; j < sol.ag.points; ++j) {
                max_yx_err = std::max(max_yx_err,
                                      std::abs(sol.YX.at(n, i, j) + lambda));
                max_ya_err = std::max(max_ya_err,
                                      std::abs(sol.YA.at(n, i, j) - target_ya));
            }
    }
    CHECK(max_yx_err < 1e-8);
    CHECK(max_ya_err < 1e-6);
    CHECK_FALSE(sol.positivity_violated);
}

TEST_CASE("feedback controls follow the first-order conditions") {
    const auto cfg = testing::reference_k2();
    const double s = 0.625 / 0.75; // 0.83333...

    auto u = feedback_controls(-1.0, 0.0, s, cfg.subpopulations[0]);
    CHECK(u.g == Catch::Approx(1.0));
    CHECK(u.gamma_rate == Catch::Approx((1.0 - s) / 1.0).epsilon(1e-6));
    CHECK(u.gamma_rate == Catch::Approx(0.16667).margin(1e-5));

    u = feedback_controls(-0.5, 0.0, s, cfg.subpopulations[1]);
    CHECK(u.gamma_rate == Catch::Approx((0.5 - s) / 2.0).epsilon(1e-9));
    CHECK(u.gamma_rate == Catch::Approx(-0.16667).margin(1e-5));

    u = feedback_controls(0.0, -1.0 * (1.0 - 0.0), s, cfg.subpopulations[0]);
    CHECK(u.alpha == Catch::Approx(1.0));
}

TEST_CASE("terminal slices match the contract") {
    const auto spec = PenaltySpec::softplus_hockey(1.0, 1.0, 0.2);
    const auto sol = solve_reference_pop(0, spec, 0.8);
    const int nt = sol.tg.steps;
    double max_yx_gap = 0.0;
    for (int i = 0; i < sol.xg.points; ++i) {
        const auto e = penalty_eval(spec, sol.xg.at(i));
        for (int j = 0; j < sol.ag.points; ++j) {
            CHECK(sol.V.at(nt, i, j) == e.value); // exact by construction
            CHECK(sol.YA.at(nt, i, j) == 0.0);
            if (i > 0 && i + 1 < sol.xg.points)
                max_yx_gap = std::max(max_yx_gap,
                                      std::abs(sol.YX.at(nt, i, j) - e.slope));
        }
    }
    // central grid gradient of C vs C': O(dx^2 * |C'''|)
    const double dx = sol.xg.step();
    CHECK(max_yx_gap < dx * dx * (1.0 / (0.2 * 0.2)));
}

TEST_CASE("interpolation is exact at nodes and linear between them") {
    const double lambda = 0.75;
    const auto sol = solve_reference_pop(0, PenaltySpec::linear(lambda), 0.8);

    // exact node: bit-for-bit
    const double t = sol.tg.t(17);
    const double x = sol.xg.at(40);
    const double a = sol.ag.at(5);
    const auto s = interpolate_feedback(sol, t, x, a);
    CHECK_FALSE(s.clamped);
    CHECK(s.v == sol.V.at(17, 40, 5));
    CHECK(s.yx == sol.YX.at(17, 40, 5));
    CHECK(s.ya == sol.YA.at(17, 40, 5));

    // midpoint along x of a field linear in x: arithmetic mean
    const double xm = 0.5 * (sol.xg.at(40) + sol.xg.at(41));
    const auto m = interpolate_feedback(sol, t, xm, a);
    CHECK(m.v == Catch::Approx(0.5 * (sol.V.at(17, 40, 5) + sol.V.at(17, 41, 5)))
                     .epsilon(1e-14));

    // linear-penalty solution: YX = -lambda anywhere, including off-grid points
    const auto q = interpolate_feedback(sol, 0.31, 0.123, 0.456);
    CHECK(q.yx == Catch::Approx(-lambda).margin(1e-8));

    // outside the grid: clamped flag
    CHECK(interpolate_feedback(sol, 0.1, sol.xg.hi + 1.0, 0.0).clamped);
    CHECK_FALSE(interpolate_feedback(sol, 0.1, 0.0, 0.0).clamped);
}

TEST_CASE("deterministic control problem matches trajectory quadrature") {
    // sigma = 0, C(x) = -x, zeta = gamma = beta = 1, h = 0.5, S = 1, T = 1.
    // Candidate optimum: g = 1, Gamma = 0, alpha(t) = 1 - t; cost = -7/6.
    testing::DeterministicTrajectoryOracle oracle;
    oracle.h = [](double) { return 0.5; };
    oracle.price = [](double) { return 1.0; };
    oracle.g = [](double) { return 1.0; };
    oracle.trading = [](double) { return 0.0; };
    oracle.alpha = [](double t) { return 1.0 - t; };
    oracle.terminal = [](double x) { return -x; };
    const double candidate = oracle.run(0.0);
    CHECK(candidate == Catch::Approx(-7.0 / 6.0).margin(1e-7));

    // perturbing any control away from the candidate increases the cost
    for (int trial = 0; trial < 8; ++trial) {
        const auto st = static_cast<std::uint64_t>(trial);
        auto bumped = oracle;
        const double dg = 0.2 * (rng_uniform(5, st, 0) - 0.5);
        const double dgam = 0.2 * (rng_uniform(5, st, 1) - 0.5);
        const double dal = 0.2 * (rng_uniform(5, st, 2) - 0.5);
        bumped.g = [dg](double) { return 1.0 + dg; };
        bumped.trading = [dgam](double) { return dgam; };
        bumped.alpha = [dal](double t) { return 1.0 - t + dal; };
        CHECK(bumped.run(0.0) > candidate - 1e-12);
    }

    auto cfg = testing::deterministic_k1();
    const auto& sp = cfg.subpopulations[0];
    const auto sol = solve_backward(sp, PenaltySpec::linear(1.0),
                                    PricePath::constant(1.0, cfg.time_grid().nodes()),
                                    cfg.time_grid(), cfg.x_grid(), cfg.a_grid());
    // (x=0, a=0) is a grid node
    const auto at0 = interpolate_feedback(sol, 0.0, 0.0, 0.0);
    CHECK(at0.v == Catch::Approx(candidate).margin(2e-3));
}

TEST_CASE("value stays convex in x for convex penalties") {
    const auto sol =
        solve_reference_pop(0, PenaltySpec::softplus_hockey(1.0, 1.0, 0.2), 0.8);
    for (int n = 0; n <= sol.tg.steps; n += 10)
        for (int j = 0; j < sol.ag.points; j += 4)
            for (int i = 1; i + 1 < sol.xg.points; ++i) {
                const double second = sol.V.at(n, i + 1, j) - 2.0 * sol.V.at(n, i, j) +
                                      sol.V.at(n, i - 1, j);
                CHECK(second >= -1e-8);
            }
}

TEST_CASE("pointwise larger penalties give pointwise larger values") {
    const auto lo = PenaltySpec::softplus_hockey(0.8, 1.0, 0.2);
    const auto hi = PenaltySpec::softplus_hockey(1.2, 1.0, 0.2);
    const auto sol_lo = solve_reference_pop(0, lo, 0.8);
    const auto sol_hi = solve_reference_pop(0, hi, 0.8);
    // Comparison holds up to the policy/upwind truncation mismatch, which
    // sits well below grid accuracy.
    for (int n = 0; n <= sol_lo.tg.steps; n += 20)
        for (int j = 0; j < sol_lo.ag.points; j += 5)
            for (int i = 0; i < sol_lo.xg.points; i += 8)
                CHECK(sol_hi.V.at(n, i, j) >= sol_lo.V.at(n, i, j) - 1e-6);
}

TEST_CASE("solver failure modes") {
    auto cfg = testing::reference_k2();
    const auto price = PricePath::constant(0.8, cfg.time_grid().nodes());

    // grossly violated CFL: few steps, steep drift
    cfg.time_steps = 4;
    SolverOptions coarse;
    coarse.time_refine = 1;
    CHECK_THROWS_AS(solve_backward(cfg.subpopulations[0],
                                   PenaltySpec::linear(1.0),
                                   PricePath::constant(0.8, 5), cfg.time_grid(),
                                   cfg.x_grid(), cfg.a_grid(), coarse),
                    GridTooCoarseError);

    // policy iteration cannot converge in a single sweep
    cfg = testing::reference_k2();
    SolverOptions opt;
    opt.policy_max_iter = 1;
    CHECK_THROWS_AS(solve_backward(cfg.subpopulations[0],
                                   PenaltySpec::softplus_hockey(1.0, 1.0, 0.2),
                                   price, cfg.time_grid(), cfg.x_grid(),
                                   cfg.a_grid(), opt),
                    NonConvergenceError);

    // price path of the wrong length is rejected
    CHECK_THROWS_AS(solve_backward(cfg.subpopulations[0], PenaltySpec::linear(1.0),
                                   PricePath::constant(0.8, 7), cfg.time_grid(),
                                   cfg.x_grid(), cfg.a_grid()),
                    std::invalid_argument);
}
