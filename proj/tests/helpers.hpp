// Shared test fixtures: the reference market configurations used across the
// unit and acceptance suites. These mirror configs/*.json.
#pragma once

#include <vector>

#include "recmfg/market.hpp"
#include "recmfg/penalty.hpp"

namespace recmfg::testing {

// Two heterogeneous sub-populations; with linear contracts the closed forms
// give S = 0.625/0.75 = 0.8333..., Gamma = (+1/6, -1/12).
inline MarketConfig reference_k2() {
    MarketConfig cfg;
    cfg.horizon = 1.0;
    cfg.time_steps = 200;
    cfg.x_min = -2.0;
    cfg.x_max = 4.0;
    cfg.x_points = 121;
    cfg.a_min = 0.0;
    cfg.a_max = 2.0;
    cfg.a_points = 21;
    cfg.reservation_cost = 0.0;
    cfg.mc_paths = 20000;
    cfg.rng_seed = 20240901;

    SubPopulationParams p1;
    p1.zeta = 1.0;
    p1.gamma = 1.0;
    p1.beta = 1.0;
    p1.sigma = 0.1;
    p1.baseline = {0.5};
    p1.pi = 0.5;
    p1.lambda_weight = 1.0;
    p1.initial_inventory = InventoryLaw::normal(0.6, 0.2);

    SubPopulationParams p2 = p1;
    p2.zeta = 2.0;
    p2.gamma = 2.0;
    p2.lambda_weight = 0.5;

    cfg.subpopulations = {p1, p2};
    return cfg;
}

inline std::vector<PenaltySpec> reference_k2_linear_contracts() {
    return {PenaltySpec::linear(1.0), PenaltySpec::linear(0.5)};
}

inline std::vector<PenaltySpec> reference_k2_softplus_contracts() {
    return {PenaltySpec::softplus_hockey(1.0, 1.0, 0.2),
            PenaltySpec::softplus_hockey(1.0, 1.0, 0.2)};
}

// Single population, quadratic penalty: the Riccati oracle's target.
inline MarketConfig lq_k1() {
    MarketConfig cfg;
    cfg.horizon = 1.0;
    cfg.time_steps = 400;
    cfg.x_min = -1.5;
    cfg.x_max = 3.0;
    cfg.x_points = 181;
    cfg.a_min = 0.0;
    cfg.a_max = 1.0;
    cfg.a_points = 81;
    cfg.reservation_cost = 0.0;
    cfg.mc_paths = 20000;
    cfg.rng_seed = 7041;

    SubPopulationParams p;
    p.zeta = 1.0;
    p.gamma = 1.0;
    p.beta = 1.0;
    p.sigma = 0.1;
    p.baseline = {0.5};
    p.pi = 1.0;
    p.lambda_weight = 1.0;
    p.initial_inventory = InventoryLaw::normal(0.0, 0.1);
    cfg.subpopulations = {p};
    return cfg;
}

inline PenaltySpec lq_k1_quadratic() { return PenaltySpec::quadratic(1.0, 1.0); }

// Single population, no noise, point-mass start: everything is computable
// by one-dimensional quadrature.
inline MarketConfig deterministic_k1() {
    MarketConfig cfg;
    cfg.horizon = 1.0;
    cfg.time_steps = 200;
    cfg.x_min = -2.0;
    cfg.x_max = 4.0;
    cfg.x_points = 121;
    cfg.a_min = 0.0;
    cfg.a_max = 2.0;
    cfg.a_points = 21;
    cfg.reservation_cost = 0.0;
    cfg.mc_paths = 64;
    cfg.rng_seed = 99;

    SubPopulationParams p;
    p.zeta = 1.0;
    p.gamma = 1.0;
    p.beta = 1.0;
    p.sigma = 0.0;
    p.baseline = {0.5};
    p.pi = 1.0;
    p.lambda_weight = 1.0;
    p.initial_inventory = InventoryLaw::point(0.0);
    cfg.subpopulations = {p};
    return cfg;
}

} // namespace recmfg::testing
