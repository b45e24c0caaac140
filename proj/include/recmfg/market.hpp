// Market model primitives: per-sub-population cost/dynamics parameters,
// the global market configuration with its time/state grids, validation,
// and the eta/upsilon constants used by the price formula and the solver.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace recmfg {

struct TimeGrid {
    double horizon = 1.0;
    int steps = 100; // Nt intervals, Nt+1 nodes

    double dt() const { return horizon / steps; }
    double t(int n) const { return horizon * n / steps; }
    int nodes() const { return steps + 1; }
};

struct AxisGrid {
    double lo = 0.0;
    double hi = 1.0;
    int points = 2;

    double step() const { return (hi - lo) / (points - 1); }
    double at(int i) const {
        return i == points - 1 ? hi : lo + i * step();
    }
};

// Initial REC inventory law: point mass or normal.
struct InventoryLaw {
    enum class Kind { Point, Normal };
    Kind kind = Kind::Point;
    double mean = 0.0;
    double sd = 0.0;

    static InventoryLaw point(double v) { return {Kind::Point, v, 0.0}; }
    static InventoryLaw normal(double m, double s) { return {Kind::Normal, m, s}; }
};

struct SubPopulationParams {
    double zeta = 1.0;   // generation cost coefficient, > 0
    double gamma = 1.0;  // trading friction coefficient, > 0
    double beta = 1.0;   // expansion cost coefficient, > 0
    double sigma = 0.0;  // generation volatility, >= 0
    // Baseline generation h(t), piecewise constant per time step: either a
    // single value or one value per step.
    std::vector<double> baseline{0.0};
    double pi = 1.0;           // population weight
    double lambda_weight = 0.0; // principal's REC valuation lambda^k
    InventoryLaw initial_inventory;

    double h(int step) const {
        return baseline.size() == 1 ? baseline[0]
                                    : baseline[static_cast<std::size_t>(step)];
    }
};

struct MarketConfig {
    double horizon = 1.0;
    int time_steps = 100;
    double x_min = -1.0, x_max = 1.0;
    int x_points = 2;
    double a_min = 0.0, a_max = 1.0;
    int a_points = 2;
    std::vector<SubPopulationParams> subpopulations;
    double reservation_cost = 0.0;
    long mc_paths = 20000;
    std::uint64_t rng_seed = 0;

    TimeGrid time_grid() const { return {horizon, time_steps}; }
    AxisGrid x_grid() const { return {x_min, x_max, x_points}; }
    AxisGrid a_grid() const { return {a_min, a_max, a_points}; }
    int n_subpops() const { return static_cast<int>(subpopulations.size()); }
};

struct Violation {
    std::string path;    // config location, e.g. "subpopulations[0].gamma"
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

inline ValidationReport validate_config(const MarketConfig& cfg) {
    ValidationReport rep;
    auto fail = [&rep](std::string path, std::string msg) {
        rep.violations.push_back({std::move(path), std::move(msg)});
    };
    auto finite = [](double v) { return std::isfinite(v); };

    if (!(cfg.horizon > 0.0) || !finite(cfg.horizon))
        fail("horizon", "must be > 0");
    if (cfg.time_steps < 2) fail("time_steps", "must be >= 2");
    if (cfg.x_points < 2) fail("x_grid.points", "must be >= 2");
    if (cfg.a_points < 2) fail("a_grid.points", "must be >= 2");
    if (!(cfg.x_min < cfg.x_max)) fail("x_grid", "min must be < max");
    if (cfg.a_min != 0.0) fail("a_grid.min", "must be 0 (capacity starts at 0)");
    if (!(cfg.a_min < cfg.a_max)) fail("a_grid", "min must be < max");
    if (cfg.mc_paths < 2) fail("mc_paths", "must be >= 2");
    if (!finite(cfg.reservation_cost)) fail("reservation_cost", "must be finite");
    if (cfg.subpopulations.empty()) fail("subpopulations", "at least one required");

    double pi_sum = 0.0;
    for (std::size_t k = 0; k < cfg.subpopulations.size(); ++k) {
        const auto& sp = cfg.subpopulations[k];
        const std::string base = "subpopulations[" + std::to_string(k) + "].";
        if (!(sp.zeta > 0.0) || !finite(sp.zeta)) fail(base + "zeta", "must be > 0");
        if (!(sp.gamma > 0.0) || !finite(sp.gamma)) fail(base + "gamma", "must be > 0");
        if (!(sp.beta > 0.0) || !finite(sp.beta)) fail(base + "beta", "must be > 0");
        if (!(sp.sigma >= 0.0) || !finite(sp.sigma)) fail(base + "sigma", "must be >= 0");
        if (!(sp.lambda_weight >= 0.0) || !finite(sp.lambda_weight))
            fail(base + "lambda_weight", "must be >= 0");
        if (!(sp.pi > 0.0 && sp.pi <= 1.0)) fail(base + "pi", "must be in (0, 1]");
        if (sp.baseline.empty() ||
            (sp.baseline.size() != 1 &&
             sp.baseline.size() != static_cast<std::size_t>(cfg.time_steps)))
            fail(base + "baseline", "must have 1 or time_steps entries");
        for (double h : sp.baseline)
            if (!(h >= 0.0) || !finite(h)) {
                fail(base + "baseline", "entries must be finite and >= 0");
                break;
            }
        if (!finite(sp.initial_inventory.mean))
            fail(base + "initial_inventory.mean", "must be finite");
        if (sp.initial_inventory.kind == InventoryLaw::Kind::Normal &&
            !(sp.initial_inventory.sd >= 0.0))
            fail(base + "initial_inventory.sd", "must be >= 0");
        pi_sum += sp.pi;
    }
    if (!cfg.subpopulations.empty() && std::abs(pi_sum - 1.0) > 1e-12)
        fail("subpopulations", "population weights sum " + std::to_string(pi_sum) +
                                   " != 1");
    return rep;
}

// eta_k = pi_k / gamma_k, eta = sum_k eta_k, upsilon_k = 1/gamma_k + 1/zeta_k.
struct EtaWeights {
    std::vector<double> eta_k;
    std::vector<double> upsilon_k;
    double eta = 0.0;
};

inline EtaWeights eta_weights(const MarketConfig& cfg) {
    EtaWeights w;
    w.eta_k.reserve(cfg.subpopulations.size());
    w.upsilon_k.reserve(cfg.subpopulations.size());
    for (const auto& sp : cfg.subpopulations) {
        w.eta_k.push_back(sp.pi / sp.gamma);
        w.upsilon_k.push_back(1.0 / sp.gamma + 1.0 / sp.zeta);
    }
    w.eta = 0.0;
    for (double e : w.eta_k) w.eta += e;
    return w;
}

} // namespace recmfg
