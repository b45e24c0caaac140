// Terminal non-compliance penalties C(x): the contract the regulator hands
// each sub-population. Three families, all with closed-form value / slope /
// curvature, plus a grid-based admissibility report (convexity, slope sign,
// slope bound, Lipschitz estimate of the slope).
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "recmfg/market.hpp"

namespace recmfg {

struct PenaltyEval {
    double value = 0.0;
    double slope = 0.0;
    double curvature = 0.0;
};

struct PenaltySpec {
    enum class Kind { Linear, Quadratic, SoftplusHockey };
    Kind kind = Kind::Linear;
    double slope_lambda = 0.0; // linear: C(x) = -slope_lambda * x + intercept
    double p = 0.0;            // quadratic: C(x) = p/2 (x - r)^2 + intercept
    double r = 0.0;            // softplus: C(x) = p e log(1+exp((r-x)/e)) + intercept
    double eps = 0.0;
    double intercept = 0.0;

    static PenaltySpec linear(double lambda, double c = 0.0) {
        PenaltySpec s;
        s.kind = Kind::Linear;
        s.slope_lambda = lambda;
        s.intercept = c;
        if (!(lambda >= 0.0))
            throw std::invalid_argument("linear penalty: slope must be >= 0");
        return s;
    }
    static PenaltySpec quadratic(double p, double r, double c = 0.0) {
        PenaltySpec s;
        s.kind = Kind::Quadratic;
        s.p = p;
        s.r = r;
        s.intercept = c;
        if (!(p > 0.0)) throw std::invalid_argument("quadratic penalty: P must be > 0");
        return s;
    }
    static PenaltySpec softplus_hockey(double p, double r, double eps, double c = 0.0) {
        PenaltySpec s;
        s.kind = Kind::SoftplusHockey;
        s.p = p;
        s.r = r;
        s.eps = eps;
        s.intercept = c;
        if (!(p > 0.0)) throw std::invalid_argument("softplus penalty: P must be > 0");
        if (!(eps > 0.0)) throw std::invalid_argument("softplus penalty: eps must be > 0");
        return s;
    }

    PenaltySpec with_intercept(double c) const {
        PenaltySpec s = *this;
        s.intercept = c;
        return s;
    }
};

inline PenaltyEval penalty_eval(const PenaltySpec& spec, double x) {
    PenaltyEval e;
    switch (spec.kind) {
    case PenaltySpec::Kind::Linear:
        e.value = -spec.slope_lambda * x + spec.intercept;
        e.slope = -spec.slope_lambda;
        e.curvature = 0.0;
        break;
    case PenaltySpec::Kind::Quadratic: {
        const double d = x - spec.r;
        e.value = 0.5 * spec.p * d * d + spec.intercept;
        e.slope = spec.p * d;
        e.curvature = spec.p;
        break;
    }
    case PenaltySpec::Kind::SoftplusHockey: {
        const double z = (spec.r - x) / spec.eps;
        // eps*log(1+exp(z)) evaluated without overflow.
        const double softplus =
            z > 0.0 ? spec.eps * (z + std::log1p(std::exp(-z)))
                    : spec.eps * std::log1p(std::exp(z));
        const double sig = z > 0.0 ? 1.0 / (1.0 + std::exp(-z))
                                   : std::exp(z) / (1.0 + std::exp(z));
        e.value = spec.p * softplus + spec.intercept;
        e.slope = -spec.p * sig;
        e.curvature = spec.p / spec.eps * sig * (1.0 - sig);
        break;
    }
    }
    return e;
}

struct AdmissibilityReport {
    bool convex = true;           // slope non-decreasing on the grid
    bool slope_nonpositive = true;
    bool slope_bounded = true;
    double max_convexity_violation = 0.0; // most negative slope increment, magnitude
    double max_slope = -std::numeric_limits<double>::infinity();
    double min_slope = std::numeric_limits<double>::infinity();
    double slope_lipschitz = 0.0; // finite-difference estimate of sup |C''|
    std::string note;

    bool admissible() const { return convex && slope_nonpositive && slope_bounded; }
};

// Grid-based check of the admissible-contract conditions. The callable form
// exists so tests can probe arbitrary (value, slope) pairs.
inline AdmissibilityReport
admissibility_check(const std::function<double(double)>& slope_fn,
                    const AxisGrid& grid, double tol = 1e-9) {
    AdmissibilityReport rep;
    std::vector<double> slopes(grid.points);
    for (int i = 0; i < grid.points; ++i) slopes[i] = slope_fn(grid.at(i));

    for (int i = 0; i < grid.points; ++i) {
        const double s = slopes[i];
        if (!std::isfinite(s)) {
            rep.slope_bounded = false;
            continue;
        }
        rep.max_slope = std::max(rep.max_slope, s);
        rep.min_slope = std::min(rep.min_slope, s);
        if (s > tol) rep.slope_nonpositive = false;
        if (i > 0 && std::isfinite(slopes[i - 1])) {
            const double ds = s - slopes[i - 1];
            if (ds < -tol) {
                rep.convex = false;
                rep.max_convexity_violation =
                    std::max(rep.max_convexity_violation, -ds);
            }
            rep.slope_lipschitz =
                std::max(rep.slope_lipschitz, std::abs(ds) / grid.step());
        }
    }
    return rep;
}

inline AdmissibilityReport admissibility_check(const PenaltySpec& spec,
                                               const AxisGrid& grid,
                                               double tol = 1e-9) {
    auto rep = admissibility_check(
        [&spec](double x) { return penalty_eval(spec, x).slope; }, grid, tol);
    if (spec.kind == PenaltySpec::Kind::Quadratic)
        rep.note = "quadratic slope is unbounded off-grid; conditions checked on "
                   "the bounded state grid only";
    return rep;
}

} // namespace recmfg
