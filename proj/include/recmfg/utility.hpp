// The regulator's utility function U_P: non-decreasing, convex, derivative
// of at most linear growth.
#pragma once

#include <algorithm>
#include <stdexcept>

namespace recmfg {

struct UtilityEval {
    double value = 0.0;
    double slope = 0.0;
};

struct UtilitySpec {
    enum class Kind { Identity, ConvexHinge };
    Kind kind = Kind::Identity;
    double kappa = 0.0; // convex_hinge: U(x) = x + kappa * max(x,0)^2

    static UtilitySpec identity() { return {}; }
    static UtilitySpec convex_hinge(double kappa) {
        if (!(kappa >= 0.0))
            throw std::invalid_argument("convex_hinge: kappa must be >= 0");
        UtilitySpec s;
        s.kind = Kind::ConvexHinge;
        s.kappa = kappa;
        return s;
    }
};

inline UtilityEval utility_eval(const UtilitySpec& spec, double x) {
    switch (spec.kind) {
    case UtilitySpec::Kind::Identity:
        return {x, 1.0};
    case UtilitySpec::Kind::ConvexHinge: {
        const double xp = std::max(x, 0.0);
        return {x + spec.kappa * xp * xp, 1.0 + 2.0 * spec.kappa * xp};
    }
    }
    return {};
}

} // namespace recmfg
