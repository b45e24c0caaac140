// Closed-form and ODE-based reference solutions used as ground truth for
// the PDE/fixed-point pipeline.
//
// Linear contracts C(x) = -lambda x + c admit exact formulas for any K:
// YX = -lambda_k, YA = -lambda_k (T-t), S = sum_j eta_j lambda_j / eta.
//
// For a single population with quadratic penalty C(x) = P/2 (x-R)^2 + c the
// value function is itself quadratic,
//   V(t,x,a) = p x^2/2 + q x a + r a^2/2 + s x + u a + w,
// and the coefficients satisfy the ODE system (upsilon = 1/zeta + 1/gamma)
//   p' = upsilon p^2 + q^2/beta
//   q' = -p + upsilon p q + q r/beta
//   r' = -2 q + upsilon q^2 + r^2/beta
//   s' = -h p + p s/zeta + p (s + S)/gamma + q u/beta
//   u' = -h q - s + q s/zeta + q (s + S)/gamma + r u/beta
//   w' = -h s + s^2/(2 zeta) + (s + S)^2/(2 gamma) + u^2/(2 beta) - sigma^2 p/2
// integrated backward from p(T)=P, s(T)=-PR, w(T)=PR^2/2+c, q=r=u=0.
//
// In the self-consistent (equilibrium) case the price is S = -m* where
// m* = E[Y^X] is constant (the adjoint is a martingale). Writing
// m(t) = p mean_x + q mean_a + s, one finds m' = (p/gamma)(m - m*), so the
// equilibrium is pinned by the scalar condition m* = p(0) E[xi] + s(0; m*),
// which is affine in m* and solved exactly from two backward sweeps.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "recmfg/market.hpp"
#include "recmfg/penalty.hpp"
#include "recmfg/rng.hpp"

namespace recmfg {

struct LinearContractSolution {
    double horizon = 0.0;
    double price = 0.0;              // S = sum eta_j lambda_j / eta
    std::vector<double> lambda;      // per k
    std::vector<double> yx;          // -lambda_k
    std::vector<double> g;           // lambda_k / zeta_k
    std::vector<double> trading;     // (lambda_k - S) / gamma_k
    std::vector<double> pi, beta;

    double ya(int k, double t) const {
        return -lambda[static_cast<std::size_t>(k)] * (horizon - t);
    }
    double alpha(int k, double t) const {
        return lambda[static_cast<std::size_t>(k)] * (horizon - t) /
               beta[static_cast<std::size_t>(k)];
    }
};

inline LinearContractSolution linear_contract_solution(const MarketConfig& cfg) {
    const EtaWeights w = eta_weights(cfg);
    LinearContractSolution sol;
    sol.horizon = cfg.horizon;
    double num = 0.0;
    for (std::size_t k = 0; k < cfg.subpopulations.size(); ++k)
        num += w.eta_k[k] * cfg.subpopulations[k].lambda_weight;
    sol.price = num / w.eta;
    for (const auto& sp : cfg.subpopulations) {
        sol.lambda.push_back(sp.lambda_weight);
        sol.yx.push_back(-sp.lambda_weight);
        sol.g.push_back(sp.lambda_weight / sp.zeta);
        sol.trading.push_back((sp.lambda_weight - sol.price) / sp.gamma);
        sol.pi.push_back(sp.pi);
        sol.beta.push_back(sp.beta);
    }
    return sol;
}

class StepTooLargeError : public std::runtime_error {
public:
    explicit StepTooLargeError(double err)
        : std::runtime_error("Riccati RK4 step-doubling error estimate " +
                             std::to_string(err) + " exceeds tolerance") {}
};

struct RiccatiSolution {
    SubPopulationParams params;
    TimeGrid solver_tg; // grid whose piecewise-constant h(t) is honoured
    int steps = 0;      // oracle resolution (>= solver resolution)
    double horizon = 0.0;
    double p_coef = 0.0, r_target = 0.0, intercept = 0.0;
    bool self_consistent = true;
    double m_star = 0.0; // E[Y^X] (equilibrium mode); price = -m_star

    std::vector<double> p, q, r, s, u, w;       // node values, steps+1
    std::vector<double> dp, dq, dr, ds, du, dw; // ODE right sides at nodes
    std::vector<double> mean_x, mean_a;         // forward mean trajectory

    std::function<double(double)> price_fn; // S(t)

    double dt() const { return horizon / steps; }

    // Cubic Hermite interpolation of one coefficient and its t-derivative.
    std::array<double, 2> coef(const std::vector<double>& y,
                               const std::vector<double>& dy, double t) const {
        const double pos = std::clamp(t / dt(), 0.0, static_cast<double>(steps));
        int n = std::min(static_cast<int>(pos), steps - 1);
        const double th = pos - n, h = dt();
        const double y0 = y[n], y1 = y[n + 1], d0 = dy[n] * h, d1 = dy[n + 1] * h;
        const double t2 = th * th, t3 = t2 * th;
        const double val = (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + th) * d0 +
                           (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * d1;
        const double der = ((6 * t2 - 6 * th) * y0 + (3 * t2 - 4 * th + 1) * d0 +
                            (-6 * t2 + 6 * th) * y1 + (3 * t2 - 2 * th) * d1) /
                           h;
        return {val, der};
    }

    double value(double t, double x, double a) const {
        const double pv = coef(p, dp, t)[0], qv = coef(q, dq, t)[0],
                     rv = coef(r, dr, t)[0], sv = coef(s, ds, t)[0],
                     uv = coef(u, du, t)[0], wv = coef(w, dw, t)[0];
        return 0.5 * pv * x * x + qv * x * a + 0.5 * rv * a * a + sv * x + uv * a +
               wv;
    }
    double yx(double t, double x, double a) const {
        return coef(p, dp, t)[0] * x + coef(q, dq, t)[0] * a + coef(s, ds, t)[0];
    }
    double ya(double t, double x, double a) const {
        return coef(q, dq, t)[0] * x + coef(r, dr, t)[0] * a + coef(u, du, t)[0];
    }
};

namespace detail {

using RiccatiState = std::array<double, 6>; // p q r s u w

inline RiccatiState riccati_rhs(const RiccatiState& y, double h, double S,
                                const SubPopulationParams& sp) {
    const double upsilon = 1.0 / sp.zeta + 1.0 / sp.gamma;
    const auto& [p, q, r, s, u, w] = y;
    RiccatiState d;
    d[0] = upsilon * p * p + q * q / sp.beta;
    d[1] = -p + upsilon * p * q + q * r / sp.beta;
    d[2] = -2.0 * q + upsilon * q * q + r * r / sp.beta;
    d[3] = -h * p + p * s / sp.zeta + p * (s + S) / sp.gamma + q * u / sp.beta;
    d[4] = -h * q - s + q * s / sp.zeta + q * (s + S) / sp.gamma + r * u / sp.beta;
    d[5] = -h * s + s * s / (2.0 * sp.zeta) + (s + S) * (s + S) / (2.0 * sp.gamma) +
           u * u / (2.0 * sp.beta) - 0.5 * sp.sigma * sp.sigma * p;
    return d;
}

inline RiccatiState rk4_step(const RiccatiState& y, double t, double dt,
                             const std::function<double(double)>& h,
                             const std::function<double(double)>& S,
                             const SubPopulationParams& sp) {
    auto axpy = [](const RiccatiState& a, double c, const RiccatiState& b) {
        RiccatiState out;
        for (int i = 0; i < 6; ++i) out[i] = a[i] + c * b[i];
        return out;
    };
    const RiccatiState k1 = riccati_rhs(y, h(t), S(t), sp);
    const RiccatiState k2 =
        riccati_rhs(axpy(y, 0.5 * dt, k1), h(t + 0.5 * dt), S(t + 0.5 * dt), sp);
    const RiccatiState k3 =
        riccati_rhs(axpy(y, 0.5 * dt, k2), h(t + 0.5 * dt), S(t + 0.5 * dt), sp);
    const RiccatiState k4 = riccati_rhs(axpy(y, dt, k3), h(t + dt), S(t + dt), sp);
    RiccatiState out;
    for (int i = 0; i < 6; ++i)
        out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

// Backward sweep with step-doubling error control; fills node values and RHS.
inline void integrate_backward(RiccatiSolution& sol,
                               const std::function<double(double)>& h,
                               const std::function<double(double)>& S,
                               double step_tol) {
    const int n = sol.steps;
    const double dt = sol.dt();
    sol.p.assign(n + 1, 0.0);
    sol.q.assign(n + 1, 0.0);
    sol.r.assign(n + 1, 0.0);
    sol.s.assign(n + 1, 0.0);
    sol.u.assign(n + 1, 0.0);
    sol.w.assign(n + 1, 0.0);
    RiccatiState y = {sol.p_coef,
                      0.0,
                      0.0,
                      -sol.p_coef * sol.r_target,
                      0.0,
                      0.5 * sol.p_coef * sol.r_target * sol.r_target + sol.intercept};
    auto store = [&sol](int node, const RiccatiState& st) {
        sol.p[node] = st[0];
        sol.q[node] = st[1];
        sol.r[node] = st[2];
        sol.s[node] = st[3];
        sol.u[node] = st[4];
        sol.w[node] = st[5];
    };
    store(n, y);
    for (int node = n; node > 0; --node) {
        const double t = sol.horizon * node / n;
        const RiccatiState full = rk4_step(y, t, -dt, h, S, sol.params);
        RiccatiState half = rk4_step(y, t, -0.5 * dt, h, S, sol.params);
        half = rk4_step(half, t - 0.5 * dt, -0.5 * dt, h, S, sol.params);
        double err = 0.0;
        for (int i = 0; i < 6; ++i) err = std::max(err, std::abs(full[i] - half[i]));
        if (err > step_tol) throw StepTooLargeError(err);
        y = half;
        store(node - 1, y);
    }
    sol.dp.assign(n + 1, 0.0);
    sol.dq.assign(n + 1, 0.0);
    sol.dr.assign(n + 1, 0.0);
    sol.ds.assign(n + 1, 0.0);
    sol.du.assign(n + 1, 0.0);
    sol.dw.assign(n + 1, 0.0);
    for (int node = 0; node <= n; ++node) {
        const double t = sol.horizon * node / n;
        const RiccatiState st = {sol.p[node], sol.q[node], sol.r[node],
                                 sol.s[node], sol.u[node], sol.w[node]};
        const RiccatiState d = riccati_rhs(st, h(t), S(t), sol.params);
        sol.dp[node] = d[0];
        sol.dq[node] = d[1];
        sol.dr[node] = d[2];
        sol.ds[node] = d[3];
        sol.du[node] = d[4];
        sol.dw[node] = d[5];
    }
}

} // namespace detail

// Single-population quadratic-penalty oracle. With no exogenous price the
// self-consistent constant equilibrium price is computed jointly; passing
// `exogenous_price` forces that price path instead (e.g. S = 0).
inline RiccatiSolution
riccati_solve(const SubPopulationParams& params, const PenaltySpec& penalty,
              const TimeGrid& solver_tg, int steps = 0,
              std::function<double(double)> exogenous_price = nullptr,
              double step_tol = 1e-9) {
    if (penalty.kind != PenaltySpec::Kind::Quadratic)
        throw std::invalid_argument("riccati_solve: quadratic penalty required");
    RiccatiSolution sol;
    sol.params = params;
    sol.solver_tg = solver_tg;
    sol.steps = steps > 0 ? steps : 10 * solver_tg.steps;
    sol.horizon = solver_tg.horizon;
    sol.p_coef = penalty.p;
    sol.r_target = penalty.r;
    sol.intercept = penalty.intercept;
    sol.self_consistent = !exogenous_price;

    auto h = [&params, &solver_tg](double t) {
        int step = static_cast<int>(t / solver_tg.dt());
        step = std::clamp(step, 0, solver_tg.steps - 1);
        return params.h(step);
    };

    if (!sol.self_consistent) {
        sol.price_fn = exogenous_price;
        detail::integrate_backward(sol, h, exogenous_price, step_tol);
    } else {
        // s(0; m) is affine in the trial constant m = E[Y^X]; two sweeps pin
        // the fixed point m* = p(0) E[xi] + s(0; m*) exactly.
        const double x0 = params.initial_inventory.mean;
        auto s0_for = [&](double m) {
            RiccatiSolution tmp = sol;
            detail::integrate_backward(
                tmp, h, [m](double) { return -m; }, step_tol);
            return std::array<double, 2>{tmp.p[0], tmp.s[0]};
        };
        const auto at0 = s0_for(0.0);
        const auto at1 = s0_for(1.0);
        const double slope = at1[1] - at0[1]; // d s(0)/d m
        sol.m_star = (at0[0] * x0 + at0[1]) / (1.0 - slope);
        const double m = sol.m_star;
        sol.price_fn = [m](double) { return -m; };
        detail::integrate_backward(sol, h, sol.price_fn, step_tol);
    }

    // Forward mean trajectory under the optimal feedback; in equilibrium
    // mode m(t) stays at m_star and the mean trading rate vanishes.
    const int n = sol.steps;
    const double dt = sol.dt();
    sol.mean_x.assign(n + 1, 0.0);
    sol.mean_a.assign(n + 1, 0.0);
    sol.mean_x[0] = params.initial_inventory.mean;
    auto mean_rhs = [&](double t, double mx, double ma, double& dx, double& da) {
        const double pv = sol.coef(sol.p, sol.dp, t)[0];
        const double qv = sol.coef(sol.q, sol.dq, t)[0];
        const double rv = sol.coef(sol.r, sol.dr, t)[0];
        const double sv = sol.coef(sol.s, sol.ds, t)[0];
        const double uv = sol.coef(sol.u, sol.du, t)[0];
        const double m = pv * mx + qv * ma + sv;  // E[Y^X]
        const double ya = qv * mx + rv * ma + uv; // E[Y^A]
        dx = h(t) + ma - m / params.zeta - (m + sol.price_fn(t)) / params.gamma;
        da = -ya / params.beta;
    };
    for (int node = 0; node < n; ++node) {
        const double t = sol.horizon * node / n;
        double k1x, k1a, k2x, k2a, k3x, k3a, k4x, k4a;
        const double mx = sol.mean_x[node], ma = sol.mean_a[node];
        mean_rhs(t, mx, ma, k1x, k1a);
        mean_rhs(t + 0.5 * dt, mx + 0.5 * dt * k1x, ma + 0.5 * dt * k1a, k2x, k2a);
        mean_rhs(t + 0.5 * dt, mx + 0.5 * dt * k2x, ma + 0.5 * dt * k2a, k3x, k3a);
        mean_rhs(t + dt, mx + dt * k3x, ma + dt * k3a, k4x, k4a);
        sol.mean_x[node + 1] = mx + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
        sol.mean_a[node + 1] = ma + dt / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a);
    }
    return sol;
}

struct ResidualCheck {
    double max_residual = 0.0;
    int points = 0;
    bool empty_sample = true;
};

// Evaluates the analytic HJB residual of the quadratic ansatz at random
// interior points of a (t,x,a) box. Non-vacuous: the time derivative comes
// from the Hermite interpolant, so perturbed coefficients leave a residual.
inline ResidualCheck hjb_residual_check(const RiccatiSolution& sol, int n_points,
                                        std::uint64_t seed, double x_lo = -1.0,
                                        double x_hi = 3.0, double a_lo = 0.0,
                                        double a_hi = 1.0) {
    ResidualCheck chk;
    chk.points = n_points;
    chk.empty_sample = n_points <= 0;
    const auto& sp = sol.params;
    auto h = [&](double t) {
        int step = static_cast<int>(t / sol.solver_tg.dt());
        step = std::clamp(step, 0, sol.solver_tg.steps - 1);
        return sp.h(step);
    };
    for (int m = 0; m < n_points; ++m) {
        const std::uint64_t stream = stream_id(StreamPurpose::Deviation, 0, m);
        const double t = sol.horizon * rng_uniform(seed, stream, 0);
        const double x = x_lo + (x_hi - x_lo) * rng_uniform(seed, stream, 1);
        const double a = a_lo + (a_hi - a_lo) * rng_uniform(seed, stream, 2);

        const auto pc = sol.coef(sol.p, sol.dp, t);
        const auto qc = sol.coef(sol.q, sol.dq, t);
        const auto rc = sol.coef(sol.r, sol.dr, t);
        const auto sc = sol.coef(sol.s, sol.ds, t);
        const auto uc = sol.coef(sol.u, sol.du, t);
        const auto wc = sol.coef(sol.w, sol.dw, t);

        const double vx = pc[0] * x + qc[0] * a + sc[0];
        const double va = qc[0] * x + rc[0] * a + uc[0];
        const double vt = 0.5 * pc[1] * x * x + qc[1] * x * a + 0.5 * rc[1] * a * a +
                          sc[1] * x + uc[1] * a + wc[1];
        const double S = sol.price_fn(t);
        const double res = vt + (h(t) + a) * vx - vx * vx / (2.0 * sp.zeta) -
                           (vx + S) * (vx + S) / (2.0 * sp.gamma) -
                           va * va / (2.0 * sp.beta) +
                           0.5 * sp.sigma * sp.sigma * pc[0];
        chk.max_residual = std::max(chk.max_residual, std::abs(res));
    }
    return chk;
}

} // namespace recmfg
