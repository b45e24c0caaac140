// Backward dynamic-programming solver for one sub-population's control
// problem under an exogenous price path.
//
// The value function V(t,x,a) satisfies, backward from V(T,x,a) = C(x),
//
//   dV/dt + (h_t + a) dV/dx - (1/2z)(dV/dx)^2 - (1/2g)(dV/dx + S_t)^2
//        - (1/2b)(dV/da)^2 + (s^2/2) d2V/dx2 = 0,
//
// discretized backward Euler in time with a policy iteration per step that
// recomputes the controls from the gradients of the current iterate. The
// x-advection and x-diffusion are implicit (tridiagonal sweep per a-column;
// central differencing by default, monotone upwind as an option); the
// a-advection is explicit monotone upwind and carries the CFL check. The
// adjoint fields are grid gradients of V: YX = dV/dx, YA = dV/da.
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "recmfg/market.hpp"
#include "recmfg/penalty.hpp"

namespace recmfg {

struct PricePath {
    std::vector<double> values; // one per time node, Nt+1

    static PricePath constant(double s, int nodes) {
        return {std::vector<double>(static_cast<std::size_t>(nodes), s)};
    }
    int nodes() const { return static_cast<int>(values.size()); }
};

class NonConvergenceError : public std::runtime_error {
public:
    NonConvergenceError(int step, double residual)
        : std::runtime_error("policy iteration stalled at time step " +
                             std::to_string(step) + ", residual " +
                             std::to_string(residual)),
          step(step), residual(residual) {}
    int step;
    double residual;
};

class GridTooCoarseError : public std::runtime_error {
public:
    GridTooCoarseError(int step, double cfl)
        : std::runtime_error("monotonicity (CFL) check failed at time step " +
                             std::to_string(step) + ": dt*(|bx|/dx+|ba|/da) = " +
                             std::to_string(cfl)),
          step(step), cfl(cfl) {}
    int step;
    double cfl;
};

// Dense (Nt+1) x Nx x Na grid, x fastest within a time slice.
struct Field3 {
    int nt = 0, nx = 0, na = 0;
    std::vector<double> data;

    Field3() = default;
    Field3(int nt_nodes, int nx_, int na_)
        : nt(nt_nodes), nx(nx_), na(na_),
          data(static_cast<std::size_t>(nt_nodes) * nx_ * na_, 0.0) {}

    std::size_t idx(int n, int i, int j) const {
        return (static_cast<std::size_t>(n) * na + j) * nx + i;
    }
    double& at(int n, int i, int j) { return data[idx(n, i, j)]; }
    double at(int n, int i, int j) const { return data[idx(n, i, j)]; }
    double* slice(int n) { return data.data() + idx(n, 0, 0); }
    const double* slice(int n) const { return data.data() + idx(n, 0, 0); }
};

struct SolverOptions {
    enum class Advection { Central, Upwind };
    double policy_tol = 1e-10;
    int policy_max_iter = 50;
    bool enforce_monotone = true; // throw GridTooCoarse on CFL violation
    Advection advection = Advection::Central;
    // Internal time substeps per stored step: the sweep runs at dt/refine
    // and stores slices on the configured grid (backward Euler is first
    // order in time, and the time error dominates at typical grids).
    int time_refine = 4;
};

struct Controls {
    double g = 0.0;          // excess generation rate
    double gamma_rate = 0.0; // trading rate
    double alpha = 0.0;      // capacity expansion rate
};

// First-order-condition feedback map: g = -YX/zeta, Gamma = (-YX - S)/gamma,
// alpha = -YA/beta.
inline Controls feedback_controls(double yx, double ya, double price,
                                  const SubPopulationParams& params) {
    return {-yx / params.zeta, (-yx - price) / params.gamma, -ya / params.beta};
}

struct FeedbackSolution {
    int subpop = 0;
    TimeGrid tg;
    AxisGrid xg, ag;
    Field3 V, YX, YA;
    PricePath price;
    // Diagnostics: the positivity constraints g >= 0, alpha >= 0 are not
    // enforced; violations below -1e-9 set the flag.
    bool positivity_violated = false;
    double min_g = 0.0;
    double min_alpha = 0.0;
    int max_policy_iters = 0;
};

namespace detail {

// Gradient of a slice: central in the interior, one-sided at the edges.
inline void slice_gradients(const double* v, int nx, int na, double dx,
                            double da, double* gx, double* ga) {
    for (int j = 0; j < na; ++j) {
        const double* col = v + static_cast<std::size_t>(j) * nx;
        double* gcol = gx + static_cast<std::size_t>(j) * nx;
        gcol[0] = (col[1] - col[0]) / dx;
        for (int i = 1; i < nx - 1; ++i)
            gcol[i] = (col[i + 1] - col[i - 1]) / (2.0 * dx);
        gcol[nx - 1] = (col[nx - 1] - col[nx - 2]) / dx;
    }
    for (int j = 0; j < na; ++j) {
        const int jm = std::max(j - 1, 0);
        const int jp = std::min(j + 1, na - 1);
        const double denom = (jp - jm) * da;
        for (int i = 0; i < nx; ++i)
            ga[static_cast<std::size_t>(j) * nx + i] =
                (v[static_cast<std::size_t>(jp) * nx + i] -
                 v[static_cast<std::size_t>(jm) * nx + i]) /
                denom;
    }
}

// One implicit x-sweep: solves (I - dt (b d/dx + sig2/2 d2/dx2)) v = rhs for
// a single a-column via the Thomas algorithm. Diffusion vanishes at the
// x-boundaries (d2V/dx2 = 0) and the boundary advection is one-sided.
struct ImplicitXSweep {
    int nx;
    double dt, dx;
    double cdiff; // sigma^2 / (2 dx^2)
    SolverOptions::Advection mode;
    std::vector<double> lower, diag, upper, scratch;

    ImplicitXSweep(int nx_, double dt_, double dx_, double sigma,
                   SolverOptions::Advection mode_)
        : nx(nx_), dt(dt_), dx(dx_), cdiff(sigma * sigma / (2.0 * dx_ * dx_)),
          mode(mode_), lower(nx_), diag(nx_), upper(nx_), scratch(nx_) {}

    // b: per-node x-drift for this column; d: rhs in, solution out
    void solve(const double* b, double* d) {
        diag[0] = 1.0 + dt * b[0] / dx;
        upper[0] = -dt * b[0] / dx;
        lower[0] = 0.0;
        for (int i = 1; i < nx - 1; ++i) {
            if (mode == SolverOptions::Advection::Central) {
                const double adv = b[i] / (2.0 * dx);
                lower[i] = -dt * (cdiff - adv);
                diag[i] = 1.0 + 2.0 * dt * cdiff;
                upper[i] = -dt * (cdiff + adv);
            } else {
                const double bp = std::max(b[i], 0.0) / dx;
                const double bm = std::max(-b[i], 0.0) / dx;
                lower[i] = -dt * (cdiff + bm);
                diag[i] = 1.0 + dt * (2.0 * cdiff + bp + bm);
                upper[i] = -dt * (cdiff + bp);
            }
        }
        lower[nx - 1] = dt * b[nx - 1] / dx;
        diag[nx - 1] = 1.0 - dt * b[nx - 1] / dx;
        upper[nx - 1] = 0.0;

        // Thomas elimination
        scratch[0] = upper[0] / diag[0];
        d[0] /= diag[0];
        for (int i = 1; i < nx; ++i) {
            const double m = diag[i] - lower[i] * scratch[i - 1];
            scratch[i] = upper[i] / m;
            d[i] = (d[i] - lower[i] * d[i - 1]) / m;
        }
        for (int i = nx - 2; i >= 0; --i) d[i] -= scratch[i] * d[i + 1];
    }
};

} // namespace detail

inline FeedbackSolution solve_backward(const SubPopulationParams& params,
                                       const PenaltySpec& penalty,
                                       const PricePath& price, const TimeGrid& tg,
                                       const AxisGrid& xg, const AxisGrid& ag,
                                       const SolverOptions& opt = {}) {
    if (price.nodes() != tg.nodes())
        throw std::invalid_argument("solve_backward: price path has " +
                                    std::to_string(price.nodes()) +
                                    " nodes, expected " + std::to_string(tg.nodes()));
    for (double s : price.values)
        if (!std::isfinite(s))
            throw std::invalid_argument("solve_backward: non-finite price entry");

    const int nx = xg.points, na = ag.points, nt = tg.steps;
    const double dx = xg.step(), da = ag.step(), dt = tg.dt();
    const std::size_t slice_size = static_cast<std::size_t>(nx) * na;

    FeedbackSolution sol;
    sol.tg = tg;
    sol.xg = xg;
    sol.ag = ag;
    sol.price = price;
    sol.V = Field3(tg.nodes(), nx, na);
    sol.YX = Field3(tg.nodes(), nx, na);
    sol.YA = Field3(tg.nodes(), nx, na);

    // Terminal condition V(T, x, a) = C(x), exactly.
    {
        double* vT = sol.V.slice(nt);
        for (int j = 0; j < na; ++j)
            for (int i = 0; i < nx; ++i)
                vT[static_cast<std::size_t>(j) * nx + i] =
                    penalty_eval(penalty, xg.at(i)).value;
    }

    const int refine = std::max(opt.time_refine, 1);
    const double dts = dt / refine;
    detail::ImplicitXSweep sweep(nx, dts, dx, params.sigma, opt.advection);
    std::vector<double> gx(slice_size), ga(slice_size), cur(slice_size),
        prev(slice_size), next_iter(slice_size), bx(static_cast<std::size_t>(nx));

    for (int n = nt - 1; n >= 0; --n) {
        const double s_t = price.values[static_cast<std::size_t>(n)];
        const double h_t = params.h(n);
        std::copy(sol.V.slice(n + 1), sol.V.slice(n + 1) + slice_size, prev.begin());

        for (int sub = 0; sub < refine; ++sub) {
            const double* v_next = prev.data();
            std::copy(v_next, v_next + slice_size, cur.begin());

            bool converged = false;
            double residual = 0.0;
            for (int m = 0; m < opt.policy_max_iter; ++m) {
                detail::slice_gradients(cur.data(), nx, na, dx, da, gx.data(),
                                        ga.data());

                double cfl_max = 0.0;
                for (int j = 0; j < na; ++j) {
                    const double a_j = ag.at(j);
                    const double* vn_col = v_next + static_cast<std::size_t>(j) * nx;
                    double* out_col =
                        next_iter.data() + static_cast<std::size_t>(j) * nx;
                    for (int i = 0; i < nx; ++i) {
                        const std::size_t id = static_cast<std::size_t>(j) * nx + i;
                        const Controls u =
                            feedback_controls(gx[id], ga[id], s_t, params);
                        bx[static_cast<std::size_t>(i)] =
                            h_t + a_j + u.g + u.gamma_rate;
                        const double ba = u.alpha;
                        cfl_max = std::max(cfl_max, dts * std::abs(ba) / da);

                        // explicit monotone upwind a-advection on the known slice
                        double adv;
                        if (ba >= 0.0) {
                            const int jp = std::min(j + 1, na - 1);
                            const int jm = jp - 1;
                            adv = ba *
                                  (v_next[static_cast<std::size_t>(jp) * nx + i] -
                                   v_next[static_cast<std::size_t>(jm) * nx + i]) /
                                  da;
                        } else {
                            const int jm = std::max(j - 1, 0);
                            const int jp = jm + 1;
                            adv = ba *
                                  (v_next[static_cast<std::size_t>(jp) * nx + i] -
                                   v_next[static_cast<std::size_t>(jm) * nx + i]) /
                                  da;
                        }

                        const double running =
                            0.5 * params.zeta * u.g * u.g +
                            0.5 * params.gamma * u.gamma_rate * u.gamma_rate +
                            0.5 * params.beta * u.alpha * u.alpha +
                            s_t * u.gamma_rate;
                        out_col[i] = vn_col[i] + dts * (adv + running);
                    }
                    sweep.solve(bx.data(), out_col);
                }
                if (opt.enforce_monotone && cfl_max > 1.0 + 1e-12)
                    throw GridTooCoarseError(n, cfl_max);

                residual = 0.0;
                if (m > 0)
                    for (std::size_t id = 0; id < slice_size; ++id)
                        residual =
                            std::max(residual, std::abs(next_iter[id] - cur[id]));
                std::swap(cur, next_iter);
                sol.max_policy_iters = std::max(sol.max_policy_iters, m + 1);
                if (m > 0 && residual < opt.policy_tol) {
                    converged = true;
                    break;
                }
            }
            if (!converged) throw NonConvergenceError(n, residual);
            std::swap(prev, cur);
        }
        std::copy(prev.begin(), prev.end(), sol.V.slice(n));
    }

    // Adjoint fields from grid gradients of V, every time slice.
    for (int n = 0; n <= nt; ++n)
        detail::slice_gradients(sol.V.slice(n), nx, na, dx, da, sol.YX.slice(n),
                                sol.YA.slice(n));

    // Control-positivity diagnostics (g >= 0, alpha >= 0 are slack for
    // non-increasing penalties; we flag rather than enforce).
    double min_g = std::numeric_limits<double>::infinity();
    double min_alpha = std::numeric_limits<double>::infinity();
    for (std::size_t id = 0; id < sol.YX.data.size(); ++id) {
        min_g = std::min(min_g, -sol.YX.data[id] / params.zeta);
        min_alpha = std::min(min_alpha, -sol.YA.data[id] / params.beta);
    }
    sol.min_g = min_g;
    sol.min_alpha = min_alpha;
    sol.positivity_violated = (min_g < -1e-9) || (min_alpha < -1e-9);

    return sol;
}

struct FieldSample {
    double yx = 0.0;
    double ya = 0.0;
    double v = 0.0;
    bool clamped = false;
};

namespace detail {

struct AxisLoc {
    int i0 = 0;
    double w = 0.0;
    bool outside = false;
};

inline AxisLoc locate(double lo, double step, int points, double v) {
    AxisLoc loc;
    loc.outside = (v < lo) || (v > lo + step * (points - 1));
    double u = (v - lo) / step;
    u = std::clamp(u, 0.0, static_cast<double>(points - 1));
    int i0 = std::min(static_cast<int>(u), points - 2);
    double w = u - i0;
    // snap to nodes so exact-node queries return stored values bit-for-bit
    if (w < 1e-12) w = 0.0;
    if (w > 1.0 - 1e-12) w = 1.0;
    loc.i0 = i0;
    loc.w = w;
    return loc;
}

} // namespace detail

// Trilinear interpolation of (YX, YA, V) at (t, x, a); coordinates outside
// the grid are clamped and flagged.
inline FieldSample interpolate_feedback(const FeedbackSolution& sol, double t,
                                        double x, double a) {
    const auto lt = detail::locate(0.0, sol.tg.dt(), sol.tg.nodes(), t);
    const auto lx = detail::locate(sol.xg.lo, sol.xg.step(), sol.xg.points, x);
    const auto la = detail::locate(sol.ag.lo, sol.ag.step(), sol.ag.points, a);

    FieldSample out;
    out.clamped = lt.outside || lx.outside || la.outside;

    const double wt[2] = {1.0 - lt.w, lt.w};
    const double wx[2] = {1.0 - lx.w, lx.w};
    const double wa[2] = {1.0 - la.w, la.w};

    for (int dn = 0; dn < 2; ++dn) {
        if (wt[dn] == 0.0) continue;
        for (int dj = 0; dj < 2; ++dj) {
            if (wa[dj] == 0.0) continue;
            for (int di = 0; di < 2; ++di) {
                if (wx[di] == 0.0) continue;
                const double w = wt[dn] * wx[di] * wa[dj];
                const std::size_t id =
                    sol.V.idx(lt.i0 + dn, lx.i0 + di, la.i0 + dj);
                out.yx += w * sol.YX.data[id];
                out.ya += w * sol.YA.data[id];
                out.v += w * sol.V.data[id];
            }
        }
    }
    return out;
}

} // namespace recmfg
