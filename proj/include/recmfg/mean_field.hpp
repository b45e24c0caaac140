// The mean-field loop: simulate the population forward under the feedback
// controls, average the marginal certificate value E[Y^X] per sub-population,
// map it to the clearing price S_t = -sum_k eta_k E[Y^X_k] / eta, and damp
// the price update until the fixed point where the market clears.
#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "recmfg/hjb.hpp"
#include "recmfg/market.hpp"
#include "recmfg/parallel.hpp"
#include "recmfg/penalty.hpp"
#include "recmfg/rng.hpp"

namespace recmfg {

struct FlowStats {
    // one entry per time node
    std::vector<double> mean_yx, se_yx, mean_ya, mean_gamma;
    std::vector<double> mean_x, var_x, mean_a, var_a;
};

struct MeanFieldFlows {
    std::vector<FlowStats> per_k;
    std::vector<double> escape_fraction; // fraction of paths ever clamped
    long paths = 0;
    bool antithetic = true;
};

namespace detail {

struct FlowAccum {
    // sums over paths, per time node
    std::vector<double> yx, yx_pairsq, ya, gamma, x, x_sq, a, a_sq;
    long escaped = 0;
    long paths = 0;

    explicit FlowAccum(int nodes = 0)
        : yx(nodes, 0.0), yx_pairsq(nodes, 0.0), ya(nodes, 0.0), gamma(nodes, 0.0),
          x(nodes, 0.0), x_sq(nodes, 0.0), a(nodes, 0.0), a_sq(nodes, 0.0) {}

    void merge(const FlowAccum& o) {
        for (std::size_t t = 0; t < yx.size(); ++t) {
            yx[t] += o.yx[t];
            yx_pairsq[t] += o.yx_pairsq[t];
            ya[t] += o.ya[t];
            gamma[t] += o.gamma[t];
            x[t] += o.x[t];
            x_sq[t] += o.x_sq[t];
            a[t] += o.a[t];
            a_sq[t] += o.a_sq[t];
        }
        escaped += o.escaped;
        paths += o.paths;
    }
};

inline double draw_initial_inventory(const InventoryLaw& law, double z) {
    return law.kind == InventoryLaw::Kind::Point ? law.mean : law.mean + law.sd * z;
}

} // namespace detail

// Euler-Maruyama forward pass under interpolated feedback controls.
// Antithetic pairing is used by default (standard errors are computed from
// pair means); population-level finite-N simulation uses plain paths.
inline MeanFieldFlows forward_mean_field(const std::vector<FeedbackSolution>& feedbacks,
                                         const PricePath& price,
                                         const MarketConfig& cfg, long paths,
                                         std::uint64_t seed, bool antithetic = true) {
    const TimeGrid tg = cfg.time_grid();
    const int nodes = tg.nodes();
    const double dt = tg.dt();
    const double sqdt = std::sqrt(dt);
    if (price.nodes() != nodes)
        throw std::invalid_argument("forward_mean_field: price length mismatch");
    if (feedbacks.size() != cfg.subpopulations.size())
        throw std::invalid_argument("forward_mean_field: one feedback per subpop");

    MeanFieldFlows flows;
    flows.paths = paths;
    flows.antithetic = antithetic;
    flows.per_k.resize(cfg.subpopulations.size());
    flows.escape_fraction.resize(cfg.subpopulations.size(), 0.0);

    const long units = antithetic ? paths / 2 : paths; // pair or single path
    const int per_unit = antithetic ? 2 : 1;

    for (std::size_t k = 0; k < cfg.subpopulations.size(); ++k) {
        const auto& sp = cfg.subpopulations[k];
        const auto& sol = feedbacks[k];

        auto acc = parallel_reduce<detail::FlowAccum>(
            static_cast<std::size_t>(units), 512, detail::FlowAccum(nodes),
            [&](detail::FlowAccum& A, std::size_t b, std::size_t e) {
                std::vector<double> yx_unit(nodes);
                for (std::size_t u = b; u < e; ++u) {
                    const std::uint64_t zstream =
                        stream_id(StreamPurpose::MeanField, k, u);
                    const std::uint64_t xistream =
                        stream_id(StreamPurpose::InitialInventory, k, u);
                    for (int half = 0; half < per_unit; ++half) {
                        const double flip = half == 0 ? 1.0 : -1.0;
                        double x = detail::draw_initial_inventory(
                            sp.initial_inventory,
                            flip * rng_normal(seed, xistream, 0));
                        double a = 0.0;
                        bool escaped = false;
                        for (int n = 0; n < nodes; ++n) {
                            const auto smp =
                                interpolate_feedback(sol, tg.t(n), x, a);
                            escaped = escaped || smp.clamped;
                            const double s_t =
                                price.values[static_cast<std::size_t>(n)];
                            const Controls u_ctl =
                                feedback_controls(smp.yx, smp.ya, s_t, sp);
                            const double w = 1.0 / per_unit;
                            A.yx[n] += w * smp.yx;
                            A.ya[n] += w * smp.ya;
                            A.gamma[n] += w * u_ctl.gamma_rate;
                            A.x[n] += w * x;
                            A.x_sq[n] += w * x * x;
                            A.a[n] += w * a;
                            A.a_sq[n] += w * a * a;
                            if (half == 0)
                                yx_unit[n] = smp.yx;
                            else
                                yx_unit[n] = 0.5 * (yx_unit[n] + smp.yx);
                            if (n + 1 < nodes) {
                                const double z =
                                    flip * rng_normal(seed, zstream,
                                                      static_cast<std::uint64_t>(n));
                                x += dt * (sp.h(n) + a + u_ctl.g +
                                           u_ctl.gamma_rate) +
                                     sp.sigma * sqdt * z;
                                a += dt * u_ctl.alpha;
                            }
                        }
                        if (escaped) ++A.escaped;
                    }
                    for (int n = 0; n < nodes; ++n)
                        A.yx_pairsq[n] += yx_unit[n] * yx_unit[n];
                    A.paths += per_unit;
                }
            },
            [](detail::FlowAccum& A, const detail::FlowAccum& B) { A.merge(B); });

        FlowStats st;
        st.mean_yx.resize(nodes);
        st.se_yx.resize(nodes);
        st.mean_ya.resize(nodes);
        st.mean_gamma.resize(nodes);
        st.mean_x.resize(nodes);
        st.var_x.resize(nodes);
        st.mean_a.resize(nodes);
        st.var_a.resize(nodes);
        // The 1/per_unit weights make sums-over-units equal means over paths.
        const double n_units = static_cast<double>(units);
        for (int t = 0; t < nodes; ++t) {
            st.mean_yx[t] = acc.yx[t] / n_units;
            st.mean_ya[t] = acc.ya[t] / n_units;
            st.mean_gamma[t] = acc.gamma[t] / n_units;
            st.mean_x[t] = acc.x[t] / n_units;
            st.mean_a[t] = acc.a[t] / n_units;
            st.var_x[t] =
                std::max(0.0, acc.x_sq[t] / n_units - st.mean_x[t] * st.mean_x[t]);
            st.var_a[t] =
                std::max(0.0, acc.a_sq[t] / n_units - st.mean_a[t] * st.mean_a[t]);
            // SE of mean_yx from independent unit (pair) means
            const double var_units = std::max(
                0.0, acc.yx_pairsq[t] / n_units - st.mean_yx[t] * st.mean_yx[t]);
            st.se_yx[t] = n_units > 1 ? std::sqrt(var_units / (n_units - 1)) : 0.0;
        }
        flows.per_k[k] = std::move(st);
        flows.escape_fraction[k] =
            static_cast<double>(acc.escaped) / static_cast<double>(acc.paths);
    }
    return flows;
}

// S_t = -(sum_k eta_k mean_YX_k(t)) / eta.
inline PricePath update_price(const MeanFieldFlows& flows, const EtaWeights& w) {
    PricePath out;
    const std::size_t nodes = flows.per_k.at(0).mean_yx.size();
    out.values.assign(nodes, 0.0);
    for (std::size_t t = 0; t < nodes; ++t) {
        double num = 0.0;
        for (std::size_t k = 0; k < flows.per_k.size(); ++k)
            num += w.eta_k[k] * flows.per_k[k].mean_yx[t];
        out.values[t] = -num / w.eta;
    }
    return out;
}

class MaxIterationsError : public std::runtime_error {
public:
    MaxIterationsError(std::vector<double> history, double last)
        : std::runtime_error("mean-field fixed point did not converge: last "
                             "price update " +
                             std::to_string(last)),
          residual_history(std::move(history)) {}
    std::vector<double> residual_history;
};

struct EquilibriumOptions {
    double damping = 0.5;
    double tol = 1e-6; // sup-norm of the damped price update
    int max_outer = 100;
    long mc_paths = 0; // 0: use config.mc_paths
    bool antithetic = true;
    SolverOptions solver;
    std::vector<double> initial_price; // empty: linear closed-form guess
};

struct MfgEquilibrium {
    MarketConfig config;
    std::vector<PenaltySpec> penalties;
    PricePath price;
    std::vector<FeedbackSolution> feedbacks;
    MeanFieldFlows flows;
    int iterations = 0;
    double final_update_norm = 0.0;
    std::vector<double> residual_history;
    std::vector<double> clearing_profile;
    double clearing_max = 0.0;
    bool converged = false;
};

// Per-node clearing residual sum_k pi_k E[Gamma_k(t)] of an equilibrium.
inline std::vector<double> clearing_residual(const MfgEquilibrium& eq) {
    const std::size_t nodes = eq.price.values.size();
    std::vector<double> profile(nodes, 0.0);
    for (std::size_t k = 0; k < eq.flows.per_k.size(); ++k)
        for (std::size_t t = 0; t < nodes; ++t)
            profile[t] +=
                eq.config.subpopulations[k].pi * eq.flows.per_k[k].mean_gamma[t];
    return profile;
}

inline MfgEquilibrium solve_equilibrium(const MarketConfig& cfg,
                                        const std::vector<PenaltySpec>& penalties,
                                        const EquilibriumOptions& opt = {}) {
    const auto valid = validate_config(cfg);
    if (!valid.ok())
        throw std::invalid_argument("solve_equilibrium: invalid config: " +
                                    valid.violations.front().path + " " +
                                    valid.violations.front().message);
    if (penalties.size() != cfg.subpopulations.size())
        throw std::invalid_argument("solve_equilibrium: one penalty per subpop");

    const TimeGrid tg = cfg.time_grid();
    const EtaWeights w = eta_weights(cfg);
    const long paths = opt.mc_paths > 0 ? opt.mc_paths : cfg.mc_paths;

    PricePath price;
    if (!opt.initial_price.empty()) {
        if (static_cast<int>(opt.initial_price.size()) != tg.nodes())
            throw std::invalid_argument("solve_equilibrium: initial price length");
        price.values = opt.initial_price;
    } else {
        // linear-contract closed form: exact for linear contracts, a good
        // warm start nearby
        double level = 0.0;
        for (std::size_t k = 0; k < cfg.subpopulations.size(); ++k)
            level += w.eta_k[k] * cfg.subpopulations[k].lambda_weight;
        price = PricePath::constant(level / w.eta, tg.nodes());
    }

    MfgEquilibrium eq;
    eq.config = cfg;
    eq.penalties = penalties;

    std::vector<double> history;
    for (int outer = 0; outer < opt.max_outer; ++outer) {
        // backward solves per sub-population (independent, parallel)
        std::vector<FeedbackSolution> feedbacks(cfg.subpopulations.size());
        parallel_chunks(cfg.subpopulations.size(), 1,
                        [&](std::size_t, std::size_t b, std::size_t e) {
                            for (std::size_t k = b; k < e; ++k) {
                                feedbacks[k] = solve_backward(
                                    cfg.subpopulations[k], penalties[k], price, tg,
                                    cfg.x_grid(), cfg.a_grid(), opt.solver);
                                feedbacks[k].subpop = static_cast<int>(k);
                            }
                        });

        // common random numbers across outer iterations
        MeanFieldFlows flows = forward_mean_field(feedbacks, price, cfg, paths,
                                                  cfg.rng_seed, opt.antithetic);
        const PricePath target = update_price(flows, w);

        double change = 0.0;
        for (int t = 0; t < tg.nodes(); ++t)
            change = std::max(change, opt.damping *
                                          std::abs(target.values[t] -
                                                   price.values[t]));
        history.push_back(change);

        if (change < opt.tol) {
            eq.price = price;
            eq.feedbacks = std::move(feedbacks);
            eq.flows = std::move(flows);
            eq.iterations = outer + 1;
            eq.final_update_norm = change;
            eq.residual_history = std::move(history);
            eq.clearing_profile = clearing_residual(eq);
            eq.clearing_max = 0.0;
            for (double r : eq.clearing_profile)
                eq.clearing_max = std::max(eq.clearing_max, std::abs(r));
            eq.converged = true;
            return eq;
        }
        for (int t = 0; t < tg.nodes(); ++t)
            price.values[t] = (1.0 - opt.damping) * price.values[t] +
                              opt.damping * target.values[t];
    }
    throw MaxIterationsError(history, history.empty() ? 0.0 : history.back());
}

} // namespace recmfg
