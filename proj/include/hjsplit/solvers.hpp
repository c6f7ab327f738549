#pragma once

#include "hjsplit/core.hpp"
#include "hjsplit/linear_operator.hpp"
#include "hjsplit/objective.hpp"
#include "hjsplit/prox.hpp"
#include "hjsplit/trace.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <utility>

namespace hjsplit {

/// Relaxed fixed-point iteration settings. The relaxation sequence must stay
/// inside [gamma, 2 - gamma]; the default is the constant 1.
struct KMConfig {
    std::function<double(int)> relaxation;  // lambda_k, empty means 1
    double gamma = 0.5;
    int max_iters = 100;
    double stop_residual = 0.0;  // 0 disables early stopping

    void validate() const {
        if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("KMConfig: gamma must be in (0,1)");
        if (max_iters < 1) throw ConfigError("KMConfig: max_iters must be >= 1");
        if (stop_residual < 0.0) throw ConfigError("KMConfig: stop_residual must be >= 0");
    }

    double lambda_at(int k) const {
        const double lam = relaxation ? relaxation(k) : 1.0;
        if (!(lam >= gamma && lam <= 2.0 - gamma)) {
            throw ConfigError("KMConfig: relaxation outside [gamma, 2 - gamma]");
        }
        return lam;
    }
};

/// Step sizes: t for PGD/DRS/DYS, (tau, sigma) for PDHG.
struct StepSizes {
    double t = 1.0;
    double tau = 0.0;
    double sigma = 0.0;
};

using ObjectiveFn = std::function<double(const Vec&)>;

namespace detail {

constexpr double kDivergenceNorm = 1e12;

struct KMStep {
    Vec proposal;                    // T x_k (plus injected error, if any)
    double objective = 0.0;
    double delta_k = 0.0;
    double eps_bound = 0.0;
    std::optional<Vec> unperturbed;  // T x_k without the injected error
};

using StepFn = std::function<KMStep(int, const Vec&)>;
using NormFn = std::function<double(const Vec&)>;

/// Shared driver: x_{k+1} = x_k + lambda_k (proposal - x_k), with trace rows
/// (k, objective, residual, delta_k, eps_bound) and divergence detection.
inline std::pair<Vec, SolverTrace> km_loop(const StepFn& step, Vec x, const KMConfig& cfg,
                                           const NormFn& norm = {}) {
    cfg.validate();
    ensure_finite(x, "km iteration start");
    SolverTrace trace;
    trace.rows.reserve(static_cast<std::size_t>(cfg.max_iters));
    for (int k = 1; k <= cfg.max_iters; ++k) {
        KMStep s = step(k, x);
        const Vec& ref = s.unperturbed ? *s.unperturbed : s.proposal;
        const Vec diff = ref - x;
        const double residual = norm ? norm(diff) : diff.norm();
        trace.rows.push_back({k, s.objective, residual, s.delta_k, s.eps_bound});
        const double lam = cfg.lambda_at(k);
        Vec next = x + lam * (s.proposal - x);
        if (!next.allFinite() || next.norm() > kDivergenceNorm) {
            throw DivergenceError(std::move(trace), std::move(x));
        }
        x = std::move(next);
        if (cfg.stop_residual > 0.0 && residual <= cfg.stop_residual) break;
    }
    return {std::move(x), std::move(trace)};
}

}  // namespace detail

/// Perturbed Krasnosel'skii-Mann iteration for a generic operator T with an
/// optional injected error per iteration. The trace records the residual
/// |T x_k - x_k| (error excluded) and the injected error norm in eps_bound.
inline std::pair<Vec, SolverTrace> km_iterate(const std::function<Vec(const Vec&)>& T,
                                              const Vec& x0, const KMConfig& cfg,
                                              const std::function<Vec(int)>& noise = {},
                                              const ObjectiveFn& objective = {}) {
    auto step = [&](int k, const Vec& x) {
        detail::KMStep s;
        Vec tx = T(x);
        if (noise) {
            Vec eps = noise(k);
            s.eps_bound = eps.norm();
            s.unperturbed = tx;
            s.proposal = std::move(tx) + eps;
        } else {
            s.proposal = std::move(tx);
        }
        s.objective = objective ? objective(s.proposal) : 0.0;
        return s;
    };
    return detail::km_loop(step, x0, cfg);
}

/// Proximal gradient descent: x_{k+1} = prox_{t g}(x_k - t grad f(x_k)),
/// with the prox resolved by the provider at temperature delta_k.
inline std::pair<Vec, SolverTrace> pgd_run(const Objective& f, const ProxProvider& g_prox,
                                           const StepSizes& steps, const Vec& x0,
                                           const KMConfig& cfg, const ObjectiveFn& objective = {}) {
    if (!f.has_grad()) throw ConfigError("pgd_run: f must provide a gradient");
    if (!(steps.t > 0.0)) throw ConfigError("pgd_run: t must be positive");
    if (f.lipschitz_grad && !(steps.t < 2.0 / *f.lipschitz_grad)) {
        throw ConfigError("pgd_run: step size must satisfy t < 2/L");
    }
    const Index n = x0.size();
    auto step = [&](int k, const Vec& x) {
        detail::KMStep s;
        s.proposal = g_prox.prox(x - steps.t * f.grad(x), steps.t, k);
        s.objective = objective ? objective(s.proposal) : 0.0;
        s.delta_k = g_prox.delta(k);
        s.eps_bound = g_prox.eps_bound(n, steps.t, k);
        return s;
    };
    return detail::km_loop(step, x0, cfg);
}

/// Douglas-Rachford splitting on z:
///   x_{k+1/2} = prox_{t f}(z_k)
///   x_{k+1}   = prox_{t g}(2 x_{k+1/2} - z_k)
///   z_{k+1}   = z_k + x_{k+1} - x_{k+1/2}
/// Returns the primal point prox_{t f}(z_final). The trace objective is
/// evaluated at the half step; the full-step objective is kept in extras.
/// eps_bound combines the two per-prox bounds as 3|kappa_k| + |zeta_k|.
inline std::pair<Vec, SolverTrace> drs_run(const ProxProvider& f_prox, const ProxProvider& g_prox,
                                           const StepSizes& steps, const Vec& z0,
                                           const KMConfig& cfg, const ObjectiveFn& objective = {}) {
    if (!(steps.t > 0.0)) throw ConfigError("drs_run: t must be positive");
    const Index n = z0.size();
    std::vector<double> obj_full;
    auto step = [&](int k, const Vec& z) {
        detail::KMStep s;
        const Vec x_half = f_prox.prox(z, steps.t, k);
        const Vec x_full = g_prox.prox(2.0 * x_half - z, steps.t, k);
        s.proposal = z + x_full - x_half;
        s.objective = objective ? objective(x_half) : 0.0;
        if (objective) obj_full.push_back(objective(x_full));
        s.delta_k = std::max(f_prox.delta(k), g_prox.delta(k));
        s.eps_bound = 3.0 * f_prox.eps_bound(n, steps.t, k) + g_prox.eps_bound(n, steps.t, k);
        return s;
    };
    auto [z_final, trace] = detail::km_loop(step, z0, cfg);
    if (objective) trace.extras["objective_full_step"] = std::move(obj_full);
    const int k_final = static_cast<int>(trace.rows.size()) + 1;
    Vec x = f_prox.prox(z_final, steps.t, k_final);
    return {std::move(x), std::move(trace)};
}

/// Davis-Yin splitting for f + g + h with smooth h:
///   y_{k+1} = prox_{t f}(x_k)
///   z_{k+1} = prox_{t g}(2 y_{k+1} - x_k - t grad h(y_{k+1}))
///   x_{k+1} = x_k + z_{k+1} - y_{k+1}
/// Returns y at termination. eps_bound = (1 + t L)|kappa_k| + |zeta_k|.
inline std::pair<Vec, SolverTrace> dys_run(const ProxProvider& f_prox, const ProxProvider& g_prox,
                                           const Objective& h, const StepSizes& steps,
                                           const Vec& x0, const KMConfig& cfg,
                                           const ObjectiveFn& objective = {}) {
    if (!h.has_grad()) throw ConfigError("dys_run: h must provide a gradient");
    if (!h.lipschitz_grad) throw ConfigError("dys_run: h must provide lipschitz_grad");
    const double L = *h.lipschitz_grad;
    if (!(steps.t > 0.0 && steps.t < 2.0 / L)) {
        throw ConfigError("dys_run: step size must satisfy 0 < t < 2/L");
    }
    const Index n = x0.size();
    auto step = [&](int k, const Vec& x) {
        detail::KMStep s;
        const Vec y = f_prox.prox(x, steps.t, k);
        const Vec z = g_prox.prox(2.0 * y - x - steps.t * h.grad(y), steps.t, k);
        s.proposal = x + z - y;
        s.objective = objective ? objective(y) : 0.0;
        s.delta_k = std::max(f_prox.delta(k), g_prox.delta(k));
        s.eps_bound = (1.0 + steps.t * L) * f_prox.eps_bound(n, steps.t, k) +
                      g_prox.eps_bound(n, steps.t, k);
        return s;
    };
    auto [x_final, trace] = detail::km_loop(step, x0, cfg);
    const int k_final = static_cast<int>(trace.rows.size()) + 1;
    Vec y = f_prox.prox(x_final, steps.t, k_final);
    return {std::move(y), std::move(trace)};
}

/// How PDHG evaluates prox_{sigma g*}: through the Moreau identity on the
/// primal prox of g (default), or by treating the provider as a prox source
/// for g* itself.
enum class ConjugateProxMode { moreau, direct };

struct PDHGResult {
    Vec x;
    Vec y;
    SolverTrace trace;
};

/// Primal-dual hybrid gradient for f(x) + g(Ax):
///   y_{k+1} = prox_{sigma g*}(y_k + sigma A x_k)
///   x_{k+1} = prox_{tau f}(x_k - tau A^T y_{k+1})
/// Requires tau sigma |A|^2 < 1 (checked against norm_hint or an inflated
/// power-iteration estimate). Residuals use the weighted norm
/// |(dx, dy)|_V^2 = |dx|^2/tau + |dy|^2/sigma.
inline PDHGResult pdhg_run(const ProxProvider& f_prox, const ProxProvider& g_prox,
                           const LinearOperator& A, const StepSizes& steps, const Vec& x0,
                           const Vec& y0, const KMConfig& cfg, const ObjectiveFn& objective = {},
                           ConjugateProxMode mode = ConjugateProxMode::moreau) {
    if (!(steps.tau > 0.0) || !(steps.sigma > 0.0)) {
        throw ConfigError("pdhg_run: tau and sigma must be positive");
    }
    if (x0.size() != A.cols || y0.size() != A.rows) {
        throw ConfigError("pdhg_run: x0/y0 dimensions do not match the operator");
    }
    const double a_norm =
        A.norm_hint ? *A.norm_hint : 1.01 * op_norm_estimate(A, 200, RngStream{0xa17, 0});
    if (!(steps.tau * steps.sigma * a_norm * a_norm < 1.0)) {
        throw ConfigError("pdhg_run: step sizes must satisfy tau*sigma*|A|^2 < 1");
    }

    const Index n = A.cols;
    const Index m = A.rows;
    Vec u0(n + m);
    u0 << x0, y0;

    auto vnorm = [&](const Vec& d) {
        return std::sqrt(d.head(n).squaredNorm() / steps.tau + d.tail(m).squaredNorm() / steps.sigma);
    };

    auto step = [&](int k, const Vec& u) {
        detail::KMStep s;
        const Vec x = u.head(n);
        const Vec y = u.tail(m);
        const Vec y_arg = y + steps.sigma * A.apply(x);
        const Vec y_next = mode == ConjugateProxMode::moreau
                               ? prox_conjugate_via_moreau(g_prox, steps.sigma, y_arg, k)
                               : g_prox.prox(y_arg, steps.sigma, k);
        const Vec x_next = f_prox.prox(x - steps.tau * A.adjoint(y_next), steps.tau, k);
        s.proposal.resize(n + m);
        s.proposal << x_next, y_next;
        s.objective = objective ? objective(x_next) : 0.0;
        s.delta_k = std::max(f_prox.delta(k), g_prox.delta(k));
        // |eps|_V^2 <= (2 tau |A|^2 + 1/sigma) |zeta|^2 + (2/tau) |kappa|^2,
        // with |zeta| <= sqrt(2 m sigma delta) on either conjugate route.
        const double b_kappa = f_prox.eps_bound(n, steps.tau, k);
        const double b_zeta = g_prox.is_hj() ? hj_error_bound(m, steps.sigma, g_prox.delta(k)) : 0.0;
        s.eps_bound = std::sqrt((2.0 * steps.tau * a_norm * a_norm + 1.0 / steps.sigma) *
                                    b_zeta * b_zeta +
                                (2.0 / steps.tau) * b_kappa * b_kappa);
        return s;
    };

    auto [u_final, trace] = detail::km_loop(step, u0, cfg, vnorm);
    PDHGResult out;
    out.x = u_final.head(n);
    out.y = u_final.tail(m);
    out.trace = std::move(trace);
    return out;
}

}  // namespace hjsplit
