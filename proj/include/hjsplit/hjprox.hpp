#pragma once

#include "hjsplit/core.hpp"
#include "hjsplit/objective.hpp"
#include "hjsplit/rng.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <utility>

namespace hjsplit {

/// Parameters of one Monte Carlo proximal evaluation: temperature delta,
/// prox scale t, sample count, and the stream the samples are drawn from.
struct HJProxParams {
    double delta = 1.0;
    double t = 1.0;
    int n_samples = 1000;
    RngStream rng;

    void validate() const {
        if (!(delta > 0.0)) throw ConfigError("hj_prox: delta must be positive");
        if (!(t > 0.0)) throw ConfigError("hj_prox: t must be positive");
        if (n_samples < 1) throw ConfigError("hj_prox: n_samples must be >= 1");
    }
};

/// Temperature schedule delta_k = delta0 / k^exponent. The exponent must
/// exceed 2 so that {sqrt(delta_k)} is summable.
struct DeltaSchedule {
    double delta0 = 1.0;
    double exponent = 2.00001;

    void validate() const {
        if (!(delta0 > 0.0)) throw ConfigError("delta schedule: delta0 must be positive");
        if (!(exponent > 2.0)) {
            throw ConfigError(
                "delta schedule: exponent must exceed 2 (summability of {sqrt(delta_k)})");
        }
    }
};

inline double delta_schedule(int k, const DeltaSchedule& sched = {}) {
    sched.validate();
    if (k < 1) throw ConfigError("delta_schedule: k must be >= 1");
    return sched.delta0 / std::pow(static_cast<double>(k), sched.exponent);
}

/// Uniform error bound sqrt(2 n t delta) on the HJ approximation of an
/// n-dimensional proximal operator at scale t and temperature delta.
inline double hj_error_bound(Index n, double t, double delta) {
    if (n < 1) throw ConfigError("hj_error_bound: n must be >= 1");
    if (!(t > 0.0) || !(delta > 0.0)) {
        throw ConfigError("hj_error_bound: t and delta must be positive");
    }
    return std::sqrt(2.0 * static_cast<double>(n) * t * delta);
}

/// Stabilized softmax of -values/delta. Entries equal to +inf get weight
/// exactly 0; the minimum finite value is subtracted before exponentiation so
/// the largest weight is exp(0) and at least one weight survives underflow.
inline Vec softmax_weights(const Vec& values, double delta) {
    if (!(delta > 0.0)) throw ConfigError("softmax_weights: delta must be positive");
    constexpr double inf = std::numeric_limits<double>::infinity();
    double vmin = inf;
    for (Index i = 0; i < values.size(); ++i) {
        const double v = values[i];
        if (std::isnan(v) || v == -inf) {
            throw NumericError("softmax_weights: invalid objective value");
        }
        if (v < vmin) vmin = v;
    }
    if (vmin == inf) throw DegenerateWeightsError();
    Vec w(values.size());
    double sum = 0.0;
    for (Index i = 0; i < values.size(); ++i) {
        w[i] = values[i] == inf ? 0.0 : std::exp(-(values[i] - vmin) / delta);
        sum += w[i];
    }
    w /= sum;
    return w;
}

/// Diagnostics attached to one hj_prox evaluation.
struct HJProxResult {
    Vec point;           // the softmax-weighted sample average
    Vec sample_lo;       // coordinate-wise min over the drawn samples
    Vec sample_hi;       // coordinate-wise max over the drawn samples
    double max_weight = 0.0;
    double ess = 0.0;    // 1 / sum(w_i^2), effective sample size
};

/// Monte Carlo HJ approximation of prox_{tf}(x): draw N samples
/// y_i ~ N(x, delta t I) and average them with weights softmax(-f(y_i)/delta).
/// The output is a convex combination of the samples. f may return +inf
/// (indicator parts); such samples receive weight zero.
template <class F>
HJProxResult hj_prox_detailed(F&& f, const Vec& x, const HJProxParams& params) {
    params.validate();
    ensure_finite(x, "hj_prox input");
    const Index n = x.size();
    const Index N = params.n_samples;
    const double scale = std::sqrt(params.delta * params.t);

    Mat samples(n, N);
    Vec values(N);
    for (Index i = 0; i < N; ++i) {
        const std::uint64_t base = static_cast<std::uint64_t>(i) * static_cast<std::uint64_t>(n);
        samples.col(i) = x + scale * params.rng.normal_vec(base, n);
        const double v = f(Vec(samples.col(i)));
        if (std::isnan(v) || v == -std::numeric_limits<double>::infinity()) {
            throw NumericError("hj_prox: invalid objective value at a sample");
        }
        values[i] = v;
    }

    const Vec w = softmax_weights(values, params.delta);
    HJProxResult out;
    out.point = samples * w;  // convex combination, accumulated in index order
    out.sample_lo = samples.rowwise().minCoeff();
    out.sample_hi = samples.rowwise().maxCoeff();
    out.max_weight = w.maxCoeff();
    out.ess = 1.0 / w.squaredNorm();
    ensure_finite(out.point, "hj_prox output");
    return out;
}

template <class F>
Vec hj_prox(F&& f, const Vec& x, const HJProxParams& params) {
    return hj_prox_detailed(std::forward<F>(f), x, params).point;
}

inline Vec hj_prox(const Objective& f, const Vec& x, const HJProxParams& params) {
    return hj_prox_detailed(f.eval, x, params).point;
}

/// prox_{t g}(.) as a callable of the point and the scale t.
using ProxFn = std::function<Vec(const Vec&, double)>;

/// Moreau decomposition: prox_{sigma g*}(y) = y - sigma prox_{g/sigma}(y/sigma).
/// Evaluates the conjugate prox through the primal prox only.
inline Vec prox_conjugate_via_moreau(const ProxFn& prox_g, double sigma, const Vec& y) {
    if (!(sigma > 0.0)) throw ConfigError("prox_conjugate_via_moreau: sigma must be positive");
    return y - sigma * prox_g(y / sigma, 1.0 / sigma);
}

}  // namespace hjsplit
