#pragma once

#include "hjsplit/core.hpp"
#include "hjsplit/hjprox.hpp"
#include "hjsplit/objective.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <memory>
#include <numeric>
#include <utility>
#include <vector>

namespace hjsplit {

/// Coordinate-wise sign(x) * max(|x| - tau, 0).
template <typename Derived>
typename Derived::PlainObject soft_threshold(const Eigen::MatrixBase<Derived>& x, double tau) {
    if (tau < 0.0) throw ConfigError("soft_threshold: tau must be nonnegative");
    return x.array().sign() * (x.array().abs() - tau).max(0.0);
}

/// Disjoint index groups covering {0..n-1}, each with a nonnegative weight.
struct GroupSpec {
    std::vector<std::vector<Index>> groups;
    std::vector<double> weights;  // one per group

    static GroupSpec contiguous(Index n, Index group_size, double weight = 1.0) {
        if (group_size < 1 || n % group_size != 0) {
            throw ConfigError("GroupSpec::contiguous: group_size must divide n");
        }
        GroupSpec spec;
        for (Index start = 0; start < n; start += group_size) {
            std::vector<Index> g(group_size);
            std::iota(g.begin(), g.end(), start);
            spec.groups.push_back(std::move(g));
            spec.weights.push_back(weight);
        }
        return spec;
    }

    void validate(Index n) const {
        if (groups.size() != weights.size()) {
            throw ConfigError("GroupSpec: one weight per group required");
        }
        std::vector<char> seen(static_cast<std::size_t>(n), 0);
        for (std::size_t g = 0; g < groups.size(); ++g) {
            if (groups[g].empty()) throw ConfigError("GroupSpec: empty group");
            if (weights[g] < 0.0) throw ConfigError("GroupSpec: negative group weight");
            for (Index i : groups[g]) {
                if (i < 0 || i >= n || seen[static_cast<std::size_t>(i)]) {
                    throw ConfigError("GroupSpec: groups must be disjoint and within range");
                }
                seen[static_cast<std::size_t>(i)] = 1;
            }
        }
        for (char c : seen) {
            if (!c) throw ConfigError("GroupSpec: groups must cover every index");
        }
    }
};

/// Blockwise shrinkage x_g * max(1 - tau w_g / |x_g|, 0); a zero-norm group
/// stays zero.
inline Vec group_soft_threshold(const Vec& x, const GroupSpec& spec, double tau) {
    if (tau < 0.0) throw ConfigError("group_soft_threshold: tau must be nonnegative");
    spec.validate(x.size());
    Vec out = x;
    for (std::size_t g = 0; g < spec.groups.size(); ++g) {
        double nrm2 = 0.0;
        for (Index i : spec.groups[g]) nrm2 += x[i] * x[i];
        const double nrm = std::sqrt(nrm2);
        const double scale = nrm > 0.0 ? std::max(1.0 - tau * spec.weights[g] / nrm, 0.0) : 0.0;
        for (Index i : spec.groups[g]) out[i] = scale * x[i];
    }
    return out;
}

/// Soft-threshold the singular values: U max(S - tau, 0) V^T from a full SVD.
inline Mat singular_value_threshold(const Mat& B, double tau) {
    if (tau < 0.0) throw ConfigError("singular_value_threshold: tau must be nonnegative");
    if (!B.allFinite()) throw NumericError("singular_value_threshold: non-finite input");
    Eigen::JacobiSVD<Mat> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Vec s = svd.singularValues();
    for (Index i = 0; i < s.size(); ++i) s[i] = std::max(s[i] - tau, 0.0);
    return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

/// Exact prox of f(b) = |b - y|^2 / 2 at v with scale t: (v + t y) / (1 + t).
inline Vec quadratic_moreau_prox(const Vec& v, const Vec& y, double t) {
    if (!(t > 0.0)) throw ConfigError("quadratic_moreau_prox: t must be positive");
    if (v.size() != y.size()) throw ConfigError("quadratic_moreau_prox: dimension mismatch");
    return (v + t * y) / (1.0 + t);
}

/// Project each per-pixel pair (px_i, py_i) onto the Euclidean ball of radius
/// lambda. p stacks the two field components: p = [px; py], each of length
/// n_pixels.
inline Vec tv_dual_clamp(const Vec& p, Index n_pixels, double lambda) {
    if (!(lambda > 0.0)) throw ConfigError("tv_dual_clamp: lambda must be positive");
    if (p.size() != 2 * n_pixels) throw ConfigError("tv_dual_clamp: field size mismatch");
    Vec out = p;
    for (Index i = 0; i < n_pixels; ++i) {
        const double nrm = std::hypot(p[i], p[n_pixels + i]);
        const double scale = 1.0 / std::max(1.0, nrm / lambda);
        out[i] *= scale;
        out[n_pixels + i] *= scale;
    }
    return out;
}

/// A proximal-operator source: either an exact closed form, or an HJ sampler
/// that resolves the temperature delta_k from a schedule at each iteration k
/// and draws its samples from stream_id = base + k.
class ProxProvider {
  public:
    static ProxProvider exact(ProxFn prox) {
        ProxProvider p;
        p.exact_fn_ = std::move(prox);
        return p;
    }

    static ProxProvider hj(Objective f, int n_samples, RngStream rng,
                           DeltaSchedule schedule = {}) {
        schedule.validate();
        if (n_samples < 1) throw ConfigError("ProxProvider::hj: n_samples must be >= 1");
        ProxProvider p;
        p.hj_f_ = std::make_shared<Objective>(std::move(f));
        p.n_samples_ = n_samples;
        p.rng_ = rng;
        p.schedule_ = schedule;
        return p;
    }

    bool is_hj() const { return static_cast<bool>(hj_f_); }

    /// prox_{t f}(v), evaluated at iteration k (k >= 1).
    Vec prox(const Vec& v, double t, int k) const {
        if (is_hj()) {
            HJProxParams params;
            params.delta = delta(k);
            params.t = t;
            params.n_samples = n_samples_;
            params.rng = rng_.with_stream(rng_.stream_id + static_cast<std::uint64_t>(k));
            return hj_prox(*hj_f_, v, params);
        }
        return exact_fn_(v, t);
    }

    /// Temperature used at iteration k; 0 for exact providers.
    double delta(int k) const { return is_hj() ? delta_schedule(k, schedule_) : 0.0; }

    /// Analytic error bound for iteration k; 0 for exact providers.
    double eps_bound(Index n, double t, int k) const {
        return is_hj() ? hj_error_bound(n, t, delta(k)) : 0.0;
    }

  private:
    ProxFn exact_fn_;
    std::shared_ptr<const Objective> hj_f_;
    int n_samples_ = 1000;
    RngStream rng_;
    DeltaSchedule schedule_;
};

/// Moreau route for a provider: prox_{sigma g*}(y) at iteration k.
inline Vec prox_conjugate_via_moreau(const ProxProvider& prox_g, double sigma, const Vec& y,
                                     int k) {
    if (!(sigma > 0.0)) throw ConfigError("prox_conjugate_via_moreau: sigma must be positive");
    return y - sigma * prox_g.prox(y / sigma, 1.0 / sigma, k);
}

}  // namespace hjsplit
