#pragma once

#include "hjsplit/core.hpp"
#include "hjsplit/rng.hpp"

#include <algorithm>
#include <functional>
#include <memory>
#include <optional>
#include <utility>

namespace hjsplit {

/// Matrix or matrix-free linear map R^cols -> R^rows with its adjoint.
struct LinearOperator {
    Index rows = 0;
    Index cols = 0;
    std::function<Vec(const Vec&)> apply;
    std::function<Vec(const Vec&)> adjoint;
    std::optional<double> norm_hint;  // cached upper bound on the operator norm

    static LinearOperator from_matrix(Mat A) {
        auto m = std::make_shared<const Mat>(std::move(A));
        LinearOperator op;
        op.rows = m->rows();
        op.cols = m->cols();
        op.apply = [m](const Vec& x) -> Vec { return (*m) * x; };
        op.adjoint = [m](const Vec& y) -> Vec { return m->transpose() * y; };
        return op;
    }

    static LinearOperator identity(Index n) {
        LinearOperator op;
        op.rows = n;
        op.cols = n;
        op.apply = [](const Vec& x) { return x; };
        op.adjoint = [](const Vec& y) { return y; };
        op.norm_hint = 1.0;
        return op;
    }
};

/// Power iteration on A^T A. The returned estimate never exceeds the true
/// operator norm and is nondecreasing in the iteration count for a fixed
/// starting vector.
inline double op_norm_estimate(const LinearOperator& A, int iters, RngStream rng) {
    if (iters < 1) throw ConfigError("op_norm_estimate: iters must be >= 1");
    if (!A.apply || !A.adjoint) throw ConfigError("op_norm_estimate: operator has no apply/adjoint");
    Vec v = rng.normal_vec(0, A.cols);
    double vn = v.norm();
    if (vn == 0.0) return 0.0;
    v /= vn;
    double est = 0.0;
    for (int it = 0; it < iters; ++it) {
        const Vec w = A.apply(v);
        est = w.norm();  // Rayleigh quotient of A^T A at unit v, square-rooted
        if (est == 0.0) return 0.0;
        v = A.adjoint(w);
        vn = v.norm();
        if (vn == 0.0) return 0.0;
        v /= vn;
    }
    return est;
}

/// Largest normalized adjoint defect |<Ax, y> - <x, A^T y>| / (1 + |x||y|)
/// over `trials` random pairs. Used by tests to certify operator contracts.
inline double adjoint_mismatch(const LinearOperator& A, RngStream rng, int trials = 100) {
    double worst = 0.0;
    for (int s = 0; s < trials; ++s) {
        const std::uint64_t base = static_cast<std::uint64_t>(s) * (A.rows + A.cols);
        const Vec x = rng.normal_vec(base, A.cols);
        const Vec y = rng.normal_vec(base + A.cols, A.rows);
        const double lhs = A.apply(x).dot(y);
        const double rhs = x.dot(A.adjoint(y));
        worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + x.norm() * y.norm()));
    }
    return worst;
}

}  // namespace hjsplit
