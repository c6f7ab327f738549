#pragma once

#include "hjsplit/core.hpp"
#include "hjsplit/linear_operator.hpp"
#include "hjsplit/prox.hpp"
#include "hjsplit/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace hjsplit::problems {

// ---------------------------------------------------------------------------
// Signals, matrices and image machinery shared by the experiment generators.
// ---------------------------------------------------------------------------

/// Standard Doppler test signal sqrt(t(1-t)) sin(2 pi 1.05 / (t + 0.05))
/// sampled at t = i/n, plus optional Gaussian noise.
inline Vec doppler_signal(Index n, RngStream rng, double noise_sigma) {
    if (n < 8) throw ConfigError("doppler_signal: n must be >= 8");
    Vec s(n);
    for (Index i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n);
        s[i] = std::sqrt(t * (1.0 - t)) * std::sin(2.0 * M_PI * 1.05 / (t + 0.05));
        if (noise_sigma > 0.0) s[i] += noise_sigma * rng.normal(static_cast<std::uint64_t>(i));
    }
    return s;
}

/// Third-order difference matrix: row i carries (-1, 3, -3, 1) at columns
/// i..i+3. Annihilates sequences that are polynomials of degree <= 2.
inline Mat third_diff_matrix(Index n) {
    if (n < 4) throw ConfigError("third_diff_matrix: n must be >= 4");
    Mat D = Mat::Zero(n - 3, n);
    for (Index i = 0; i < n - 3; ++i) {
        D(i, i) = -1.0;
        D(i, i + 1) = 3.0;
        D(i, i + 2) = -3.0;
        D(i, i + 3) = 1.0;
    }
    return D;
}

inline Vec image_to_vec(const Mat& img) { return Eigen::Map<const Vec>(img.data(), img.size()); }

inline Mat vec_to_image(const Vec& v, Index s) {
    if (v.size() != s * s) throw ConfigError("vec_to_image: size mismatch");
    return Eigen::Map<const Mat>(v.data(), s, s);
}

/// Normalized Gaussian kernel, odd size.
inline Mat gaussian_kernel(Index size, double sigma) {
    if (size < 1 || size % 2 == 0) throw ConfigError("gaussian_kernel: size must be odd");
    if (!(sigma > 0.0)) throw ConfigError("gaussian_kernel: sigma must be positive");
    Mat k(size, size);
    const Index c = size / 2;
    for (Index i = 0; i < size; ++i) {
        for (Index j = 0; j < size; ++j) {
            const double di = static_cast<double>(i - c);
            const double dj = static_cast<double>(j - c);
            k(i, j) = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
        }
    }
    k /= k.sum();
    return k;
}

namespace detail {
inline Index reflect(Index i, Index s) {
    while (i < 0 || i >= s) {
        if (i < 0) i = -i - 1;
        if (i >= s) i = 2 * s - 1 - i;
    }
    return i;
}
}  // namespace detail

/// Direct spatial convolution of an s-by-s image with symmetric (reflective)
/// boundary handling, as a vectorized operator on column-major images. The
/// adjoint scatters through the same reflected indices, so the pair is exact.
inline LinearOperator convolution_operator(Index s, Mat kernel) {
    if (kernel.rows() != kernel.cols() || kernel.rows() % 2 == 0) {
        throw ConfigError("convolution_operator: kernel must be square with odd size");
    }
    auto k = std::make_shared<const Mat>(std::move(kernel));
    const Index half = k->rows() / 2;
    LinearOperator op;
    op.rows = s * s;
    op.cols = s * s;
    op.apply = [s, k, half](const Vec& v) -> Vec {
        const Mat img = vec_to_image(v, s);
        Mat out(s, s);
        for (Index j = 0; j < s; ++j) {
            for (Index i = 0; i < s; ++i) {
                double acc = 0.0;
                for (Index a = -half; a <= half; ++a) {
                    for (Index b = -half; b <= half; ++b) {
                        acc += (*k)(a + half, b + half) *
                               img(detail::reflect(i + a, s), detail::reflect(j + b, s));
                    }
                }
                out(i, j) = acc;
            }
        }
        return image_to_vec(out);
    };
    op.adjoint = [s, k, half](const Vec& w) -> Vec {
        const Mat y = vec_to_image(w, s);
        Mat acc = Mat::Zero(s, s);
        for (Index j = 0; j < s; ++j) {
            for (Index i = 0; i < s; ++i) {
                for (Index a = -half; a <= half; ++a) {
                    for (Index b = -half; b <= half; ++b) {
                        acc(detail::reflect(i + a, s), detail::reflect(j + b, s)) +=
                            (*k)(a + half, b + half) * y(i, j);
                    }
                }
            }
        }
        return image_to_vec(acc);
    };
    return op;
}

/// Forward-difference image gradient (zero on the last column/row), stacking
/// the horizontal then vertical components: R^(s^2) -> R^(2 s^2).
inline LinearOperator gradient_operator(Index s) {
    LinearOperator op;
    op.rows = 2 * s * s;
    op.cols = s * s;
    op.apply = [s](const Vec& v) -> Vec {
        const Mat img = vec_to_image(v, s);
        Mat gx = Mat::Zero(s, s);
        Mat gy = Mat::Zero(s, s);
        for (Index j = 0; j < s; ++j) {
            for (Index i = 0; i < s; ++i) {
                if (j + 1 < s) gx(i, j) = img(i, j + 1) - img(i, j);
                if (i + 1 < s) gy(i, j) = img(i + 1, j) - img(i, j);
            }
        }
        Vec out(2 * s * s);
        out << image_to_vec(gx), image_to_vec(gy);
        return out;
    };
    op.adjoint = [s](const Vec& w) -> Vec {
        const Mat px = vec_to_image(w.head(s * s), s);
        const Mat py = vec_to_image(w.tail(s * s), s);
        Mat acc = Mat::Zero(s, s);
        for (Index j = 0; j < s; ++j) {
            for (Index i = 0; i < s; ++i) {
                if (j + 1 < s) {
                    acc(i, j + 1) += px(i, j);
                    acc(i, j) -= px(i, j);
                }
                if (i + 1 < s) {
                    acc(i + 1, j) += py(i, j);
                    acc(i, j) -= py(i, j);
                }
            }
        }
        return image_to_vec(acc);
    };
    op.norm_hint = std::sqrt(8.0);  // classical bound for the forward-difference gradient
    return op;
}

// ---------------------------------------------------------------------------
// Experiment instances and generators. Random content is a pure function of
// the supplied stream; each generator partitions the sample-index space so
// design, coefficients and noise never share draws.
// ---------------------------------------------------------------------------

struct LassoInstance {
    Mat X;
    Vec y;
    Vec beta_true;
    double lambda = 0.0;
};

/// Gaussian design, beta_true = 1 on [support_begin, support_begin+support_len),
/// y = X beta + noise. lambda <= 0 selects 0.1 |X^T y|_inf.
inline LassoInstance gen_lasso(Index n_obs, Index p, Index support_begin, Index support_len,
                               double noise_sigma, double lambda, RngStream rng) {
    if (n_obs < 1 || p < 1) throw ConfigError("gen_lasso: dimensions must be positive");
    if (support_begin < 0 || support_len < 0 || support_begin + support_len > p) {
        throw ConfigError("gen_lasso: support range outside 1..p");
    }
    LassoInstance inst;
    inst.X.resize(n_obs, p);
    for (Index j = 0; j < p; ++j) {
        inst.X.col(j) = rng.normal_vec(static_cast<std::uint64_t>(j * n_obs), n_obs);
    }
    inst.beta_true = Vec::Zero(p);
    inst.beta_true.segment(support_begin, support_len).setOnes();
    Vec noise = rng.normal_vec(static_cast<std::uint64_t>(n_obs * p), n_obs);
    inst.y = inst.X * inst.beta_true + noise_sigma * noise;
    inst.lambda = lambda > 0.0 ? lambda : 0.1 * (inst.X.transpose() * inst.y).lpNorm<Eigen::Infinity>();
    return inst;
}

struct MultitaskInstance {
    Mat X;       // n x p
    Mat Y;       // n x q
    Mat B_true;  // p x q
    double lambda1 = 0.0;  // nuclear norm
    double lambda2 = 0.0;  // row groups
    double lambda3 = 0.0;  // column groups
};

/// Low-rank ground truth with zeroed trailing rows/columns, Gaussian design
/// and noise. Nonpositive lambdas select data-driven defaults.
inline MultitaskInstance gen_multitask(Index n, Index p, Index q, double noise_sigma,
                                       double lambda1, double lambda2, double lambda3,
                                       RngStream rng) {
    if (n < 1 || p < 2 || q < 2) throw ConfigError("gen_multitask: need n >= 1, p >= 2, q >= 2");
    MultitaskInstance inst;
    inst.X.resize(n, p);
    std::uint64_t idx = 0;
    for (Index j = 0; j < p; ++j, idx += n) inst.X.col(j) = rng.normal_vec(idx, n);

    const Vec u1 = rng.normal_vec(idx, p);
    const Vec v1 = rng.normal_vec(idx += p, q);
    const Vec u2 = rng.normal_vec(idx += q, p);
    const Vec v2 = rng.normal_vec(idx += p, q);
    idx += q;
    inst.B_true = 0.5 * (u1 * v1.transpose() + u2 * v2.transpose());
    // structured sparsity: the trailing third of rows and columns is inactive
    inst.B_true.bottomRows(p / 3).setZero();
    inst.B_true.rightCols(q / 3).setZero();

    Mat noise(n, q);
    for (Index j = 0; j < q; ++j, idx += n) noise.col(j) = rng.normal_vec(idx, n);
    inst.Y = inst.X * inst.B_true + noise_sigma * noise;

    const Mat XtY = inst.X.transpose() * inst.Y;
    Eigen::JacobiSVD<Mat> svd(XtY);
    inst.lambda1 = lambda1 > 0.0 ? lambda1 : 0.2 * svd.singularValues()[0];
    inst.lambda2 = lambda2 > 0.0 ? lambda2 : 0.1 * XtY.rowwise().norm().maxCoeff();
    inst.lambda3 = lambda3 > 0.0 ? lambda3 : 0.1 * XtY.colwise().norm().maxCoeff();
    return inst;
}

struct FusedLassoInstance {
    Vec truth;
    Vec y;
    Mat D;  // (n-3) x n third-order differences
    double lambda = 0.0;
};

inline FusedLassoInstance gen_fused(Index n, double noise_sigma, double lambda, RngStream rng) {
    if (n < 8) throw ConfigError("gen_fused: n must be >= 8");
    FusedLassoInstance inst;
    inst.truth = doppler_signal(n, rng, 0.0);
    inst.y = doppler_signal(n, rng, noise_sigma);
    inst.D = third_diff_matrix(n);
    inst.lambda = lambda > 0.0 ? lambda : 1.0;
    return inst;
}

struct SparseGroupInstance {
    Mat X;
    Vec y;
    Vec beta_true;
    GroupSpec groups;
    double lambda1 = 0.0;  // group l2
    double lambda2 = 0.0;  // l1
};

/// Two active groups (one dense, one half-sparse), the rest zero.
inline SparseGroupInstance gen_sparse_group(Index n_obs, Index n_groups, Index group_size,
                                            double noise_sigma, double lambda1, double lambda2,
                                            RngStream rng) {
    if (n_groups < 2 || group_size < 1) {
        throw ConfigError("gen_sparse_group: need at least two groups");
    }
    const Index p = n_groups * group_size;
    SparseGroupInstance inst;
    inst.X.resize(n_obs, p);
    for (Index j = 0; j < p; ++j) {
        inst.X.col(j) = rng.normal_vec(static_cast<std::uint64_t>(j * n_obs), n_obs);
    }
    inst.groups = GroupSpec::contiguous(p, group_size);
    inst.beta_true = Vec::Zero(p);
    inst.beta_true.segment(0, group_size).setOnes();
    for (Index i = 0; i < group_size; i += 2) inst.beta_true[group_size + i] = 1.0;
    Vec noise = rng.normal_vec(static_cast<std::uint64_t>(n_obs * p), n_obs);
    inst.y = inst.X * inst.beta_true + noise_sigma * noise;
    const double lmax = (inst.X.transpose() * inst.y).lpNorm<Eigen::Infinity>();
    inst.lambda1 = lambda1 > 0.0 ? lambda1 : 0.1 * lmax;
    inst.lambda2 = lambda2 > 0.0 ? lambda2 : 0.05 * lmax;
    return inst;
}

struct TVInstance {
    Mat truth;  // s x s
    LinearOperator blur;
    Mat y;  // blurred + noisy observation
    double lambda = 0.0;
    double smoothing_eps = 1e-8;
    Index s = 0;
};

/// Piecewise-constant shapes, blurred with the given odd-sized kernel and
/// corrupted with Gaussian noise.
inline TVInstance gen_tv(Index s, const Mat& blur_kernel, double noise_sigma, double lambda,
                         RngStream rng) {
    if (s < 8) throw ConfigError("gen_tv: s must be >= 8");
    if (blur_kernel.rows() % 2 == 0 || blur_kernel.rows() != blur_kernel.cols()) {
        throw ConfigError("gen_tv: kernel must be square with odd size");
    }
    TVInstance inst;
    inst.s = s;
    inst.truth = Mat::Constant(s, s, 0.2);
    for (Index i = s / 8; i < s / 2; ++i) {
        for (Index j = s / 8; j < 5 * s / 8; ++j) inst.truth(i, j) = 0.9;
    }
    const double ci = 0.65 * static_cast<double>(s);
    const double cj = 0.35 * static_cast<double>(s);
    const double r = 0.18 * static_cast<double>(s);
    for (Index i = 0; i < s; ++i) {
        for (Index j = 0; j < s; ++j) {
            const double di = static_cast<double>(i) - ci;
            const double dj = static_cast<double>(j) - cj;
            if (di * di + dj * dj <= r * r) inst.truth(i, j) = 0.6;
        }
    }
    inst.blur = convolution_operator(s, blur_kernel);
    Vec obs = inst.blur.apply(image_to_vec(inst.truth));
    if (noise_sigma > 0.0) obs += noise_sigma * rng.normal_vec(0, s * s);
    inst.y = vec_to_image(obs, s);
    inst.lambda = lambda > 0.0 ? lambda : 0.1;
    inst.smoothing_eps = 1e-8;
    return inst;
}

// ---------------------------------------------------------------------------
// Objective evaluators (one per experiment display equation).
// ---------------------------------------------------------------------------

inline double lasso_objective(const Mat& X, const Vec& y, double lambda, const Vec& beta) {
    return 0.5 * (X * beta - y).squaredNorm() + lambda * beta.lpNorm<1>();
}

inline double lasso_objective(const LassoInstance& inst, const Vec& beta) {
    return lasso_objective(inst.X, inst.y, inst.lambda, beta);
}

inline double nuclear_norm(const Mat& B) {
    return Eigen::JacobiSVD<Mat>(B).singularValues().sum();
}

inline double multitask_objective(const Mat& X, const Mat& Y, double l1, double l2, double l3,
                                  const Mat& B) {
    return 0.5 * (X * B - Y).squaredNorm() + l1 * nuclear_norm(B) +
           l2 * B.rowwise().norm().sum() + l3 * B.colwise().norm().sum();
}

inline double multitask_objective(const MultitaskInstance& inst, const Mat& B) {
    return multitask_objective(inst.X, inst.Y, inst.lambda1, inst.lambda2, inst.lambda3, B);
}

inline double fused_objective(const Vec& y, const Mat& D, double lambda, const Vec& beta) {
    return 0.5 * (beta - y).squaredNorm() + lambda * (D * beta).lpNorm<1>();
}

inline double fused_objective(const FusedLassoInstance& inst, const Vec& beta) {
    return fused_objective(inst.y, inst.D, inst.lambda, beta);
}

inline double sparse_group_objective(const Mat& X, const Vec& y, const GroupSpec& spec, double l1,
                                     double l2, const Vec& beta) {
    double group_term = 0.0;
    for (std::size_t g = 0; g < spec.groups.size(); ++g) {
        double nrm2 = 0.0;
        for (Index i : spec.groups[g]) nrm2 += beta[i] * beta[i];
        group_term += spec.weights[g] * std::sqrt(nrm2);
    }
    return 0.5 * (X * beta - y).squaredNorm() + l1 * group_term + l2 * beta.lpNorm<1>();
}

inline double sparse_group_objective(const SparseGroupInstance& inst, const Vec& beta) {
    return sparse_group_objective(inst.X, inst.y, inst.groups, inst.lambda1, inst.lambda2, beta);
}

/// Data term plus (slightly smoothed) isotropic TV, using forward differences
/// with zero boundary on the last row/column.
inline double tv_objective(const TVInstance& inst, const Mat& beta) {
    const Index s = inst.s;
    if (beta.rows() != s || beta.cols() != s) throw ConfigError("tv_objective: size mismatch");
    const Vec resid = inst.blur.apply(image_to_vec(beta)) - image_to_vec(inst.y);
    double tv = 0.0;
    const double e2 = inst.smoothing_eps * inst.smoothing_eps;
    for (Index j = 0; j < s; ++j) {
        for (Index i = 0; i < s; ++i) {
            const double gx = j + 1 < s ? beta(i, j + 1) - beta(i, j) : 0.0;
            const double gy = i + 1 < s ? beta(i + 1, j) - beta(i, j) : 0.0;
            tv += std::sqrt(gx * gx + gy * gy + e2);
        }
    }
    return 0.5 * resid.squaredNorm() + inst.lambda * tv;
}

inline double tv_objective(const TVInstance& inst, const Vec& beta) {
    return tv_objective(inst, vec_to_image(beta, inst.s));
}

// ---------------------------------------------------------------------------
// Reference solvers (high-precision oracles and analytical baselines).
// ---------------------------------------------------------------------------

/// Cyclic coordinate descent for the LASSO, run until the largest coordinate
/// change in a sweep drops to tol.
inline Vec lasso_reference(const Mat& X, const Vec& y, double lambda, double tol) {
    if (!(tol > 0.0)) throw ConfigError("lasso_reference: tol must be positive");
    const Index p = X.cols();
    Vec beta = Vec::Zero(p);
    Vec r = y;  // residual y - X beta
    Vec colsq(p);
    for (Index j = 0; j < p; ++j) colsq[j] = X.col(j).squaredNorm();
    constexpr long max_sweeps = 1000000;
    for (long sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (Index j = 0; j < p; ++j) {
            if (colsq[j] == 0.0) continue;
            const double old = beta[j];
            const double rho = X.col(j).dot(r) + colsq[j] * old;
            double next = rho / colsq[j];
            const double thr = lambda / colsq[j];
            next = next > thr ? next - thr : (next < -thr ? next + thr : 0.0);
            if (next != old) {
                r -= (next - old) * X.col(j);
                beta[j] = next;
                max_change = std::max(max_change, std::abs(next - old));
            }
        }
        if (max_change <= tol) return beta;
    }
    throw NumericError("lasso_reference: no convergence within sweep budget");
}

/// Projected subgradient method for the sparse group LASSO with the
/// strong-convexity step rule 2/(mu (k+1)); returns the best iterate found.
inline Vec sparse_group_subgradient_reference(const Mat& X, const Vec& y, const GroupSpec& spec,
                                              double l1, double l2, long iters,
                                              double* best_obj_out = nullptr) {
    const Index p = X.cols();
    const Mat XtX = X.transpose() * X;
    const Vec Xty = X.transpose() * y;
    const double yty = y.squaredNorm();
    Eigen::SelfAdjointEigenSolver<Mat> eig(XtX);
    const double mu = eig.eigenvalues().minCoeff();
    if (!(mu > 1e-10)) {
        throw NumericError("sparse_group_subgradient_reference: design is not strongly convex");
    }
    const double radius = 10.0 * (1.0 + XtX.ldlt().solve(Xty).norm());

    Vec beta = Vec::Zero(p);
    Vec best = beta;
    double best_obj = std::numeric_limits<double>::infinity();
    Vec g(p);
    for (long k = 1; k <= iters; ++k) {
        const Vec xtxb = XtX * beta;
        const double data = 0.5 * beta.dot(xtxb) - beta.dot(Xty) + 0.5 * yty;
        double group_term = 0.0;
        g = xtxb - Xty;
        for (std::size_t gi = 0; gi < spec.groups.size(); ++gi) {
            double nrm2 = 0.0;
            for (Index i : spec.groups[gi]) nrm2 += beta[i] * beta[i];
            const double nrm = std::sqrt(nrm2);
            group_term += spec.weights[gi] * nrm;
            if (nrm > 0.0) {
                for (Index i : spec.groups[gi]) g[i] += l1 * spec.weights[gi] * beta[i] / nrm;
            }
        }
        double l1_term = 0.0;
        for (Index i = 0; i < p; ++i) {
            l1_term += std::abs(beta[i]);
            g[i] += l2 * (beta[i] > 0.0 ? 1.0 : (beta[i] < 0.0 ? -1.0 : 0.0));
        }
        const double obj = data + l1 * group_term + l2 * l1_term;
        if (obj < best_obj) {
            best_obj = obj;
            best = beta;
        }
        beta -= (2.0 / (mu * static_cast<double>(k + 1))) * g;
        const double nrm = beta.norm();
        if (nrm > radius) beta *= radius / nrm;
    }
    if (best_obj_out) *best_obj_out = best_obj;
    return best;
}

/// FISTA for the composite prox
///   argmin_Z  t (|XZ - Y|_F^2 / 2 + lambda1 |Z|_*) + |Z - V|_F^2 / 2,
/// the data-plus-nuclear block of the multitask baseline.
inline Mat nuclear_data_prox_fista(const Mat& X, const Mat& Y, const Mat& V, double t,
                                   double lambda1, int iters = 500) {
    if (!(t > 0.0)) throw ConfigError("nuclear_data_prox_fista: t must be positive");
    Eigen::JacobiSVD<Mat> svd(X);
    const double sx = svd.singularValues().size() > 0 ? svd.singularValues()[0] : 0.0;
    const double L = t * sx * sx + 1.0;
    Mat Z = V;
    Mat W = V;
    double theta = 1.0;
    for (int it = 0; it < iters; ++it) {
        const Mat grad = t * (X.transpose() * (X * W - Y)) + (W - V);
        const Mat Z_next = singular_value_threshold(W - grad / L, t * lambda1 / L);
        const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
        W = Z_next + ((theta - 1.0) / theta_next) * (Z_next - Z);
        Z = Z_next;
        theta = theta_next;
    }
    return Z;
}

/// Dykstra's algorithm for the prox of t (lambda2 sum_i |row_i| +
/// lambda3 sum_j |col_j|), alternating row-wise and column-wise shrinkage.
inline Mat rowcol_group_prox_dykstra(const Mat& V, double t, double lambda2, double lambda3,
                                     int iters = 100, double tol = 1e-10) {
    auto shrink_rows = [&](Mat M) {
        for (Index i = 0; i < M.rows(); ++i) {
            const double nrm = M.row(i).norm();
            M.row(i) *= nrm > 0.0 ? std::max(1.0 - t * lambda2 / nrm, 0.0) : 0.0;
        }
        return M;
    };
    auto shrink_cols = [&](Mat M) {
        for (Index j = 0; j < M.cols(); ++j) {
            const double nrm = M.col(j).norm();
            M.col(j) *= nrm > 0.0 ? std::max(1.0 - t * lambda3 / nrm, 0.0) : 0.0;
        }
        return M;
    };
    Mat z = V;
    Mat P = Mat::Zero(V.rows(), V.cols());
    Mat Q = Mat::Zero(V.rows(), V.cols());
    for (int it = 0; it < iters; ++it) {
        const Mat u = shrink_rows(z + P);
        P = z + P - u;
        const Mat z_next = shrink_cols(u + Q);
        Q = u + Q - z_next;
        const double change = (z_next - z).norm();
        z = z_next;
        if (change <= tol && it > 0) break;
    }
    return z;
}

// ---------------------------------------------------------------------------
// Independent prox oracles (derivative-free 1-d and low-dimensional argmin).
// ---------------------------------------------------------------------------

namespace detail {

/// Golden-section search on [lo, hi]; +inf values are legal as long as the
/// function is finite somewhere in the interval.
inline double golden_section(const std::function<double(double)>& phi, double lo, double hi,
                             double tol) {
    constexpr double inv_phi = 0.6180339887498948482;  // 1/golden ratio
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = phi(c), fd = phi(d);
    for (int it = 0; it < 400 && (b - a) > tol; ++it) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = phi(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = phi(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace detail

/// Coordinate-wise prox oracle for separable f: minimizes
/// f(z) + (z - x_i)^2 / (2t) per coordinate by golden-section search.
inline Vec prox_oracle_separable(const std::function<double(double)>& f_scalar, const Vec& x,
                                 double t) {
    if (!(t > 0.0)) throw ConfigError("prox_oracle_separable: t must be positive");
    Vec out(x.size());
    for (Index i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        auto phi = [&](double z) { return f_scalar(z) + (z - xi) * (z - xi) / (2.0 * t); };
        double w = 1.0;
        double ref = phi(xi);
        if (!std::isfinite(ref)) {
            // hunt for a finite anchor before bracketing
            bool found = false;
            for (double span = 1.0; span <= 1e6 && !found; span *= 4.0) {
                for (int s = -8; s <= 8; ++s) {
                    const double z = xi + span * static_cast<double>(s) / 8.0;
                    if (std::isfinite(phi(z))) {
                        ref = phi(z);
                        found = true;
                        break;
                    }
                }
            }
            if (!found) throw NumericError("prox_oracle_separable: f is nowhere finite near x");
        }
        while (!(phi(xi - w) >= ref && phi(xi + w) >= ref) && w < 1e12) w *= 2.0;
        out[i] = detail::golden_section(phi, xi - w, xi + w, 1e-10);
    }
    return out;
}

/// Dense-grid argmin of f(z) + |z - x|^2/(2t) over a box around x, refined by
/// coordinate-wise golden-section sweeps. Intended for n <= 3.
inline Vec prox_oracle_lowdim(const std::function<double(const Vec&)>& f, const Vec& x, double t,
                              int grid_pts = 41, double radius = 6.0) {
    if (x.size() > 3) throw ConfigError("prox_oracle_lowdim: dimension must be <= 3");
    if (grid_pts < 3) throw ConfigError("prox_oracle_lowdim: grid too small");
    const Index n = x.size();
    auto phi = [&](const Vec& z) { return f(z) + (z - x).squaredNorm() / (2.0 * t); };

    Vec best = x;
    double best_val = phi(x);
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    const long total = static_cast<long>(std::pow(grid_pts, static_cast<double>(n)));
    Vec z(n);
    for (long flat = 0; flat < total; ++flat) {
        long rem = flat;
        for (Index d = 0; d < n; ++d) {
            const int g = static_cast<int>(rem % grid_pts);
            rem /= grid_pts;
            z[d] = x[d] - radius + 2.0 * radius * static_cast<double>(g) /
                                       static_cast<double>(grid_pts - 1);
        }
        const double v = phi(z);
        if (v < best_val) {
            best_val = v;
            best = z;
        }
    }
    const double spacing = 2.0 * radius / static_cast<double>(grid_pts - 1);
    for (int sweep = 0; sweep < 40; ++sweep) {
        for (Index d = 0; d < n; ++d) {
            auto phid = [&](double zd) {
                Vec probe = best;
                probe[d] = zd;
                return phi(probe);
            };
            best[d] = detail::golden_section(phid, best[d] - 2.0 * spacing,
                                             best[d] + 2.0 * spacing, 1e-11);
        }
    }
    return best;
}

}  // namespace hjsplit::problems
