#include "hjsplit/experiments.hpp"

#include "hjsplit/hjprox.hpp"
#include "hjsplit/linear_operator.hpp"
#include "hjsplit/objective.hpp"
#include "hjsplit/problems.hpp"
#include "hjsplit/prox.hpp"
#include "hjsplit/solvers.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

namespace hjsplit::experiments {

namespace {

namespace prob = hjsplit::problems;
using nlohmann::json;

// Stream-id layout: instance generation uses 10+index, step-size estimation
// 0xE57, HJ providers draw from bases far above any iteration count.
constexpr std::uint64_t kStreamNormEst = 0xE57;
constexpr std::uint64_t kStreamFProx = std::uint64_t{1} << 24;
constexpr std::uint64_t kStreamGProx = std::uint64_t{2} << 24;

struct ExperimentInfo {
    std::string name;
    std::string description;
    std::uint64_t instance_stream;
    int max_iters;
    int hj_samples;
    double hj_delta0;
    double noise_sigma;
};

const std::vector<ExperimentInfo>& registry() {
    static const std::vector<ExperimentInfo> infos = {
        {"lasso", "l1-regularized least squares solved with proximal gradient descent", 11, 500,
         1000, 1.0, 0.1},
        {"multitask", "nuclear + row/column group penalties solved with Douglas-Rachford", 12, 300,
         2000, 0.05, 0.1},
        {"fused", "third-order fused LASSO on a Doppler signal solved with Douglas-Rachford", 13,
         1500, 4000, 1.0, 0.05},
        {"sparse_group", "sparse group LASSO solved with Davis-Yin splitting", 14, 500, 2000, 0.1,
         0.1},
        {"tv", "total-variation deblurring solved with the primal-dual hybrid gradient method", 15,
         300, 2000, 0.01, 0.05},
    };
    return infos;
}

const ExperimentInfo* find_info(const std::string& name) {
    for (const auto& e : registry()) {
        if (e.name == name) return &e;
    }
    return nullptr;
}

Index scaled_dim(Index full, double scale, Index min_dim) {
    return std::max<Index>(min_dim, static_cast<Index>(std::llround(full * scale)));
}

struct Dims {
    Index n_obs = 0, n_features = 0, n_tasks = 0;
    Index n_groups = 0, group_size = 0, image_size = 0;
    Index support_begin = 0, support_len = 0;
};

Dims resolve_dims(const RunConfig& cfg) {
    Dims d;
    const double s = cfg.size_scale;
    if (cfg.experiment == "lasso") {
        d.n_obs = cfg.n_obs > 0 ? cfg.n_obs : scaled_dim(250, s, 4);
        d.n_features = cfg.n_features > 0 ? cfg.n_features : scaled_dim(500, s, 8);
        d.support_len = cfg.support_len > 0 ? cfg.support_len
                                            : std::min<Index>(10, d.n_features);
        const Index sb = cfg.support_begin >= 0 ? cfg.support_begin
                                                : static_cast<Index>(std::llround(400 * s));
        d.support_begin = std::clamp<Index>(sb, 0, d.n_features - d.support_len);
    } else if (cfg.experiment == "multitask") {
        d.n_obs = cfg.n_obs > 0 ? cfg.n_obs : scaled_dim(50, s, 6);
        d.n_features = cfg.n_features > 0 ? cfg.n_features : scaled_dim(30, s, 4);
        d.n_tasks = cfg.n_tasks > 0 ? cfg.n_tasks : scaled_dim(9, s, 2);
    } else if (cfg.experiment == "fused") {
        d.n_obs = cfg.n_obs > 0 ? cfg.n_obs : scaled_dim(256, s, 8);
    } else if (cfg.experiment == "sparse_group") {
        d.n_obs = cfg.n_obs > 0 ? cfg.n_obs : scaled_dim(300, s, 8);
        d.n_groups = cfg.n_groups > 0 ? cfg.n_groups : scaled_dim(6, s, 2);
        d.group_size = cfg.group_size > 0 ? cfg.group_size : scaled_dim(10, s, 2);
    } else if (cfg.experiment == "tv") {
        d.image_size = cfg.image_size > 0 ? cfg.image_size : scaled_dim(64, s, 8);
    }
    return d;
}

double estimate_lipschitz(const Mat& X, std::uint64_t seed) {
    const double nrm = op_norm_estimate(LinearOperator::from_matrix(X), 200,
                                        RngStream{seed, kStreamNormEst});
    return 1.02 * nrm * nrm;  // small inflation keeps t = 1/L strictly inside (0, 2/L)
}

KMConfig make_km(const RunConfig& cfg, int iters) {
    KMConfig km;
    km.max_iters = iters;
    km.stop_residual = cfg.stop_residual;
    if (cfg.relaxation != 1.0) {
        km.relaxation = [lam = cfg.relaxation](int) { return lam; };
    }
    km.gamma = std::min(0.999, 0.999 * std::min(cfg.relaxation, 2.0 - cfg.relaxation));
    return km;
}

DeltaSchedule make_schedule(const RunConfig& cfg) {
    return DeltaSchedule{cfg.hj_delta0, cfg.hj_exponent};
}

int arm_iters(const RunConfig& cfg, bool hj_arm) {
    return hj_arm && cfg.hj_max_iters > 0 ? cfg.hj_max_iters : cfg.max_iters;
}

struct ArmSpec {
    RunConfig cfg;
    bool hj = false;
    std::map<std::string, double>* params = nullptr;  // resolved values, written once

    void record(const std::string& key, double value) const {
        if (params && !params->count(key)) (*params)[key] = value;
    }
};

ArmOutcome outcome_from(std::pair<Vec, SolverTrace> run, const ObjectiveFn& obj) {
    ArmOutcome out;
    out.solution = std::move(run.first);
    out.trace = std::move(run.second);
    out.final_objective = obj(out.solution);
    return out;
}

// --- lasso: PGD on 0.5|X b - y|^2 + lambda |b|_1 ---------------------------

ArmOutcome run_lasso_arm(const ArmSpec& spec) {
    const RunConfig& cfg = spec.cfg;
    const Dims d = resolve_dims(cfg);
    auto inst = std::make_shared<const prob::LassoInstance>(
        prob::gen_lasso(d.n_obs, d.n_features, d.support_begin, d.support_len, cfg.noise_sigma,
                        cfg.lambda, RngStream{cfg.seed, find_info("lasso")->instance_stream}));
    const double L = estimate_lipschitz(inst->X, cfg.seed);
    StepSizes steps;
    steps.t = cfg.step_t > 0.0 ? cfg.step_t : 1.0 / L;
    spec.record("lambda", inst->lambda);
    spec.record("step_t", steps.t);
    spec.record("lipschitz", L);

    Objective f = Objective::smooth(
        [inst](const Vec& b) { return 0.5 * (inst->X * b - inst->y).squaredNorm(); },
        [inst](const Vec& b) -> Vec { return inst->X.transpose() * (inst->X * b - inst->y); }, L);
    ObjectiveFn obj = [inst](const Vec& b) { return prob::lasso_objective(*inst, b); };

    ProxProvider g_prox =
        spec.hj ? ProxProvider::hj(Objective::from_eval([inst](const Vec& b) {
                                       return inst->lambda * b.lpNorm<1>();
                                   }),
                                   cfg.hj_samples, RngStream{cfg.seed, kStreamGProx},
                                   make_schedule(cfg))
                : ProxProvider::exact([inst](const Vec& v, double t) -> Vec {
                      return soft_threshold(v, t * inst->lambda);
                  });

    const Vec x0 = Vec::Zero(d.n_features);
    return outcome_from(pgd_run(f, g_prox, steps, x0, make_km(cfg, arm_iters(cfg, spec.hj)), obj),
                        obj);
}

// --- multitask: DRS on data+nuclear vs row/column groups -------------------

ArmOutcome run_multitask_arm(const ArmSpec& spec) {
    const RunConfig& cfg = spec.cfg;
    const Dims d = resolve_dims(cfg);
    auto inst = std::make_shared<const prob::MultitaskInstance>(prob::gen_multitask(
        d.n_obs, d.n_features, d.n_tasks, cfg.noise_sigma, cfg.lambda1, cfg.lambda2, cfg.lambda3,
        RngStream{cfg.seed, find_info("multitask")->instance_stream}));
    const Index p = d.n_features, q = d.n_tasks;
    StepSizes steps;
    steps.t = cfg.step_t > 0.0 ? cfg.step_t : 1.0;
    spec.record("lambda1", inst->lambda1);
    spec.record("lambda2", inst->lambda2);
    spec.record("lambda3", inst->lambda3);
    spec.record("step_t", steps.t);

    auto unvec = [p, q](const Vec& v) -> Mat { return Eigen::Map<const Mat>(v.data(), p, q); };
    ObjectiveFn obj = [inst, unvec](const Vec& v) {
        return prob::multitask_objective(*inst, unvec(v));
    };

    ProxProvider f_prox, g_prox;
    if (spec.hj) {
        f_prox = ProxProvider::hj(
            Objective::from_eval([inst, unvec](const Vec& v) {
                const Mat B = unvec(v);
                return 0.5 * (inst->X * B - inst->Y).squaredNorm() +
                       inst->lambda1 * prob::nuclear_norm(B);
            }),
            cfg.hj_samples, RngStream{cfg.seed, kStreamFProx}, make_schedule(cfg));
        g_prox = ProxProvider::hj(
            Objective::from_eval([inst, unvec](const Vec& v) {
                const Mat B = unvec(v);
                return inst->lambda2 * B.rowwise().norm().sum() +
                       inst->lambda3 * B.colwise().norm().sum();
            }),
            cfg.hj_samples, RngStream{cfg.seed, kStreamGProx}, make_schedule(cfg));
    } else {
        f_prox = ProxProvider::exact([inst, unvec](const Vec& v, double t) -> Vec {
            const Mat Z =
                prob::nuclear_data_prox_fista(inst->X, inst->Y, unvec(v), t, inst->lambda1, 500);
            return Eigen::Map<const Vec>(Z.data(), Z.size());
        });
        g_prox = ProxProvider::exact([inst, unvec](const Vec& v, double t) -> Vec {
            const Mat Z = prob::rowcol_group_prox_dykstra(unvec(v), t, inst->lambda2,
                                                          inst->lambda3, 100, 1e-10);
            return Eigen::Map<const Vec>(Z.data(), Z.size());
        });
    }

    const Vec z0 = Vec::Zero(p * q);
    return outcome_from(
        drs_run(f_prox, g_prox, steps, z0, make_km(cfg, arm_iters(cfg, spec.hj)), obj), obj);
}

// --- fused LASSO: DRS, product-space baseline vs direct HJ ------------------

ArmOutcome run_fused_arm(const ArmSpec& spec) {
    const RunConfig& cfg = spec.cfg;
    const Dims d = resolve_dims(cfg);
    auto inst = std::make_shared<const prob::FusedLassoInstance>(prob::gen_fused(
        d.n_obs, cfg.noise_sigma, cfg.lambda, RngStream{cfg.seed, find_info("fused")->instance_stream}));
    const Index n = d.n_obs;
    const Index m = n - 3;
    StepSizes steps;
    steps.t = cfg.step_t > 0.0 ? cfg.step_t : 0.5;
    spec.record("lambda", inst->lambda);
    spec.record("step_t", steps.t);

    if (spec.hj) {
        ProxProvider f_prox = ProxProvider::exact(
            [inst](const Vec& v, double t) -> Vec { return quadratic_moreau_prox(v, inst->y, t); });
        ProxProvider g_prox = ProxProvider::hj(
            Objective::from_eval(
                [inst](const Vec& b) { return inst->lambda * (inst->D * b).lpNorm<1>(); }),
            cfg.hj_samples, RngStream{cfg.seed, kStreamGProx}, make_schedule(cfg));
        ObjectiveFn obj = [inst](const Vec& b) { return prob::fused_objective(*inst, b); };
        return outcome_from(
            drs_run(f_prox, g_prox, steps, inst->y, make_km(cfg, arm_iters(cfg, spec.hj)), obj),
            obj);
    }

    // Product-space baseline on u = [beta; w] with the constraint w = D beta:
    // f splits into the quadratic data prox and soft thresholding, g projects
    // onto the constraint through a cached factorization of I + D^T D.
    auto solver = std::make_shared<Eigen::LDLT<Mat>>(
        (Mat::Identity(n, n) + inst->D.transpose() * inst->D).eval());
    ProxProvider f_prox = ProxProvider::exact([inst, n, m](const Vec& u, double t) -> Vec {
        Vec out(n + m);
        out.head(n) = quadratic_moreau_prox(u.head(n), inst->y, t);
        out.tail(m) = soft_threshold(u.tail(m), t * inst->lambda);
        return out;
    });
    ProxProvider g_prox = ProxProvider::exact([inst, solver, n, m](const Vec& u, double) -> Vec {
        const Vec beta = solver->solve(u.head(n) + inst->D.transpose() * u.tail(m));
        Vec out(n + m);
        out.head(n) = beta;
        out.tail(m) = inst->D * beta;
        return out;
    });
    ObjectiveFn obj_u = [inst, n](const Vec& u) {
        return prob::fused_objective(*inst, u.head(n));
    };
    Vec z0(n + m);
    z0 << inst->y, inst->D * inst->y;
    auto [u_final, trace] =
        drs_run(f_prox, g_prox, steps, z0, make_km(cfg, arm_iters(cfg, spec.hj)), obj_u);
    ArmOutcome out;
    out.solution = u_final.head(n);
    out.trace = std::move(trace);
    out.final_objective = prob::fused_objective(*inst, out.solution);
    return out;
}

// --- sparse group LASSO: DYS with smooth data term --------------------------

ArmOutcome run_sparse_group_arm(const ArmSpec& spec) {
    const RunConfig& cfg = spec.cfg;
    const Dims d = resolve_dims(cfg);
    auto inst = std::make_shared<const prob::SparseGroupInstance>(prob::gen_sparse_group(
        d.n_obs, d.n_groups, d.group_size, cfg.noise_sigma, cfg.lambda1, cfg.lambda2,
        RngStream{cfg.seed, find_info("sparse_group")->instance_stream}));
    const Index p = d.n_groups * d.group_size;
    const double L = estimate_lipschitz(inst->X, cfg.seed);
    StepSizes steps;
    steps.t = cfg.step_t > 0.0 ? cfg.step_t : 1.0 / L;
    spec.record("lambda1", inst->lambda1);
    spec.record("lambda2", inst->lambda2);
    spec.record("step_t", steps.t);
    spec.record("lipschitz", L);

    Objective h = Objective::smooth(
        [inst](const Vec& b) { return 0.5 * (inst->X * b - inst->y).squaredNorm(); },
        [inst](const Vec& b) -> Vec { return inst->X.transpose() * (inst->X * b - inst->y); }, L);
    ObjectiveFn obj = [inst](const Vec& b) { return prob::sparse_group_objective(*inst, b); };

    ProxProvider f_prox, g_prox;
    if (spec.hj) {
        f_prox = ProxProvider::hj(Objective::from_eval([inst](const Vec& b) {
                                      double s = 0.0;
                                      for (std::size_t g = 0; g < inst->groups.groups.size(); ++g) {
                                          double nrm2 = 0.0;
                                          for (Index i : inst->groups.groups[g]) nrm2 += b[i] * b[i];
                                          s += inst->groups.weights[g] * std::sqrt(nrm2);
                                      }
                                      return inst->lambda1 * s;
                                  }),
                                  cfg.hj_samples, RngStream{cfg.seed, kStreamFProx},
                                  make_schedule(cfg));
        g_prox = ProxProvider::hj(
            Objective::from_eval([inst](const Vec& b) { return inst->lambda2 * b.lpNorm<1>(); }),
            cfg.hj_samples, RngStream{cfg.seed, kStreamGProx}, make_schedule(cfg));
    } else {
        f_prox = ProxProvider::exact([inst](const Vec& v, double t) -> Vec {
            return group_soft_threshold(v, inst->groups, t * inst->lambda1);
        });
        g_prox = ProxProvider::exact([inst](const Vec& v, double t) -> Vec {
            return soft_threshold(v, t * inst->lambda2);
        });
    }

    const Vec x0 = Vec::Zero(p);
    return outcome_from(
        dys_run(f_prox, g_prox, h, steps, x0, make_km(cfg, arm_iters(cfg, spec.hj)), obj), obj);
}

// --- TV deblurring: PDHG with the gradient operator coupling ----------------

Vec cg_solve(const std::function<Vec(const Vec&)>& M, const Vec& b, Vec x, double tol,
             int max_iters) {
    Vec r = b - M(x);
    Vec p = r;
    double rs = r.squaredNorm();
    for (int it = 0; it < max_iters && std::sqrt(rs) > tol; ++it) {
        const Vec Mp = M(p);
        const double alpha = rs / p.dot(Mp);
        x += alpha * p;
        r -= alpha * Mp;
        const double rs_next = r.squaredNorm();
        p = r + (rs_next / rs) * p;
        rs = rs_next;
    }
    return x;
}

ArmOutcome run_tv_arm(const ArmSpec& spec) {
    const RunConfig& cfg = spec.cfg;
    const Dims d = resolve_dims(cfg);
    const Index s = d.image_size;
    auto inst = std::make_shared<const prob::TVInstance>(
        prob::gen_tv(s, prob::gaussian_kernel(5, 1.0), cfg.noise_sigma, cfg.lambda,
                     RngStream{cfg.seed, find_info("tv")->instance_stream}));
    const Index npix = s * s;
    StepSizes steps;
    steps.tau = cfg.tau > 0.0 ? cfg.tau : 0.33;
    steps.sigma = cfg.sigma > 0.0 ? cfg.sigma : 0.33;
    spec.record("lambda", inst->lambda);
    spec.record("tau", steps.tau);
    spec.record("sigma", steps.sigma);

    const LinearOperator A = prob::gradient_operator(s);
    const Vec y_vec = prob::image_to_vec(inst->y);
    auto blur = std::make_shared<const LinearOperator>(inst->blur);

    // prox of the data term 0.5|B z - y|^2: solve (I + tau B^T B) z = v + tau B^T y
    ProxProvider f_prox = ProxProvider::exact([blur, y_vec](const Vec& v, double tau) -> Vec {
        auto M = [&](const Vec& z) -> Vec { return z + tau * blur->adjoint(blur->apply(z)); };
        const Vec rhs = v + tau * blur->adjoint(y_vec);
        return cg_solve(M, rhs, v, 1e-12 * (1.0 + rhs.norm()), 400);
    });

    ObjectiveFn obj = [inst](const Vec& v) { return prob::tv_objective(*inst, v); };

    ProxProvider g_prox;
    ConjugateProxMode mode;
    if (spec.hj) {
        // Moreau route: the dual prox is derived from the primal prox of the
        // isotropic TV magnitude, which is sampled zeroth-order.
        g_prox = ProxProvider::hj(Objective::from_eval([npix, inst](const Vec& pfield) {
                                      double total = 0.0;
                                      for (Index i = 0; i < npix; ++i) {
                                          total += std::hypot(pfield[i], pfield[npix + i]);
                                      }
                                      return inst->lambda * total;
                                  }),
                                  cfg.hj_samples, RngStream{cfg.seed, kStreamGProx},
                                  make_schedule(cfg));
        mode = ConjugateProxMode::moreau;
    } else {
        // Analytic conjugate prox: per-pixel projection onto the lambda-ball.
        g_prox = ProxProvider::exact([npix, inst](const Vec& v, double) -> Vec {
            return tv_dual_clamp(v, npix, inst->lambda);
        });
        mode = ConjugateProxMode::direct;
    }

    const Vec x0 = y_vec;
    const Vec y0 = Vec::Zero(2 * npix);
    PDHGResult res = pdhg_run(f_prox, g_prox, A, steps, x0, y0,
                              make_km(cfg, arm_iters(cfg, spec.hj)), obj, mode);
    ArmOutcome out;
    out.solution = std::move(res.x);
    out.trace = std::move(res.trace);
    out.final_objective = prob::tv_objective(*inst, out.solution);
    return out;
}

ArmOutcome run_arm(const RunConfig& cfg, bool hj, std::map<std::string, double>* params) {
    ArmSpec spec{cfg, hj, params};
    if (cfg.experiment == "lasso") return run_lasso_arm(spec);
    if (cfg.experiment == "multitask") return run_multitask_arm(spec);
    if (cfg.experiment == "fused") return run_fused_arm(spec);
    if (cfg.experiment == "sparse_group") return run_sparse_group_arm(spec);
    if (cfg.experiment == "tv") return run_tv_arm(spec);
    throw ConfigError("unknown experiment: " + cfg.experiment);
}

bool has_arm(const RunConfig& cfg, const std::string& arm) {
    return std::find(cfg.arms.begin(), cfg.arms.end(), arm) != cfg.arms.end();
}

}  // namespace

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& e : registry()) v.push_back(e.name);
        return v;
    }();
    return names;
}

std::string experiment_description(const std::string& name) {
    const ExperimentInfo* info = find_info(name);
    return info ? info->description : "";
}

RunConfig resolve_defaults(RunConfig cfg) {
    const ExperimentInfo* info = find_info(cfg.experiment);
    if (!info) return cfg;
    if (cfg.max_iters <= 0) cfg.max_iters = info->max_iters;
    if (cfg.hj_samples <= 0) cfg.hj_samples = info->hj_samples;
    if (cfg.hj_delta0 <= 0.0) cfg.hj_delta0 = info->hj_delta0;
    if (cfg.noise_sigma < 0.0) cfg.noise_sigma = info->noise_sigma;
    if (cfg.output_dir.empty()) {
        const char* base = std::getenv("HJSPLIT_OUT");
        cfg.output_dir = (base ? std::string(base) : std::string("out")) + "/" + cfg.experiment;
    }
    return cfg;
}

namespace {

void assign_config_field(RunConfig& cfg, const std::string& key, const json& v) {
    if (key == "experiment") cfg.experiment = v.get<std::string>();
    else if (key == "size_scale") cfg.size_scale = v.get<double>();
    else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
    else if (key == "arms") cfg.arms = v.get<std::vector<std::string>>();
    else if (key == "max_iters") cfg.max_iters = v.get<int>();
    else if (key == "hj_max_iters") cfg.hj_max_iters = v.get<int>();
    else if (key == "relaxation") cfg.relaxation = v.get<double>();
    else if (key == "stop_residual") cfg.stop_residual = v.get<double>();
    else if (key == "hj_samples") cfg.hj_samples = v.get<int>();
    else if (key == "hj_delta0") cfg.hj_delta0 = v.get<double>();
    else if (key == "hj_exponent") cfg.hj_exponent = v.get<double>();
    else if (key == "step_t") cfg.step_t = v.get<double>();
    else if (key == "tau") cfg.tau = v.get<double>();
    else if (key == "sigma") cfg.sigma = v.get<double>();
    else if (key == "lambda") cfg.lambda = v.get<double>();
    else if (key == "lambda1") cfg.lambda1 = v.get<double>();
    else if (key == "lambda2") cfg.lambda2 = v.get<double>();
    else if (key == "lambda3") cfg.lambda3 = v.get<double>();
    else if (key == "noise_sigma") cfg.noise_sigma = v.get<double>();
    else if (key == "output_dir") cfg.output_dir = v.get<std::string>();
    else if (key == "n_obs") cfg.n_obs = v.get<Index>();
    else if (key == "n_features") cfg.n_features = v.get<Index>();
    else if (key == "n_tasks") cfg.n_tasks = v.get<Index>();
    else if (key == "n_groups") cfg.n_groups = v.get<Index>();
    else if (key == "group_size") cfg.group_size = v.get<Index>();
    else if (key == "image_size") cfg.image_size = v.get<Index>();
    else if (key == "support_begin") cfg.support_begin = v.get<Index>();
    else if (key == "support_len") cfg.support_len = v.get<Index>();
    else throw ConfigError("unknown config key: " + key);
}

}  // namespace

RunConfig config_from_json_text(const std::string& text) {
    json j = json::parse(text);
    if (j.contains("config")) j = j.at("config");  // accept a manifest as input
    RunConfig cfg;
    for (const auto& item : j.items()) {
        assign_config_field(cfg, item.key(), item.value());
    }
    return cfg;
}

std::string config_to_json_text(const RunConfig& cfg) {
    json j;
    j["experiment"] = cfg.experiment;
    j["size_scale"] = cfg.size_scale;
    j["seed"] = cfg.seed;
    j["arms"] = cfg.arms;
    j["max_iters"] = cfg.max_iters;
    j["hj_max_iters"] = cfg.hj_max_iters;
    j["relaxation"] = cfg.relaxation;
    j["stop_residual"] = cfg.stop_residual;
    j["hj_samples"] = cfg.hj_samples;
    j["hj_delta0"] = cfg.hj_delta0;
    j["hj_exponent"] = cfg.hj_exponent;
    j["step_t"] = cfg.step_t;
    j["tau"] = cfg.tau;
    j["sigma"] = cfg.sigma;
    j["lambda"] = cfg.lambda;
    j["lambda1"] = cfg.lambda1;
    j["lambda2"] = cfg.lambda2;
    j["lambda3"] = cfg.lambda3;
    j["noise_sigma"] = cfg.noise_sigma;
    j["output_dir"] = cfg.output_dir;
    j["n_obs"] = cfg.n_obs;
    j["n_features"] = cfg.n_features;
    j["n_tasks"] = cfg.n_tasks;
    j["n_groups"] = cfg.n_groups;
    j["group_size"] = cfg.group_size;
    j["image_size"] = cfg.image_size;
    j["support_begin"] = cfg.support_begin;
    j["support_len"] = cfg.support_len;
    return j.dump(2);
}

std::vector<std::string> validate_config(const RunConfig& raw) {
    std::vector<std::string> bad;
    const RunConfig cfg = resolve_defaults(raw);
    if (!find_info(cfg.experiment)) {
        bad.push_back("experiment must be one of lasso/multitask/fused/sparse_group/tv");
        return bad;
    }
    if (!(cfg.size_scale > 0.0 && cfg.size_scale <= 1.0)) {
        bad.push_back("size_scale must lie in (0, 1]");
    }
    if (cfg.arms.empty()) bad.push_back("arms must be a nonempty subset of {exact, hj}");
    for (const auto& a : cfg.arms) {
        if (a != "exact" && a != "hj") bad.push_back("unknown arm: " + a);
    }
    if (cfg.max_iters < 1) bad.push_back("max_iters must be >= 1");
    if (!(cfg.relaxation > 0.0 && cfg.relaxation < 2.0)) {
        bad.push_back("relaxation must lie in (0, 2) so it fits [gamma, 2 - gamma]");
    }
    if (cfg.stop_residual < 0.0) bad.push_back("stop_residual must be >= 0");
    if (cfg.noise_sigma < 0.0) bad.push_back("noise_sigma must be >= 0");
    if (has_arm(cfg, "hj")) {
        if (cfg.hj_samples < 1) bad.push_back("hj_samples must be >= 1");
        if (!(cfg.hj_delta0 > 0.0)) bad.push_back("hj_delta0 must be positive");
        if (!(cfg.hj_exponent > 2.0)) {
            bad.push_back(
                "hj_exponent must exceed 2: the sequence {sqrt(delta_k)} must be summable");
        }
    }
    const Dims d = resolve_dims(cfg);
    if (cfg.experiment == "lasso") {
        if (d.support_begin + d.support_len > d.n_features || d.support_len < 1) {
            bad.push_back("lasso support range must fit inside 1..p");
        }
    } else if (cfg.experiment == "fused") {
        if (d.n_obs < 8) bad.push_back("fused signal length must be >= 8");
    } else if (cfg.experiment == "tv") {
        if (d.image_size < 8) bad.push_back("tv image size must be >= 8");
        const double tau = cfg.tau > 0.0 ? cfg.tau : 0.33;
        const double sigma = cfg.sigma > 0.0 ? cfg.sigma : 0.33;
        if (!(tau * sigma * 8.0 < 1.0)) {
            bad.push_back("tau*sigma*|A|^2 must be < 1 for the PDHG coupling operator");
        }
    } else if (cfg.experiment == "multitask") {
        if (d.n_features < 2 || d.n_tasks < 2) {
            bad.push_back("multitask needs at least 2 predictors and 2 tasks");
        }
    } else if (cfg.experiment == "sparse_group") {
        if (d.n_groups < 2 || d.group_size < 1) {
            bad.push_back("sparse_group needs at least 2 groups of positive size");
        }
    }
    if (cfg.step_t > 0.0 && (cfg.experiment == "lasso" || cfg.experiment == "sparse_group")) {
        // gradient-based solvers require t < 2/L for the generated design
        const RngStream rng{cfg.seed, find_info(cfg.experiment)->instance_stream};
        Mat X;
        if (cfg.experiment == "lasso") {
            X = prob::gen_lasso(d.n_obs, d.n_features, d.support_begin, d.support_len,
                                cfg.noise_sigma, cfg.lambda, rng)
                    .X;
        } else {
            X = prob::gen_sparse_group(d.n_obs, d.n_groups, d.group_size, cfg.noise_sigma,
                                       cfg.lambda1, cfg.lambda2, rng)
                    .X;
        }
        const double L = estimate_lipschitz(X, cfg.seed);
        if (!(cfg.step_t < 2.0 / L)) {
            bad.push_back("step_t must satisfy t < 2/L for the smooth data term");
        }
    }
    return bad;
}

ExperimentResult run_arms(const RunConfig& raw) {
    const RunConfig cfg = resolve_defaults(raw);
    const auto bad = validate_config(cfg);
    if (!bad.empty()) throw ConfigError("invalid config: " + bad.front());
    ExperimentResult result;
    for (const std::string arm : {"exact", "hj"}) {
        if (!has_arm(cfg, arm)) continue;
        try {
            result.arms[arm] = run_arm(cfg, arm == "hj", &result.params);
        } catch (const DivergenceError& e) {
            ArmOutcome out;
            out.solution = e.last_iterate;
            out.trace = e.trace;
            out.final_objective =
                out.trace.rows.empty() ? 0.0 : out.trace.rows.back().objective;
            out.diverged = true;
            result.arms[arm] = std::move(out);
            result.diverged = true;
        }
    }
    return result;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

void write_trace_csv(const std::filesystem::path& path, const SolverTrace& trace) {
    std::ofstream out(path, std::ios::binary);
    out << "k,objective,fp_residual,delta_k,eps_bound\n";
    for (const auto& r : trace.rows) {
        out << r.k << ',' << format_double(r.objective) << ',' << format_double(r.fp_residual)
            << ',' << format_double(r.delta_k) << ',' << format_double(r.eps_bound) << '\n';
    }
    out << "# eps_bound_sum=" << format_double(trace.eps_bound_sum()) << '\n';
}

void write_objectives_csv(const std::filesystem::path& path, const ExperimentResult& result) {
    std::ofstream out(path, std::ios::binary);
    out << "k,objective_exact,objective_hj\n";
    const auto* exact = result.arms.count("exact") ? &result.arms.at("exact") : nullptr;
    const auto* hj = result.arms.count("hj") ? &result.arms.at("hj") : nullptr;
    std::size_t rows = 0;
    if (exact) rows = std::max(rows, exact->trace.rows.size());
    if (hj) rows = std::max(rows, hj->trace.rows.size());
    for (std::size_t i = 0; i < rows; ++i) {
        out << (i + 1) << ',';
        if (exact && i < exact->trace.rows.size()) {
            out << format_double(exact->trace.rows[i].objective);
        }
        out << ',';
        if (hj && i < hj->trace.rows.size()) {
            out << format_double(hj->trace.rows[i].objective);
        }
        out << '\n';
    }
}

/// Self-contained convergence plot: log10 of the objective gap against the
/// best value seen across arms, one polyline per arm.
void write_plot_svg(const std::filesystem::path& path, const std::string& title,
                    const ExperimentResult& result) {
    struct Series {
        std::string name;
        std::string color;
        const ArmOutcome* arm;
    };
    std::vector<Series> series;
    if (result.arms.count("exact")) series.push_back({"exact", "#1f77b4", &result.arms.at("exact")});
    if (result.arms.count("hj")) series.push_back({"hj", "#d62728", &result.arms.at("hj")});

    double best = std::numeric_limits<double>::infinity();
    double worst = -std::numeric_limits<double>::infinity();
    std::size_t max_rows = 1;
    for (const auto& s : series) {
        for (const auto& r : s.arm->trace.rows) {
            best = std::min(best, r.objective);
            worst = std::max(worst, r.objective);
        }
        max_rows = std::max(max_rows, s.arm->trace.rows.size());
    }
    if (!std::isfinite(best)) {
        best = 0.0;
        worst = 1.0;
    }
    const double floor = std::max(1e-12, 1e-12 * std::abs(worst));

    const double W = 720, H = 480, ml = 80, mr = 20, mt = 40, mb = 50;
    auto ylog = [&](double obj) { return std::log10(obj - best + floor); };
    double ylo = ylog(best), yhi = ylog(worst);
    if (yhi - ylo < 1e-9) yhi = ylo + 1.0;
    auto xpix = [&](std::size_t i) {
        return ml + (W - ml - mr) * static_cast<double>(i) /
                        static_cast<double>(std::max<std::size_t>(max_rows - 1, 1));
    };
    auto ypix = [&](double v) { return H - mb - (H - mt - mb) * (v - ylo) / (yhi - ylo); };

    std::ofstream out(path, std::ios::binary);
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H
        << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\""
        << " font-size=\"16\">" << title << " convergence</text>\n";
    // axes
    out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
        << H - mb << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
        << "\" stroke=\"black\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double v = ylo + (yhi - ylo) * tick / 4.0;
        const double y = ypix(v);
        out << "<line x1=\"" << ml - 4 << "\" y1=\"" << y << "\" x2=\"" << ml << "\" y2=\"" << y
            << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << ml - 8 << "\" y=\"" << y + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e"
            << format_double(std::round(v * 100.0) / 100.0) << "</text>\n";
        const std::size_t ki =
            static_cast<std::size_t>(std::llround(static_cast<double>(max_rows - 1) * tick / 4.0));
        const double x = xpix(ki);
        out << "<line x1=\"" << x << "\" y1=\"" << H - mb << "\" x2=\"" << x << "\" y2=\""
            << H - mb + 4 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << x << "\" y=\"" << H - mb + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << (ki + 1)
            << "</text>\n";
    }
    out << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">iteration"
        << "</text>\n";
    out << "<text x=\"18\" y=\"" << (mt + H - mb) / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
        << "transform=\"rotate(-90 18 " << (mt + H - mb) / 2 << ")\">log10 objective gap</text>\n";

    int legend_row = 0;
    for (const auto& s : series) {
        std::ostringstream pts;
        const auto& rows = s.arm->trace.rows;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            pts << format_double(xpix(i)) << ',' << format_double(ypix(ylog(rows[i].objective)));
            if (i + 1 < rows.size()) pts << ' ';
        }
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\""
            << pts.str() << "\"/>\n";
        const double ly = mt + 16 + 18 * legend_row++;
        out << "<line x1=\"" << ml + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << ml + 36
            << "\" y2=\"" << ly - 4 << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << ml + 42 << "\" y=\"" << ly
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.name
            << " (final objective " << format_double(s.arm->final_objective) << ")</text>\n";
    }
    out << "</svg>\n";
}

void write_manifest(const std::filesystem::path& path, const RunConfig& cfg,
                    const ExperimentResult& result) {
    json m;
    m["artifact"] = "hjsplit";
    m["version"] = "0.1.0";
    m["config"] = json::parse(config_to_json_text(cfg));
    for (const auto& [key, value] : result.params) m["resolved"][key] = value;
    for (const auto& [arm, out] : result.arms) {
        m["results"][arm] = {{"final_objective", out.final_objective},
                             {"iterations", out.trace.rows.size()},
                             {"eps_bound_sum", out.trace.eps_bound_sum()},
                             {"diverged", out.diverged}};
    }
    std::ofstream f(path, std::ios::binary);
    f << m.dump(2) << '\n';
}

}  // namespace

int run_experiment(const RunConfig& raw) {
    const RunConfig cfg = resolve_defaults(raw);
    const auto violations = validate_config(cfg);
    if (!violations.empty()) {
        for (const auto& v : violations) std::cerr << "config violation: " << v << '\n';
        return 2;
    }
    ExperimentResult result = run_arms(cfg);

    const std::filesystem::path dir(cfg.output_dir);
    std::filesystem::create_directories(dir);
    for (const auto& [arm, out] : result.arms) {
        write_trace_csv(dir / (arm + "_trace.csv"), out.trace);
    }
    write_objectives_csv(dir / "objectives.csv", result);
    write_plot_svg(dir / "plot.svg", cfg.experiment, result);
    write_manifest(dir / "manifest.json", cfg, result);

    if (result.diverged) {
        std::cerr << "solver divergence detected; partial traces written to " << dir << '\n';
        return 3;
    }
    return 0;
}

}  // namespace hjsplit::experiments
