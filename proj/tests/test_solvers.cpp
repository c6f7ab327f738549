#include "hjsplit/problems.hpp"
#include "hjsplit/prox.hpp"
#include "hjsplit/solvers.hpp"

#include <doctest.h>

#include <cmath>

using namespace hjsplit;
namespace prob = hjsplit::problems;

namespace {

void check_trace_wellformed(const SolverTrace& t) {
    int expected = 1;
    for (const auto& r : t.rows) {
        CHECK(r.k == expected++);
        CHECK(std::isfinite(r.objective));
        CHECK(std::isfinite(r.fp_residual));
        CHECK(std::isfinite(r.delta_k));
        CHECK(std::isfinite(r.eps_bound));
    }
}

KMConfig km(int iters, double stop = 0.0) {
    KMConfig cfg;
    cfg.max_iters = iters;
    cfg.stop_residual = stop;
    return cfg;
}

ProxProvider quadratic_provider(const Vec& anchor) {
    return ProxProvider::exact(
        [anchor](const Vec& v, double t) { return quadratic_moreau_prox(v, anchor, t); });
}

}  // namespace

TEST_CASE("km_iterate leaves fixed points alone") {
    Vec x0(3);
    x0 << 1.0, -2.0, 0.5;
    auto [x, trace] = km_iterate([](const Vec& v) { return v; }, x0, km(25));
    CHECK((x - x0).norm() == 0.0);
    for (const auto& r : trace.rows) CHECK(r.fp_residual == 0.0);
    check_trace_wellformed(trace);
}

TEST_CASE("km_iterate contracts geometrically") {
    Vec x0(1);
    x0 << 1.0;
    auto [x, trace] = km_iterate([](const Vec& v) -> Vec { return v / 2.0; }, x0, km(60));
    CHECK(x.norm() <= 1e-18);
    check_trace_wellformed(trace);
}

TEST_CASE("km_iterate separates summable from non-summable errors") {
    Vec x0(1);
    x0 << 1.0;
    Vec u(1);
    u << 1.0;
    const auto T = [](const Vec& v) -> Vec { return v / 2.0; };
    auto [xa, ta] = km_iterate(
        T, x0, km(1000), [&](int k) -> Vec { return u / (static_cast<double>(k) * k); });
    auto [xb, tb] = km_iterate(T, x0, km(1000),
                               [&](int k) -> Vec { return u / static_cast<double>(k); });
    // at the same matched budget the summable arm is an order of magnitude
    // past the 1e-3 mark while the harmonic arm still sits above it
    CHECK(xa.norm() <= 1e-3);
    CHECK(xb.norm() > 1e-3);
    // the injected error norm lands in the eps_bound column
    CHECK(ta.rows[9].eps_bound == doctest::Approx(1.0 / 100.0));
    CHECK(tb.rows[9].eps_bound == doctest::Approx(1.0 / 10.0));
    check_trace_wellformed(ta);
    check_trace_wellformed(tb);
}

TEST_CASE("km_iterate detects divergence and preserves the trace") {
    Vec x0(1);
    x0 << 1.0;
    try {
        km_iterate([](const Vec& v) -> Vec { return 10.0 * v; }, x0, km(100));
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(!e.trace.rows.empty());
        check_trace_wellformed(e.trace);
        CHECK(e.last_iterate.allFinite());
    }
}

TEST_CASE("km relaxation sequence is validated against [gamma, 2-gamma]") {
    Vec x0(1);
    x0 << 1.0;
    KMConfig cfg = km(5);
    cfg.gamma = 0.25;
    cfg.relaxation = [](int) { return 1.9; };  // above 2 - gamma = 1.75
    CHECK_THROWS_AS((void)km_iterate([](const Vec& v) { return v; }, x0, cfg), ConfigError);
    cfg.gamma = 1.5;
    cfg.relaxation = {};
    CHECK_THROWS_AS((void)km_iterate([](const Vec& v) { return v; }, x0, cfg), ConfigError);
}

TEST_CASE("pgd with g = 0 lands on the quadratic minimum in one step") {
    Vec c(3);
    c << 1.0, 2.0, -0.5;
    const auto f = Objective::smooth(
        [c](const Vec& x) { return 0.5 * (x - c).squaredNorm(); },
        [c](const Vec& x) -> Vec { return x - c; }, 1.0);
    ProxProvider g0 = ProxProvider::exact([](const Vec& v, double) { return v; });
    StepSizes steps;
    steps.t = 1.0;
    auto [x, trace] = pgd_run(f, g0, steps, Vec::Zero(3), km(1));
    CHECK((x - c).norm() < 1e-14);
    check_trace_wellformed(trace);
}

TEST_CASE("pgd validates its preconditions") {
    ProxProvider g0 = ProxProvider::exact([](const Vec& v, double) { return v; });
    StepSizes steps;
    steps.t = 1.0;
    const auto no_grad = Objective::from_eval([](const Vec& x) { return x.squaredNorm(); });
    CHECK_THROWS_AS((void)pgd_run(no_grad, g0, steps, Vec::Zero(2), km(1)), ConfigError);
    const auto f = Objective::smooth([](const Vec& x) { return 0.5 * x.squaredNorm(); },
                                     [](const Vec& x) -> Vec { return x; }, 1.0);
    StepSizes big;
    big.t = 2.0;  // not strictly below 2/L = 2
    CHECK_THROWS_AS((void)pgd_run(f, g0, big, Vec::Zero(2), km(1)), ConfigError);
}

TEST_CASE("exact pgd matches coordinate descent on a tiny lasso") {
    const auto inst = prob::gen_lasso(5, 3, 0, 2, 0.5, 0.05, RngStream{2024, 1});
    const double L =
        1.02 * std::pow(op_norm_estimate(LinearOperator::from_matrix(inst.X), 200, RngStream{1, 2}), 2);
    const auto f = Objective::smooth(
        [&](const Vec& b) { return 0.5 * (inst.X * b - inst.y).squaredNorm(); },
        [&](const Vec& b) -> Vec { return inst.X.transpose() * (inst.X * b - inst.y); }, L);
    ProxProvider g = ProxProvider::exact(
        [&](const Vec& v, double t) -> Vec { return soft_threshold(v, t * inst.lambda); });
    StepSizes steps;
    steps.t = 1.0 / L;
    ObjectiveFn obj = [&](const Vec& b) { return prob::lasso_objective(inst, b); };
    auto [beta, trace] = pgd_run(f, g, steps, Vec::Zero(3), km(10000), obj);
    const Vec ref = prob::lasso_reference(inst.X, inst.y, inst.lambda, 1e-12);
    CHECK((beta - ref).lpNorm<Eigen::Infinity>() < 1e-6);
    check_trace_wellformed(trace);

    // objective rows never increase once iterated (t <= 1/L)
    for (std::size_t i = 1; i < trace.rows.size(); ++i) {
        CHECK(trace.rows[i].objective <= trace.rows[i - 1].objective + 1e-10);
    }

    // swapping in the HJ provider keeps the final objective within 1%
    ProxProvider ghj = ProxProvider::hj(
        Objective::from_eval([&](const Vec& b) { return inst.lambda * b.lpNorm<1>(); }), 10000,
        RngStream{2024, 1 << 20}, DeltaSchedule{});
    auto [beta_hj, trace_hj] = pgd_run(f, ghj, steps, Vec::Zero(3), km(400), obj);
    const double obj_exact = prob::lasso_objective(inst, beta);
    const double obj_hj = prob::lasso_objective(inst, beta_hj);
    CHECK(std::abs(obj_hj - obj_exact) <= 0.01 * std::abs(obj_exact));
    check_trace_wellformed(trace_hj);
    // the trace carries the scheduled temperature and its error bound
    CHECK(trace_hj.rows[0].delta_k == doctest::Approx(1.0));
    CHECK(trace_hj.rows[0].eps_bound ==
          doctest::Approx(hj_error_bound(3, steps.t, 1.0)).epsilon(1e-12));
}

TEST_CASE("drs with a common quadratic minimizer") {
    Vec c(2);
    c << 0.7, -1.2;
    StepSizes steps;
    steps.t = 1.0;
    auto [x, trace] = drs_run(quadratic_provider(c), quadratic_provider(c), steps, Vec::Zero(2),
                              km(200));
    CHECK((x - c).norm() < 1e-8);
    CHECK(trace.rows.back().fp_residual < 1e-8);
    check_trace_wellformed(trace);
}

TEST_CASE("drs projects a quadratic onto the nonnegative orthant") {
    // minimize 0.5|x - a|^2 + indicator{x >= 0} with a = -1: solution is 0
    Vec a(1);
    a << -1.0;
    ProxProvider f = quadratic_provider(a);
    ProxProvider g = ProxProvider::exact(
        [](const Vec& v, double) -> Vec { return v.array().max(0.0); });
    StepSizes steps;
    steps.t = 1.0;
    auto [x, trace] = drs_run(f, g, steps, Vec::Zero(1), km(300));
    CHECK(std::abs(x[0]) <= 1e-6);
    // shadow sequence settles: |z_{k+1} - z_k| below 1e-6 at the end
    CHECK(trace.rows.back().fp_residual < 1e-6);
    check_trace_wellformed(trace);
}

TEST_CASE("dys with f = g = 0 reduces to gradient descent") {
    const RngStream rng{77, 0};
    Mat X(6, 4);
    for (Index j = 0; j < 4; ++j) X.col(j) = rng.normal_vec(static_cast<std::uint64_t>(j) * 6, 6);
    const Vec y = rng.normal_vec(64, 6);
    const double L =
        1.02 * std::pow(op_norm_estimate(LinearOperator::from_matrix(X), 200, RngStream{78, 0}), 2);
    const auto h = Objective::smooth(
        [&](const Vec& b) { return 0.5 * (X * b - y).squaredNorm(); },
        [&](const Vec& b) -> Vec { return X.transpose() * (X * b - y); }, L);
    ProxProvider id = ProxProvider::exact([](const Vec& v, double) { return v; });
    StepSizes steps;
    steps.t = 1.0 / L;
    const int iters = 50;
    auto [ydys, trace] = dys_run(id, id, h, steps, Vec::Zero(4), km(iters));
    Vec xgd = Vec::Zero(4);
    for (int k = 0; k < iters; ++k) xgd -= steps.t * h.grad(xgd);
    CHECK((ydys - xgd).lpNorm<Eigen::Infinity>() < 1e-12);
    check_trace_wellformed(trace);
}

TEST_CASE("dys solves a small sparse group instance against the subgradient oracle") {
    const auto inst = prob::gen_sparse_group(40, 2, 2, 0.05, 0.3, 0.2, RngStream{99, 4});
    const double L =
        1.02 * std::pow(op_norm_estimate(LinearOperator::from_matrix(inst.X), 200, RngStream{98, 0}), 2);
    const auto h = Objective::smooth(
        [&](const Vec& b) { return 0.5 * (inst.X * b - inst.y).squaredNorm(); },
        [&](const Vec& b) -> Vec { return inst.X.transpose() * (inst.X * b - inst.y); }, L);
    ProxProvider f = ProxProvider::exact([&](const Vec& v, double t) -> Vec {
        return group_soft_threshold(v, inst.groups, t * inst.lambda1);
    });
    ProxProvider g = ProxProvider::exact(
        [&](const Vec& v, double t) -> Vec { return soft_threshold(v, t * inst.lambda2); });
    StepSizes steps;
    steps.t = 1.0 / L;
    ObjectiveFn obj = [&](const Vec& b) { return prob::sparse_group_objective(inst, b); };
    auto [beta, trace] = dys_run(f, g, h, steps, Vec::Zero(4), km(20000), obj);

    double sub_obj = 0.0;
    prob::sparse_group_subgradient_reference(inst.X, inst.y, inst.groups, inst.lambda1,
                                             inst.lambda2, 1000000, &sub_obj);
    const double dys_obj = prob::sparse_group_objective(inst, beta);
    CHECK(std::abs(dys_obj - sub_obj) <= 1e-4);
    check_trace_wellformed(trace);

    // HJ proxes keep the objective within 2 percent on this desk instance
    ProxProvider fhj = ProxProvider::hj(
        Objective::from_eval([&](const Vec& b) {
            return inst.lambda1 * (b.segment(0, 2).norm() + b.segment(2, 2).norm());
        }),
        20000, RngStream{99, 1 << 20}, DeltaSchedule{0.1, 2.00001});
    ProxProvider ghj = ProxProvider::hj(
        Objective::from_eval([&](const Vec& b) { return inst.lambda2 * b.lpNorm<1>(); }), 20000,
        RngStream{99, 2 << 20}, DeltaSchedule{0.1, 2.00001});
    auto [beta_hj, trace_hj] = dys_run(fhj, ghj, h, steps, Vec::Zero(4), km(400), obj);
    const double hj_obj = prob::sparse_group_objective(inst, beta_hj);
    CHECK(std::abs(hj_obj - dys_obj) <= 0.02 * std::abs(dys_obj));
    check_trace_wellformed(trace_hj);
}

TEST_CASE("pdhg decouples when A = 0") {
    Vec b(2);
    b << 1.5, -0.5;
    ProxProvider f = quadratic_provider(b);
    ProxProvider g = ProxProvider::exact(
        [](const Vec& v, double t) -> Vec { return soft_threshold(v, t); });
    const auto A = LinearOperator::from_matrix(Mat::Zero(2, 2));
    StepSizes steps;
    steps.tau = 1.0;
    steps.sigma = 1.0;
    Vec y0(2);
    y0 << 3.0, 0.4;
    auto res = pdhg_run(f, g, A, steps, Vec::Zero(2), y0, km(200));
    CHECK((res.x - b).norm() < 1e-10);           // x converges to argmin f
    // y converges to the projection of y0 onto the l-infinity unit ball
    CHECK(res.y[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(res.y[1] == doctest::Approx(0.4).epsilon(1e-10));
    check_trace_wellformed(res.trace);
}

TEST_CASE("pdhg agrees with drs on a shared lasso-type objective") {
    const RngStream rng{55, 0};
    Vec b = rng.normal_vec(0, 4);
    ProxProvider fq = quadratic_provider(b);
    ProxProvider gl1 = ProxProvider::exact(
        [](const Vec& v, double t) -> Vec { return soft_threshold(v, t); });
    StepSizes pd;
    pd.tau = 0.9;
    pd.sigma = 0.9;
    auto res = pdhg_run(fq, gl1, LinearOperator::identity(4), pd, Vec::Zero(4), Vec::Zero(4),
                        km(3000));
    StepSizes dr;
    dr.t = 1.0;
    auto [xdrs, trace] = drs_run(fq, gl1, dr, Vec::Zero(4), km(500));
    auto objective = [&](const Vec& x) { return 0.5 * (x - b).squaredNorm() + x.lpNorm<1>(); };
    CHECK(std::abs(objective(res.x) - objective(xdrs)) < 1e-4);
    check_trace_wellformed(res.trace);
}

TEST_CASE("pdhg rejects step sizes violating tau sigma |A|^2 < 1") {
    const RngStream rng{66, 0};
    for (int trial = 0; trial < 20; ++trial) {
        Mat A(3, 3);
        for (Index j = 0; j < 3; ++j) {
            A.col(j) = rng.normal_vec(static_cast<std::uint64_t>(trial) * 9 +
                                          static_cast<std::uint64_t>(j) * 3,
                                      3);
        }
        auto op = LinearOperator::from_matrix(A);
        const double nrm = op_norm_estimate(op, 300, RngStream{67, static_cast<std::uint64_t>(trial)});
        ProxProvider id = ProxProvider::exact([](const Vec& v, double) { return v; });
        StepSizes steps;
        steps.tau = 1.0 / nrm;
        steps.sigma = 1.0 / nrm;  // tau sigma |A|^2 = 1, not strictly below
        CHECK_THROWS_AS(
            (void)pdhg_run(id, id, op, steps, Vec::Zero(3), Vec::Zero(3), km(1)), ConfigError);
    }
}

TEST_CASE("pdhg honors an explicit norm hint") {
    auto op = LinearOperator::identity(2);
    op.norm_hint = 1.0;
    ProxProvider id = ProxProvider::exact([](const Vec& v, double) { return v; });
    StepSizes bad;
    bad.tau = 1.0;
    bad.sigma = 1.0;
    CHECK_THROWS_AS((void)pdhg_run(id, id, op, bad, Vec::Zero(2), Vec::Zero(2), km(1)),
                    ConfigError);
    StepSizes ok;
    ok.tau = 0.7;
    ok.sigma = 0.7;
    auto res = pdhg_run(id, id, op, ok, Vec::Zero(2), Vec::Zero(2), km(3));
    CHECK(res.trace.rows.size() == 3);
}

TEST_CASE("swapping exact for hj changes a prox output within the analytic bound") {
    // healthy sampling regime: the proposal cloud covers the prox target
    const Index n = 5;
    const double t = 0.01;
    const double delta0 = 0.05;
    ProxProvider exact = ProxProvider::exact(
        [](const Vec& v, double tt) -> Vec { return soft_threshold(v, tt); });
    ProxProvider hj = ProxProvider::hj(
        Objective::from_eval([](const Vec& b) { return b.lpNorm<1>(); }), 100000,
        RngStream{13, 9000}, DeltaSchedule{delta0, 2.5});
    const RngStream rng{14, 0};
    const Vec v = 2.0 * rng.normal_vec(0, n);
    const Vec pe = exact.prox(v, t, 1);
    const Vec ph = hj.prox(v, t, 1);
    const double bound = hj_error_bound(n, t, delta0) +
                         30.0 * std::sqrt(delta0 * t * static_cast<double>(n) / 100000.0);
    CHECK((pe - ph).norm() <= bound);
}
