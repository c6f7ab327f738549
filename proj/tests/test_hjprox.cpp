#include "hjsplit/hjprox.hpp"
#include "hjsplit/problems.hpp"
#include "hjsplit/prox.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace hjsplit;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("softmax of equal values is uniform") {
    Vec v = Vec::Constant(3, 1.7);
    const Vec w = softmax_weights(v, 0.3);
    for (Index i = 0; i < 3; ++i) CHECK(w[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("softmax gives infinite values weight exactly zero") {
    Vec v(2);
    v << 0.0, kInf;
    const Vec w = softmax_weights(v, 1.0);
    CHECK(w[0] == 1.0);
    CHECK(w[1] == 0.0);
}

TEST_CASE("two-point softmax at spacing delta ln 2") {
    const double delta = 0.37;
    Vec v(2);
    v << 0.0, delta * std::log(2.0);
    const Vec w = softmax_weights(v, delta);
    CHECK(w[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("softmax is shift invariant") {
    const RngStream rng{31, 0};
    // exactly representable shift: the stabilizing subtraction cancels it bit for bit
    Vec v(4);
    v << 1.5, 2.25, -0.75, 3.0;
    const Vec w0 = softmax_weights(v, 0.5);
    const Vec w1 = softmax_weights(v.array() + 4.0, 0.5);
    for (Index i = 0; i < 4; ++i) CHECK(w0[i] == w1[i]);
    // generic shifts agree to rounding error
    for (int trial = 0; trial < 20; ++trial) {
        const Vec r = rng.normal_vec(static_cast<std::uint64_t>(trial) * 8, 6);
        const double c = 10.0 * rng.normal(1000 + static_cast<std::uint64_t>(trial));
        const Vec wa = softmax_weights(r, 0.2);
        const Vec wb = softmax_weights(r.array() + c, 0.2);
        CHECK((wa - wb).lpNorm<Eigen::Infinity>() < 1e-12);
    }
}

TEST_CASE("softmax failure modes") {
    Vec allinf = Vec::Constant(3, kInf);
    CHECK_THROWS_AS((void)softmax_weights(allinf, 1.0), DegenerateWeightsError);
    Vec withnan(2);
    withnan << 0.0, std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS((void)softmax_weights(withnan, 1.0), NumericError);
    Vec ok = Vec::Zero(2);
    CHECK_THROWS_AS((void)softmax_weights(ok, 0.0), ConfigError);
}

TEST_CASE("delta_schedule matches its formula") {
    CHECK(delta_schedule(1) == doctest::Approx(1.0).epsilon(1e-15));
    // 2^(-2.00001), evaluated independently through exp
    const double expected = std::exp(-2.00001 * std::log(2.0));
    CHECK(delta_schedule(2) == doctest::Approx(expected).epsilon(1e-13));
    CHECK(delta_schedule(2) == doctest::Approx(0.24999827).epsilon(1e-7));
    CHECK(delta_schedule(10, DeltaSchedule{0.1, 3.0}) == doctest::Approx(1e-4).epsilon(1e-12));
    CHECK_THROWS_AS((void)delta_schedule(0), ConfigError);
    CHECK_THROWS_AS((void)delta_schedule(1, DeltaSchedule{1.0, 1.5}), ConfigError);
    CHECK_THROWS_AS((void)delta_schedule(1, DeltaSchedule{0.0, 3.0}), ConfigError);
}

TEST_CASE("delta_schedule produces a summable sqrt sequence") {
    // The partial sums of sqrt(delta_k) settle: late equal-length blocks add
    // strictly less than early ones, and a steeper schedule's tail block is
    // far below 1e-3.
    double block_a = 0.0, block_b = 0.0, block_c = 0.0;
    const DeltaSchedule def{};
    for (int k = 100000; k < 200000; ++k) block_a += std::sqrt(delta_schedule(k, def));
    for (int k = 500000; k < 600000; ++k) block_b += std::sqrt(delta_schedule(k, def));
    for (int k = 900000; k < 1000000; ++k) block_c += std::sqrt(delta_schedule(k, def));
    CHECK(block_b < block_a);
    CHECK(block_c < block_b);

    const DeltaSchedule steep{1.0, 4.0};
    double tail = 0.0;
    for (int k = 100000; k < 200000; ++k) tail += std::sqrt(delta_schedule(k, steep));
    CHECK(tail < 1e-3);
}

TEST_CASE("hj_error_bound evaluates sqrt(2 n t delta)") {
    CHECK(hj_error_bound(1, 0.5, 1e-4) == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(hj_error_bound(100, 2.0, 0.01) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(hj_error_bound(3, 0.7, 1e-16) <= 1e-7 * std::sqrt(2.0 * 3 * 0.7) * 10.0);
    CHECK_THROWS_AS((void)hj_error_bound(0, 1.0, 1.0), ConfigError);
    CHECK_THROWS_AS((void)hj_error_bound(1, 0.0, 1.0), ConfigError);
}

TEST_CASE("hj_prox of the zero objective averages to the center") {
    const Index n = 4;
    const double delta = 1.0, t = 1.0;
    const int N = 2000;
    Vec x(n);
    x << 0.5, -1.0, 2.0, 0.0;
    const double tol = 5.0 * std::sqrt(delta * t * static_cast<double>(n) / N);
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        HJProxParams p{delta, t, N, RngStream{seed, 77}};
        const Vec out = hj_prox([](const Vec&) { return 0.0; }, x, p);
        if ((out - x).norm() <= tol) ++ok;
    }
    CHECK(ok >= 49);
}

TEST_CASE("hj_prox of a quadratic matches x/(1+t) for moderate delta") {
    // with f = |y|^2/2 the softmax-weighted density is Gaussian with mean
    // x/(1+t) independent of delta
    Vec x(2);
    x << 0.6, -0.4;
    for (double delta : {0.5, 0.1}) {
        HJProxParams p{delta, 1.0, 200000, RngStream{5, 99}};
        const Vec out = hj_prox([](const Vec& y) { return 0.5 * y.squaredNorm(); }, x, p);
        CHECK((out - x / 2.0).norm() < 0.02);
    }
}

TEST_CASE("hj_prox tracks the soft threshold within the analytic bound") {
    // cells chosen so the sampler's proposal covers the prox point
    struct Cell {
        Index n;
        double t, delta;
    };
    const Cell cells[] = {{1, 0.1, 0.1}, {2, 0.1, 0.05}, {5, 0.1, 0.2}, {1, 1.0, 0.5}};
    const int N = 20000;
    for (const auto& c : cells) {
        const double bound = hj_error_bound(c.n, c.t, c.delta) +
                             30.0 * std::sqrt(c.delta * c.t * static_cast<double>(c.n) / N);
        int ok = 0;
        const RngStream xs{404, 0};
        for (int trial = 0; trial < 100; ++trial) {
            Vec x(c.n);
            for (Index i = 0; i < c.n; ++i) {
                x[i] = 6.0 * xs.uniform01(static_cast<std::uint64_t>(trial) * 16 +
                                          static_cast<std::uint64_t>(i)) -
                       3.0;
            }
            HJProxParams p{c.delta, c.t, N, RngStream{500 + static_cast<std::uint64_t>(trial), 1}};
            const Vec out = hj_prox([](const Vec& y) { return y.lpNorm<1>(); }, x, p);
            const Vec exact = soft_threshold(x, c.t);
            if ((out - exact).norm() <= bound) ++ok;
        }
        CHECK(ok >= 95);
    }
}

TEST_CASE("hj_prox output stays in the convex hull of its samples") {
    Vec x(3);
    x << 1.0, -2.0, 0.5;
    HJProxParams p{0.3, 0.8, 500, RngStream{6, 3}};
    const auto res = hj_prox_detailed([](const Vec& y) { return y.lpNorm<1>() + y[0] * y[0]; }, x, p);
    for (Index i = 0; i < 3; ++i) {
        CHECK(res.point[i] >= res.sample_lo[i] - 1e-12);
        CHECK(res.point[i] <= res.sample_hi[i] + 1e-12);
    }
    CHECK(res.ess >= 1.0);
    CHECK(res.max_weight <= 1.0);
}

TEST_CASE("hj_prox handles indicators by zero-weighting infeasible samples") {
    // f is the indicator of the nonnegative orthant; all mass goes to
    // feasible samples, so the output is nonnegative in every coordinate
    Vec x = Vec::Zero(2);
    HJProxParams p{0.5, 1.0, 20000, RngStream{8, 2}};
    const Vec out = hj_prox(
        [](const Vec& y) { return y.minCoeff() >= 0.0 ? 0.0 : kInf; }, x, p);
    CHECK(out.minCoeff() >= 0.0);

    // far outside the feasible set every sample is infeasible
    Vec far = Vec::Constant(2, -100.0);
    HJProxParams tight{1e-4, 1e-4, 100, RngStream{8, 3}};
    CHECK_THROWS_AS(
        (void)hj_prox([](const Vec& y) { return y.minCoeff() >= 0.0 ? 0.0 : kInf; }, far, tight),
        DegenerateWeightsError);
}

TEST_CASE("hj_prox rejects NaN objective values and bad params") {
    Vec x = Vec::Zero(1);
    HJProxParams p{1.0, 1.0, 10, RngStream{9, 0}};
    CHECK_THROWS_AS(
        (void)hj_prox([](const Vec&) { return std::numeric_limits<double>::quiet_NaN(); }, x, p),
        NumericError);
    HJProxParams bad{0.0, 1.0, 10, RngStream{9, 1}};
    CHECK_THROWS_AS((void)hj_prox([](const Vec&) { return 0.0; }, x, bad), ConfigError);
}

TEST_CASE("hj_prox is deterministic for a fixed stream") {
    Vec x(3);
    x << 0.3, -0.7, 1.1;
    HJProxParams p{0.2, 0.5, 5000, RngStream{10, 123}};
    const Vec a = hj_prox([](const Vec& y) { return y.lpNorm<1>(); }, x, p);
    const Vec b = hj_prox([](const Vec& y) { return y.lpNorm<1>(); }, x, p);
    CHECK((a - b).norm() == 0.0);
}

TEST_CASE("moreau decomposition against closed-form conjugate proxes") {
    // g = 0: prox_{sigma g*} collapses to 0
    ProxFn zero_prox = [](const Vec& v, double) { return v; };
    Vec y(2);
    y << 3.0, -1.5;
    CHECK(prox_conjugate_via_moreau(zero_prox, 2.0, y).norm() == 0.0);

    // g = l1 norm: conjugate prox is the l-infinity ball projection
    ProxFn l1_prox = [](const Vec& v, double t) -> Vec { return soft_threshold(v, t); };
    Vec y2(2);
    y2 << 0.5, 2.0;
    const Vec proj = prox_conjugate_via_moreau(l1_prox, 1.0, y2);
    CHECK(proj[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(proj[1] == doctest::Approx(1.0).epsilon(1e-12));

    // g = |.|^2/2: prox_{sigma g*}(y) = y/(1+sigma); checked via the identity
    ProxFn quad_prox = [](const Vec& v, double t) -> Vec { return v / (1.0 + t); };
    Vec y3(1);
    y3 << 3.0;
    const Vec m = prox_conjugate_via_moreau(quad_prox, 2.0, y3);
    CHECK((m - y3 / 3.0).norm() < 1e-10);
    CHECK_THROWS_AS((void)prox_conjugate_via_moreau(quad_prox, 0.0, y3), ConfigError);
}
