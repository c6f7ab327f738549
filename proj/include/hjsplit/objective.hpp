#pragma once

#include "hjsplit/core.hpp"

#include <functional>
#include <optional>
#include <utility>

namespace hjsplit {

/// A scalar objective evaluated zeroth-order, optionally with a gradient and
/// a Lipschitz constant for that gradient. eval may return +inf (indicator
/// parts); it must never return NaN on finite input.
struct Objective {
    std::function<double(const Vec&)> eval;
    std::function<Vec(const Vec&)> grad;  // empty when unavailable
    std::optional<double> lipschitz_grad;

    bool has_grad() const { return static_cast<bool>(grad); }

    static Objective from_eval(std::function<double(const Vec&)> f) {
        Objective o;
        o.eval = std::move(f);
        return o;
    }

    static Objective smooth(std::function<double(const Vec&)> f,
                            std::function<Vec(const Vec&)> g,
                            std::optional<double> lipschitz = std::nullopt) {
        Objective o;
        o.eval = std::move(f);
        o.grad = std::move(g);
        o.lipschitz_grad = lipschitz;
        return o;
    }
};

/// Central finite differences (f(x + h e_i) - f(x - h e_i)) / (2h).
inline Vec finite_diff_grad(const Objective& f, const Vec& x, double h) {
    if (!(h > 0.0)) throw ConfigError("finite_diff_grad: h must be positive");
    Vec g(x.size());
    Vec probe = x;
    for (Index i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + h;
        const double fp = f.eval(probe);
        probe[i] = x[i] - h;
        const double fm = f.eval(probe);
        probe[i] = x[i];
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw NumericError("finite_diff_grad: objective not finite at probe point");
        }
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

}  // namespace hjsplit
