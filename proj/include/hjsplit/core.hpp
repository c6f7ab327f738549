#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace hjsplit {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Invalid solver/operator configuration (bad step sizes, missing gradients, ...).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Numerical failure during a computation (non-finite values, no convergence, ...).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// All sampled objective values were +inf, so softmax weights are undefined.
struct DegenerateWeightsError : NumericError {
    DegenerateWeightsError()
        : NumericError("degenerate weights: every sampled objective value is +inf") {}
};

inline void ensure_finite(const Vec& v, const char* what) {
    if (!v.allFinite()) {
        throw NumericError(std::string(what) + ": non-finite entries");
    }
}

inline void ensure_finite(double x, const char* what) {
    if (!std::isfinite(x)) {
        throw NumericError(std::string(what) + ": non-finite value");
    }
}

}  // namespace hjsplit
