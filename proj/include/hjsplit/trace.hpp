#pragma once

#include "hjsplit/core.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace hjsplit {

/// One iteration of a solver run. delta_k and eps_bound are zero for exact
/// proximal arms; for HJ arms eps_bound is the analytic per-iteration error
/// bound, not a measured error.
struct TraceRow {
    int k = 0;
    double objective = 0.0;
    double fp_residual = 0.0;
    double delta_k = 0.0;
    double eps_bound = 0.0;
};

struct SolverTrace {
    std::vector<TraceRow> rows;
    // Auxiliary per-iteration diagnostics (e.g. the DRS full-step objective).
    // Not part of the stable CSV schema.
    std::map<std::string, std::vector<double>> extras;

    double eps_bound_sum() const {
        double s = 0.0;
        for (const auto& r : rows) s += r.eps_bound;
        return s;
    }
};

/// Thrown when an iterate leaves the finite range; carries the trace
/// accumulated up to (and including) the last finite iteration.
struct DivergenceError : NumericError {
    SolverTrace trace;
    Vec last_iterate;

    DivergenceError(SolverTrace t, Vec x)
        : NumericError("divergence detected"), trace(std::move(t)), last_iterate(std::move(x)) {}
};

}  // namespace hjsplit
