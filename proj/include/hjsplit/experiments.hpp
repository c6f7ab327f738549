#pragma once

#include "hjsplit/core.hpp"
#include "hjsplit/trace.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace hjsplit::experiments {

/// Fully resolved run description. A config with the same field values always
/// produces byte-identical artifacts. Zero/negative sentinel values mean
/// "derive the default for this experiment" and are resolved deterministically
/// before anything runs.
struct RunConfig {
    std::string experiment = "lasso";
    double size_scale = 1.0;        // multiplies the full-scale problem dimensions
    std::uint64_t seed = 0;
    std::vector<std::string> arms = {"exact", "hj"};

    int max_iters = 0;              // 0 -> experiment default
    int hj_max_iters = 0;           // 0 -> same budget as max_iters
    double relaxation = 1.0;        // constant KM relaxation
    double stop_residual = 0.0;     // 0 disables early stopping

    int hj_samples = 0;             // 0 -> experiment default
    double hj_delta0 = 0.0;         // 0 -> experiment default
    double hj_exponent = 2.00001;

    double step_t = 0.0;            // 0 -> derived from the instance
    double tau = 0.0;               // PDHG primal step, 0 -> default
    double sigma = 0.0;             // PDHG dual step, 0 -> default
    double lambda = 0.0;            // 0 -> data-driven default
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double lambda3 = 0.0;
    double noise_sigma = -1.0;      // <0 -> experiment default

    // Explicit dimension overrides; 0 (or -1 for the support fields) derives
    // the value from size_scale and the full-scale experiment.
    Index n_obs = 0;
    Index n_features = 0;
    Index n_tasks = 0;
    Index n_groups = 0;
    Index group_size = 0;
    Index image_size = 0;
    Index support_begin = -1;
    Index support_len = 0;

    std::string output_dir;         // empty -> $HJSPLIT_OUT or ./out/<experiment>
};

/// Names of the available experiments, in a fixed order.
const std::vector<std::string>& experiment_names();

/// One-line description per experiment (for the CLI list command).
std::string experiment_description(const std::string& name);

/// Fill in every sentinel field with its per-experiment default.
RunConfig resolve_defaults(RunConfig cfg);

/// Parse a config (or a manifest containing one under "config") from JSON
/// text. Unknown keys are rejected.
RunConfig config_from_json_text(const std::string& text);

std::string config_to_json_text(const RunConfig& cfg);

/// Collect every violated constraint; an empty list means the config is
/// runnable. Violations name the constraint and the condition it enforces.
std::vector<std::string> validate_config(const RunConfig& cfg);

struct ArmOutcome {
    Vec solution;
    SolverTrace trace;
    double final_objective = 0.0;
    bool diverged = false;
};

struct ExperimentResult {
    std::map<std::string, ArmOutcome> arms;     // keyed "exact" / "hj"
    std::map<std::string, double> params;       // data-derived values (lambda, steps, ...)
    bool diverged = false;
};

/// Run the configured arms without touching the filesystem.
ExperimentResult run_arms(const RunConfig& cfg);

/// Run and write <arm>_trace.csv, objectives.csv, plot.svg and manifest.json
/// into the output directory. Returns the process exit status: 0 on success,
/// 3 if a solver diverged (partial traces are still written).
int run_experiment(const RunConfig& cfg);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

}  // namespace hjsplit::experiments
