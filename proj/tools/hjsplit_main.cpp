#include "hjsplit/core.hpp"
#include "hjsplit/experiments.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace {

namespace exp = hjsplit::experiments;

exp::RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw hjsplit::ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return exp::config_from_json_text(ss.str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"HJ-prox operator splitting benchmark harness"};
    app.require_subcommand(1);

    // run <experiment> [--config FILE] [--seed S] [--scale F] [--out DIR]
    auto* run = app.add_subcommand("run", "run one experiment and write its artifacts");
    std::string experiment;
    std::string config_path;
    std::string out_dir;
    std::int64_t seed = -1;
    double scale = 0.0;
    run->add_option("experiment", experiment, "experiment name (see `list`)")->required();
    run->add_option("--config", config_path, "JSON config or manifest file");
    run->add_option("--seed", seed, "override the random seed");
    run->add_option("--scale", scale, "override size_scale in (0, 1]");
    run->add_option("--out", out_dir, "override the output directory");

    auto* validate = app.add_subcommand("validate", "check a config without running it");
    std::string validate_path;
    validate->add_option("--config", validate_path, "JSON config or manifest file")->required();

    auto* list = app.add_subcommand("list", "enumerate the available experiments");

    CLI11_PARSE(app, argc, argv);

    try {
        if (list->parsed()) {
            for (const auto& name : exp::experiment_names()) {
                std::cout << name << "  -  " << exp::experiment_description(name) << '\n';
            }
            return 0;
        }
        if (validate->parsed()) {
            const auto cfg = load_config_file(validate_path);
            const auto violations = exp::validate_config(cfg);
            if (violations.empty()) {
                std::cout << "config ok\n";
                return 0;
            }
            for (const auto& v : violations) std::cout << "violation: " << v << '\n';
            return 2;
        }
        // run
        exp::RunConfig cfg;
        if (!config_path.empty()) cfg = load_config_file(config_path);
        cfg.experiment = experiment;
        if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
        if (scale > 0.0) cfg.size_scale = scale;
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        return exp::run_experiment(cfg);
    } catch (const hjsplit::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const hjsplit::DivergenceError& e) {
        std::cerr << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
