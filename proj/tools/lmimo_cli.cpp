// SPDX-License-Identifier: Apache-2.0
// Command-line front end over the C API.
#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lmimo/lmimo.h"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

int exit_code(lmimo_status s) {
    if (s == LMIMO_OK) return 0;
    return s == LMIMO_ERR_VALIDATION ? kExitValidation : kExitRuntime;
}

int report(lmimo_status s, const char* what) {
    if (s == LMIMO_OK) return 0;
    if (s == LMIMO_ERR_VALIDATION) {
        std::fprintf(stderr, "%s: invalid configuration\n%s\n", what, lmimo_last_error());
    } else {
        std::fprintf(stderr, "%s: %s\n", what, lmimo_last_error());
    }
    return exit_code(s);
}

struct Config {
    lmimo_config* ptr = nullptr;
    ~Config() { lmimo_config_free(ptr); }
};

struct Result {
    lmimo_run_result* ptr = nullptr;
    ~Result() { lmimo_run_free(ptr); }
};

struct RunArgs {
    std::string target;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> trials;
    std::optional<int> jobs;
    bool raw = false;
    bool quiet = false;
};

int cmd_run(const RunArgs& a) {
    Config cfg;
    if (int rc = report(lmimo_config_load(a.target.c_str(), &cfg.ptr), "run")) return rc;
    lmimo_status s = LMIMO_OK;
    if (a.seed && s == LMIMO_OK) s = lmimo_config_set_seed(cfg.ptr, *a.seed);
    if (a.trials && s == LMIMO_OK) s = lmimo_config_set_trials(cfg.ptr, *a.trials);
    if (a.jobs && s == LMIMO_OK) s = lmimo_config_set_jobs(cfg.ptr, *a.jobs);
    if (a.out && s == LMIMO_OK) s = lmimo_config_set_output(cfg.ptr, a.out->c_str());
    if (a.raw && s == LMIMO_OK) s = lmimo_config_set_raw_rows(cfg.ptr, 1);
    // bad flag values are reported like config errors
    if (s == LMIMO_ERR_ARGUMENT) s = LMIMO_ERR_VALIDATION;
    if (int rc = report(s, "run")) return rc;
    if (int rc = report(lmimo_config_validate(cfg.ptr), "run")) return rc;

    char* dir = nullptr;
    if (int rc = report(lmimo_config_output(cfg.ptr, &dir), "run")) return rc;
    const std::string out_dir = dir;
    lmimo_string_free(dir);

    Result res;
    if (int rc = report(lmimo_run(cfg.ptr, &res.ptr), "run")) return rc;
    if (int rc = report(lmimo_run_write(res.ptr, out_dir.c_str()), "run")) return rc;
    if (!a.quiet) {
        std::printf("wrote %zu rows to %s/metrics.csv\n", lmimo_run_row_count(res.ptr), out_dir.c_str());
        if (std::size_t w = lmimo_run_warning_count(res.ptr))
            std::printf("%zu condition warnings recorded in %s/manifest.json\n", w, out_dir.c_str());
    }
    return 0;
}

int cmd_validate(const std::string& target) {
    Config cfg;
    lmimo_status s = lmimo_config_load(target.c_str(), &cfg.ptr);
    if (s == LMIMO_ERR_IO) s = LMIMO_ERR_VALIDATION;
    if (int rc = report(s, "validate")) return rc;
    if (int rc = report(lmimo_config_validate(cfg.ptr), "validate")) return rc;
    char hash[17];
    if (int rc = report(lmimo_config_hash(cfg.ptr, hash), "validate")) return rc;
    std::printf("ok %s\n", hash);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Modulo-ADC massive MIMO uplink experiments"};
    app.set_version_flag("--version", std::string(lmimo_version()));
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run a recipe or a config file");
    run_cmd->add_option("target", run.target, "Recipe name or path to a JSON config")->required();
    run_cmd->add_option("--seed", run.seed, "Master seed");
    run_cmd->add_option("--out", run.out, "Output directory");
    run_cmd->add_option("--trials", run.trials, "Trials per sweep value");
    run_cmd->add_option("--jobs", run.jobs, "Worker threads (0: all cores)");
    run_cmd->add_flag("--raw", run.raw, "Also write one row per trial");
    run_cmd->add_flag("-q,--quiet", run.quiet, "No summary line");

    std::string csv, sidecar, replay_out = "out/replay-capture";
    auto* replay_cmd = app.add_subcommand("replay", "Recover a folded capture");
    replay_cmd->add_option("samples", csv, "CSV with columns index,I,Q")->required();
    replay_cmd->add_option("sidecar", sidecar, "JSON acquisition parameters")->required();
    replay_cmd->add_option("--out", replay_out, "Output directory");

    std::string validate_target;
    auto* validate_cmd = app.add_subcommand("validate", "Check a config without running it");
    validate_cmd->add_option("config", validate_target, "Recipe name or path to a JSON config")->required();

    auto* list_cmd = app.add_subcommand("list-recipes", "Print the shipped recipe names");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitValidation;
    }

    if (*run_cmd) return cmd_run(run);
    if (*replay_cmd) {
        const int rc = report(lmimo_replay(csv.c_str(), sidecar.c_str(), replay_out.c_str()), "replay");
        if (rc == 0) std::printf("wrote %s/recovered.csv\n", replay_out.c_str());
        return rc;
    }
    if (*validate_cmd) return cmd_validate(validate_target);
    if (*list_cmd) {
        for (std::size_t i = 0; i < lmimo_recipe_count(); ++i) std::printf("%s\n", lmimo_recipe_name(i));
        return 0;
    }
    return kExitValidation;
}
