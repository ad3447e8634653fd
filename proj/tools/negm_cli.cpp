// Command-line front end for the negmgan shared library. Talks to the core
// exclusively through the C API in negmgan.h.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "negmgan.h"

namespace {

struct ConfigHandle {
    negm_config* ptr = nullptr;
    ConfigHandle() : ptr(negm_config_create()) {}
    ~ConfigHandle() { negm_config_destroy(ptr); }
    ConfigHandle(const ConfigHandle&) = delete;
    ConfigHandle& operator=(const ConfigHandle&) = delete;
};

struct CommandArgs {
    std::string config_file;
    std::vector<std::string> sets;  // key=value pairs
    bool quiet = false;
};

void add_common_options(CLI::App* cmd, CommandArgs& args) {
    cmd->add_option("-c,--config", args.config_file, "Configuration file (key = value lines)");
    cmd->add_option("-s,--set", args.sets, "Override a config value as key=value")
        ->type_name("KEY=VALUE");
    cmd->add_flag("-q,--quiet", args.quiet, "Suppress the effective-config echo");
}

int apply_args(ConfigHandle& config, const CommandArgs& args) {
    if (!args.config_file.empty()) {
        if (negm_config_load_file(config.ptr, args.config_file.c_str()) != NEGM_OK) {
            std::fprintf(stderr, "error: %s\n", negm_last_error());
            return 1;
        }
    }
    for (const std::string& kv : args.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
            return 1;
        }
        const std::string key = kv.substr(0, eq);
        const std::string value = kv.substr(eq + 1);
        if (negm_config_set(config.ptr, key.c_str(), value.c_str()) != NEGM_OK) {
            std::fprintf(stderr, "error: %s\n", negm_last_error());
            return 1;
        }
    }
    return 0;
}

using RunFn = negm_status (*)(const negm_config*, char**);

int run(RunFn fn, const CommandArgs& args) {
    ConfigHandle config;
    if (int rc = apply_args(config, args)) return rc;
    if (!args.quiet) {
        char* echo = nullptr;
        if (negm_config_echo(config.ptr, &echo) == NEGM_OK) {
            std::printf("# effective configuration\n%s\n", echo);
            negm_string_free(echo);
        }
    }
    char* summary = nullptr;
    const negm_status status = fn(config.ptr, &summary);
    if (status != NEGM_OK) {
        std::fprintf(stderr, "error: %s\n", negm_last_error());
        return static_cast<int>(status);
    }
    if (summary) {
        std::printf("%s\n", summary);
        negm_string_free(summary);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NE-GM-GAN: offline bidirectional-GAN training with a Gaussian-mixture "
                 "latent prior, online unknown-class detection, and emerging-class counting"};
    app.require_subcommand(1);
    app.footer("Configuration keys are listed in README.md; any key can be set with --set.");

    CommandArgs synth_args, train_args, detect_args, eval_args, sweep_args;

    CLI::App* synth = app.add_subcommand("synth", "Generate the synthetic Gaussian-cluster dataset");
    add_common_options(synth, synth_args);
    std::string synth_out;
    synth->add_option("-o,--out", synth_out, "Output dataset path (synth.out)");

    CLI::App* train = app.add_subcommand("train", "Run offline training and write a checkpoint");
    add_common_options(train, train_args);
    std::string train_data, train_epochs, train_seed;
    train->add_option("-d,--data", train_data, "Dataset path (data.path)");
    train->add_option("-e,--epochs", train_epochs, "Training epochs (train.epochs)");
    train->add_option("--seed", train_seed, "Random seed (seed)");

    CLI::App* detect = app.add_subcommand("detect", "Stream test batches through the detector");
    add_common_options(detect, detect_args);
    std::string detect_ckpt, detect_test;
    detect->add_option("-k,--checkpoint", detect_ckpt, "Checkpoint path (detect.checkpoint)");
    detect->add_option("-t,--test", detect_test, "Test stream path (detect.test)");

    CLI::App* eval = app.add_subcommand("eval", "Score a detection report against ground truth");
    add_common_options(eval, eval_args);
    std::string eval_report, eval_baseline;
    eval->add_option("-r,--report", eval_report, "Report path (eval.report)");
    eval->add_option("--baseline-rmse", eval_baseline,
                     "Competing-method RMSE for S-R² (eval.baseline_rmse)");

    CLI::App* sweep = app.add_subcommand("sweep", "Vary the unknown-class count and tabulate results");
    add_common_options(sweep, sweep_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);  // --help and friends exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;  // usage errors map to exit code 1
    }

    if (synth->parsed()) {
        if (!synth_out.empty()) synth_args.sets.push_back("synth.out=" + synth_out);
        return run(&negm_run_synth, synth_args);
    }
    if (train->parsed()) {
        if (!train_data.empty()) train_args.sets.push_back("data.path=" + train_data);
        if (!train_epochs.empty()) train_args.sets.push_back("train.epochs=" + train_epochs);
        if (!train_seed.empty()) train_args.sets.push_back("seed=" + train_seed);
        return run(&negm_run_train, train_args);
    }
    if (detect->parsed()) {
        if (!detect_ckpt.empty()) detect_args.sets.push_back("detect.checkpoint=" + detect_ckpt);
        if (!detect_test.empty()) detect_args.sets.push_back("detect.test=" + detect_test);
        return run(&negm_run_detect, detect_args);
    }
    if (eval->parsed()) {
        if (!eval_report.empty()) eval_args.sets.push_back("eval.report=" + eval_report);
        if (!eval_baseline.empty())
            eval_args.sets.push_back("eval.baseline_rmse=" + eval_baseline);
        return run(&negm_run_eval, eval_args);
    }
    if (sweep->parsed()) return run(&negm_run_sweep, sweep_args);
    return 1;
}
