#include <CLI11.hpp>
#include <optional>
#include <string>
#include <vector>

#include "genhints/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"generative-hints experiment harness"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::optional<uint64_t> seed;
    int jobs = 1;

    auto add_common = [&](CLI::App* cmd, bool needs_config = true) {
        if (needs_config) cmd->add_option("--config", config_path, "config file path")->required();
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--seed", seed, "seed override (replaces training.seeds)");
        cmd->add_option("--jobs", jobs, "parallel jobs for independent sweep cells");
    };

    auto* synth = app.add_subcommand("synth-data", "render the synthetic dataset to files");
    add_common(synth);

    auto* train = app.add_subcommand("train", "baseline and/or hints training runs");
    add_common(train);

    std::vector<double> alphas;
    auto* sweep = app.add_subcommand("sweep-alpha", "full run per (alpha, seed)");
    add_common(sweep);
    sweep->add_option("--alphas", alphas, "override the alpha list")->delimiter(',');

    std::vector<double> bandwidths;
    auto* study = app.add_subcommand("quality-study", "generator-quality vs hint-transfer study");
    add_common(study);
    study->add_option("--bandwidths", bandwidths, "override the KDE bandwidth list")->delimiter(',');

    std::string model_path, dataset_base, eval_out;
    auto* eval = app.add_subcommand("eval", "evaluate a saved model on a dataset");
    eval->add_option("model", model_path, "model artifact path")->required();
    eval->add_option("dataset", dataset_base, "dataset base path (expects <base>.bin and <base>_labels.csv)")
        ->required();
    eval->add_option("--out", eval_out, "also write the metrics to this file");

    CLI11_PARSE(app, argc, argv);

    if (synth->parsed()) return genhints::cmd_synth_data(config_path, out_dir, seed);
    if (train->parsed()) return genhints::cmd_train(config_path, out_dir, seed, jobs);
    if (sweep->parsed())
        return genhints::cmd_sweep_alpha(config_path, out_dir, seed, jobs,
                                         alphas.empty() ? std::nullopt
                                                        : std::make_optional(alphas));
    if (study->parsed())
        return genhints::cmd_quality_study(config_path, out_dir, seed, jobs,
                                           bandwidths.empty() ? std::nullopt
                                                              : std::make_optional(bandwidths));
    if (eval->parsed()) return genhints::cmd_eval(model_path, dataset_base, eval_out);
    return 1;
}
