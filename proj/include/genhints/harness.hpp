#pragma once

#include <optional>
#include <string>
#include <vector>

#include "genhints/config.hpp"
#include "genhints/generators.hpp"
#include "genhints/synthetic_task.hpp"
#include "genhints/trainer.hpp"

namespace genhints {

// Typed view of a resolved config.
struct Experiment {
    SyntheticTaskSpec task;
    TrainingConfig training;  // per-run seed filled in by the commands
    std::vector<uint64_t> seeds;
    int n_train = 0;
    int n_test = 0;
    uint64_t data_seed = 0;
    std::string data_dir;
    std::string mode;  // baseline | hints | both
    SamplerKind sampler_kind = SamplerKind::TrueDistribution;
    double sampler_bandwidth = 0.0;
    uint64_t sampler_seed = 0;
    std::vector<double> sweep_alphas;
    std::vector<double> study_bandwidths;
    int study_n_samples = 1024;
    int study_epochs = 5;
    uint64_t study_embedder_seed = 0;
    ConfigMap resolved;
    std::string hash;
};

Experiment load_experiment(const ConfigMap& user_config,
                           std::optional<uint64_t> seed_override = std::nullopt);

// Dataset files: <base>.bin (concatenated image records) + <base>_labels.csv.
void write_labeled_set(const std::string& base_path, const LabeledSet& set);
LabeledSet read_labeled_set(const std::string& base_path);

struct Datasets {
    LabeledSet train;
    LabeledSet test;
};

// Loads from data.dir when set, otherwise renders from data.seed.
Datasets obtain_datasets(const Experiment& exp);

Sampler build_sampler(const Experiment& exp, const std::vector<RasterImage>& train_corpus);

// Model artifact: key=value metadata followed by parameter blocks, text,
// exact double round-trip.
void save_model(const std::string& path, const ClassifierParams& params, const ConfigMap& meta);
ClassifierParams load_model(const std::string& path, ConfigMap* meta_out);

// Subcommand entry points; return process exit codes (0 ok, 1 config error,
// 2 runtime failure).
int cmd_synth_data(const std::string& config_path, const std::string& out_dir,
                   std::optional<uint64_t> seed_override);
int cmd_train(const std::string& config_path, const std::string& out_dir,
              std::optional<uint64_t> seed_override, int jobs);
int cmd_sweep_alpha(const std::string& config_path, const std::string& out_dir,
                    std::optional<uint64_t> seed_override, int jobs,
                    const std::optional<std::vector<double>>& alphas_override = std::nullopt);
int cmd_quality_study(const std::string& config_path, const std::string& out_dir,
                      std::optional<uint64_t> seed_override, int jobs,
                      const std::optional<std::vector<double>>& bandwidths_override = std::nullopt);
int cmd_eval(const std::string& model_path, const std::string& dataset_base,
             const std::string& out_path);

}  // namespace genhints
