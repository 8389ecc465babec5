#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "genhints/generators.hpp"
#include "genhints/losses.hpp"
#include "genhints/synthetic_task.hpp"
#include "genhints/tensor.hpp"

namespace genhints {

// conv(1->8, 3x3, same) -> relu -> conv(8->8, 3x3, valid) -> relu ->
// global average pool -> dense(8 -> num_classes)
struct ClassifierParams {
    static constexpr int kChannels = 8;

    Tensor conv1_w, conv1_b, conv2_w, conv2_b, fc_w, fc_b;
    int num_classes = 0;

    static ClassifierParams init(int num_classes, uint64_t seed);

    std::vector<Tensor*> all();
    std::vector<const Tensor*> all() const;
    void zero_grads();
    bool finite() const;
};

Tensor classifier_forward(const ClassifierParams& params, const Tensor& batch);
Tensor classifier_forward(const ClassifierParams& params, const std::vector<RasterImage>& images);
std::vector<int> classifier_predict(const ClassifierParams& params,
                                    const std::vector<RasterImage>& images);

// Adam with decoupled weight decay; beta1=0.9, beta2=0.999, eps=1e-8.
struct OptimizerState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::vector<std::vector<double>> m, v;
};

void adam_step(const std::vector<Tensor*>& params, OptimizerState& state, double lr,
               double weight_decay);

enum class LrSchedule { Constant, Cosine };

LrSchedule parse_lr_schedule(const std::string& name);

// base_lr * 0.5 * (1 + cos(pi * step / total_steps))
double cosine_lr(long step, long total_steps, double base_lr);

struct TrainingConfig {
    int epochs = 20;
    int batch_size = 32;
    double learning_rate = 1e-3;
    double weight_decay = 0.01;
    double alpha = 1.0;
    double train_temperature = 0.8;
    double eval_temperature = 1.0;
    HintTransformSpec hint_spec{1.0, 0.05, 18.0};
    HintTransformSpec aug_spec{0.5, 0.05, 18.0};
    HintLossVariant loss_variant = HintLossVariant::SymmetricKl;
    LrSchedule scheduler = LrSchedule::Cosine;
    uint64_t seed = 1;
    int checkpoint_count = 120;
    bool hint_only = false;
    int eval_real_slice = 256;    // fixed train-set slice for hint-loss-on-real
    int eval_virtual_batch = 256; // fixed virtual eval set size

    void validate() const;
};

struct CheckpointRow {
    long step = 0;
    double lr = 0.0;
    double class_loss = 0.0;
    double hint_loss_virtual = 0.0;
    double hint_loss_real = 0.0;
    double test_accuracy = 0.0;
};

struct RunRecord {
    std::vector<CheckpointRow> rows;
    bool aborted = false;
    std::string abort_reason;

    std::vector<double> virtual_series() const;
    std::vector<double> real_series() const;
};

// CSV: step,lr,class_loss,hint_loss_virtual,hint_loss_real,test_accuracy
// with 10 significant digits; first line carries the config hash.
void write_run_record_csv(std::ostream& out, const RunRecord& record, const std::string& config_hash);

// One classification update: augment, mean classification loss, backward,
// optimizer step. Returns the loss value.
double train_step_classification(ClassifierParams& params, OptimizerState& state,
                                 const std::vector<RasterImage>& batch,
                                 const std::vector<int>& labels, const TrainingConfig& config,
                                 double lr, Rng& aug_rng);

// One hint update: sample a fresh virtual batch, transform, alpha-weighted
// hint loss through both branches, optimizer step. Consumes no labels.
// alpha == 0 leaves parameters untouched.
double train_step_hint(ClassifierParams& params, OptimizerState& state, const Sampler& sampler,
                       const TrainingConfig& config, double lr, Rng& sampler_rng, Rng& hint_rng);

struct TrainResult {
    RunRecord record;
    ClassifierParams params;
};

TrainResult run_training(const TrainingConfig& config, const LabeledSet& dataset,
                         const Sampler& sampler, const LabeledSet& test_set);

}  // namespace genhints
