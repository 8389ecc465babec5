#include "genhints/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "genhints/metrics.hpp"

namespace genhints {

namespace {

Tensor random_tensor(Shape shape, double stddev, Rng& rng, bool requires_grad) {
    int n = 1;
    for (int d : shape) n *= d;
    std::vector<double> data(n);
    for (auto& v : data) v = stddev * rng.normal();
    return Tensor::create(std::move(shape), std::move(data), requires_grad);
}

// per-purpose stream salts
constexpr uint64_t kInitStream = 0x696e6974ULL;
constexpr uint64_t kShuffleStream = 0x73687566ULL;
constexpr uint64_t kAugStream = 0x61756731ULL;
constexpr uint64_t kSamplerStream = 0x73616d70ULL;
constexpr uint64_t kHintStream = 0x68696e74ULL;
constexpr uint64_t kEvalStream = 0x6576616cULL;

}  // namespace

ClassifierParams ClassifierParams::init(int num_classes, uint64_t seed) {
    if (num_classes < 2) throw Error("classifier: need at least 2 classes");
    Rng rng(mix_seed(seed, kInitStream));
    ClassifierParams p;
    p.num_classes = num_classes;
    const int c = kChannels;
    // He-style scales throughout
    p.conv1_w = random_tensor({c, 1, 3, 3}, std::sqrt(2.0 / 9.0), rng, true);
    p.conv1_b = Tensor::zeros({c}, true);
    p.conv2_w = random_tensor({c, c, 3, 3}, std::sqrt(2.0 / (9.0 * c)), rng, true);
    p.conv2_b = Tensor::zeros({c}, true);
    p.fc_w = random_tensor({c, num_classes}, std::sqrt(2.0 / c), rng, true);
    p.fc_b = Tensor::zeros({num_classes}, true);
    return p;
}

std::vector<Tensor*> ClassifierParams::all() {
    return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &fc_w, &fc_b};
}

std::vector<const Tensor*> ClassifierParams::all() const {
    return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &fc_w, &fc_b};
}

void ClassifierParams::zero_grads() {
    for (Tensor* t : all()) t->zero_grad();
}

bool ClassifierParams::finite() const {
    for (const Tensor* t : all())
        if (!all_finite(*t)) return false;
    return true;
}

Tensor classifier_forward(const ClassifierParams& params, const Tensor& batch) {
    if (batch.rank() != 4 || batch.shape()[1] != 1)
        throw Error("classifier_forward: batch must be [N,1,H,W]");
    Tensor h1 = relu(conv2d(batch, params.conv1_w, params.conv1_b, Padding::Same));
    Tensor h2 = relu(conv2d(h1, params.conv2_w, params.conv2_b, Padding::Valid));
    Tensor pooled = global_avg_pool(h2);
    return add_row_bias(matmul(pooled, params.fc_w), params.fc_b);
}

Tensor classifier_forward(const ClassifierParams& params, const std::vector<RasterImage>& images) {
    return classifier_forward(params, images_to_batch_tensor(images));
}

std::vector<int> classifier_predict(const ClassifierParams& params,
                                    const std::vector<RasterImage>& images) {
    NoGradGuard no_grad;
    Tensor logits = classifier_forward(params, images);
    const int n = logits.shape()[0], d = logits.shape()[1];
    std::vector<int> pred(n);
    for (int i = 0; i < n; ++i) {
        const double* row = &logits.data()[static_cast<size_t>(i) * d];
        pred[i] = static_cast<int>(std::max_element(row, row + d) - row);
    }
    return pred;
}

void adam_step(const std::vector<Tensor*>& params, OptimizerState& state, double lr,
               double weight_decay) {
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (size_t i = 0; i < params.size(); ++i) {
            state.m[i].assign(params[i]->size(), 0.0);
            state.v[i].assign(params[i]->size(), 0.0);
        }
    }
    if (state.m.size() != params.size()) throw Error("adam_step: state/parameter count mismatch");
    for (size_t i = 0; i < params.size(); ++i)
        if (!params[i]->has_grad()) throw Error("adam_step: missing gradient for parameter");

    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (size_t i = 0; i < params.size(); ++i) {
        auto& value = params[i]->mutable_data();
        const auto& grad = params[i]->grad();
        auto& m = state.m[i];
        auto& v = state.v[i];
        if (m.size() != value.size()) throw Error("adam_step: moment buffer shape mismatch");
        for (size_t j = 0; j < value.size(); ++j) {
            m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * grad[j];
            v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * grad[j] * grad[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            // decoupled weight decay, applied separately from the adaptive step
            value[j] -= lr * weight_decay * value[j];
            value[j] -= lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

LrSchedule parse_lr_schedule(const std::string& name) {
    if (name == "constant") return LrSchedule::Constant;
    if (name == "cosine") return LrSchedule::Cosine;
    throw ConfigError("unknown scheduler: " + name);
}

double cosine_lr(long step, long total_steps, double base_lr) {
    if (step < 0 || step > total_steps) throw Error("cosine_lr: step out of range");
    if (total_steps <= 0) throw Error("cosine_lr: total_steps must be positive");
    return base_lr * 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(step) / total_steps));
}

void TrainingConfig::validate() const {
    if (epochs < 1) throw ConfigError("training: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("training: batch_size must be >= 1");
    if (alpha < 0.0) throw ConfigError("training: alpha must be nonnegative");
    if (!(train_temperature > 0.0)) throw ConfigError("training: temperature must be positive");
    if (checkpoint_count < 2) throw ConfigError("training: checkpoint_count must be >= 2");
    if (eval_real_slice < 1 || eval_virtual_batch < 1)
        throw ConfigError("training: eval slice sizes must be >= 1");
    hint_spec.validate();
    aug_spec.validate();
}

std::vector<double> RunRecord::virtual_series() const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.hint_loss_virtual);
    return out;
}

std::vector<double> RunRecord::real_series() const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.hint_loss_real);
    return out;
}

void write_run_record_csv(std::ostream& out, const RunRecord& record,
                          const std::string& config_hash) {
    out << "# config_hash=" << config_hash << "\n";
    out << "step,lr,class_loss,hint_loss_virtual,hint_loss_real,test_accuracy\n";
    char buf[256];
    for (const auto& r : record.rows) {
        std::snprintf(buf, sizeof(buf), "%ld,%.10g,%.10g,%.10g,%.10g,%.10g\n", r.step, r.lr,
                      r.class_loss, r.hint_loss_virtual, r.hint_loss_real, r.test_accuracy);
        out << buf;
    }
    if (record.aborted) out << "# aborted: " << record.abort_reason << "\n";
}

double train_step_classification(ClassifierParams& params, OptimizerState& state,
                                 const std::vector<RasterImage>& batch,
                                 const std::vector<int>& labels, const TrainingConfig& config,
                                 double lr, Rng& aug_rng) {
    if (batch.empty()) throw Error("train_step_classification: empty batch");
    std::vector<RasterImage> augmented;
    augmented.reserve(batch.size());
    for (const auto& img : batch) augmented.push_back(apply_hint_transform(img, config.aug_spec, aug_rng));
    Tensor logits = classifier_forward(params, augmented);
    Tensor loss = config.loss_variant == HintLossVariant::Mse
                      ? mse_classification(logits, labels)
                      : cross_entropy(logits, labels);
    params.zero_grads();
    backward(loss);
    adam_step(params.all(), state, lr, config.weight_decay);
    return loss.item();
}

double train_step_hint(ClassifierParams& params, OptimizerState& state, const Sampler& sampler,
                       const TrainingConfig& config, double lr, Rng& sampler_rng, Rng& hint_rng) {
    // virtual examples are drawn fresh per call, never cached
    const auto virtual_batch = sample(sampler, config.batch_size, sampler_rng);
    std::vector<RasterImage> transformed;
    transformed.reserve(virtual_batch.size());
    for (const auto& img : virtual_batch)
        transformed.push_back(apply_hint_transform(img, config.hint_spec, hint_rng));
    if (config.alpha == 0.0) {
        // rng streams advance as usual but the model is untouched
        NoGradGuard no_grad;
        Tensor a = classifier_forward(params, virtual_batch);
        Tensor b = classifier_forward(params, transformed);
        return hint_loss(config.loss_variant, a, b, config.train_temperature).item();
    }
    Tensor logits_a = classifier_forward(params, virtual_batch);
    Tensor logits_b = classifier_forward(params, transformed);
    Tensor loss = hint_loss(config.loss_variant, logits_a, logits_b, config.train_temperature);
    Tensor weighted = scale(loss, config.alpha);
    params.zero_grads();
    backward(weighted);
    adam_step(params.all(), state, lr, config.weight_decay);
    return loss.item();
}

namespace {

struct Evaluator {
    const TrainingConfig& config;
    std::vector<RasterImage> real_slice;      // fixed train-set slice
    std::vector<int> real_slice_labels;
    std::vector<RasterImage> virtual_set;     // fixed virtual eval set
    std::vector<RasterImage> virtual_set_tf;  // its fixed transformed pairs
    const LabeledSet& test_set;
    uint64_t eval_seed;

    CheckpointRow measure(const ClassifierParams& params, long step, double lr) const {
        NoGradGuard no_grad;
        CheckpointRow row;
        row.step = step;
        row.lr = lr;
        {
            Tensor logits = classifier_forward(params, real_slice);
            row.class_loss = config.loss_variant == HintLossVariant::Mse
                                 ? mse_classification(logits, real_slice_labels).item()
                                 : cross_entropy(logits, real_slice_labels).item();
        }
        // hint loss on the fixed real slice; transform draws are a pure
        // function of (eval seed, step), fresh at every checkpoint
        Rng rng(mix_seed(mix_seed(eval_seed, 0x7265616cULL), static_cast<uint64_t>(step)));
        row.hint_loss_real = evaluate_hint_loss_on_set(
            [&](const Tensor& b) { return classifier_forward(params, b); }, real_slice,
            config.hint_spec, config.loss_variant, config.eval_temperature, rng);
        if (!virtual_set.empty()) {
            Tensor a = classifier_forward(params, virtual_set);
            Tensor b = classifier_forward(params, virtual_set_tf);
            row.hint_loss_virtual =
                hint_loss(config.loss_variant, a, b, config.eval_temperature).item();
        }
        row.test_accuracy = accuracy(classifier_predict(params, test_set.images), test_set.labels);
        return row;
    }
};

}  // namespace

TrainResult run_training(const TrainingConfig& config, const LabeledSet& dataset,
                         const Sampler& sampler, const LabeledSet& test_set) {
    config.validate();
    if (dataset.images.empty() || dataset.labels.size() != dataset.images.size())
        throw Error("run_training: dataset must be labeled and nonempty");
    if (test_set.images.empty()) throw Error("run_training: empty test set");

    Rng shuffle_rng(mix_seed(config.seed, kShuffleStream));
    Rng aug_rng(mix_seed(config.seed, kAugStream));
    Rng sampler_rng(mix_seed(config.seed, kSamplerStream));
    Rng hint_rng(mix_seed(config.seed, kHintStream));
    const uint64_t eval_seed = mix_seed(config.seed, kEvalStream);

    const int num_classes =
        std::max(2, *std::max_element(dataset.labels.begin(), dataset.labels.end()) + 1);
    ClassifierParams params = ClassifierParams::init(num_classes, config.seed);
    OptimizerState state;

    const int n = static_cast<int>(dataset.size());
    const int batches_per_epoch = (n + config.batch_size - 1) / config.batch_size;
    const long total_steps = static_cast<long>(config.epochs) * batches_per_epoch;

    Evaluator evaluator{config, {}, {}, {}, {}, test_set, eval_seed};
    const int slice = std::min(config.eval_real_slice, n);
    evaluator.real_slice.assign(dataset.images.begin(), dataset.images.begin() + slice);
    evaluator.real_slice_labels.assign(dataset.labels.begin(), dataset.labels.begin() + slice);
    if (config.alpha > 0.0) {
        Rng eval_rng(mix_seed(eval_seed, 0x76697274ULL));
        evaluator.virtual_set = sample(sampler, config.eval_virtual_batch, eval_rng);
        for (const auto& img : evaluator.virtual_set)
            evaluator.virtual_set_tf.push_back(apply_hint_transform(img, config.hint_spec, eval_rng));
    }

    // checkpoint_count evenly spaced rows, first at step 0, last at the end
    std::vector<long> checkpoints(config.checkpoint_count);
    for (int k = 0; k < config.checkpoint_count; ++k)
        checkpoints[k] = static_cast<long>(std::llround(
            static_cast<double>(k) * total_steps / (config.checkpoint_count - 1)));

    RunRecord record;
    size_t next_cp = 0;
    auto record_due = [&](long step, double lr) {
        while (next_cp < checkpoints.size() && checkpoints[next_cp] == step) {
            record.rows.push_back(evaluator.measure(params, step, lr));
            ++next_cp;
        }
    };

    double lr = config.scheduler == LrSchedule::Cosine
                    ? cosine_lr(0, total_steps, config.learning_rate)
                    : config.learning_rate;
    record_due(0, lr);

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    long step = 0;
    for (int epoch = 0; epoch < config.epochs && !record.aborted; ++epoch) {
        // Fisher-Yates with the dedicated shuffle stream
        for (int i = n - 1; i > 0; --i) std::swap(order[i], order[shuffle_rng.uniform_int(i + 1)]);
        for (int b = 0; b < batches_per_epoch && !record.aborted; ++b) {
            const int lo = b * config.batch_size;
            const int hi = std::min(n, lo + config.batch_size);
            std::vector<RasterImage> batch;
            std::vector<int> labels;
            batch.reserve(hi - lo);
            for (int i = lo; i < hi; ++i) {
                batch.push_back(dataset.images[order[i]]);
                labels.push_back(dataset.labels[order[i]]);
            }
            lr = config.scheduler == LrSchedule::Cosine
                     ? cosine_lr(step, total_steps, config.learning_rate)
                     : config.learning_rate;
            if (!config.hint_only)
                train_step_classification(params, state, batch, labels, config, lr, aug_rng);
            if (config.alpha > 0.0)
                train_step_hint(params, state, sampler, config, lr, sampler_rng, hint_rng);
            ++step;
            if (!params.finite()) {
                record.aborted = true;
                record.abort_reason = "non-finite parameters at step " + std::to_string(step);
                break;
            }
            record_due(step, lr);
        }
    }
    // pad trailing checkpoints (short runs still emit exactly checkpoint_count rows)
    while (!record.aborted && next_cp < checkpoints.size()) {
        record.rows.push_back(evaluator.measure(params, checkpoints[next_cp], lr));
        ++next_cp;
    }
    return TrainResult{std::move(record), std::move(params)};
}

}  // namespace genhints
