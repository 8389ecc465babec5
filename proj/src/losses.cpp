#include "genhints/losses.hpp"

#include <cmath>

namespace genhints {

HintLossVariant parse_hint_loss_variant(const std::string& name) {
    if (name == "symmetric_kl") return HintLossVariant::SymmetricKl;
    if (name == "mse") return HintLossVariant::Mse;
    throw ConfigError("unknown hint loss variant: " + name);
}

std::string hint_loss_variant_name(HintLossVariant v) {
    return v == HintLossVariant::SymmetricKl ? "symmetric_kl" : "mse";
}

void HintLossConfig::validate() const {
    if (!(temperature > 0.0)) throw Error("hint loss: temperature must be positive");
    if (alpha < 0.0) throw Error("hint loss: alpha must be nonnegative");
}

namespace {

int rows_of(const Tensor& logits) {
    return logits.rank() == 2 ? logits.shape()[0] : 1;
}

int dim_of(const Tensor& logits) {
    if (logits.rank() == 2) return logits.shape()[1];
    if (logits.rank() == 1) return logits.shape()[0];
    throw Error("logits must be rank 1 or 2");
}

void check_pair(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw Error("hint loss: logits dimension mismatch");
    if (dim_of(a) < 2) throw Error("hint loss: logits need at least 2 classes");
}

}  // namespace

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    const int axis = logits.rank() == 2 ? 1 : 0;
    return nll_pick_mean(log_softmax(logits, axis), labels);
}

Tensor symmetric_kl_hint(const Tensor& logits_a, const Tensor& logits_b, double temperature) {
    check_pair(logits_a, logits_b);
    if (!(temperature > 0.0)) throw Error("symmetric_kl_hint: temperature must be positive");
    const int axis = logits_a.rank() == 2 ? 1 : 0;
    const int n = rows_of(logits_a);
    const double inv_t = 1.0 / temperature;
    // KL(p||q) + KL(q||p) = sum (p - q) * (log p - log q); log-space softmax
    // keeps every log term finite, so no explicit probability floor is needed.
    Tensor la = log_softmax(scale(logits_a, inv_t), axis);
    Tensor lb = log_softmax(scale(logits_b, inv_t), axis);
    Tensor diff = sub(la, lb);
    Tensor weighted = mul(sub(exp(la), exp(lb)), diff);
    return scale(reduce_sum(weighted), 0.5 / n);
}

Tensor mse_hint(const Tensor& logits_a, const Tensor& logits_b) {
    check_pair(logits_a, logits_b);
    const int n = rows_of(logits_a);
    const int d = dim_of(logits_a);
    Tensor diff = sub(logits_a, logits_b);
    return scale(reduce_sum(mul(diff, diff)), 1.0 / (static_cast<double>(n) * d));
}

Tensor hint_loss(HintLossVariant variant, const Tensor& logits_a, const Tensor& logits_b,
                 double temperature) {
    if (variant == HintLossVariant::SymmetricKl)
        return symmetric_kl_hint(logits_a, logits_b, temperature);
    return mse_hint(logits_a, logits_b);
}

Tensor mse_classification(const Tensor& logits, const std::vector<int>& labels) {
    const int n = rows_of(logits);
    const int d = dim_of(logits);
    if (static_cast<int>(labels.size()) != n) throw Error("mse_classification: label count mismatch");
    std::vector<double> target(static_cast<size_t>(n) * d, 0.0);
    for (int i = 0; i < n; ++i) {
        if (labels[i] < 0 || labels[i] >= d) throw Error("mse_classification: label out of range");
        target[static_cast<size_t>(i) * d + labels[i]] = 1.0;
    }
    Tensor t = Tensor::create(logits.shape(), std::move(target));
    Tensor diff = sub(logits, t);
    return scale(reduce_sum(mul(diff, diff)), 1.0 / (static_cast<double>(n) * d));
}

Tensor images_to_batch_tensor(const std::vector<RasterImage>& images) {
    if (images.empty()) throw Error("images_to_batch_tensor: empty batch");
    const int h = images[0].height, w = images[0].width;
    std::vector<double> data;
    data.reserve(images.size() * static_cast<size_t>(h) * w);
    for (const auto& img : images) {
        if (img.height != h || img.width != w)
            throw Error("images_to_batch_tensor: mixed image shapes");
        data.insert(data.end(), img.pixels.begin(), img.pixels.end());
    }
    return Tensor::create({static_cast<int>(images.size()), 1, h, w}, std::move(data));
}

double evaluate_hint_loss_on_set(const ForwardFn& forward, const std::vector<RasterImage>& images,
                                 const HintTransformSpec& spec, HintLossVariant variant,
                                 double eval_temperature, Rng& rng) {
    if (images.empty()) throw Error("evaluate_hint_loss_on_set: empty image list");
    NoGradGuard no_grad;
    std::vector<RasterImage> transformed;
    transformed.reserve(images.size());
    for (const auto& img : images) transformed.push_back(apply_hint_transform(img, spec, rng));
    Tensor logits_a = forward(images_to_batch_tensor(images));
    Tensor logits_b = forward(images_to_batch_tensor(transformed));
    return hint_loss(variant, logits_a, logits_b, eval_temperature).item();
}

}  // namespace genhints
