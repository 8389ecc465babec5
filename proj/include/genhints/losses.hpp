#pragma once

#include <functional>
#include <vector>

#include "genhints/image.hpp"
#include "genhints/tensor.hpp"

namespace genhints {

enum class HintLossVariant { SymmetricKl, Mse };

HintLossVariant parse_hint_loss_variant(const std::string& name);
std::string hint_loss_variant_name(HintLossVariant v);

struct HintLossConfig {
    double temperature = 0.8;  // applied to logits: softmax(z / T)
    HintLossVariant variant = HintLossVariant::SymmetricKl;
    double alpha = 1.0;

    void validate() const;
};

// -log_softmax(logits)[label] averaged over rows; logits [N,d] or [d].
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels);

// 1/2 (KL(p||q) + KL(q||p)) with p = softmax(a/T), q = softmax(b/T),
// natural-log KL, averaged over rows.
Tensor symmetric_kl_hint(const Tensor& logits_a, const Tensor& logits_b, double temperature);

// 1/d sum_i (a_i - b_i)^2, averaged over rows.
Tensor mse_hint(const Tensor& logits_a, const Tensor& logits_b);

Tensor hint_loss(HintLossVariant variant, const Tensor& logits_a, const Tensor& logits_b,
                 double temperature);

// MSE against one-hot {0,1} targets; the regression-objective classification
// counterpart of cross_entropy.
Tensor mse_classification(const Tensor& logits, const std::vector<int>& labels);

// Produces a [N,d] logits tensor from a [N,1,H,W] image batch tensor.
using ForwardFn = std::function<Tensor(const Tensor& batch)>;

Tensor images_to_batch_tensor(const std::vector<RasterImage>& images);

// Mean hint loss of (f(x), f(h(x))) over the set at evaluation temperature;
// no gradient side effects. Transform draws come from rng.
double evaluate_hint_loss_on_set(const ForwardFn& forward, const std::vector<RasterImage>& images,
                                 const HintTransformSpec& spec, HintLossVariant variant,
                                 double eval_temperature, Rng& rng);

}  // namespace genhints
