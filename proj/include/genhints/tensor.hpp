#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "genhints/common.hpp"

namespace genhints {

using Shape = std::vector<int>;

namespace detail {
struct Node;
}

// Dense 64-bit float tensor participating in a define-by-run computation
// graph. The graph is rebuilt on every forward pass; backward() walks it in
// reverse topological order and accumulates gradients into requires_grad
// leaves. Values are immutable after creation except for grad buffers and
// explicit leaf updates through mutable_data() (optimizer steps).
class Tensor {
public:
    Tensor() = default;

    static Tensor create(Shape shape, std::vector<double> data, bool requires_grad = false);
    static Tensor zeros(const Shape& shape, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    int size() const;
    int rank() const;
    const std::vector<double>& data() const;
    std::vector<double>& mutable_data();  // leaf parameter updates only
    bool requires_grad() const;
    bool has_grad() const;
    const std::vector<double>& grad() const;
    void zero_grad();
    double item() const;  // scalar tensors only

private:
    friend struct OpAccess;
    std::shared_ptr<detail::Node> node_;
};

// Disables graph recording for the enclosed scope (inference paths).
struct NoGradGuard {
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

enum class Padding { Same, Valid };

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor exp(const Tensor& a);
Tensor relu(const Tensor& a);

// [m,k] x [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);

// input [N,C,H,W], kernel [F,C,k,k] (k odd), bias [F]; stride 1
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, Padding padding);

// numerically stable log-softmax along the given axis
Tensor log_softmax(const Tensor& x, int axis);

Tensor reduce_sum(const Tensor& x);
Tensor reduce_mean(const Tensor& x);

// [N,C,H,W] -> [N,C], mean over the spatial dims
Tensor global_avg_pool(const Tensor& x);

// x [N,d] + bias [d], broadcast over rows
Tensor add_row_bias(const Tensor& x, const Tensor& bias);

// mean over rows of -log_probs[i, labels[i]]; log_probs [N,d] (or [d] with one label)
Tensor nll_pick_mean(const Tensor& log_probs, const std::vector<int>& labels);

// Accumulates dLoss/dLeaf into every reachable requires_grad leaf. Repeated
// calls without zero_grad() add up.
void backward(const Tensor& loss);

bool all_finite(const Tensor& t);

}  // namespace genhints
