#include "genhints/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace genhints {

namespace detail {

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // sized lazily
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
};

thread_local bool g_grad_enabled = true;

int shape_size(const Shape& s) {
    int n = 1;
    for (int d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

}  // namespace detail

using detail::Node;

struct OpAccess {
    static const std::shared_ptr<Node>& node(const Tensor& t) {
        if (!t.defined()) throw Error("tensor: undefined tensor");
        return t.node_;
    }
    static Tensor wrap(std::shared_ptr<Node> n) {
        Tensor t;
        t.node_ = std::move(n);
        return t;
    }
};

namespace {

std::shared_ptr<Node> make_node(Shape shape, std::vector<double> value) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(value);
    return n;
}

// Attaches parents and the backward rule if grad mode is on and any parent
// needs gradients.
Tensor finish(std::shared_ptr<Node> out, std::vector<std::shared_ptr<Node>> parents,
              std::function<void(Node&)> backward_fn) {
    if (detail::g_grad_enabled) {
        bool needs = false;
        for (auto& p : parents)
            if (p->requires_grad) needs = true;
        if (needs) {
            out->requires_grad = true;
            out->parents = std::move(parents);
            out->backward_fn = std::move(backward_fn);
        }
    }
    return OpAccess::wrap(std::move(out));
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw Error(std::string(op) + ": shape mismatch " + detail::shape_str(a.shape()) +
                    " vs " + detail::shape_str(b.shape()));
}

}  // namespace

Tensor Tensor::create(Shape shape, std::vector<double> data, bool requires_grad) {
    for (int d : shape)
        if (d <= 0) throw Error("tensor: dimensions must be positive");
    if (detail::shape_size(shape) != static_cast<int>(data.size()))
        throw Error("tensor: shape " + detail::shape_str(shape) + " does not match data length " +
                    std::to_string(data.size()));
    for (double v : data)
        if (!std::isfinite(v)) throw Error("tensor: non-finite input value");
    auto n = make_node(std::move(shape), std::move(data));
    n->requires_grad = requires_grad;
    return OpAccess::wrap(std::move(n));
}

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
    return create(shape, std::vector<double>(detail::shape_size(shape), 0.0), requires_grad);
}

const Shape& Tensor::shape() const { return OpAccess::node(*this)->shape; }
int Tensor::size() const { return static_cast<int>(OpAccess::node(*this)->value.size()); }
int Tensor::rank() const { return static_cast<int>(OpAccess::node(*this)->shape.size()); }
const std::vector<double>& Tensor::data() const { return OpAccess::node(*this)->value; }
std::vector<double>& Tensor::mutable_data() { return OpAccess::node(*this)->value; }
bool Tensor::requires_grad() const { return OpAccess::node(*this)->requires_grad; }
bool Tensor::has_grad() const {
    auto& n = OpAccess::node(*this);
    return n->grad.size() == n->value.size();
}

const std::vector<double>& Tensor::grad() const {
    auto& n = OpAccess::node(*this);
    if (n->grad.size() != n->value.size()) throw Error("tensor: gradient not populated");
    return n->grad;
}

void Tensor::zero_grad() {
    auto& n = OpAccess::node(*this);
    n->grad.assign(n->value.size(), 0.0);
}

double Tensor::item() const {
    auto& n = OpAccess::node(*this);
    if (n->value.size() != 1) throw Error("tensor: item() requires a scalar");
    return n->value[0];
}

NoGradGuard::NoGradGuard() : previous_(detail::g_grad_enabled) { detail::g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { detail::g_grad_enabled = previous_; }

// ---------------------------------------------------------------------------
// elementwise

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    auto na = OpAccess::node(a), nb = OpAccess::node(b);
    std::vector<double> out(na->value.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = na->value[i] + nb->value[i];
    return finish(make_node(na->shape, std::move(out)), {na, nb}, [](Node& self) {
        for (int p = 0; p < 2; ++p) {
            auto& par = self.parents[p];
            if (!par->requires_grad) continue;
            par->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) par->grad[i] += self.grad[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    auto na = OpAccess::node(a), nb = OpAccess::node(b);
    std::vector<double> out(na->value.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = na->value[i] - nb->value[i];
    return finish(make_node(na->shape, std::move(out)), {na, nb}, [](Node& self) {
        auto& pa = self.parents[0];
        auto& pb = self.parents[1];
        if (pa->requires_grad) {
            pa->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] -= self.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    auto na = OpAccess::node(a), nb = OpAccess::node(b);
    std::vector<double> out(na->value.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = na->value[i] * nb->value[i];
    return finish(make_node(na->shape, std::move(out)), {na, nb}, [](Node& self) {
        auto& pa = self.parents[0];
        auto& pb = self.parents[1];
        if (pa->requires_grad) {
            pa->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i)
                pa->grad[i] += self.grad[i] * pb->value[i];
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i)
                pb->grad[i] += self.grad[i] * pa->value[i];
        }
    });
}

Tensor scale(const Tensor& a, double c) {
    if (!std::isfinite(c)) throw Error("scale: non-finite constant");
    auto na = OpAccess::node(a);
    std::vector<double> out(na->value.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = na->value[i] * c;
    return finish(make_node(na->shape, std::move(out)), {na}, [c](Node& self) {
        auto& pa = self.parents[0];
        pa->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i] * c;
    });
}

Tensor exp(const Tensor& a) {
    auto na = OpAccess::node(a);
    std::vector<double> out(na->value.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = std::exp(na->value[i]);
    return finish(make_node(na->shape, std::move(out)), {na}, [](Node& self) {
        auto& pa = self.parents[0];
        pa->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i)
            pa->grad[i] += self.grad[i] * self.value[i];
    });
}

Tensor relu(const Tensor& a) {
    auto na = OpAccess::node(a);
    std::vector<double> out(na->value.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = na->value[i] > 0.0 ? na->value[i] : 0.0;
    // subgradient at exactly 0 is 0
    return finish(make_node(na->shape, std::move(out)), {na}, [](Node& self) {
        auto& pa = self.parents[0];
        pa->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i)
            if (pa->value[i] > 0.0) pa->grad[i] += self.grad[i];
    });
}

// ---------------------------------------------------------------------------
// matmul

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) throw Error("matmul: rank-2 tensors required");
    const int m = a.shape()[0], k = a.shape()[1];
    const int k2 = b.shape()[0], n = b.shape()[1];
    if (k != k2)
        throw Error("matmul: inner dimensions " + std::to_string(k) + " and " +
                    std::to_string(k2) + " do not match");
    auto na = OpAccess::node(a), nb = OpAccess::node(b);
    std::vector<double> out(static_cast<size_t>(m) * n, 0.0);
    const double* A = na->value.data();
    const double* B = nb->value.data();
    for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
            const double av = A[i * k + p];
            for (int j = 0; j < n; ++j) out[i * n + j] += av * B[p * n + j];
        }
    return finish(make_node({m, n}, std::move(out)), {na, nb}, [m, k, n](Node& self) {
        auto& pa = self.parents[0];
        auto& pb = self.parents[1];
        const double* G = self.grad.data();
        if (pa->requires_grad) {
            pa->ensure_grad();
            const double* B = pb->value.data();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) {
                    const double g = G[i * n + j];
                    for (int p = 0; p < k; ++p) pa->grad[i * k + p] += g * B[p * n + j];
                }
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            const double* A = pa->value.data();
            for (int i = 0; i < m; ++i)
                for (int p = 0; p < k; ++p) {
                    const double av = A[i * k + p];
                    for (int j = 0; j < n; ++j) pb->grad[p * n + j] += av * G[i * n + j];
                }
        }
    });
}

// ---------------------------------------------------------------------------
// conv2d

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias, Padding padding) {
    if (input.rank() != 4) throw Error("conv2d: input must be [N,C,H,W]");
    if (kernel.rank() != 4) throw Error("conv2d: kernel must be [F,C,k,k]");
    const int N = input.shape()[0], C = input.shape()[1];
    const int H = input.shape()[2], W = input.shape()[3];
    const int F = kernel.shape()[0], KC = kernel.shape()[1];
    const int k = kernel.shape()[2];
    if (kernel.shape()[3] != k) throw Error("conv2d: kernel must be square");
    if (k % 2 == 0) throw Error("conv2d: kernel size must be odd");
    if (KC != C)
        throw Error("conv2d: kernel channels " + std::to_string(KC) +
                    " do not match input channels " + std::to_string(C));
    if (bias.rank() != 1 || bias.shape()[0] != F) throw Error("conv2d: bias must be [F]");
    const bool same = padding == Padding::Same;
    if (!same && (k > H || k > W)) throw Error("conv2d: kernel larger than input for valid padding");
    const int pad = same ? k / 2 : 0;
    const int OH = same ? H : H - k + 1;
    const int OW = same ? W : W - k + 1;

    auto ni = OpAccess::node(input);
    auto nk = OpAccess::node(kernel);
    auto nb = OpAccess::node(bias);
    std::vector<double> out(static_cast<size_t>(N) * F * OH * OW);
    const double* in = ni->value.data();
    const double* ker = nk->value.data();
    const double* bs = nb->value.data();
    // one pass per kernel tap with precomputed bounds keeps the hot loop a
    // plain multiply-add over contiguous rows
    for (int n = 0; n < N; ++n)
        for (int f = 0; f < F; ++f) {
            double* op = &out[((static_cast<size_t>(n) * F + f) * OH) * OW];
            for (int i = 0; i < OH * OW; ++i) op[i] = bs[f];
            for (int c = 0; c < C; ++c) {
                const double* ip = &in[((static_cast<size_t>(n) * C + c) * H) * W];
                const double* kp = &ker[((static_cast<size_t>(f) * C + c) * k) * k];
                for (int dy = 0; dy < k; ++dy) {
                    const int y0 = std::max(0, pad - dy);
                    const int y1 = std::min(OH, H + pad - dy);
                    for (int dx = 0; dx < k; ++dx) {
                        const double w = kp[dy * k + dx];
                        const int x0 = std::max(0, pad - dx);
                        const int x1 = std::min(OW, W + pad - dx);
                        for (int y = y0; y < y1; ++y) {
                            const int rbase = (y + dy - pad) * W + dx - pad;
                            double* orow = &op[y * OW];
                            for (int x = x0; x < x1; ++x) orow[x] += w * ip[rbase + x];
                        }
                    }
                }
            }
        }

    auto bw = [N, C, H, W, F, k, pad, OH, OW](Node& self) {
        auto& pi = self.parents[0];
        auto& pk = self.parents[1];
        auto& pb = self.parents[2];
        const double* G = self.grad.data();
        const bool gi = pi->requires_grad, gk = pk->requires_grad, gb = pb->requires_grad;
        if (gi) pi->ensure_grad();
        if (gk) pk->ensure_grad();
        if (gb) pb->ensure_grad();
        for (int n = 0; n < N; ++n)
            for (int f = 0; f < F; ++f) {
                const double* gp = &G[((static_cast<size_t>(n) * F + f) * OH) * OW];
                if (gb)
                    for (int y = 0; y < OH; ++y)
                        for (int x = 0; x < OW; ++x) pb->grad[f] += gp[y * OW + x];
                for (int c = 0; c < C; ++c) {
                    const double* iv = &pi->value[((static_cast<size_t>(n) * C + c) * H) * W];
                    const double* kv = &pk->value[((static_cast<size_t>(f) * C + c) * k) * k];
                    double* ig = gi ? &pi->grad[((static_cast<size_t>(n) * C + c) * H) * W] : nullptr;
                    double* kg = gk ? &pk->grad[((static_cast<size_t>(f) * C + c) * k) * k] : nullptr;
                    for (int dy = 0; dy < k; ++dy) {
                        const int y0 = std::max(0, pad - dy);
                        const int y1 = std::min(OH, H + pad - dy);
                        for (int dx = 0; dx < k; ++dx) {
                            const double w = kv[dy * k + dx];
                            const int x0 = std::max(0, pad - dx);
                            const int x1 = std::min(OW, W + pad - dx);
                            double kacc = 0.0;
                            for (int y = y0; y < y1; ++y) {
                                const double* grow = &gp[y * OW];
                                const int rbase = (y + dy - pad) * W + dx - pad;
                                if (gk)
                                    for (int x = x0; x < x1; ++x) kacc += grow[x] * iv[rbase + x];
                                if (gi)
                                    for (int x = x0; x < x1; ++x) ig[rbase + x] += grow[x] * w;
                            }
                            if (gk) kg[dy * k + dx] += kacc;
                        }
                    }
                }
            }
    };
    return finish(make_node({N, F, OH, OW}, std::move(out)), {ni, nk, nb}, std::move(bw));
}

// ---------------------------------------------------------------------------
// log_softmax

Tensor log_softmax(const Tensor& x, int axis) {
    if (axis < 0 || axis >= x.rank()) throw Error("log_softmax: invalid axis");
    auto nx = OpAccess::node(x);
    const auto& shp = nx->shape;
    int outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= shp[i];
    const int len = shp[axis];
    for (int i = axis + 1; i < x.rank(); ++i) inner *= shp[i];
    std::vector<double> out(nx->value.size());
    const double* in = nx->value.data();
    for (int o = 0; o < outer; ++o)
        for (int j = 0; j < inner; ++j) {
            const size_t base = static_cast<size_t>(o) * len * inner + j;
            double mx = in[base];
            for (int t = 1; t < len; ++t) mx = std::max(mx, in[base + static_cast<size_t>(t) * inner]);
            double sum = 0.0;
            for (int t = 0; t < len; ++t) sum += std::exp(in[base + static_cast<size_t>(t) * inner] - mx);
            const double lse = mx + std::log(sum);
            for (int t = 0; t < len; ++t)
                out[base + static_cast<size_t>(t) * inner] = in[base + static_cast<size_t>(t) * inner] - lse;
        }
    return finish(make_node(shp, std::move(out)), {nx}, [outer, len, inner](Node& self) {
        auto& px = self.parents[0];
        px->ensure_grad();
        for (int o = 0; o < outer; ++o)
            for (int j = 0; j < inner; ++j) {
                const size_t base = static_cast<size_t>(o) * len * inner + j;
                double gsum = 0.0;
                for (int t = 0; t < len; ++t) gsum += self.grad[base + static_cast<size_t>(t) * inner];
                for (int t = 0; t < len; ++t) {
                    const size_t idx = base + static_cast<size_t>(t) * inner;
                    px->grad[idx] += self.grad[idx] - std::exp(self.value[idx]) * gsum;
                }
            }
    });
}

// ---------------------------------------------------------------------------
// reductions and layout helpers

Tensor reduce_sum(const Tensor& x) {
    auto nx = OpAccess::node(x);
    double s = 0.0;
    for (double v : nx->value) s += v;
    return finish(make_node({1}, {s}), {nx}, [](Node& self) {
        auto& px = self.parents[0];
        px->ensure_grad();
        const double g = self.grad[0];
        for (size_t i = 0; i < px->grad.size(); ++i) px->grad[i] += g;
    });
}

Tensor reduce_mean(const Tensor& x) {
    auto nx = OpAccess::node(x);
    double s = 0.0;
    for (double v : nx->value) s += v;
    const double inv = 1.0 / static_cast<double>(nx->value.size());
    return finish(make_node({1}, {s * inv}), {nx}, [inv](Node& self) {
        auto& px = self.parents[0];
        px->ensure_grad();
        const double g = self.grad[0] * inv;
        for (size_t i = 0; i < px->grad.size(); ++i) px->grad[i] += g;
    });
}

Tensor global_avg_pool(const Tensor& x) {
    if (x.rank() != 4) throw Error("global_avg_pool: input must be [N,C,H,W]");
    const int N = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
    auto nx = OpAccess::node(x);
    std::vector<double> out(static_cast<size_t>(N) * C);
    const double inv = 1.0 / static_cast<double>(H * W);
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const double* p = &nx->value[((static_cast<size_t>(n) * C + c) * H) * W];
            double s = 0.0;
            for (int i = 0; i < H * W; ++i) s += p[i];
            out[static_cast<size_t>(n) * C + c] = s * inv;
        }
    return finish(make_node({N, C}, std::move(out)), {nx}, [N, C, H, W, inv](Node& self) {
        auto& px = self.parents[0];
        px->ensure_grad();
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < C; ++c) {
                const double g = self.grad[static_cast<size_t>(n) * C + c] * inv;
                double* p = &px->grad[((static_cast<size_t>(n) * C + c) * H) * W];
                for (int i = 0; i < H * W; ++i) p[i] += g;
            }
    });
}

Tensor add_row_bias(const Tensor& x, const Tensor& bias) {
    if (x.rank() != 2 || bias.rank() != 1) throw Error("add_row_bias: expects [N,d] and [d]");
    const int N = x.shape()[0], d = x.shape()[1];
    if (bias.shape()[0] != d) throw Error("add_row_bias: bias length mismatch");
    auto nx = OpAccess::node(x), nb = OpAccess::node(bias);
    std::vector<double> out(nx->value.size());
    for (int n = 0; n < N; ++n)
        for (int j = 0; j < d; ++j)
            out[static_cast<size_t>(n) * d + j] = nx->value[static_cast<size_t>(n) * d + j] + nb->value[j];
    return finish(make_node({N, d}, std::move(out)), {nx, nb}, [N, d](Node& self) {
        auto& px = self.parents[0];
        auto& pb = self.parents[1];
        if (px->requires_grad) {
            px->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) px->grad[i] += self.grad[i];
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            for (int n = 0; n < N; ++n)
                for (int j = 0; j < d; ++j) pb->grad[j] += self.grad[static_cast<size_t>(n) * d + j];
        }
    });
}

Tensor nll_pick_mean(const Tensor& log_probs, const std::vector<int>& labels) {
    int N, d;
    if (log_probs.rank() == 2) {
        N = log_probs.shape()[0];
        d = log_probs.shape()[1];
    } else if (log_probs.rank() == 1) {
        N = 1;
        d = log_probs.shape()[0];
    } else {
        throw Error("nll_pick_mean: expects rank 1 or 2");
    }
    if (static_cast<int>(labels.size()) != N) throw Error("nll_pick_mean: label count mismatch");
    for (int l : labels)
        if (l < 0 || l >= d)
            throw Error("nll_pick_mean: label " + std::to_string(l) + " out of range [0," +
                        std::to_string(d) + ")");
    auto nx = OpAccess::node(log_probs);
    double s = 0.0;
    for (int i = 0; i < N; ++i) s -= nx->value[static_cast<size_t>(i) * d + labels[i]];
    const double inv = 1.0 / N;
    return finish(make_node({1}, {s * inv}), {nx}, [labels, d, N, inv](Node& self) {
        auto& px = self.parents[0];
        px->ensure_grad();
        const double g = self.grad[0] * inv;
        for (int i = 0; i < N; ++i) px->grad[static_cast<size_t>(i) * d + labels[i]] -= g;
    });
}

// ---------------------------------------------------------------------------
// backward

void backward(const Tensor& loss) {
    auto root = OpAccess::node(loss);
    if (root->value.size() != 1) throw Error("backward: loss must be scalar");
    if (!root->requires_grad) return;  // nothing reachable needs gradients

    // iterative post-order DFS; each node visited exactly once
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(root.get(), 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* p = node->parents[idx++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    // Interior nodes get fresh grads each call; leaves accumulate across calls.
    for (Node* n : order)
        if (n->backward_fn) n->grad.assign(n->value.size(), 0.0);
    root->ensure_grad();
    root->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn) {
            n->ensure_grad();
            n->backward_fn(*n);
        }
    }
}

bool all_finite(const Tensor& t) {
    for (double v : t.data())
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace genhints
