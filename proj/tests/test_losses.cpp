#include <doctest.h>

#include <cmath>

#include "genhints/losses.hpp"
#include "oracles.hpp"

using namespace genhints;
using genhints::testing::central_difference;
using genhints::testing::grad_rel_err;
using genhints::testing::random_vector;

TEST_SUITE_BEGIN("losses");

TEST_CASE("cross_entropy values") {
    CHECK(cross_entropy(Tensor::create({2}, {0, 0}), {0}).item() ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(cross_entropy(Tensor::create({2}, {30, -30}), {0}).item() < 1e-12);
    CHECK(cross_entropy(Tensor::create({2}, {30, -30}), {0}).item() >= 0.0);
    CHECK_THROWS_AS(cross_entropy(Tensor::create({2}, {0, 0}), {2}), Error);
}

TEST_CASE("cross_entropy gradient vs finite differences") {
    Rng rng(3);
    auto logits = random_vector(5, rng);
    auto loss_of = [&](const std::vector<double>& v) {
        return cross_entropy(Tensor::create({5}, v), {2}).item();
    };
    Tensor t = Tensor::create({5}, logits, true);
    backward(cross_entropy(t, {2}));
    for (size_t i = 0; i < logits.size(); ++i)
        CHECK(grad_rel_err(t.grad()[i], central_difference(loss_of, logits, i)) < 1e-5);
}

TEST_CASE("symmetric_kl_hint values") {
    Tensor a = Tensor::create({3}, {1.0, -0.4, 0.7});
    CHECK(symmetric_kl_hint(a, a, 1.0).item() == 0.0);

    // logits inducing p=[0.7,0.3], q=[0.5,0.5] at T=1
    Tensor pa = Tensor::create({2}, {std::log(0.7), std::log(0.3)});
    Tensor pb = Tensor::create({2}, {0.0, 0.0});
    // 0.5*(KL(p||q) + KL(q||p)) evaluated with an arbitrary-precision sum
    CHECK(symmetric_kl_hint(pa, pb, 1.0).item() == doctest::Approx(0.084730).epsilon(1e-4));

    CHECK_THROWS_AS(symmetric_kl_hint(pa, Tensor::create({3}, {0, 0, 0}), 1.0), Error);
    CHECK_THROWS_AS(symmetric_kl_hint(pa, pb, 0.0), Error);
    CHECK_THROWS_AS(symmetric_kl_hint(pa, pb, -1.0), Error);
}

TEST_CASE("symmetric_kl_hint laws (property)") {
    Rng rng(17);
    for (int trial = 0; trial < 1000; ++trial) {
        const int d = 2 + rng.uniform_int(5);
        Tensor a = Tensor::create({d}, random_vector(d, rng, 3.0));
        Tensor b = Tensor::create({d}, random_vector(d, rng, 3.0));
        const double t = 0.5 + rng.uniform();
        const double ab = symmetric_kl_hint(a, b, t).item();
        CHECK(ab >= 0.0);
        // exact symmetry, bit for bit
        CHECK(ab == symmetric_kl_hint(b, a, t).item());
        // shift both logit vectors by the same constant: softmax unchanged
        const double c = rng.uniform(-5.0, 5.0);
        std::vector<double> as = a.data(), bs = b.data();
        for (auto& v : as) v += c;
        for (auto& v : bs) v += c;
        const double shifted =
            symmetric_kl_hint(Tensor::create({d}, as), Tensor::create({d}, bs), t).item();
        CHECK(std::abs(shifted - ab) < 1e-9);
    }
}

TEST_CASE("temperature flattens distributions") {
    Rng rng(19);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor a = Tensor::create({4}, random_vector(4, rng, 2.0));
        Tensor b = Tensor::create({4}, random_vector(4, rng, 2.0));
        if (a.data() == b.data()) continue;
        CHECK(symmetric_kl_hint(a, b, 1.0).item() > symmetric_kl_hint(a, b, 100.0).item());
    }
}

TEST_CASE("mse_hint values") {
    Tensor a = Tensor::create({2}, {1, 2});
    CHECK(mse_hint(a, a).item() == 0.0);
    CHECK(mse_hint(a, Tensor::create({2}, {3, 2})).item() == 2.0);
    CHECK_THROWS_AS(mse_hint(a, Tensor::create({3}, {0, 0, 0})), Error);

    // invariant under simultaneous permutation of both vectors
    Tensor x = Tensor::create({3}, {1, 5, -2});
    Tensor y = Tensor::create({3}, {0, 2, 4});
    Tensor xp = Tensor::create({3}, {-2, 1, 5});
    Tensor yp = Tensor::create({3}, {4, 0, 2});
    CHECK(mse_hint(x, y).item() == mse_hint(xp, yp).item());
}

TEST_CASE("hint loss gradients vs finite differences") {
    Rng rng(23);
    auto av = random_vector(4, rng);
    auto bv = random_vector(4, rng);
    for (double t : {0.8, 1.0}) {
        auto loss_of = [&](const std::vector<double>& v) {
            return symmetric_kl_hint(Tensor::create({4}, v), Tensor::create({4}, bv), t).item();
        };
        Tensor a = Tensor::create({4}, av, true);
        backward(symmetric_kl_hint(a, Tensor::create({4}, bv), t));
        for (size_t i = 0; i < 4; ++i)
            CHECK(grad_rel_err(a.grad()[i], central_difference(loss_of, av, i)) < 1e-4);
    }
    {
        auto loss_of = [&](const std::vector<double>& v) {
            return mse_hint(Tensor::create({4}, v), Tensor::create({4}, bv)).item();
        };
        Tensor a = Tensor::create({4}, av, true);
        backward(mse_hint(a, Tensor::create({4}, bv)));
        for (size_t i = 0; i < 4; ++i)
            CHECK(grad_rel_err(a.grad()[i], central_difference(loss_of, av, i)) < 1e-4);
    }
}

TEST_CASE("mse_classification one-hot targets") {
    Tensor logits = Tensor::create({2, 2}, {1, 0, 0, 1});
    CHECK(mse_classification(logits, {0, 1}).item() == 0.0);
    Tensor off = Tensor::create({1, 2}, {0, 0});
    CHECK(mse_classification(off, {0}).item() == doctest::Approx(0.5));
    CHECK_THROWS_AS(mse_classification(off, {3}), Error);
}

TEST_CASE("evaluate_hint_loss_on_set") {
    Rng rng(31);
    std::vector<RasterImage> images;
    for (int i = 0; i < 4; ++i) {
        std::vector<double> px(16);
        for (auto& p : px) p = rng.uniform();
        images.push_back(make_image(4, 4, std::move(px)));
    }

    // model constant in its input: loss 0
    ForwardFn constant_model = [](const Tensor& batch) {
        return Tensor::create({batch.shape()[0], 2},
                              std::vector<double>(static_cast<size_t>(batch.shape()[0]) * 2, 0.3));
    };
    HintTransformSpec spec{1.0, 0.1, 15.0};
    Rng eval_rng(1);
    CHECK(evaluate_hint_loss_on_set(constant_model, images, spec, HintLossVariant::SymmetricKl, 1.0,
                                    eval_rng) == 0.0);

    // identity spec: x' == x, loss 0 for any model
    ForwardFn mean_model = [](const Tensor& batch) {
        const int n = batch.shape()[0];
        const int px = batch.size() / n;
        std::vector<double> logits(static_cast<size_t>(n) * 2);
        for (int i = 0; i < n; ++i) {
            double s = 0;
            for (int j = 0; j < px; ++j) s += batch.data()[static_cast<size_t>(i) * px + j];
            logits[i * 2] = s / px;
            logits[i * 2 + 1] = -s / px;
        }
        return Tensor::create({n, 2}, std::move(logits));
    };
    Rng eval_rng2(1);
    CHECK(evaluate_hint_loss_on_set(mean_model, images, HintTransformSpec{},
                                    HintLossVariant::SymmetricKl, 1.0, eval_rng2) == 0.0);

    // mean over a single image equals the pairwise loss directly
    std::vector<RasterImage> one{images[0]};
    Rng r1(77), r2(77);
    const double via_set = evaluate_hint_loss_on_set(mean_model, one, spec,
                                                     HintLossVariant::SymmetricKl, 1.0, r1);
    RasterImage transformed = apply_hint_transform(one[0], spec, r2);
    Tensor la = mean_model(images_to_batch_tensor(one));
    Tensor lb = mean_model(images_to_batch_tensor({transformed}));
    CHECK(via_set == symmetric_kl_hint(la, lb, 1.0).item());

    Rng r3(1);
    CHECK_THROWS_AS(evaluate_hint_loss_on_set(mean_model, {}, spec, HintLossVariant::SymmetricKl,
                                              1.0, r3),
                    Error);
}

TEST_SUITE_END();
