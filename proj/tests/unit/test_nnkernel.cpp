#include <doctest.h>

#include <cmath>

#include "aicatcher/errors.hpp"
#include "aicatcher/nn/adam.hpp"
#include "aicatcher/nn/layers.hpp"
#include "aicatcher/nn/tensor.hpp"
#include "gradcheck.hpp"

using namespace aicatcher;
using namespace aicatcher::nn;
using namespace aicatcher::testing;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, double lo = -1, double hi = 1) {
    Tensor t(std::move(shape));
    for (auto& x : t.data()) x = rng.uniform(lo, hi);
    return t;
}

}  // namespace

TEST_CASE("tensor basics") {
    const Tensor t({2, 3}, 1.5);
    CHECK(t.size() == 6);
    CHECK(t.at(1, 2) == 1.5);
    CHECK(t.reshaped({3, 2}).shape() == Shape{3, 2});
    CHECK_THROWS(Tensor({2, 0}));
    CHECK_THROWS(Tensor({2}, std::vector<double>{1, 2, 3}));
    CHECK_THROWS_AS(require_same_shape(Tensor({2}), Tensor({3}), "x"), ShapeMismatch);
}

TEST_CASE("embedding gathers rows") {
    const Tensor table({3, 2}, {0, 0, 9, 9, 1, 2});
    const std::vector<std::int32_t> idx{2, 0};
    const auto out = embedding_forward(idx, table);
    CHECK(out == Tensor({2, 2}, {1, 2, 0, 0}));
    const std::vector<std::int32_t> bad{3};
    CHECK_THROWS_AS(embedding_forward(bad, table), IndexOutOfVocab);
    const std::vector<std::int32_t> neg{-1};
    CHECK_THROWS_AS(embedding_forward(neg, table), IndexOutOfVocab);

    Rng rng(1);
    const auto big = random_tensor({50, 4}, rng);
    std::vector<std::int32_t> all(50);
    for (int i = 0; i < 50; ++i) all[i] = 49 - i;
    const auto g = embedding_forward(all, big);
    for (int i = 0; i < 50; ++i) {
        for (int d = 0; d < 4; ++d) CHECK(g.at(i, d) == big.at(49 - i, d));
    }
}

TEST_CASE("embedding backward accumulates repeated rows") {
    Tensor grad_table({3, 1});
    const std::vector<std::int32_t> idx{1, 1, 2};
    embedding_backward(idx, Tensor({3, 1}, {1, 2, 5}), grad_table);
    CHECK(grad_table == Tensor({3, 1}, {0, 3, 5}));
}

TEST_CASE("spatial dropout") {
    Rng rng(2);
    const auto x = random_tensor({6, 5}, rng);
    CHECK(spatial_dropout_forward(x, 0.2, Mode::Eval, rng) == x);
    CHECK(spatial_dropout_forward(x, 0.0, Mode::Train, rng) == x);
    CHECK_THROWS_AS(spatial_dropout_forward(x, 1.0, Mode::Train, rng), std::invalid_argument);

    Rng seeded(12345);
    const auto mask = draw_channel_mask(1, 10000, 0.2, seeded);
    const double frac = static_cast<double>(mask.dropped()) / 10000.0;
    CHECK(frac >= 0.18);
    CHECK(frac <= 0.22);

    ChannelMask m;
    const auto y = spatial_dropout_forward(x, 0.5, Mode::Train, rng, &m);
    for (std::size_t c = 0; c < 5; ++c) {
        const double s = m.scale[c];
        CHECK((s == 0.0 || s == 2.0));
        for (std::size_t t = 0; t < 6; ++t) CHECK(y.at(t, c) == x.at(t, c) * s);
    }
}

TEST_CASE("conv1d examples") {
    const Tensor x({3, 1}, {1, 2, 3});
    const Tensor w({2, 1, 1}, {1, 1});
    CHECK(conv1d_forward(x, w, Tensor({1}, {0})) == Tensor({2, 1}, {3, 5}));
    const auto bias_only = conv1d_forward(x, Tensor({2, 1, 1}), Tensor({1}, {7}));
    for (double v : bias_only.data()) CHECK(v == 7.0);
    CHECK_THROWS_AS(conv1d_forward(Tensor({1, 1}), w, Tensor({1})), SequenceTooShort);
    CHECK_THROWS_AS(conv1d_forward(Tensor({3, 2}), w, Tensor({1})), ShapeMismatch);

    Rng rng(3);
    const auto xi = random_tensor({9, 4}, rng);
    const auto wi = random_tensor({3, 4, 5}, rng);
    const auto bi = random_tensor({5}, rng);
    const auto out = conv1d_forward(xi, wi, bi);
    CHECK(out.shape() == Shape{7, 5});
    for (std::size_t t = 0; t < 7; ++t) {
        for (std::size_t f = 0; f < 5; ++f) {
            double s = bi[f];
            for (std::size_t k = 0; k < 3; ++k) {
                for (std::size_t c = 0; c < 4; ++c) s += xi.at(t + k, c) * wi.at(k, c, f);
            }
            CHECK(out.at(t, f) == doctest::Approx(s).epsilon(1e-12));
        }
    }
}

TEST_CASE("global max pool") {
    const auto r = global_max_pool_forward(Tensor({2, 2}, {1, 5, 3, 2}));
    CHECK(r.values == Tensor({2}, {3, 5}));
    CHECK(global_max_pool_forward(Tensor({1, 3}, {4, 5, 6})).values == Tensor({3}, {4, 5, 6}));
    CHECK_THROWS(global_max_pool_forward(Tensor({3})));

    const Tensor tie({2, 1}, {4, 4});
    const auto tr = global_max_pool_forward(tie);
    CHECK(tr.argmax[0] == 0);
    const auto g = global_max_pool_backward(tr, tie.shape(), Tensor({1}, {2.5}));
    CHECK(g == Tensor({2, 1}, {2.5, 0}));
}

TEST_CASE("dense examples") {
    CHECK(dense_forward(Tensor({2}, {1, 2}), Tensor({2, 2}, {1, 0, 0, 1}), Tensor({2})) == Tensor({2}, {1, 2}));
    CHECK(dense_forward(Tensor({2}, {1, 1}), Tensor({2, 1}, {2, 3}), Tensor({1}, {1})) == Tensor({1}, {6}));
    CHECK_THROWS_AS(dense_forward(Tensor({3}), Tensor({2, 1}), Tensor({1})), ShapeMismatch);
    CHECK_THROWS_AS(dense_forward(Tensor({2}), Tensor({2, 1}), Tensor({2})), ShapeMismatch);
}

TEST_CASE("activations and loss") {
    CHECK(relu(Tensor({2}, {-2, 3})) == Tensor({2}, {0, 3}));
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(-800.0) >= 0.0);
    CHECK(sigmoid(800.0) <= 1.0);
    CHECK(std::isfinite(sigmoid(-800.0)));
    CHECK(bce_loss(1.0, 1) == doctest::Approx(-std::log(1 - 1e-7)));
    CHECK(bce_loss(1.0, 1) < 2e-7);
    CHECK(bce_loss(0.0, 1) == doctest::Approx(-std::log(1e-7)));
    CHECK(bce_loss(0.5, 0) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("concat and split") {
    const auto c = concat(Tensor({2}, {1, 2}), Tensor({1}, {3}));
    CHECK(c == Tensor({3}, {1, 2, 3}));
    Tensor a, b;
    split_grad(c, 2, a, b);
    CHECK(a == Tensor({2}, {1, 2}));
    CHECK(b == Tensor({1}, {3}));
    CHECK(concat(Tensor({2, 1}, {1, 2}), Tensor({2, 2}, {3, 4, 5, 6})) == Tensor({2, 3}, {1, 3, 4, 2, 5, 6}));
}

TEST_CASE("every layer matches central differences") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        for (const auto& g : all_layer_gradchecks(seed)) {
            CHECK_MESSAGE(g.max_rel_error < 1e-4, g.name, " seed ", seed);
            CHECK(g.entries > 0);
        }
    }
}

TEST_CASE("batched ops equal per-sample ops") {
    Rng rng(4);
    const auto x = random_tensor({3, 6, 2}, rng);
    const auto w = random_tensor({2, 2, 4}, rng);
    const auto b = random_tensor({4}, rng);
    const auto batched = conv1d_forward(x, w, b);
    const auto pooled = global_max_pool_forward(batched);
    CHECK(batched.shape() == Shape{3, 5, 4});
    for (std::size_t s = 0; s < 3; ++s) {
        Tensor xs({6, 2});
        for (std::size_t t = 0; t < 6; ++t) {
            for (std::size_t c = 0; c < 2; ++c) xs.at(t, c) = x.at(s, t, c);
        }
        const auto single = conv1d_forward(xs, w, b);
        const auto sp = global_max_pool_forward(single);
        for (std::size_t t = 0; t < 5; ++t) {
            for (std::size_t f = 0; f < 4; ++f) CHECK(single.at(t, f) == batched.at(s, t, f));
        }
        for (std::size_t f = 0; f < 4; ++f) CHECK(sp.values[f] == pooled.values.at(s, f));
    }
}

TEST_CASE("relu and max pool are 1-Lipschitz per coordinate") {
    Rng rng(6);
    for (int trial = 0; trial < 200; ++trial) {
        auto x = random_tensor({5, 3}, rng);
        const auto base_r = relu(x);
        const auto base_p = global_max_pool_forward(x).values;
        const auto i = rng.below(x.size());
        const double delta = rng.uniform(-2, 2);
        x[i] += delta;
        const auto r = relu(x);
        const auto p = global_max_pool_forward(x).values;
        for (std::size_t k = 0; k < r.size(); ++k) CHECK(std::fabs(r[k] - base_r[k]) <= std::fabs(delta) + 1e-15);
        for (std::size_t k = 0; k < p.size(); ++k) CHECK(std::fabs(p[k] - base_p[k]) <= std::fabs(delta) + 1e-15);
    }
}

TEST_CASE("adam closed-form first step and fixed point") {
    std::vector<Parameter> p{Parameter("w", Tensor({1}, {0.5}))};
    p[0].grad[0] = 1.0;
    Adam adam;
    adam.step(p);
    CHECK(adam.step_count() == 1);
    CHECK(p[0].value[0] == doctest::Approx(0.5 - 1e-3 / (1.0 + 1e-8)).epsilon(1e-12));

    std::vector<Parameter> q{Parameter("w", Tensor({3}, {1, 2, 3}))};
    Adam still;
    for (int i = 0; i < 5; ++i) still.step(q);
    CHECK(q[0].value == Tensor({3}, {1, 2, 3}));

    std::vector<Parameter> r{Parameter("w", Tensor({2}))};
    Adam shaped;
    shaped.step(r);
    r[0] = Parameter("w", Tensor({3}));
    CHECK_THROWS_AS(shaped.step(r), ShapeMismatch);
    CHECK(shaped.first_moments()[0].shape() == Shape{2});
}

TEST_CASE("adam decreases a convex quadratic monotonically") {
    std::vector<Parameter> p{Parameter("x", Tensor({1}, {3.0}))};
    Adam adam(AdamConfig{.learning_rate = 0.05});
    double prev = 0.5 * 9.0;
    for (int i = 0; i < 100; ++i) {
        p[0].grad[0] = p[0].value[0];
        adam.step(p);
        const double loss = 0.5 * p[0].value[0] * p[0].value[0];
        CHECK(loss < prev);
        prev = loss;
    }
}

TEST_CASE("glorot range and float32 rounding") {
    Rng rng(7);
    Tensor t({30, 20});
    glorot_uniform(t, 30, 20, rng);
    const double lim = std::sqrt(6.0 / 50.0);
    for (double v : t.data()) CHECK(std::fabs(v) <= lim);
    round_to_float32(t);
    for (double v : t.data()) CHECK(static_cast<double>(static_cast<float>(v)) == v);
}
