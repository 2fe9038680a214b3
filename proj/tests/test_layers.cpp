#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "resoneq/layers.hpp"
#include "resoneq/rng.hpp"
#include "resoneq/train.hpp"

#include <cmath>
#include <functional>
#include <vector>

using namespace resoneq;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.values()) v = rng.gaussian(0.0, scale);
    return t;
}

// Scalar head for gradient checks: L = sum(w .* y) with fixed random w.
struct ScalarProjection {
    Tensor weights;
    explicit ScalarProjection(const Tensor& like, Rng& rng) : weights(like.shape()) {
        for (double& v : weights.values()) v = rng.gaussian(0.0, 1.0);
    }
    double loss(const Tensor& y) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < y.numel(); ++i) acc += weights[i] * y[i];
        return acc;
    }
    Tensor grad() const { return weights; }
};

// max relative error between analytic and central-difference gradients over
// every element of every parameter tensor plus the input
double gradient_check(Layer& layer, const Tensor& input, Mode mode, std::uint64_t seed) {
    Rng rng(seed);
    Tensor x = input;
    const Tensor y0 = layer.forward(x, mode);
    const ScalarProjection head(y0, rng);

    layer.forward(x, mode); // fresh cache for the analytic pass
    for (const ParamRef& p : layer.params()) p.grad->fill(0.0);
    Tensor grad_in = layer.backward(head.grad());

    constexpr double eps = 1e-5;
    double worst = 0.0;
    auto update_worst = [&](double analytic, double numeric) {
        const double denom = std::max(std::abs(analytic) + std::abs(numeric), 1e-6);
        worst = std::max(worst, std::abs(analytic - numeric) / denom);
    };

    auto eval_loss = [&](Tensor& probe_x) { return head.loss(layer.forward(probe_x, mode)); };

    for (std::size_t i = 0; i < x.numel(); ++i) {
        const double keep = x[i];
        x[i] = keep + eps;
        const double up = eval_loss(x);
        x[i] = keep - eps;
        const double down = eval_loss(x);
        x[i] = keep;
        update_worst(grad_in[i], (up - down) / (2.0 * eps));
    }

    for (const ParamRef& p : layer.params()) {
        // analytic gradients were accumulated above; recompute per element
        for (std::size_t i = 0; i < p.value->numel(); ++i) {
            const double keep = (*p.value)[i];
            (*p.value)[i] = keep + eps;
            const double up = eval_loss(x);
            (*p.value)[i] = keep - eps;
            const double down = eval_loss(x);
            (*p.value)[i] = keep;
            update_worst((*p.grad)[i], (up - down) / (2.0 * eps));
        }
    }
    return worst;
}

// independent brute-force oracle for the dilated convolution, straight from
// the padded definition
Tensor conv_oracle(const Tensor& x, const Tensor& kernels, const Tensor& bias,
                   std::size_t dilation) {
    const std::size_t batch = x.dim(0), in_maps = x.dim(1), T = x.dim(2);
    const std::size_t out_maps = kernels.dim(0), k = kernels.dim(2);
    const std::size_t total_pad = (k - 1) * dilation;
    const std::ptrdiff_t pad_left = static_cast<std::ptrdiff_t>((total_pad + 1) / 2);

    Tensor y({batch, out_maps, T});
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t o = 0; o < out_maps; ++o)
            for (std::size_t t = 0; t < T; ++t) {
                double acc = bias[o];
                for (std::size_t i = 0; i < in_maps; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) +
                                                   static_cast<std::ptrdiff_t>(p * dilation) -
                                                   pad_left;
                        if (src < 0 || src >= static_cast<std::ptrdiff_t>(T)) continue;
                        acc += kernels[(o * in_maps + i) * k + p] *
                               x[(b * in_maps + i) * T + static_cast<std::size_t>(src)];
                    }
                y[(b * out_maps + o) * T + t] = acc;
            }
    return y;
}

} // namespace

TEST_CASE("dense layer: identity weights pass through") {
    Dense dense(3, 3);
    for (std::size_t i = 0; i < 3; ++i) dense.weights[i * 3 + i] = 1.0;
    const Tensor x({2, 3}, {1, 2, 3, 4, 5, 6});
    const Tensor y = dense.forward(x, Mode::Train);
    for (std::size_t i = 0; i < 6; ++i) CHECK(y[i] == x[i]);
}

TEST_CASE("dense layer: hand-computed case") {
    Dense dense(2, 1);
    dense.weights[0] = 1.0;
    dense.weights[1] = 1.0;
    dense.bias[0] = 0.5;
    const Tensor x({1, 2}, {1.0, 2.0});
    const Tensor y = dense.forward(x, Mode::Train);
    CHECK(y[0] == doctest::Approx(3.5));
}

TEST_CASE("dense layer passes gradient checks over 20 seeds") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        Dense dense(4, 3);
        dense.init_he_normal(rng);
        const Tensor x = random_tensor({5, 4}, rng);
        CHECK(gradient_check(dense, x, Mode::Train, seed * 31) < 1e-4);
    }
}

TEST_CASE("relu semantics") {
    Relu relu;
    const Tensor x({1, 3}, {-1.0, 0.0, 2.0});
    const Tensor y = relu.forward(x, Mode::Train);
    CHECK(y[0] == 0.0);
    CHECK(y[1] == 0.0);
    CHECK(y[2] == 2.0);

    const Tensor g = relu.backward(Tensor({1, 3}, {1.0, 1.0, 1.0}));
    CHECK(g[0] == 0.0);
    CHECK(g[1] == 0.0); // subgradient at 0 pinned to 0
    CHECK(g[2] == 1.0);
}

TEST_CASE("relu of an all-negative tensor is zero") {
    Relu relu;
    Rng rng(3);
    Tensor x = random_tensor({2, 5}, rng);
    for (double& v : x.values()) v = -std::abs(v) - 0.1;
    const Tensor y = relu.forward(x, Mode::Train);
    for (std::size_t i = 0; i < y.numel(); ++i) CHECK(y[i] == 0.0);
}

TEST_CASE("batch norm standardizes per feature in train mode") {
    Rng rng(11);
    BatchNorm bn(4);
    const Tensor x = random_tensor({64, 4}, rng, 3.0);
    const Tensor y = bn.forward(x, Mode::Train);
    for (std::size_t f = 0; f < 4; ++f) {
        double m = 0.0, v = 0.0;
        for (std::size_t b = 0; b < 64; ++b) m += y[b * 4 + f];
        m /= 64.0;
        for (std::size_t b = 0; b < 64; ++b) v += (y[b * 4 + f] - m) * (y[b * 4 + f] - m);
        v /= 64.0;
        CHECK(std::abs(m) < 1e-9);
        CHECK(v == doctest::Approx(1.0).epsilon(1e-3)); // epsilon shifts variance slightly
    }
}

TEST_CASE("batch norm leaves a standardized batch nearly unchanged") {
    Rng rng(13);
    Tensor x = random_tensor({256, 3}, rng);
    for (std::size_t f = 0; f < 3; ++f) {
        double m = 0.0, v = 0.0;
        for (std::size_t b = 0; b < 256; ++b) m += x[b * 3 + f];
        m /= 256.0;
        for (std::size_t b = 0; b < 256; ++b) v += (x[b * 3 + f] - m) * (x[b * 3 + f] - m);
        v /= 256.0;
        for (std::size_t b = 0; b < 256; ++b) x[b * 3 + f] = (x[b * 3 + f] - m) / std::sqrt(v);
    }
    BatchNorm bn(3);
    const Tensor y = bn.forward(x, Mode::Train);
    for (std::size_t i = 0; i < y.numel(); ++i)
        CHECK(y[i] == doctest::Approx(x[i]).epsilon(1e-4));
}

TEST_CASE("batch norm inference uses running statistics and errors when unset") {
    BatchNorm bn(2);
    const Tensor x({3, 2}, {0.0, 1.0, 2.0, 3.0, 4.0, 5.0});
    CHECK_THROWS_WITH_AS(bn.forward(x, Mode::Infer), doctest::Contains("uninitialized"),
                         std::runtime_error);
    bn.forward(x, Mode::Train);
    CHECK_NOTHROW(bn.forward(x, Mode::Infer));

    BatchNorm seeded(2, /*init_running_stats=*/true);
    CHECK_NOTHROW(seeded.forward(x, Mode::Infer));
}

TEST_CASE("batch norm passes gradient checks in both layouts over 20 seeds") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        BatchNorm bn(3);
        const Tensor x2 = random_tensor({6, 3}, rng, 2.0);
        CHECK(gradient_check(bn, x2, Mode::Train, seed * 7) < 1e-4);

        BatchNorm bn3(2);
        const Tensor x3 = random_tensor({3, 2, 5}, rng, 2.0);
        CHECK(gradient_check(bn3, x3, Mode::Train, seed * 13) < 1e-4);
    }
}

TEST_CASE("dilated conv: kernel [1] is the per-channel identity") {
    for (std::size_t d : {1u, 2u, 8u}) {
        Conv1dDilated conv(1, 1, 1, d);
        conv.kernels[0] = 1.0;
        Rng rng(5);
        const Tensor x = random_tensor({2, 1, 9}, rng);
        const Tensor y = conv.forward(x, Mode::Train);
        for (std::size_t i = 0; i < x.numel(); ++i) CHECK(y[i] == x[i]);
    }
}

TEST_CASE("dilated conv: interior taps of k=[1,1], d=2 sum strided samples") {
    Conv1dDilated conv(1, 1, 2, 2);
    conv.kernels[0] = 1.0;
    conv.kernels[1] = 1.0;
    const Tensor x({1, 1, 5}, {1, 2, 3, 4, 5});
    const Tensor y = conv.forward(x, Mode::Train);
    // pad total (k-1)*d = 2, left 1, right 1: y[t] = x[t-1] + x[t+1] (padded)
    CHECK(y[1] == doctest::Approx(4.0)); // 1+3
    CHECK(y[2] == doctest::Approx(6.0)); // 2+4
    CHECK(y[3] == doctest::Approx(8.0)); // 3+5
}

TEST_CASE("dilated conv matches the brute-force oracle on randomized cases") {
    Rng rng(2024);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t k_options[] = {1, 2, 3, 5};
        const std::size_t d_options[] = {1, 2, 4, 8};
        const std::size_t k = k_options[rng.uniform_int(0, 3)];
        const std::size_t d = d_options[rng.uniform_int(0, 3)];
        const std::size_t in_maps = static_cast<std::size_t>(rng.uniform_int(1, 3));
        const std::size_t out_maps = static_cast<std::size_t>(rng.uniform_int(1, 3));
        const std::size_t batch = static_cast<std::size_t>(rng.uniform_int(1, 2));
        const std::size_t T = static_cast<std::size_t>(rng.uniform_int(1, 40));

        Conv1dDilated conv(in_maps, out_maps, k, d);
        conv.init_he_normal(rng);
        for (double& b : conv.bias.values()) b = rng.gaussian(0.0, 0.2);
        const Tensor x = random_tensor({batch, in_maps, T}, rng);

        const Tensor got = conv.forward(x, Mode::Train);
        const Tensor want = conv_oracle(x, conv.kernels, conv.bias, d);
        REQUIRE(got.shape() == want.shape());
        for (std::size_t i = 0; i < got.numel(); ++i)
            CHECK(std::abs(got[i] - want[i]) <= 1e-12);
    }
}

TEST_CASE("dilated conv passes gradient checks over 20 seeds") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        Conv1dDilated conv(2, 2, 3, 2);
        conv.init_he_normal(rng);
        const Tensor x = random_tensor({2, 2, 7}, rng);
        CHECK(gradient_check(conv, x, Mode::Train, seed * 17) < 1e-4);
    }
}

TEST_CASE("avg pool semantics incl. the partial final window") {
    AvgPool1d pool(2);
    const Tensor x({1, 1, 5}, {1, 2, 3, 4, 5});
    const Tensor y = pool.forward(x, Mode::Train);
    REQUIRE(y.dim(2) == 3);
    CHECK(y[0] == doctest::Approx(1.5));
    CHECK(y[1] == doctest::Approx(3.5));
    CHECK(y[2] == doctest::Approx(5.0));
}

TEST_CASE("avg pool with window 1 is the identity; window T is the mean") {
    Rng rng(9);
    const Tensor x = random_tensor({2, 3, 6}, rng);
    AvgPool1d id_pool(1);
    const Tensor y = id_pool.forward(x, Mode::Train);
    for (std::size_t i = 0; i < x.numel(); ++i) CHECK(y[i] == x[i]);

    AvgPool1d full_pool(6);
    const Tensor z = full_pool.forward(x, Mode::Train);
    REQUIRE(z.dim(2) == 1);
    for (std::size_t bm = 0; bm < 6; ++bm) {
        double m = 0.0;
        for (std::size_t t = 0; t < 6; ++t) m += x[bm * 6 + t];
        CHECK(z[bm] == doctest::Approx(m / 6.0));
    }
}

TEST_CASE("avg pool passes gradient checks") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        AvgPool1d pool(3);
        const Tensor x = random_tensor({2, 2, 7}, rng);
        CHECK(gradient_check(pool, x, Mode::Train, seed * 23) < 1e-4);
    }
}

TEST_CASE("residual block passes gradient checks") {
    // resample until no pre-ReLU activation sits near the kink, where central
    // differences are undefined for max(0, x)
    auto kink_safe_input = [](ResidualBlock& block, Rng& rng) {
        for (int attempt = 0; attempt < 100; ++attempt) {
            Tensor x = random_tensor({2, 2, 6}, rng);
            const Tensor left = block.left_bn.forward(block.left_conv.forward(x, Mode::Train),
                                                      Mode::Train);
            const Tensor right = block.right_bn.forward(block.right_conv.forward(x, Mode::Train),
                                                        Mode::Train);
            double closest = 1e300;
            for (std::size_t i = 0; i < left.numel(); ++i)
                closest = std::min(closest, std::abs(left[i] + right[i]));
            if (closest > 0.02) return x;
        }
        FAIL("no kink-safe input found");
        return Tensor({1});
    };

    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed);
        ResidualBlock block(2, 3, 3, 2);
        block.init_he_normal(rng);
        const Tensor x = kink_safe_input(block, rng);
        // composite wiring check; the tolerance is wider than the per-layer
        // 1e-4 because the stacked batch-norm rsqrt inflates the truncation
        // error of central differences when a feature variance is small
        CHECK(gradient_check(block, x, Mode::Train, seed * 29) < 1e-3);
    }
}

TEST_CASE("zeroing the left conv reduces the block to the 1x1 path") {
    Rng rng(77);
    ResidualBlock block(2, 3, 3, 4);
    block.init_he_normal(rng);
    block.left_conv.kernels.fill(0.0);
    block.left_conv.bias.fill(0.0);

    const Tensor x = random_tensor({1, 2, 10}, rng);
    const Tensor y = block.forward(x, Mode::Train);

    // reference: BN(conv1x1(x)) (left path contributes BN(0) = beta = 0)
    Conv1dDilated conv_ref(2, 3, 1, 1);
    conv_ref.kernels = block.right_conv.kernels;
    conv_ref.bias = block.right_conv.bias;
    BatchNorm bn_ref(3);
    Relu relu_ref;
    const Tensor want = relu_ref.forward(bn_ref.forward(conv_ref.forward(x, Mode::Train), Mode::Train), Mode::Train);
    for (std::size_t i = 0; i < y.numel(); ++i)
        CHECK(y[i] == doctest::Approx(want[i]).epsilon(1e-9));
}

TEST_CASE("receptive field of a dilation-doubling stack is 2047 samples") {
    Rng rng(123);
    const std::size_t T = 4096;
    std::vector<std::unique_ptr<Conv1dDilated>> stack;
    std::size_t d = 1;
    for (int i = 0; i < 10; ++i) {
        auto conv = std::make_unique<Conv1dDilated>(1, 1, 3, d);
        conv->init_he_normal(rng);
        conv->bias.fill(0.0);
        stack.push_back(std::move(conv));
        d *= 2;
    }

    Tensor x({1, 1, T});
    x[T / 2] = 1.0;
    Tensor y = x;
    for (auto& conv : stack) y = conv->forward(y, Mode::Train);

    std::size_t lo = T, hi = 0;
    for (std::size_t t = 0; t < T; ++t)
        if (std::abs(y[t]) > 1e-12) {
            lo = std::min(lo, t);
            hi = std::max(hi, t);
        }
    CHECK(hi - lo + 1 == 2047); // 1 + 2*(2^10 - 1)
}

TEST_CASE("model parameter naming and snapshot round-trip") {
    Rng rng(55);
    Model model;
    auto dense = std::make_unique<Dense>(4, 2);
    dense->init_he_normal(rng);
    model.add(std::move(dense));
    model.add(std::make_unique<BatchNorm>(2));
    model.add(std::make_unique<Relu>());

    const auto params = model.params();
    REQUIRE(params.size() == 4); // W, b, gamma, beta
    CHECK(params[0].name == "L0.dense.W");
    CHECK(params[2].name == "L1.batch_norm.gamma");

    const auto snap = model.snapshot();
    const Tensor x = random_tensor({3, 4}, rng);
    model.forward(x, Mode::Train); // mutates running stats
    Tensor grads({3, 2});
    grads.fill(0.1);
    model.zero_grad();
    model.backward(grads);
    AdamOptimizer opt(model, 0.05);
    opt.step();

    model.restore(snap);
    const auto params_after = model.params();
    const auto snap2 = model.snapshot();
    REQUIRE(snap2.size() == snap.size());
    for (std::size_t i = 0; i < snap.size(); ++i)
        for (std::size_t j = 0; j < snap[i].numel(); ++j)
            CHECK(snap2[i][j] == snap[i][j]);
}
