#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "resoneq/models.hpp"
#include "resoneq/rng.hpp"
#include "resoneq/stats.hpp"
#include "resoneq/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

using namespace resoneq;

TEST_CASE("msbe is zero inside the bounds and quadratic outside") {
    const RatingBounds bounds{0.35, 0.65};
    CHECK(msbe_instance(0.5, bounds).loss == 0.0);
    CHECK(msbe_instance(0.35, bounds).loss == 0.0);
    CHECK(msbe_instance(0.65, bounds).loss == 0.0);
    CHECK(msbe_instance(0.75, bounds).loss == doctest::Approx(0.01));   // (0.10)^2
    CHECK(msbe_instance(0.20, bounds).loss == doctest::Approx(0.0225)); // (-0.15)^2
}

TEST_CASE("msbe reduces to squared error when lo == hi") {
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
        const double t = rng.uniform();
        const double f = rng.uniform(-0.5, 1.5);
        const RatingBounds bounds{t, t};
        CHECK(msbe_instance(f, bounds).loss == doctest::Approx((f - t) * (f - t)));
    }
}

TEST_CASE("msbe is continuously differentiable at the bound crossings") {
    const RatingBounds bounds{0.3, 0.7};
    const double eps = 1e-7;
    for (double crossing : {0.3, 0.7}) {
        const double g_below = msbe_instance(crossing - eps, bounds).grad;
        const double g_above = msbe_instance(crossing + eps, bounds).grad;
        CHECK(std::abs(g_below - g_above) < 1e-5);
    }
    // analytic gradient matches finite differences everywhere
    for (double f : {0.1, 0.3, 0.5, 0.7, 0.9, 1.2, -0.2}) {
        const double num = (msbe_instance(f + eps, bounds).loss -
                            msbe_instance(f - eps, bounds).loss) / (2.0 * eps);
        CHECK(msbe_instance(f, bounds).grad == doctest::Approx(num).epsilon(1e-4));
    }
}

TEST_CASE("percentile uses linear interpolation between closest ranks") {
    const std::vector<double> v = {0.0, 0.25, 0.5, 0.75, 1.0};
    CHECK(percentile(v, 35.0) == doctest::Approx(0.35)); // rank 1.4
    CHECK(percentile(v, 65.0) == doctest::Approx(0.65)); // rank 2.6
    CHECK(percentile(v, 0.0) == 0.0);
    CHECK(percentile(v, 100.0) == 1.0);
    CHECK(percentile({0.42}, 35.0) == 0.42);
    CHECK_THROWS_AS(percentile({}, 50.0), std::invalid_argument);
}

TEST_CASE("percentile matches an independent order-statistic computation") {
    Rng rng(99);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 40));
        std::vector<double> values(n);
        for (double& v : values) v = rng.uniform();
        const double p = rng.uniform(0.0, 100.0);

        // reference: sort a copy, take floor/ceil ranks, lerp
        std::vector<double> sorted = values;
        std::sort(sorted.begin(), sorted.end());
        const double rank = (static_cast<double>(n) - 1.0) * p / 100.0;
        const std::size_t lo = static_cast<std::size_t>(std::floor(rank));
        const std::size_t hi = std::min(n - 1, lo + 1);
        const double want = sorted[lo] + (rank - std::floor(rank)) * (sorted[hi] - sorted[lo]);

        CHECK(percentile(values, p) == doctest::Approx(want).epsilon(1e-12));
    }
}

namespace {

FixedTrainingData single_instance_data(Rng& rng) {
    Tensor input({8});
    for (double& v : input.values()) v = rng.gaussian(0.0, 1.0);
    return FixedTrainingData({{input, {0.7, 0.7}}});
}

Model tiny_model(std::uint64_t seed) {
    FfnSpec spec;
    spec.input_dim = 8;
    spec.block_sizes = {8};
    return build_ffn(spec, seed);
}

} // namespace

TEST_CASE("a capacity-adequate model overfits a single instance") {
    Rng rng(5);
    FixedTrainingData data = single_instance_data(rng);
    Model model = tiny_model(1);

    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.batch_size = 1;
    cfg.max_epochs = 200;
    cfg.early_stop_patience = 200;
    cfg.lr_reduce_patience = 50;
    cfg.seed = 42;

    const auto instances = data.epoch_instances(0);
    const TrainResult result = train_model(model, data, instances, cfg);
    REQUIRE(!result.history.empty());
    CHECK(result.best_val_loss < 1e-3);
}

TEST_CASE("training is bit-deterministic given the seed") {
    auto run = [] {
        Rng rng(5);
        FixedTrainingData data = single_instance_data(rng);
        Model model = tiny_model(9);
        TrainConfig cfg;
        cfg.learning_rate = 0.01;
        cfg.batch_size = 1;
        cfg.max_epochs = 15;
        cfg.early_stop_patience = 15;
        cfg.seed = 7;
        train_model(model, data, data.epoch_instances(0), cfg);
        return model.snapshot();
    };
    const auto a = run();
    const auto b = run();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].numel(); ++j) REQUIRE(a[i][j] == b[i][j]);
}

TEST_CASE("early stopping fires on a converged model") {
    Rng rng(5);
    FixedTrainingData data = single_instance_data(rng);
    Model model = tiny_model(3);

    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.batch_size = 1;
    cfg.max_epochs = 500;
    cfg.early_stop_patience = 1;
    cfg.min_delta = 1e-3;
    cfg.seed = 3;

    const TrainResult result = train_model(model, data, data.epoch_instances(0), cfg);
    CHECK(result.history.size() < 500);
}

TEST_CASE("learning-rate reduction kicks in on plateaus") {
    Rng rng(5);
    FixedTrainingData data = single_instance_data(rng);
    Model model = tiny_model(4);

    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.batch_size = 1;
    cfg.max_epochs = 300;
    cfg.early_stop_patience = 40;
    cfg.lr_reduce_patience = 2;
    cfg.lr_reduce_factor = 0.5;
    cfg.min_delta = 1e-9;
    cfg.seed = 3;

    const TrainResult result = train_model(model, data, data.epoch_instances(0), cfg);
    double final_lr = result.history.back().learning_rate;
    CHECK(final_lr < 0.05);
}

TEST_CASE("divergence raises an error naming the epoch") {
    Rng rng(5);
    FixedTrainingData data = single_instance_data(rng);
    Model model = tiny_model(6);
    // poison the head bias so the predictions (and the loss) go non-finite
    auto params = model.params();
    for (const ParamRef& p : params)
        if (p.name == "L3.dense.b") p.value->fill(std::numeric_limits<double>::infinity());

    TrainConfig cfg;
    cfg.batch_size = 1;
    cfg.max_epochs = 5;
    cfg.seed = 1;
    try {
        train_model(model, data, data.epoch_instances(0), cfg);
        FAIL("expected TrainingDivergence");
    } catch (const TrainingDivergence& e) {
        CHECK(e.epoch() == 0);
    }
}

TEST_CASE("adam determinism: identical gradient streams give identical parameters") {
    auto run = [] {
        Model model;
        auto dense = std::make_unique<Dense>(2, 1);
        dense->weights[0] = 0.5;
        dense->weights[1] = -0.25;
        model.add(std::move(dense));
        AdamOptimizer opt(model, 0.01);
        for (int step = 0; step < 50; ++step) {
            model.zero_grad();
            const Tensor x({1, 2}, {1.0, 2.0});
            model.forward(x, Mode::Train);
            model.backward(Tensor({1, 1}, {0.3}));
            opt.step();
        }
        return model.snapshot();
    };
    const auto a = run();
    const auto b = run();
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].numel(); ++j) REQUIRE(a[i][j] == b[i][j]);
}

TEST_CASE("student-t critical values match reference tables") {
    CHECK(student_t_critical(0.95, 2) == doctest::Approx(4.302653).epsilon(1e-5));
    CHECK(student_t_critical(0.95, 4) == doctest::Approx(2.776445).epsilon(1e-5));
    CHECK(student_t_critical(0.95, 9) == doctest::Approx(2.262157).epsilon(1e-5));
    CHECK(student_t_critical(0.95, 24) == doctest::Approx(2.063899).epsilon(1e-5));
}
