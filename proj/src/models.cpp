#include "resoneq/models.hpp"

#include "resoneq/dataset.hpp"
#include "resoneq/features.hpp"
#include "resoneq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace resoneq {

void FfnSpec::validate() const {
    if (block_sizes.empty()) throw std::invalid_argument("FfnSpec: need at least one block");
    for (std::size_t s : block_sizes)
        if (s == 0) throw std::invalid_argument("FfnSpec: block sizes must be positive");
    if (input_dim == 0) throw std::invalid_argument("FfnSpec: input_dim must be positive");
}

std::size_t FfnSpec::parameter_count() const {
    validate();
    std::size_t n = 0;
    std::size_t in = input_dim;
    for (std::size_t h : block_sizes) {
        n += in * h + h; // dense
        n += 2 * h;      // batch-norm gamma/beta
        in = h;
    }
    n += in * 1 + 1; // head
    return n;
}

void DrnSpec::validate() const {
    if (n_blocks == 0) throw std::invalid_argument("DrnSpec: need at least one block");
    if (!maps_schedule.empty() && maps_schedule.size() != n_blocks)
        throw std::invalid_argument("DrnSpec: maps_schedule length must equal n_blocks");
    if (!dilation_schedule.empty() && dilation_schedule.size() != n_blocks)
        throw std::invalid_argument("DrnSpec: dilation_schedule length must equal n_blocks");
    for (std::size_t d : dilation_schedule)
        if (d == 0) throw std::invalid_argument("DrnSpec: dilations must be >= 1");
    for (std::size_t m : maps_schedule)
        if (m == 0) throw std::invalid_argument("DrnSpec: map counts must be positive");
    if (kernel_size == 0 || pool_window == 0 || final_block_size == 0 || input_channels == 0 ||
        input_length == 0)
        throw std::invalid_argument("DrnSpec: sizes must be positive");
}

std::vector<std::size_t> DrnSpec::resolved_maps() const {
    if (!maps_schedule.empty()) return maps_schedule;
    // low/mid/high thirds of the stack at 100/100/300 maps
    std::vector<std::size_t> maps(n_blocks);
    const std::size_t low = n_blocks / 3;
    const std::size_t mid = 2 * (n_blocks / 3);
    for (std::size_t i = 0; i < n_blocks; ++i)
        maps[i] = i < low ? 100 : (i < mid ? 100 : 300);
    return maps;
}

std::vector<std::size_t> DrnSpec::resolved_dilations() const {
    if (!dilation_schedule.empty()) return dilation_schedule;
    std::vector<std::size_t> dil(n_blocks);
    std::size_t d = 1;
    for (std::size_t i = 0; i < n_blocks; ++i) {
        dil[i] = d;
        d *= 2;
    }
    return dil;
}

std::size_t DrnSpec::parameter_count() const {
    validate();
    const auto maps = resolved_maps();
    std::size_t n = 0;
    std::size_t in = input_channels;
    for (std::size_t b = 0; b < n_blocks; ++b) {
        const std::size_t out = maps[b];
        n += out * in * kernel_size + out; // left conv
        n += 2 * out;                      // left BN
        n += out * in * 1 + out;           // right 1x1 conv
        n += 2 * out;                      // right BN
        in = out;
    }
    const std::size_t flat = in * pooled_length();
    n += flat * final_block_size + final_block_size; // standard block dense
    n += 2 * final_block_size;                       // BN
    n += final_block_size * 1 + 1;                   // head
    return n;
}

Model build_ffn(const FfnSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(derive_seed(seed, 0xffu));
    Model model;
    std::size_t in = spec.input_dim;
    for (std::size_t h : spec.block_sizes) {
        auto dense = std::make_unique<Dense>(in, h);
        dense->init_he_normal(rng);
        model.add(std::move(dense));
        model.add(std::make_unique<BatchNorm>(h, /*init_running_stats=*/true));
        model.add(std::make_unique<Relu>());
        in = h;
    }
    auto head = std::make_unique<Dense>(in, 1);
    head->init_he_normal(rng);
    model.add(std::move(head));
    return model;
}

Model build_drn(const DrnSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(derive_seed(seed, 0xd0u));
    Model model;
    const auto maps = spec.resolved_maps();
    const auto dilations = spec.resolved_dilations();
    std::size_t in = spec.input_channels;
    for (std::size_t b = 0; b < spec.n_blocks; ++b) {
        auto block = std::make_unique<ResidualBlock>(in, maps[b], spec.kernel_size, dilations[b],
                                                     /*init_running_stats=*/true);
        block->init_he_normal(rng);
        model.add(std::move(block));
        in = maps[b];
    }
    model.add(std::make_unique<AvgPool1d>(spec.pool_window));
    model.add(std::make_unique<Flatten>());

    const std::size_t flat = in * spec.pooled_length();
    auto dense = std::make_unique<Dense>(flat, spec.final_block_size);
    dense->init_he_normal(rng);
    model.add(std::move(dense));
    model.add(std::make_unique<BatchNorm>(spec.final_block_size, /*init_running_stats=*/true));
    model.add(std::make_unique<Relu>());
    auto head = std::make_unique<Dense>(spec.final_block_size, 1);
    head->init_he_normal(rng);
    model.add(std::move(head));
    return model;
}

BaselineModel baseline_fit(const std::vector<RatedTrack>& train_tracks) {
    if (train_tracks.empty()) throw std::invalid_argument("baseline_fit: empty training set");
    std::vector<double> medians;
    medians.reserve(train_tracks.size());
    for (const RatedTrack& track : train_tracks)
        medians.push_back(percentile(track.ratings, 50.0));
    const double constant = mean(medians);
    if (constant < 0.0 || constant > 1.0)
        throw std::runtime_error("baseline_fit: constant outside [0, 1]");
    return {constant};
}

double baseline_predict(const BaselineModel& model) { return model.constant; }

std::string ArchSpec::kind_name() const {
    switch (kind) {
        case Kind::Ffn: return "ffn";
        case Kind::Drn: return "drn";
        case Kind::Baseline: return "baseline";
    }
    return "ffn";
}

ArchSpec ArchSpec::from_kind_name(const std::string& name) {
    ArchSpec spec;
    if (name == "ffn")
        spec.kind = Kind::Ffn;
    else if (name == "drn")
        spec.kind = Kind::Drn;
    else if (name == "baseline")
        spec.kind = Kind::Baseline;
    else
        throw std::invalid_argument("unknown architecture '" + name + "'");
    return spec;
}

TrainedModel TrainedModel::build(const ArchSpec& arch, std::uint64_t seed) {
    TrainedModel m;
    m.arch = arch;
    m.seed = seed;
    switch (arch.kind) {
        case ArchSpec::Kind::Ffn:
            m.net = std::make_shared<Model>(build_ffn(arch.ffn, seed));
            break;
        case ArchSpec::Kind::Drn:
            m.net = std::make_shared<Model>(build_drn(arch.drn, seed));
            break;
        case ArchSpec::Kind::Baseline:
            break;
    }
    return m;
}

Tensor drn_input(const AudioClip& window, const DrnSpec& spec) {
    window.validate();
    AudioClip prepared = window.sample_rate == 22050 ? window : resample(window, 22050);

    Tensor x({spec.input_channels, spec.input_length});
    for (std::size_t c = 0; c < spec.input_channels; ++c) {
        const std::vector<double>& src =
            prepared.channels[std::min(c, prepared.num_channels() - 1)];
        for (std::size_t i = 0; i < spec.input_length; ++i)
            x[c * spec.input_length + i] = i < src.size() ? src[i] : 0.0;
    }
    return x;
}

namespace {

class FfnPredictor : public Predictor {
public:
    explicit FfnPredictor(TrainedModel model) : model_(std::move(model)) {}
    double predict(const AudioClip& window) override {
        const FeatureVector features = extract_feature_vector(window);
        Tensor x({1, features.size()}, features);
        const Tensor y = model_.net->forward(x, Mode::Infer);
        return std::clamp(y[0], 0.0, 1.0);
    }

private:
    TrainedModel model_;
};

class DrnPredictor : public Predictor {
public:
    explicit DrnPredictor(TrainedModel model) : model_(std::move(model)) {}
    double predict(const AudioClip& window) override {
        Tensor x = drn_input(window, model_.arch.drn);
        std::vector<std::size_t> shape = {1};
        shape.insert(shape.end(), x.shape().begin(), x.shape().end());
        const Tensor y = model_.net->forward(x.reshaped(shape), Mode::Infer);
        return std::clamp(y[0], 0.0, 1.0);
    }

private:
    TrainedModel model_;
};

class BaselinePredictor : public Predictor {
public:
    explicit BaselinePredictor(double constant) : constant_(std::clamp(constant, 0.0, 1.0)) {}
    double predict(const AudioClip&) override { return constant_; }

private:
    double constant_;
};

} // namespace

std::unique_ptr<Predictor> make_predictor(const TrainedModel& model) {
    switch (model.arch.kind) {
        case ArchSpec::Kind::Ffn:
            if (!model.net) throw std::invalid_argument("make_predictor: missing network");
            return std::make_unique<FfnPredictor>(model);
        case ArchSpec::Kind::Drn:
            if (!model.net) throw std::invalid_argument("make_predictor: missing network");
            return std::make_unique<DrnPredictor>(model);
        case ArchSpec::Kind::Baseline:
            return std::make_unique<BaselinePredictor>(model.arch.baseline_constant);
    }
    throw std::logic_error("make_predictor: unreachable");
}

double predict_factor(const TrainedModel& model, const AudioClip& window) {
    return make_predictor(model)->predict(window);
}

} // namespace resoneq
