#pragma once

#include "resoneq/audio.hpp"
#include "resoneq/layers.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace resoneq {

struct RatedTrack; // dataset.hpp

// Feature-vector regressor: [dense -> BN -> ReLU] blocks plus a linear head.
struct FfnSpec {
    std::vector<std::size_t> block_sizes = {500, 250, 250};
    std::size_t input_dim = 182;

    void validate() const;
    std::size_t parameter_count() const;
};

// Raw-waveform regressor: residual blocks with dilated convolutions, average
// pooling over time, one standard block, linear head.
struct DrnSpec {
    std::size_t n_blocks = 10;
    std::vector<std::size_t> maps_schedule;     // empty -> low/mid/high thirds 100/100/300
    std::size_t kernel_size = 3;
    std::vector<std::size_t> dilation_schedule; // empty -> 1, 2, 4, ...
    std::size_t pool_window = 300;
    std::size_t final_block_size = 10;
    std::size_t input_channels = 2;
    std::size_t input_length = 11025; // 0.5 s at 22050 Hz

    void validate() const;
    std::vector<std::size_t> resolved_maps() const;
    std::vector<std::size_t> resolved_dilations() const;
    std::size_t pooled_length() const { return (input_length + pool_window - 1) / pool_window; }
    std::size_t parameter_count() const;
};

// Input-independent predictor: the mean of the per-track median ratings seen
// during fitting.
struct BaselineModel {
    double constant = 0.0;
};

BaselineModel baseline_fit(const std::vector<RatedTrack>& train_tracks);
double baseline_predict(const BaselineModel& model);

Model build_ffn(const FfnSpec& spec, std::uint64_t seed);
Model build_drn(const DrnSpec& spec, std::uint64_t seed);

// Architecture selector carried in checkpoints and config files.
struct ArchSpec {
    enum class Kind { Ffn, Drn, Baseline };
    Kind kind = Kind::Ffn;
    FfnSpec ffn;
    DrnSpec drn;
    double baseline_constant = 0.0;

    std::string kind_name() const;
    static ArchSpec from_kind_name(const std::string& name);
};

// A built (possibly trained) model plus everything needed to run and persist it.
struct TrainedModel {
    ArchSpec arch;
    std::uint64_t seed = 0;
    std::shared_ptr<Model> net; // null for the baseline

    static TrainedModel build(const ArchSpec& arch, std::uint64_t seed);
};

// Window-level attenuation prediction: arch-specific preprocessing, forward
// pass in inference mode, output clamped to [0, 1].
class Predictor {
public:
    virtual ~Predictor() = default;
    virtual double predict(const AudioClip& window) = 0;
};

std::unique_ptr<Predictor> make_predictor(const TrainedModel& model);

// Convenience wrapper for a single window.
double predict_factor(const TrainedModel& model, const AudioClip& window);

// DRN input adapter: resample to 22050 Hz, exactly input_length samples,
// mono duplicated across both channels. Shape [channels, length].
Tensor drn_input(const AudioClip& window, const DrnSpec& spec);

} // namespace resoneq
