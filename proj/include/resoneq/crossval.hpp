#pragma once

#include "resoneq/dataset.hpp"
#include "resoneq/models.hpp"
#include "resoneq/train.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace resoneq {

// Per-model cross-validation statistics over (repeat, fold) runs.
struct EvalModelStats {
    std::string model_name;
    std::vector<double> run_losses;
    double mean_loss = 0.0;
    double std_loss = 0.0; // sample std (n-1)
    double ci_low = 0.0;   // 95% Student-t interval for the mean
    double ci_high = 0.0;
    double cohens_d_vs_baseline = 0.0; // +inf sentinel when pooled std is 0
    bool degenerate_effect_size = false;
};

struct EvalReport {
    std::vector<EvalModelStats> models; // "baseline" entry always present
    std::size_t folds = 0;
    std::size_t repeats = 0;
};

struct CrossValConfig {
    std::size_t folds = 5;
    std::size_t repeats = 5;
    std::size_t frames_per_test_track = 100;
    std::size_t crops_per_track_per_epoch = 16;
    double percentile_low = 35.0;
    double percentile_high = 65.0;
    double validation_fraction = 0.2; // of the training tracks, for early stopping
    std::uint64_t seed = 0;
    int jobs = 1;
    TrainConfig train;

    void validate() const;
};

// Track-level k-fold cross-validation, repeated with reshuffled partitions
// and fresh parameter initializations. Every architecture (plus the baseline,
// always) is trained and evaluated on identical folds and identical sampled
// test frames. Evaluation is the mean MSBE(l,h) over frames_per_test_track
// random 0.5 s frames of every test track, bounds taken per track.
EvalReport cross_validate(const std::vector<ArchSpec>& archs, const DatasetManifest& manifest,
                          const CrossValConfig& cfg, std::ostream* log = nullptr);

// Aggregates per-run losses into the report statistics. The entry named
// "baseline" is the effect-size reference.
EvalReport report_stats(const std::vector<std::pair<std::string, std::vector<double>>>& runs,
                        std::size_t folds, std::size_t repeats);

struct FitConfig {
    double validation_fraction = 0.2;
    std::size_t crops_per_track_per_epoch = 16;
    double percentile_low = 35.0;
    double percentile_high = 65.0;
    std::uint64_t seed = 0;
    TrainConfig train;
};

// Trains one model on every track of the manifest (a seeded track-level split
// provides the early-stopping validation set). The baseline architecture
// just fits its constant.
TrainedModel fit_on_manifest(const ArchSpec& arch, const DatasetManifest& manifest,
                             const FitConfig& cfg, std::ostream* log = nullptr);

// Fold assignment (track index -> fold) for one repeat; depends only on the
// sorted track ids and the derived seed, not on manifest order.
std::vector<std::size_t> partition_folds(std::size_t n_tracks, std::size_t folds,
                                         std::uint64_t seed, std::size_t repeat);

void write_report_csv(const std::string& path, const EvalReport& report);
void print_report(std::ostream& os, const EvalReport& report);

} // namespace resoneq
