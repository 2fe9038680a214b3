#include "resoneq/crossval.hpp"

#include "resoneq/features.hpp"
#include "resoneq/rng.hpp"
#include "resoneq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace resoneq {

void CrossValConfig::validate() const {
    if (folds < 2) throw std::invalid_argument("CrossValConfig: need at least 2 folds");
    if (repeats < 1) throw std::invalid_argument("CrossValConfig: need at least 1 repeat");
    if (frames_per_test_track == 0 || crops_per_track_per_epoch == 0)
        throw std::invalid_argument("CrossValConfig: frame counts must be positive");
    if (validation_fraction <= 0.0 || validation_fraction >= 1.0)
        throw std::invalid_argument("CrossValConfig: validation_fraction must be in (0, 1)");
    if (!(percentile_low <= percentile_high) || percentile_low < 0.0 || percentile_high > 100.0)
        throw std::invalid_argument("CrossValConfig: bad percentile bounds");
    if (jobs < 1) throw std::invalid_argument("CrossValConfig: jobs must be >= 1");
    train.validate();
}

std::vector<std::size_t> partition_folds(std::size_t n_tracks, std::size_t folds,
                                         std::uint64_t seed, std::size_t repeat) {
    std::vector<std::size_t> order(n_tracks);
    for (std::size_t i = 0; i < n_tracks; ++i) order[i] = i;
    Rng rng(derive_seed(seed, 0xf01du, repeat));
    for (std::size_t i = n_tracks; i > 1; --i)
        std::swap(order[i - 1],
                  order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    std::vector<std::size_t> fold_of(n_tracks);
    for (std::size_t rank = 0; rank < n_tracks; ++rank) fold_of[order[rank]] = rank % folds;
    return fold_of;
}

namespace {

struct LoadedTrack {
    std::string id;
    AudioClip audio;
    RatingBounds bounds;  // [P_l, P_h] of the ratings
    double median = 0.0;
};

// Arch-specific window-to-tensor adapter used for both training crops and
// evaluation frames.
Tensor instance_input(const ArchSpec& arch, const AudioClip& window) {
    switch (arch.kind) {
        case ArchSpec::Kind::Ffn: {
            const FeatureVector features = extract_feature_vector(window);
            return Tensor({features.size()}, features);
        }
        case ArchSpec::Kind::Drn:
            return drn_input(window, arch.drn);
        case ArchSpec::Kind::Baseline:
            break;
    }
    throw std::logic_error("instance_input: baseline has no tensor input");
}

// Fresh random crops of the training tracks, regenerated every epoch.
class CropTrainingData : public TrainingData {
public:
    CropTrainingData(const std::vector<LoadedTrack>& tracks, std::vector<std::size_t> track_ids,
                     const ArchSpec& arch, std::size_t crops_per_track, std::uint64_t seed)
        : tracks_(tracks),
          track_ids_(std::move(track_ids)),
          arch_(arch),
          crops_per_track_(crops_per_track),
          seed_(seed) {}

    std::vector<Instance> epoch_instances(int epoch) override {
        std::vector<Instance> instances;
        instances.reserve(track_ids_.size() * crops_per_track_);
        for (const std::size_t t : track_ids_) {
            const LoadedTrack& track = tracks_[t];
            const auto crops =
                sample_frames(track.audio, crops_per_track_,
                              derive_seed(seed_, 0xc409u, t, static_cast<std::uint64_t>(epoch)));
            for (const AudioClip& crop : crops)
                instances.push_back({instance_input(arch_, crop), track.bounds});
        }
        return instances;
    }

private:
    const std::vector<LoadedTrack>& tracks_;
    std::vector<std::size_t> track_ids_;
    ArchSpec arch_;
    std::size_t crops_per_track_;
    std::uint64_t seed_;
};

struct RunTask {
    std::size_t repeat;
    std::size_t fold;
};

// losses indexed [arch][run]; baseline occupies the last slot
struct RunResult {
    std::vector<double> losses;
};

} // namespace

EvalReport report_stats(const std::vector<std::pair<std::string, std::vector<double>>>& runs,
                        std::size_t folds, std::size_t repeats) {
    if (runs.empty()) throw std::invalid_argument("report_stats: no models");
    const std::vector<double>* baseline_losses = nullptr;
    for (const auto& [name, losses] : runs)
        if (name == "baseline") baseline_losses = &losses;
    if (baseline_losses == nullptr)
        throw std::invalid_argument("report_stats: baseline entry required");

    EvalReport report;
    report.folds = folds;
    report.repeats = repeats;
    for (const auto& [name, losses] : runs) {
        if (losses.size() < 2)
            throw std::invalid_argument("report_stats: need at least 2 runs per model");
        EvalModelStats stats;
        stats.model_name = name;
        stats.run_losses = losses;
        stats.mean_loss = mean(losses);
        stats.std_loss = sample_stddev(losses);
        const double t = student_t_critical(0.95, static_cast<int>(losses.size()) - 1);
        const double half = t * stats.std_loss / std::sqrt(static_cast<double>(losses.size()));
        stats.ci_low = stats.mean_loss - half;
        stats.ci_high = stats.mean_loss + half;

        if (name == "baseline") {
            stats.cohens_d_vs_baseline = 0.0;
        } else {
            const double sb = sample_stddev(*baseline_losses);
            const double sm = stats.std_loss;
            const auto nb = static_cast<double>(baseline_losses->size());
            const auto nm = static_cast<double>(losses.size());
            const double pooled =
                std::sqrt(((nb - 1.0) * sb * sb + (nm - 1.0) * sm * sm) / (nb + nm - 2.0));
            if (pooled > 0.0) {
                stats.cohens_d_vs_baseline = (mean(*baseline_losses) - stats.mean_loss) / pooled;
            } else {
                const double diff = mean(*baseline_losses) - stats.mean_loss;
                stats.cohens_d_vs_baseline =
                    diff == 0.0 ? 0.0
                                : std::copysign(std::numeric_limits<double>::infinity(), diff);
                stats.degenerate_effect_size = diff != 0.0;
            }
        }
        report.models.push_back(std::move(stats));
    }
    return report;
}

EvalReport cross_validate(const std::vector<ArchSpec>& archs, const DatasetManifest& manifest,
                          const CrossValConfig& cfg, std::ostream* log) {
    cfg.validate();
    for (const ArchSpec& arch : archs)
        if (arch.kind == ArchSpec::Kind::Baseline)
            throw std::invalid_argument("cross_validate: baseline is always included implicitly");
    if (manifest.entries.size() < cfg.folds)
        throw std::runtime_error("cross_validate: fewer tracks than folds");

    // Load everything up front; order by id so results do not depend on
    // manifest row order.
    std::vector<const RatedTrack*> sorted;
    for (const RatedTrack& t : manifest.entries) sorted.push_back(&t);
    std::sort(sorted.begin(), sorted.end(),
              [](const RatedTrack* a, const RatedTrack* b) { return a->id < b->id; });

    std::vector<LoadedTrack> tracks;
    tracks.reserve(sorted.size());
    for (const RatedTrack* t : sorted) {
        LoadedTrack loaded;
        loaded.id = t->id;
        loaded.audio = read_wav(t->wav_path);
        loaded.bounds = {percentile(t->ratings, cfg.percentile_low),
                         percentile(t->ratings, cfg.percentile_high)};
        loaded.median = percentile(t->ratings, 50.0);
        tracks.push_back(std::move(loaded));
    }
    const std::size_t n_tracks = tracks.size();

    std::vector<RunTask> run_tasks;
    for (std::size_t r = 0; r < cfg.repeats; ++r)
        for (std::size_t f = 0; f < cfg.folds; ++f) run_tasks.push_back({r, f});

    auto execute_run = [&](const RunTask& task) -> RunResult {
        const std::vector<std::size_t> fold_of =
            partition_folds(n_tracks, cfg.folds, cfg.seed, task.repeat);

        std::vector<std::size_t> test_tracks, pool;
        for (std::size_t t = 0; t < n_tracks; ++t)
            (fold_of[t] == task.fold ? test_tracks : pool).push_back(t);

        // hold out part of the training pool to drive early stopping
        std::vector<std::size_t> shuffled_pool = pool;
        Rng val_rng(derive_seed(cfg.seed, 0xa11du, task.repeat, task.fold));
        for (std::size_t i = shuffled_pool.size(); i > 1; --i)
            std::swap(shuffled_pool[i - 1],
                      shuffled_pool[static_cast<std::size_t>(
                          val_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
        std::size_t n_val = static_cast<std::size_t>(
            std::ceil(cfg.validation_fraction * static_cast<double>(shuffled_pool.size())));
        n_val = std::clamp<std::size_t>(n_val, 1, shuffled_pool.size() - 1);
        const std::vector<std::size_t> val_tracks(shuffled_pool.end() - static_cast<std::ptrdiff_t>(n_val),
                                                  shuffled_pool.end());
        const std::vector<std::size_t> train_tracks(shuffled_pool.begin(),
                                                    shuffled_pool.end() - static_cast<std::ptrdiff_t>(n_val));

        // train every architecture on this fold
        std::vector<TrainedModel> models;
        for (std::size_t a = 0; a < archs.size(); ++a) {
            const ArchSpec& arch = archs[a];
            TrainedModel model = TrainedModel::build(
                arch, derive_seed(cfg.seed, 0x131u, task.repeat, task.fold, a));

            CropTrainingData data(tracks, train_tracks, arch, cfg.crops_per_track_per_epoch,
                                  derive_seed(cfg.seed, 0xc0ffu, task.repeat, task.fold, a));
            std::vector<Instance> validation;
            for (const std::size_t t : val_tracks) {
                const auto crops = sample_frames(
                    tracks[t].audio, cfg.crops_per_track_per_epoch,
                    derive_seed(cfg.seed, 0x07a1u, task.repeat, task.fold, t));
                for (const AudioClip& crop : crops)
                    validation.push_back({instance_input(arch, crop), tracks[t].bounds});
            }

            TrainConfig train_cfg = cfg.train;
            train_cfg.seed = derive_seed(cfg.seed, 0x7217u, task.repeat, task.fold, a);
            train_model(*model.net, data, validation, train_cfg);
            models.push_back(std::move(model));
        }

        // baseline constant from the full training pool (train + validation)
        std::vector<double> medians;
        for (const std::size_t t : pool) medians.push_back(tracks[t].median);
        const double constant = mean(medians);

        // evaluation frames: sampled identically for every architecture,
        // streamed one test track at a time
        RunResult result;
        result.losses.assign(archs.size() + 1, 0.0);
        std::size_t n_eval = 0;
        std::vector<Instance> instances;
        for (const std::size_t t : test_tracks) {
            const auto frames =
                sample_frames(tracks[t].audio, cfg.frames_per_test_track,
                              derive_seed(cfg.seed, 0xe7a1u, task.repeat, task.fold, t));
            for (std::size_t a = 0; a < archs.size(); ++a) {
                instances.clear();
                for (const AudioClip& frame : frames)
                    instances.push_back({instance_input(archs[a], frame), tracks[t].bounds});
                result.losses[a] +=
                    evaluate_msbe(*models[a].net, instances) * static_cast<double>(frames.size());
            }
            result.losses[archs.size()] +=
                msbe_instance(constant, tracks[t].bounds).loss * static_cast<double>(frames.size());
            n_eval += frames.size();
        }
        for (double& loss : result.losses) loss /= static_cast<double>(n_eval);
        return result;
    };

    std::vector<RunResult> results(run_tasks.size());
    if (cfg.jobs <= 1) {
        for (std::size_t i = 0; i < run_tasks.size(); ++i) {
            results[i] = execute_run(run_tasks[i]);
            if (log)
                *log << "run " << (i + 1) << "/" << run_tasks.size() << " done" << std::endl;
        }
    } else {
        std::size_t next = 0;
        while (next < run_tasks.size()) {
            const std::size_t batch =
                std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), run_tasks.size() - next);
            std::vector<std::future<RunResult>> futures;
            for (std::size_t j = 0; j < batch; ++j)
                futures.push_back(std::async(std::launch::async, execute_run,
                                             run_tasks[next + j]));
            for (std::size_t j = 0; j < batch; ++j) results[next + j] = futures[j].get();
            next += batch;
            if (log) *log << "runs " << next << "/" << run_tasks.size() << " done" << std::endl;
        }
    }

    std::vector<std::pair<std::string, std::vector<double>>> runs;
    for (std::size_t a = 0; a < archs.size(); ++a) {
        std::vector<double> losses;
        for (const RunResult& r : results) losses.push_back(r.losses[a]);
        runs.push_back({archs[a].kind_name(), std::move(losses)});
    }
    std::vector<double> baseline_losses;
    for (const RunResult& r : results) baseline_losses.push_back(r.losses[archs.size()]);
    runs.push_back({"baseline", std::move(baseline_losses)});

    return report_stats(runs, cfg.folds, cfg.repeats);
}

TrainedModel fit_on_manifest(const ArchSpec& arch, const DatasetManifest& manifest,
                             const FitConfig& cfg, std::ostream* log) {
    if (manifest.entries.empty()) throw std::runtime_error("fit_on_manifest: empty manifest");

    if (arch.kind == ArchSpec::Kind::Baseline) {
        std::vector<RatedTrack> rated = manifest.entries;
        ArchSpec fitted = arch;
        fitted.baseline_constant = baseline_fit(rated).constant;
        return TrainedModel::build(fitted, cfg.seed);
    }

    std::vector<const RatedTrack*> sorted;
    for (const RatedTrack& t : manifest.entries) sorted.push_back(&t);
    std::sort(sorted.begin(), sorted.end(),
              [](const RatedTrack* a, const RatedTrack* b) { return a->id < b->id; });

    std::vector<LoadedTrack> tracks;
    for (const RatedTrack* t : sorted) {
        LoadedTrack loaded;
        loaded.id = t->id;
        loaded.audio = read_wav(t->wav_path);
        loaded.bounds = {percentile(t->ratings, cfg.percentile_low),
                         percentile(t->ratings, cfg.percentile_high)};
        loaded.median = percentile(t->ratings, 50.0);
        tracks.push_back(std::move(loaded));
    }

    std::vector<std::size_t> order(tracks.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(cfg.seed, 0xf17u));
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[static_cast<std::size_t>(
                                    rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    std::size_t n_val = static_cast<std::size_t>(
        std::ceil(cfg.validation_fraction * static_cast<double>(order.size())));
    n_val = std::clamp<std::size_t>(n_val, 1, std::max<std::size_t>(1, order.size() - 1));
    if (order.size() < 2)
        throw std::runtime_error("fit_on_manifest: need at least 2 tracks to train");
    const std::vector<std::size_t> val_tracks(order.end() - static_cast<std::ptrdiff_t>(n_val),
                                              order.end());
    const std::vector<std::size_t> train_tracks(order.begin(),
                                                order.end() - static_cast<std::ptrdiff_t>(n_val));

    TrainedModel model = TrainedModel::build(arch, derive_seed(cfg.seed, 0x9e7u));
    CropTrainingData data(tracks, train_tracks, arch, cfg.crops_per_track_per_epoch,
                          derive_seed(cfg.seed, 0xc0ffu));
    std::vector<Instance> validation;
    for (const std::size_t t : val_tracks) {
        const auto crops = sample_frames(tracks[t].audio, cfg.crops_per_track_per_epoch,
                                         derive_seed(cfg.seed, 0x07a1u, t));
        for (const AudioClip& crop : crops)
            validation.push_back({instance_input(arch, crop), tracks[t].bounds});
    }

    TrainConfig train_cfg = cfg.train;
    train_cfg.seed = derive_seed(cfg.seed, 0x7217u);
    const TrainResult result = train_model(*model.net, data, validation, train_cfg);
    if (log)
        *log << "trained " << arch.kind_name() << ": best val " << result.best_val_loss
             << " at epoch " << result.best_epoch << " (" << result.history.size() << " epochs)"
             << std::endl;
    return model;
}

void write_report_csv(const std::string& path, const EvalReport& report) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("write_report_csv: cannot open '" + path + "'");
    f << "model,mean_msbe,std,ci_low,ci_high,cohens_d_vs_baseline,runs\n";
    f << std::setprecision(17);
    for (const EvalModelStats& m : report.models) {
        f << m.model_name << ',' << m.mean_loss << ',' << m.std_loss << ',' << m.ci_low << ','
          << m.ci_high << ',' << m.cohens_d_vs_baseline << ',';
        for (std::size_t i = 0; i < m.run_losses.size(); ++i)
            f << (i ? ";" : "") << m.run_losses[i];
        f << '\n';
    }
}

void print_report(std::ostream& os, const EvalReport& report) {
    os << "model      mean     std      95% CI              d vs baseline\n";
    for (const EvalModelStats& m : report.models) {
        os << std::left << std::setw(10) << m.model_name << std::right << std::fixed
           << std::setprecision(4) << std::setw(7) << m.mean_loss << "  " << std::setw(7)
           << m.std_loss << "  [" << std::setw(7) << m.ci_low << ", " << std::setw(7) << m.ci_high
           << "]  ";
        if (m.model_name == "baseline")
            os << "-";
        else if (m.degenerate_effect_size)
            os << "inf (degenerate: zero pooled std)";
        else
            os << std::setprecision(3) << m.cohens_d_vs_baseline;
        os << '\n';
    }
    os.unsetf(std::ios::fixed);
}

} // namespace resoneq
