#include "resoneq/cli.hpp"

#include "resoneq/checkpoint.hpp"
#include "resoneq/crossval.hpp"
#include "resoneq/eq.hpp"
#include "resoneq/features.hpp"
#include "resoneq/gp.hpp"
#include "resoneq/stats.hpp"
#include "resoneq/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

namespace resoneq {

namespace {

struct GlobalOptions {
    std::uint64_t seed = 0;
    bool verbose = false;
    std::vector<std::string> config_overrides;
};

std::map<std::string, double> parse_overrides(const std::vector<std::string>& pairs) {
    std::map<std::string, double> values;
    for (const std::string& pair : pairs) {
        const auto eq_pos = pair.find('=');
        if (eq_pos == std::string::npos)
            throw CLI::ValidationError("--config", "expected key=value, got '" + pair + "'");
        const std::string key = pair.substr(0, eq_pos);
        try {
            values[key] = std::stod(pair.substr(eq_pos + 1));
        } catch (const std::exception&) {
            throw CLI::ValidationError("--config", "non-numeric value in '" + pair + "'");
        }
    }
    return values;
}

EqConfig eq_config_from(std::map<std::string, double>& values) {
    EqConfig cfg;
    auto take = [&](const char* key, auto setter) {
        const auto it = values.find(key);
        if (it != values.end()) {
            setter(it->second);
            values.erase(it);
        }
    };
    take("window_seconds", [&](double v) { cfg.window_seconds = v; });
    take("hop_fraction", [&](double v) { cfg.hop_fraction = v; });
    take("n_bands", [&](double v) { cfg.n_bands = static_cast<int>(v); });
    take("phon_level", [&](double v) { cfg.phon_level = v; });
    take("smooth_sigma_bands", [&](double v) { cfg.smooth_sigma_bands = v; });
    take("f_min", [&](double v) { cfg.f_min = v; });
    take("f_max", [&](double v) { cfg.f_max = v; });
    return cfg;
}

TrainConfig train_config_from(std::map<std::string, double>& values) {
    TrainConfig cfg;
    auto take = [&](const char* key, auto setter) {
        const auto it = values.find(key);
        if (it != values.end()) {
            setter(it->second);
            values.erase(it);
        }
    };
    take("learning_rate", [&](double v) { cfg.learning_rate = v; });
    take("batch_size", [&](double v) { cfg.batch_size = static_cast<std::size_t>(v); });
    take("max_epochs", [&](double v) { cfg.max_epochs = static_cast<int>(v); });
    take("early_stop_patience", [&](double v) { cfg.early_stop_patience = static_cast<int>(v); });
    take("min_delta", [&](double v) { cfg.min_delta = v; });
    take("lr_reduce_factor", [&](double v) { cfg.lr_reduce_factor = v; });
    take("lr_reduce_patience", [&](double v) { cfg.lr_reduce_patience = static_cast<int>(v); });
    return cfg;
}

void reject_unknown(const std::map<std::string, double>& leftovers) {
    if (!leftovers.empty())
        throw CLI::ValidationError("--config", "unknown key '" + leftovers.begin()->first + "'");
}

ArchSpec resolve_arch(const std::string& name, const std::string& spec_file,
                      const std::string& fallback) {
    if (!spec_file.empty()) {
        ArchSpec arch = load_arch_spec_file(spec_file);
        if (!name.empty() && arch.kind_name() != name)
            throw CLI::ValidationError("--arch", "conflicts with the --spec file architecture");
        return arch;
    }
    return ArchSpec::from_kind_name(name.empty() ? fallback : name);
}

WavBitDepth bit_depth_from(const std::string& name) {
    if (name == "16") return WavBitDepth::Pcm16;
    if (name == "24") return WavBitDepth::Pcm24;
    if (name == "float32" || name == "f32" || name == "32f") return WavBitDepth::Float32;
    throw CLI::ValidationError("--bits", "expected 16, 24, or float32");
}

SearchSpace load_search_space(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open search space file '" + path + "'");
    nlohmann::json j;
    f >> j;
    SearchSpace space;
    for (const auto& dim : j) {
        SearchDimension d;
        d.name = dim.at("name").get<std::string>();
        const auto kind = dim.at("kind").get<std::string>();
        if (kind == "continuous")
            d.kind = SearchDimension::Kind::Continuous;
        else if (kind == "integer")
            d.kind = SearchDimension::Kind::Integer;
        else if (kind == "log" || kind == "log-continuous")
            d.kind = SearchDimension::Kind::LogContinuous;
        else
            throw std::runtime_error("unknown dimension kind '" + kind + "'");
        d.lower = dim.at("lower").get<double>();
        d.upper = dim.at("upper").get<double>();
        space.dimensions.push_back(d);
    }
    space.validate();
    return space;
}

// Known hyper-parameter names applied onto a base (arch, train) pair.
void apply_hyperparam(const std::string& name, double value, ArchSpec& arch, TrainConfig& train) {
    if (name == "learning_rate") {
        train.learning_rate = value;
    } else if (name == "batch_size") {
        train.batch_size = static_cast<std::size_t>(value);
    } else if (name == "min_delta") {
        train.min_delta = value;
    } else if (name == "early_stop_patience") {
        train.early_stop_patience = static_cast<int>(value);
    } else if (name == "lr_reduce_factor") {
        train.lr_reduce_factor = value;
    } else if (name == "lr_reduce_patience") {
        train.lr_reduce_patience = static_cast<int>(value);
    } else if (name == "n_blocks") {
        if (arch.kind == ArchSpec::Kind::Ffn) {
            const std::size_t hidden = arch.ffn.block_sizes.empty() ? 250 : arch.ffn.block_sizes[0];
            arch.ffn.block_sizes.assign(static_cast<std::size_t>(value), hidden);
        } else {
            arch.drn.n_blocks = static_cast<std::size_t>(value);
            arch.drn.maps_schedule.assign(arch.drn.n_blocks,
                                          arch.drn.maps_schedule.empty()
                                              ? 100
                                              : arch.drn.maps_schedule[0]);
            arch.drn.dilation_schedule.clear();
        }
    } else if (name == "hidden") {
        if (arch.kind != ArchSpec::Kind::Ffn)
            throw std::runtime_error("hyper-parameter 'hidden' applies to the ffn only");
        arch.ffn.block_sizes.assign(arch.ffn.block_sizes.size(),
                                    static_cast<std::size_t>(value));
    } else if (name == "maps") {
        if (arch.kind != ArchSpec::Kind::Drn)
            throw std::runtime_error("hyper-parameter 'maps' applies to the drn only");
        arch.drn.maps_schedule.assign(arch.drn.n_blocks, static_cast<std::size_t>(value));
    } else if (name == "kernel_size") {
        arch.drn.kernel_size = static_cast<std::size_t>(value);
    } else if (name == "pool_window") {
        arch.drn.pool_window = static_cast<std::size_t>(value);
    } else if (name == "final_block_size") {
        arch.drn.final_block_size = static_cast<std::size_t>(value);
    } else {
        throw std::runtime_error("unknown hyper-parameter '" + name + "'");
    }
}

// --- subcommand bodies ---------------------------------------------------

int cmd_eq(const GlobalOptions& global, double alpha, const std::string& in_path,
           const std::string& out_path, const std::string& bits) {
    auto overrides = parse_overrides(global.config_overrides);
    const EqConfig cfg = eq_config_from(overrides);
    reject_unknown(overrides);

    const AudioClip clip = read_wav(in_path);
    if (global.verbose)
        std::cerr << "eq: " << clip.num_channels() << " ch, " << clip.num_samples()
                  << " samples at " << clip.sample_rate << " Hz, alpha " << alpha << "\n";
    const AudioClip out = process_track(clip, alpha, cfg);
    write_wav(out_path, out, bit_depth_from(bits));
    return 0;
}

int cmd_analyze(const GlobalOptions& global, const std::string& in_path,
                const std::string& report_path) {
    auto overrides = parse_overrides(global.config_overrides);
    const EqConfig cfg = eq_config_from(overrides);
    reject_unknown(overrides);

    const AudioClip clip = read_wav(in_path);
    const auto frames = analyze_track(clip, cfg);
    std::ofstream f(report_path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open report file '" + report_path + "'");
    f << "frame_index,time_s,max_resonance_db,mean_resonance_db\n" << std::setprecision(10);
    for (const FrameAnalysis& fa : frames)
        f << fa.frame_index << ',' << fa.time_seconds << ',' << fa.max_resonance_db << ','
          << fa.mean_resonance_db << '\n';
    if (global.verbose) std::cerr << "analyze: " << frames.size() << " frames\n";
    return 0;
}

int cmd_features(const GlobalOptions& global, const std::string& in_path,
                 const std::string& out_path) {
    const AudioClip clip = read_wav(in_path);
    const auto window =
        static_cast<std::size_t>(std::llround(0.5 * clip.sample_rate));
    if (clip.num_samples() < window)
        throw std::runtime_error("features: clip shorter than one 0.5 s window");

    std::ofstream f(out_path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open output file '" + out_path + "'");
    f << "window_index,time_s";
    for (const auto& d : descriptor_names())
        for (const auto& s : statistic_names()) f << ',' << d << '_' << s;
    f << '\n' << std::setprecision(10);

    std::size_t index = 0;
    for (std::size_t start = 0; start + window <= clip.num_samples(); start += window) {
        const FeatureVector features = extract_feature_vector(clip.slice(start, window));
        f << index << ',' << static_cast<double>(start) / clip.sample_rate;
        for (double v : features) f << ',' << v;
        f << '\n';
        ++index;
    }
    if (global.verbose) std::cerr << "features: " << index << " windows\n";
    return 0;
}

int cmd_synth(const GlobalOptions& global, std::size_t n_tracks, double duration, int rate,
              int raters, const std::string& out_dir) {
    SynthConfig cfg;
    cfg.n_tracks = n_tracks;
    cfg.duration_seconds = duration;
    cfg.sample_rate = rate;
    cfg.n_raters = raters;
    cfg.seed = global.seed;
    const SynthResult result = synth_generate(cfg, out_dir);
    if (global.verbose)
        std::cerr << "synth: wrote " << result.manifest.entries.size() << " tracks to " << out_dir
                  << "\n";
    return 0;
}

int cmd_train(const GlobalOptions& global, const std::string& arch_name,
              const std::string& spec_file, const std::string& data_path,
              const std::string& out_path, double val_fraction, std::size_t crops) {
    auto overrides = parse_overrides(global.config_overrides);
    TrainConfig train_cfg = train_config_from(overrides);
    reject_unknown(overrides);

    const ArchSpec arch = resolve_arch(arch_name, spec_file, "ffn");
    const DatasetManifest manifest = load_manifest(data_path);

    FitConfig fit_cfg;
    fit_cfg.validation_fraction = val_fraction;
    fit_cfg.crops_per_track_per_epoch = crops;
    fit_cfg.seed = global.seed;
    fit_cfg.train = train_cfg;
    const TrainedModel model =
        fit_on_manifest(arch, manifest, fit_cfg, global.verbose ? &std::cerr : nullptr);
    save_checkpoint(out_path, model);
    if (global.verbose) std::cerr << "train: checkpoint written to " << out_path << "\n";
    return 0;
}

int cmd_predict(const GlobalOptions& global, const std::string& model_path,
                const std::string& in_path, const std::string& out_csv,
                const std::string& apply_path, const std::string& bits) {
    auto overrides = parse_overrides(global.config_overrides);
    const EqConfig cfg = eq_config_from(overrides);
    reject_unknown(overrides);

    const TrainedModel model = load_checkpoint(model_path);
    const auto predictor = make_predictor(model);
    const AudioClip clip = read_wav(in_path);

    EqProcessor proc(cfg, clip.sample_rate);
    const std::size_t window = proc.window_length();
    const std::size_t hop = proc.hop_length();
    if (clip.num_samples() < window)
        throw std::runtime_error("predict: clip shorter than one window");

    if (!out_csv.empty()) {
        std::ofstream f(out_csv, std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open output file '" + out_csv + "'");
        f << "window_index,time_s,alpha\n" << std::setprecision(10);
        std::size_t index = 0;
        for (std::size_t start = 0; start + window <= clip.num_samples(); start += hop) {
            const double alpha = predictor->predict(clip.slice(start, window));
            f << index << ',' << static_cast<double>(start) / clip.sample_rate << ',' << alpha
              << '\n';
            ++index;
        }
    }

    if (!apply_path.empty()) {
        const FactorProvider provider = [&](std::size_t, const AudioClip& previous) {
            return predictor->predict(previous);
        };
        const AudioClip out = process_track(clip, provider, cfg);
        write_wav(apply_path, out, bit_depth_from(bits));
    }
    return 0;
}

int cmd_evaluate(const GlobalOptions& global, const std::string& arch_name,
                 const std::string& spec_file, const std::string& data_path,
                 const std::string& out_path, std::size_t folds, std::size_t repeats,
                 std::size_t frames, std::size_t crops, int jobs) {
    auto overrides = parse_overrides(global.config_overrides);
    TrainConfig train_cfg = train_config_from(overrides);
    reject_unknown(overrides);

    const DatasetManifest manifest = load_manifest(data_path);

    CrossValConfig cfg;
    cfg.folds = folds;
    cfg.repeats = repeats;
    cfg.frames_per_test_track = frames;
    cfg.crops_per_track_per_epoch = crops;
    cfg.seed = global.seed;
    cfg.jobs = jobs;
    cfg.train = train_cfg;

    std::vector<ArchSpec> archs;
    const ArchSpec arch = resolve_arch(arch_name, spec_file, "baseline");
    if (arch.kind != ArchSpec::Kind::Baseline) archs.push_back(arch);

    const EvalReport report =
        cross_validate(archs, manifest, cfg, global.verbose ? &std::cerr : nullptr);
    if (!out_path.empty()) write_report_csv(out_path, report);
    print_report(std::cout, report);
    return 0;
}

int cmd_hyperopt(const GlobalOptions& global, const std::string& arch_name,
                 const std::string& spec_file, const std::string& space_path,
                 const std::string& data_path, const std::string& out_path, std::size_t budget,
                 std::size_t eval_frames) {
    auto overrides = parse_overrides(global.config_overrides);
    const TrainConfig base_train = train_config_from(overrides);
    reject_unknown(overrides);

    const ArchSpec base_arch = resolve_arch(arch_name, spec_file, "ffn");
    if (base_arch.kind == ArchSpec::Kind::Baseline)
        throw CLI::ValidationError("--arch", "hyperopt needs a trainable architecture");
    const SearchSpace space = load_search_space(space_path);
    const DatasetManifest manifest = load_manifest(data_path);

    // seeded track-level split: ~75% optimization-train, 25% optimization-val
    std::vector<std::size_t> order(manifest.entries.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(global.seed, 0x40b7u));
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[static_cast<std::size_t>(
                                    rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    const std::size_t n_val = std::max<std::size_t>(1, order.size() / 4);
    if (order.size() < 4) throw std::runtime_error("hyperopt: need at least 4 tracks");

    DatasetManifest train_manifest, val_manifest;
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < order.size() - n_val ? train_manifest : val_manifest)
            .entries.push_back(manifest.entries[order[i]]);

    std::size_t iteration = 0;
    const auto objective = [&](const std::vector<double>& params) {
        ArchSpec arch = base_arch;
        TrainConfig train_cfg = base_train;
        for (std::size_t i = 0; i < params.size(); ++i)
            apply_hyperparam(space.dimensions[i].name, params[i], arch, train_cfg);

        FitConfig fit_cfg;
        fit_cfg.seed = derive_seed(global.seed, 0x0417u, iteration);
        fit_cfg.train = train_cfg;
        const TrainedModel model = fit_on_manifest(arch, train_manifest, fit_cfg,
                                                   global.verbose ? &std::cerr : nullptr);
        const auto predictor = make_predictor(model);

        double loss = 0.0;
        std::size_t count = 0;
        for (std::size_t t = 0; t < val_manifest.entries.size(); ++t) {
            const RatedTrack& track = val_manifest.entries[t];
            const AudioClip audio = read_wav(track.wav_path);
            const RatingBounds bounds = {percentile(track.ratings, 35.0),
                                         percentile(track.ratings, 65.0)};
            for (const AudioClip& frame :
                 sample_frames(audio, eval_frames, derive_seed(global.seed, 0xf4a3u, t))) {
                loss += msbe_instance(predictor->predict(frame), bounds).loss;
                ++count;
            }
        }
        ++iteration;
        return loss / static_cast<double>(count);
    };

    const GpConfig gp_cfg;
    const OptimizeResult result = optimize(objective, space, budget, gp_cfg, global.seed);

    std::ofstream f(out_path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open output file '" + out_path + "'");
    f << "iteration";
    for (const SearchDimension& d : space.dimensions) f << ',' << d.name;
    f << ",loss\n" << std::setprecision(10);
    for (std::size_t i = 0; i < result.history.size(); ++i) {
        f << i;
        for (double v : result.decoded[i]) f << ',' << v;
        f << ',' << result.history[i].loss << '\n';
    }

    std::cout << "best loss " << result.best_loss << " at";
    for (std::size_t i = 0; i < result.best_point.size(); ++i)
        std::cout << ' ' << space.dimensions[i].name << '=' << result.best_point[i];
    std::cout << '\n';
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"resonance equalization toolkit"};
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--seed", global.seed, "master random seed")->capture_default_str();
    app.add_flag("--verbose", global.verbose, "log progress to stderr");
    app.add_option("--config", global.config_overrides,
                   "key=value overrides for analysis/training configuration");

    // eq
    auto* eq_cmd = app.add_subcommand("eq", "attenuate resonances with a fixed factor");
    double alpha = 0.0;
    std::string eq_in, eq_out, eq_bits = "float32";
    eq_cmd->add_option("--alpha", alpha, "attenuation factor in [0,1]")
        ->required()
        ->check(CLI::Range(0.0, 1.0));
    eq_cmd->add_option("input", eq_in, "input WAV")->required();
    eq_cmd->add_option("output", eq_out, "output WAV")->required();
    eq_cmd->add_option("--bits", eq_bits, "output depth: 16, 24, float32")
        ->capture_default_str();

    // analyze
    auto* an_cmd = app.add_subcommand("analyze", "per-frame resonance report");
    std::string an_in, an_report;
    an_cmd->add_option("input", an_in, "input WAV")->required();
    an_cmd->add_option("--report", an_report, "output CSV")->required();

    // features
    auto* fe_cmd = app.add_subcommand("features", "descriptor-summary feature vectors");
    std::string fe_in, fe_out;
    fe_cmd->add_option("input", fe_in, "input WAV")->required();
    fe_cmd->add_option("--out", fe_out, "output CSV")->required();

    // synth
    auto* sy_cmd = app.add_subcommand("synth", "generate the synthetic rated corpus");
    std::size_t sy_n = 60;
    double sy_duration = 4.0;
    int sy_rate = 44100, sy_raters = 15;
    std::string sy_out;
    sy_cmd->add_option("--n", sy_n, "number of tracks")->capture_default_str();
    sy_cmd->add_option("--duration", sy_duration, "track length in seconds")
        ->capture_default_str();
    sy_cmd->add_option("--rate", sy_rate, "sample rate")->capture_default_str();
    sy_cmd->add_option("--raters", sy_raters, "simulated raters per track")
        ->capture_default_str();
    sy_cmd->add_option("--out", sy_out, "output directory")->required();

    // train
    auto* tr_cmd = app.add_subcommand("train", "train a predictor on a manifest");
    std::string tr_arch, tr_spec, tr_data, tr_out;
    double tr_val_fraction = 0.2;
    std::size_t tr_crops = 16;
    tr_cmd->add_option("--arch", tr_arch, "ffn | drn | baseline (default ffn)");
    tr_cmd->add_option("--spec", tr_spec, "architecture spec JSON file");
    tr_cmd->add_option("--data", tr_data, "manifest CSV")->required();
    tr_cmd->add_option("--out", tr_out, "checkpoint path")->required();
    tr_cmd->add_option("--val-fraction", tr_val_fraction, "held-out track fraction")
        ->capture_default_str();
    tr_cmd->add_option("--crops", tr_crops, "training crops per track per epoch")
        ->capture_default_str();

    // predict
    auto* pr_cmd = app.add_subcommand("predict", "per-window attenuation factors");
    std::string pr_model, pr_in, pr_out, pr_apply, pr_bits = "float32";
    pr_cmd->add_option("--model", pr_model, "checkpoint path")->required();
    pr_cmd->add_option("input", pr_in, "input WAV")->required();
    pr_cmd->add_option("--out", pr_out, "per-window CSV output");
    pr_cmd->add_option("--apply", pr_apply, "write corrected audio to this WAV");
    pr_cmd->add_option("--bits", pr_bits, "output depth for --apply")->capture_default_str();

    // evaluate
    auto* ev_cmd = app.add_subcommand("evaluate", "cross-validated comparison vs the baseline");
    std::string ev_arch, ev_spec, ev_data, ev_out;
    std::size_t ev_folds = 5, ev_repeats = 5, ev_frames = 100, ev_crops = 16;
    int ev_jobs = 1;
    ev_cmd->add_option("--arch", ev_arch, "ffn | drn | baseline (default baseline)");
    ev_cmd->add_option("--spec", ev_spec, "architecture spec JSON file");
    ev_cmd->add_option("--data", ev_data, "manifest CSV")->required();
    ev_cmd->add_option("--out", ev_out, "report CSV output");
    ev_cmd->add_option("--folds", ev_folds, "cross-validation folds")->capture_default_str();
    ev_cmd->add_option("--repeats", ev_repeats, "partition repeats")->capture_default_str();
    ev_cmd->add_option("--frames", ev_frames, "evaluation frames per test track")
        ->capture_default_str();
    ev_cmd->add_option("--crops", ev_crops, "training crops per track per epoch")
        ->capture_default_str();
    ev_cmd->add_option("--jobs", ev_jobs, "parallel fold workers")->capture_default_str();

    // hyperopt
    auto* hy_cmd = app.add_subcommand("hyperopt", "GP-UCB hyper-parameter search");
    std::string hy_arch, hy_spec, hy_space, hy_data, hy_out;
    std::size_t hy_budget = 25, hy_frames = 50;
    hy_cmd->add_option("--arch", hy_arch, "ffn | drn (default ffn)");
    hy_cmd->add_option("--spec", hy_spec, "architecture spec JSON file");
    hy_cmd->add_option("--space", hy_space, "search space JSON file")->required();
    hy_cmd->add_option("--data", hy_data, "manifest CSV")->required();
    hy_cmd->add_option("--budget", hy_budget, "objective evaluations")->capture_default_str();
    hy_cmd->add_option("--frames", hy_frames, "validation frames per track")
        ->capture_default_str();
    hy_cmd->add_option("--out", hy_out, "history CSV output")->required();

    std::vector<std::string> argv_storage;
    argv_storage.push_back("resoneq");
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const std::string& a : argv_storage) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (eq_cmd->parsed()) return cmd_eq(global, alpha, eq_in, eq_out, eq_bits);
        if (an_cmd->parsed()) return cmd_analyze(global, an_in, an_report);
        if (fe_cmd->parsed()) return cmd_features(global, fe_in, fe_out);
        if (sy_cmd->parsed())
            return cmd_synth(global, sy_n, sy_duration, sy_rate, sy_raters, sy_out);
        if (tr_cmd->parsed())
            return cmd_train(global, tr_arch, tr_spec, tr_data, tr_out, tr_val_fraction, tr_crops);
        if (pr_cmd->parsed()) return cmd_predict(global, pr_model, pr_in, pr_out, pr_apply, pr_bits);
        if (ev_cmd->parsed())
            return cmd_evaluate(global, ev_arch, ev_spec, ev_data, ev_out, ev_folds, ev_repeats,
                                ev_frames, ev_crops, ev_jobs);
        if (hy_cmd->parsed())
            return cmd_hyperopt(global, hy_arch, hy_spec, hy_space, hy_data, hy_out, hy_budget,
                                hy_frames);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 2;
    }
    return 1;
}

} // namespace resoneq
