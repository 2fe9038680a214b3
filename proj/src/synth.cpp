#include "resoneq/synth.hpp"

#include "resoneq/eq.hpp"
#include "resoneq/fft.hpp"
#include "resoneq/rng.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

namespace resoneq {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kOracleSaturationDb = 12.0;
constexpr double kRaterSigma = 0.10;
constexpr double kDropProbability = 0.05;

// RBJ peaking EQ: complex response at frequency f
struct PeakingResonator {
    double b0, b1, b2, a0, a1, a2;
    int sample_rate;

    PeakingResonator(double center_hz, double gain_db, double q, int rate) : sample_rate(rate) {
        const double amp = std::pow(10.0, gain_db / 40.0);
        const double w0 = 2.0 * kPi * center_hz / rate;
        const double alpha = std::sin(w0) / (2.0 * q);
        b0 = 1.0 + alpha * amp;
        b1 = -2.0 * std::cos(w0);
        b2 = 1.0 - alpha * amp;
        a0 = 1.0 + alpha / amp;
        a1 = b1;
        a2 = 1.0 - alpha / amp;
    }

    std::complex<double> response(double f) const {
        const std::complex<double> z1 = std::polar(1.0, -2.0 * kPi * f / sample_rate);
        const std::complex<double> z2 = z1 * z1;
        return (b0 + b1 * z1 + b2 * z2) / (a0 + a1 * z1 + a2 * z2);
    }
};

std::string track_id(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "trk%03zu", index);
    return buf;
}

} // namespace

AudioClip synth_track(const SynthConfig& cfg, std::size_t track_index, int* resonator_count_out,
                      int forced_resonator_count) {
    Rng rng(derive_seed(cfg.seed, 0x7aacu, static_cast<std::uint64_t>(track_index)));

    const EqConfig eq_cfg;
    const std::size_t period = eq_cfg.window_length(cfg.sample_rate);
    const std::size_t n_bins = period / 2 + 1;
    const double bin_hz = static_cast<double>(cfg.sample_rate) / static_cast<double>(period);

    // The pink bed must cover the analyzer's whole banded range: any gap
    // would read as a spectral cliff, i.e. a giant fake resonance.
    const double noise_lo = 16.0;

    // per-channel complex line spectra on the period grid
    std::vector<std::vector<std::complex<double>>> spectra(
        2, std::vector<std::complex<double>>(n_bins, {0.0, 0.0}));

    // Pink bed. The right channel is the left rotated by a fixed per-track
    // phase offset: the channels decorrelate (correlation = cos(delta)) while
    // the mono mix keeps an exactly pink, interference-free magnitude
    // spectrum, which is what the resonance detector analyzes.
    const double stereo_delta = rng.uniform(0.7, 2.1); // radians
    for (std::size_t k = 1; k + 1 < n_bins; ++k) {
        const double f = static_cast<double>(k) * bin_hz;
        if (f < noise_lo) continue;
        const double amp = 1.0 / std::sqrt(f);
        const double phase = rng.uniform(0.0, 2.0 * kPi);
        spectra[0][k] = std::polar(amp, phase);
        spectra[1][k] = std::polar(amp, phase + stereo_delta);
    }

    // 2-5 harmonic tone stacks realized as gentle multiplicative boosts of the
    // bed (capped so no single bin reads as a resonance on its own)
    const int n_stacks = static_cast<int>(rng.uniform_int(2, 5));
    std::vector<double> boost(n_bins, 1.0);
    for (int s = 0; s < n_stacks; ++s) {
        const double f0 = std::exp(rng.uniform(std::log(80.0), std::log(2000.0)));
        const auto k0 = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(f0 / bin_hz)));
        const double level = rng.uniform(0.05, 0.10);
        for (std::size_t n = 1; n <= 24; ++n) {
            const std::size_t k = n * k0;
            if (k + 1 >= n_bins) break;
            boost[k] *= 1.0 + level / std::pow(static_cast<double>(n), 0.5);
        }
    }
    for (std::size_t k = 1; k + 1 < n_bins; ++k) {
        const double b = std::min(boost[k], 1.09);
        if (b != 1.0)
            for (auto& spectrum : spectra) spectrum[k] *= b;
    }

    // peaking resonators; identical shaping on both channels
    const int n_resonators = forced_resonator_count >= 0
                                 ? forced_resonator_count
                                 : static_cast<int>(rng.uniform_int(0, 4));
    if (resonator_count_out != nullptr) *resonator_count_out = n_resonators;
    for (int r = 0; r < n_resonators; ++r) {
        const double center = rng.uniform(100.0, 8000.0);
        const double gain_db = rng.uniform(3.0, 18.0);
        const double q = rng.uniform(4.0, 20.0);
        const PeakingResonator resonator(center, gain_db, q, cfg.sample_rate);
        for (std::size_t k = 1; k + 1 < n_bins; ++k) {
            const double f = static_cast<double>(k) * bin_hz;
            const std::complex<double> h = resonator.response(f);
            for (auto& spectrum : spectra) spectrum[k] *= h;
        }
    }

    // one period per channel, tiled to the requested duration
    const auto n_periods = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(cfg.duration_seconds / eq_cfg.window_seconds)));
    RealFft fft(period);
    AudioClip clip;
    clip.sample_rate = cfg.sample_rate;
    clip.channels.assign(2, std::vector<double>(n_periods * period));
    for (std::size_t c = 0; c < 2; ++c) {
        const std::vector<double> base = fft.inverse(spectra[c]);
        for (std::size_t p = 0; p < n_periods; ++p)
            std::copy(base.begin(), base.end(), clip.channels[c].begin() +
                                                    static_cast<std::ptrdiff_t>(p * period));
    }
    return rms_normalize(clip, -20.0);
}

double oracle_base_preference(const AudioClip& track) {
    track.validate();
    // The rated band stops at 10 kHz: the ISO 226 parameterization ends at
    // 12.5 kHz with a steep knee that the detector would otherwise report as
    // a constant pseudo-resonance on any broadband signal.
    EqConfig cfg;
    cfg.f_max = 10000.0;
    EqProcessor proc(cfg, track.sample_rate);
    const std::size_t window = proc.window_length();
    const std::size_t n_windows = track.num_samples() / window;
    if (n_windows == 0)
        throw std::runtime_error("oracle_base_preference: track shorter than one window");

    const std::vector<double> mono = track.mono_mix();
    std::vector<double> frame(window);
    double acc = 0.0;
    for (std::size_t w = 0; w < n_windows; ++w) {
        std::copy(mono.begin() + static_cast<std::ptrdiff_t>(w * window),
                  mono.begin() + static_cast<std::ptrdiff_t>((w + 1) * window), frame.begin());
        const ResonanceProfile profile = proc.frame_resonances(frame);
        acc += *std::max_element(profile.levels_db.begin(), profile.levels_db.end());
    }
    const double mean_max = acc / static_cast<double>(n_windows);
    return std::clamp(mean_max / kOracleSaturationDb, 0.0, 1.0);
}

std::vector<double> oracle_ratings(const AudioClip& track, int n_raters, std::uint64_t seed) {
    if (n_raters < 1) throw std::invalid_argument("oracle_ratings: need at least one rater");
    if (track.duration_seconds() < 3.0)
        throw std::runtime_error("oracle_ratings: track must be at least 3 s");

    const double base = oracle_base_preference(track);
    Rng rng(derive_seed(seed, 0x0babu));
    std::vector<double> ratings;
    ratings.reserve(static_cast<std::size_t>(n_raters));
    for (int r = 0; r < n_raters; ++r) {
        const double value = std::clamp(base + rng.gaussian(0.0, kRaterSigma), 0.0, 1.0);
        const bool dropped = rng.uniform() < kDropProbability;
        if (dropped) continue;
        ratings.push_back(std::round(value * 16.0) / 16.0);
    }
    return ratings;
}

SynthResult synth_generate(const SynthConfig& cfg, const std::string& out_dir) {
    if (cfg.n_tracks < 10)
        throw std::invalid_argument("synth_generate: need at least 10 tracks");
    if (cfg.sample_rate <= 0) throw std::invalid_argument("synth_generate: bad sample rate");
    if (cfg.duration_seconds < 3.0)
        throw std::invalid_argument("synth_generate: tracks must be at least 3 s");

    std::filesystem::create_directories(out_dir);

    SynthResult result;
    result.manifest.provenance = "synthetic seed=" + std::to_string(cfg.seed);
    for (std::size_t i = 0; i < cfg.n_tracks; ++i) {
        int n_resonators = 0;
        const AudioClip clip = synth_track(cfg, i, &n_resonators);
        const std::string id = track_id(i);
        const std::string wav_path =
            (std::filesystem::path(out_dir) / (id + ".wav")).string();
        write_wav(wav_path, clip, WavBitDepth::Float32);

        RatedTrack track;
        track.id = id;
        track.wav_path = wav_path;
        track.ratings =
            oracle_ratings(clip, cfg.n_raters, derive_seed(cfg.seed, 0x0e11u, i));
        result.manifest.entries.push_back(std::move(track));
        result.resonator_counts.push_back(n_resonators);
    }
    save_manifest((std::filesystem::path(out_dir) / "manifest.csv").string(), result.manifest);
    return result;
}

} // namespace resoneq
