#include "resoneq/eq.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace resoneq {

namespace {

constexpr double kDbFloor = -120.0;
constexpr double kPi = 3.14159265358979323846;

double to_db(double power) {
    return power > 0.0 ? std::max(kDbFloor, 10.0 * std::log10(power)) : kDbFloor;
}

// periodic Hann
std::vector<double> hann_window(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n));
    return w;
}

std::vector<double> sqrt_hann_window(std::size_t n) {
    std::vector<double> w = hann_window(n);
    for (double& v : w) v = std::sqrt(v);
    return w;
}

} // namespace

void EqConfig::validate() const {
    if (window_seconds <= 0.0) throw std::invalid_argument("EqConfig: window_seconds must be > 0");
    if (hop_fraction <= 0.0 || hop_fraction > 1.0)
        throw std::invalid_argument("EqConfig: hop_fraction must be in (0, 1]");
    if (n_bands < 2) throw std::invalid_argument("EqConfig: n_bands must be >= 2");
    if (f_min <= 0.0 || f_min >= f_max)
        throw std::invalid_argument("EqConfig: need 0 < f_min < f_max");
    if (smooth_sigma_bands <= 0.0)
        throw std::invalid_argument("EqConfig: smooth_sigma_bands must be > 0");
    if (phon_level < 0.0 || phon_level > 90.0)
        throw std::invalid_argument("EqConfig: phon_level must be in [0, 90]");
}

std::size_t EqConfig::window_length(int sample_rate) const {
    if (window_seconds <= 0.0 || sample_rate <= 0)
        throw std::invalid_argument("EqConfig: bad window length parameters");
    const auto half = static_cast<std::size_t>(
        std::llround(window_seconds * sample_rate / 2.0));
    return std::max<std::size_t>(1, half) * 2;
}

namespace {

// Shared band accumulation: mean of weighted bin powers per band, dB floor,
// empty bands interpolated in dB (edges held).
BandSpectrum accumulate_bands(const std::vector<double>& power,
                              const std::vector<double>& weights,
                              const std::vector<int>& bin_band,
                              const std::vector<double>& band_centers) {
    const std::size_t nb = band_centers.size();
    std::vector<double> sums(nb, 0.0);
    std::vector<int> counts(nb, 0);
    for (std::size_t k = 0; k < power.size(); ++k) {
        const int b = bin_band[k];
        if (b < 0) continue;
        sums[static_cast<std::size_t>(b)] += power[k] * weights[k];
        ++counts[static_cast<std::size_t>(b)];
    }

    BandSpectrum bands;
    bands.band_centers = band_centers;
    bands.levels_db.assign(nb, kDbFloor);
    for (std::size_t b = 0; b < nb; ++b)
        if (counts[b] > 0) bands.levels_db[b] = to_db(sums[b] / counts[b]);

    std::ptrdiff_t prev = -1;
    const auto snb = static_cast<std::ptrdiff_t>(nb);
    for (std::ptrdiff_t b = 0; b < snb; ++b) {
        if (counts[static_cast<std::size_t>(b)] == 0) continue;
        if (prev < 0) {
            for (std::ptrdiff_t j = 0; j < b; ++j)
                bands.levels_db[static_cast<std::size_t>(j)] =
                    bands.levels_db[static_cast<std::size_t>(b)];
        } else if (b - prev > 1) {
            const double lo = bands.levels_db[static_cast<std::size_t>(prev)];
            const double hi = bands.levels_db[static_cast<std::size_t>(b)];
            for (std::ptrdiff_t j = prev + 1; j < b; ++j) {
                const double t = static_cast<double>(j - prev) / static_cast<double>(b - prev);
                bands.levels_db[static_cast<std::size_t>(j)] = (1.0 - t) * lo + t * hi;
            }
        }
        prev = b;
    }
    if (prev >= 0)
        for (std::ptrdiff_t j = prev + 1; j < snb; ++j)
            bands.levels_db[static_cast<std::size_t>(j)] =
                bands.levels_db[static_cast<std::size_t>(prev)];
    return bands;
}

// Geometric band centers and bin-to-band assignment for a DFT of 2*(bins-1)
// points at the given rate.
void build_band_layout(const EqConfig& cfg, int sample_rate, std::size_t n_bins,
                       std::vector<double>& centers, std::vector<int>& bin_band) {
    const double nyquist = sample_rate / 2.0;
    const double f_hi = std::min(cfg.f_max, nyquist);
    if (cfg.f_min >= f_hi)
        throw std::invalid_argument("log_band_spectrum: f_min exceeds usable bandwidth");
    const int nb = cfg.n_bands;
    const double log_lo = std::log(cfg.f_min);
    const double step = (std::log(f_hi) - log_lo) / nb;

    centers.resize(static_cast<std::size_t>(nb));
    for (int b = 0; b < nb; ++b)
        centers[static_cast<std::size_t>(b)] = std::exp(log_lo + (b + 0.5) * step);

    const std::size_t fft_len = 2 * (n_bins - 1);
    bin_band.assign(n_bins, -1);
    for (std::size_t k = 0; k < n_bins; ++k) {
        const double f = bin_frequency(k, fft_len, sample_rate);
        if (f < cfg.f_min || f > f_hi) continue;
        int b = static_cast<int>((std::log(f) - log_lo) / step);
        bin_band[k] = std::clamp(b, 0, nb - 1);
    }
}

} // namespace

BandSpectrum log_band_spectrum(const std::vector<double>& power, int sample_rate,
                               const EqConfig& cfg, const ElcCurve& elc) {
    cfg.validate();
    if (elc.power_weights.size() != power.size())
        throw std::invalid_argument("log_band_spectrum: ELC weights must match bin count");
    std::vector<double> centers;
    std::vector<int> bin_band;
    build_band_layout(cfg, sample_rate, power.size(), centers, bin_band);
    return accumulate_bands(power, elc.power_weights, bin_band, centers);
}

BandSpectrum smooth_spectrum(const BandSpectrum& bands, double sigma) {
    if (sigma <= 0.0) throw std::invalid_argument("smooth_spectrum: sigma must be > 0");
    const std::size_t n = bands.levels_db.size();
    const int radius = static_cast<int>(std::ceil(4.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int k = -radius; k <= radius; ++k) {
        const double v = std::exp(-0.5 * (k / sigma) * (k / sigma));
        kernel[static_cast<std::size_t>(k + radius)] = v;
        sum += v;
    }
    for (double& v : kernel) v /= sum;

    BandSpectrum out;
    out.band_centers = bands.band_centers;
    out.levels_db.assign(n, 0.0);
    const auto sn = static_cast<std::ptrdiff_t>(n);
    for (std::ptrdiff_t i = 0; i < sn; ++i) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
            std::ptrdiff_t j = i + k;
            // reflective boundaries
            while (j < 0 || j >= sn) {
                if (j < 0) j = -j - 1;
                if (j >= sn) j = 2 * sn - 1 - j;
            }
            acc += kernel[static_cast<std::size_t>(k + radius)] *
                   bands.levels_db[static_cast<std::size_t>(j)];
        }
        out.levels_db[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

ResonanceProfile detect_resonances(const BandSpectrum& bands, const BandSpectrum& smoothed) {
    if (bands.levels_db.size() != smoothed.levels_db.size())
        throw std::invalid_argument("detect_resonances: length mismatch");
    ResonanceProfile profile;
    profile.levels_db.resize(bands.levels_db.size());
    for (std::size_t i = 0; i < bands.levels_db.size(); ++i)
        profile.levels_db[i] = std::max(0.0, bands.levels_db[i] - smoothed.levels_db[i]);
    return profile;
}

ScalingVector scaling_vector(const ResonanceProfile& resonances, double alpha,
                             const std::vector<double>& bin_freqs,
                             const std::vector<double>& band_centers) {
    if (alpha < 0.0 || alpha > 1.0)
        throw std::invalid_argument("scaling_vector: alpha must be in [0, 1]");
    if (resonances.levels_db.size() != band_centers.size())
        throw std::invalid_argument("scaling_vector: band count mismatch");
    const std::size_t n_bands = band_centers.size();

    std::vector<double> att_db(n_bands);
    for (std::size_t b = 0; b < n_bands; ++b) att_db[b] = -alpha * resonances.levels_db[b];

    ScalingVector sv;
    sv.factors.resize(bin_freqs.size());
    std::size_t seg = 0; // bin_freqs ascending: band segment advances monotonically
    for (std::size_t k = 0; k < bin_freqs.size(); ++k) {
        const double f = bin_freqs[k];
        double a;
        if (f <= band_centers.front()) {
            a = att_db.front();
        } else if (f >= band_centers.back()) {
            a = att_db.back();
        } else {
            while (seg + 2 < n_bands && band_centers[seg + 1] < f) ++seg;
            const double lf0 = std::log(band_centers[seg]);
            const double lf1 = std::log(band_centers[seg + 1]);
            const double t = (std::log(f) - lf0) / (lf1 - lf0);
            a = (1.0 - t) * att_db[seg] + t * att_db[seg + 1];
        }
        sv.factors[k] = std::pow(10.0, a / 10.0);
    }
    return sv;
}

// ---------------------------------------------------------------------------
// EqProcessor
// ---------------------------------------------------------------------------

EqProcessor::EqProcessor(const EqConfig& cfg, int sample_rate)
    : cfg_(cfg),
      sample_rate_(sample_rate),
      window_len_(cfg.window_length(sample_rate)),
      hop_len_(std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(
          static_cast<double>(cfg.window_length(sample_rate)) * cfg.hop_fraction)))),
      fft_(cfg.window_length(sample_rate)) {
    cfg_.validate();
    if (sample_rate <= 0) throw std::invalid_argument("EqProcessor: bad sample rate");

    const std::size_t n_bins = fft_.bins();
    bin_freqs_.resize(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k)
        bin_freqs_[k] = bin_frequency(k, window_len_, sample_rate_);
    elc_ = elc_power_weights(bin_freqs_, cfg_.phon_level);
    build_band_layout(cfg_, sample_rate_, n_bins, band_centers_, bin_band_);
}

BandSpectrum EqProcessor::band_spectrum(const std::vector<double>& power) const {
    if (power.size() != bin_freqs_.size())
        throw std::invalid_argument("band_spectrum: power length mismatch");
    return accumulate_bands(power, elc_.power_weights, bin_band_, band_centers_);
}

ResonanceProfile EqProcessor::frame_resonances(const std::vector<double>& frame) {
    const auto spectrum = fft_.forward(frame);
    const auto power = power_spectrum(spectrum);
    const BandSpectrum bands = band_spectrum(power);
    const BandSpectrum smoothed = smooth_spectrum(bands, cfg_.smooth_sigma_bands);
    return detect_resonances(bands, smoothed);
}

ScalingVector EqProcessor::frame_scaling(const std::vector<double>& frame, double alpha) {
    const ResonanceProfile profile = frame_resonances(frame);
    return scaling_vector(profile, alpha, bin_freqs_, band_centers_);
}

std::vector<double> EqProcessor::process_window(const std::vector<double>& window, double alpha) {
    if (window.size() != window_len_)
        throw std::invalid_argument("process_window: window length mismatch");
    auto spectrum = fft_.forward(window);
    const auto power = power_spectrum(spectrum);
    const BandSpectrum bands = band_spectrum(power);
    const BandSpectrum smoothed = smooth_spectrum(bands, cfg_.smooth_sigma_bands);
    const ResonanceProfile profile = detect_resonances(bands, smoothed);
    const ScalingVector sv = scaling_vector(profile, alpha, bin_freqs_, band_centers_);
    for (std::size_t k = 0; k < spectrum.size(); ++k) spectrum[k] *= std::sqrt(sv.factors[k]);
    return fft_.inverse(spectrum);
}

// ---------------------------------------------------------------------------
// Track processing (overlap-add)
// ---------------------------------------------------------------------------

namespace {

AudioClip process_track_impl(const AudioClip& clip, const FactorProvider* provider,
                             double constant_alpha, const EqConfig& cfg,
                             const FrameObserver& observer) {
    clip.validate();
    EqProcessor proc(cfg, clip.sample_rate);
    const std::size_t L = proc.window_length();
    const std::size_t H = proc.hop_length();
    const std::size_t N = clip.num_samples();
    const std::size_t n_ch = clip.num_channels();
    if (N < L) throw std::runtime_error("process_track: clip shorter than one analysis window");

    const std::vector<double> win = sqrt_hann_window(L);

    const std::size_t pad = L;
    const std::size_t last_needed = pad + N - 1;
    const std::size_t n_frames = last_needed / H + 2; // last start strictly past the signal end
    const std::size_t buf_len = (n_frames - 1) * H + L;

    // zero-padded working copies
    std::vector<std::vector<double>> padded(n_ch, std::vector<double>(buf_len, 0.0));
    for (std::size_t c = 0; c < n_ch; ++c)
        std::copy(clip.channels[c].begin(), clip.channels[c].end(), padded[c].begin() + pad);
    std::vector<double> mono(buf_len, 0.0);
    for (std::size_t i = 0; i < buf_len; ++i) {
        double acc = 0.0;
        for (std::size_t c = 0; c < n_ch; ++c) acc += padded[c][i];
        mono[i] = acc / static_cast<double>(n_ch);
    }

    std::vector<std::vector<double>> out(n_ch, std::vector<double>(buf_len, 0.0));
    std::vector<double> wsum(buf_len, 0.0);

    std::vector<double> frame(L);
    for (std::size_t j = 0; j < n_frames; ++j) {
        const std::size_t start = j * H;

        double alpha = constant_alpha;
        if (provider != nullptr) {
            if (j == 0) {
                alpha = 0.0;
            } else {
                const std::size_t prev_start = (j - 1) * H;
                AudioClip prev;
                prev.sample_rate = clip.sample_rate;
                prev.channels.resize(n_ch);
                for (std::size_t c = 0; c < n_ch; ++c)
                    prev.channels[c].assign(padded[c].begin() + prev_start,
                                            padded[c].begin() + prev_start + L);
                alpha = std::clamp((*provider)(j, prev), 0.0, 1.0);
            }
        }

        // detection on the windowed mono mix
        for (std::size_t i = 0; i < L; ++i) frame[i] = mono[start + i] * win[i];
        const ResonanceProfile profile = proc.frame_resonances(frame);
        const ScalingVector sv =
            scaling_vector(profile, alpha, proc.bin_frequencies(), proc.band_centers());
        if (observer) observer(FrameInfo{j, alpha, profile, sv});

        std::vector<double> gains(sv.factors.size());
        for (std::size_t k = 0; k < gains.size(); ++k) gains[k] = std::sqrt(sv.factors[k]);

        for (std::size_t c = 0; c < n_ch; ++c) {
            for (std::size_t i = 0; i < L; ++i) frame[i] = padded[c][start + i] * win[i];
            auto spectrum = proc.fft().forward(frame);
            for (std::size_t k = 0; k < spectrum.size(); ++k) spectrum[k] *= gains[k];
            const std::vector<double> synth = proc.fft().inverse(spectrum);
            for (std::size_t i = 0; i < L; ++i) out[c][start + i] += synth[i] * win[i];
        }
        for (std::size_t i = 0; i < L; ++i) wsum[start + i] += win[i] * win[i];
    }

    AudioClip result;
    result.sample_rate = clip.sample_rate;
    result.channels.assign(n_ch, std::vector<double>(N, 0.0));
    for (std::size_t c = 0; c < n_ch; ++c)
        for (std::size_t i = 0; i < N; ++i) {
            const double denom = wsum[pad + i];
            result.channels[c][i] = denom > 1e-12 ? out[c][pad + i] / denom : 0.0;
        }
    return result;
}

} // namespace

AudioClip process_track(const AudioClip& clip, double alpha, const EqConfig& cfg,
                        const FrameObserver& observer) {
    if (alpha < 0.0 || alpha > 1.0)
        throw std::invalid_argument("process_track: alpha must be in [0, 1]");
    return process_track_impl(clip, nullptr, alpha, cfg, observer);
}

AudioClip process_track(const AudioClip& clip, const FactorProvider& provider,
                        const EqConfig& cfg, const FrameObserver& observer) {
    if (!provider) throw std::invalid_argument("process_track: null factor provider");
    return process_track_impl(clip, &provider, 0.0, cfg, observer);
}

std::vector<FrameAnalysis> analyze_track(const AudioClip& clip, const EqConfig& cfg) {
    clip.validate();
    EqProcessor proc(cfg, clip.sample_rate);
    const std::size_t L = proc.window_length();
    const std::size_t H = proc.hop_length();
    const std::size_t N = clip.num_samples();
    if (N < L) throw std::runtime_error("analyze_track: clip shorter than one analysis window");

    const std::vector<double> win = sqrt_hann_window(L);
    const std::vector<double> mono = clip.mono_mix();

    std::vector<FrameAnalysis> frames;
    std::vector<double> frame(L);
    for (std::size_t start = 0; start + L <= N; start += H) {
        for (std::size_t i = 0; i < L; ++i) frame[i] = mono[start + i] * win[i];
        const ResonanceProfile profile = proc.frame_resonances(frame);
        double max_db = 0.0, sum = 0.0;
        for (double v : profile.levels_db) {
            max_db = std::max(max_db, v);
            sum += v;
        }
        FrameAnalysis fa;
        fa.frame_index = frames.size();
        fa.time_seconds = static_cast<double>(start) / clip.sample_rate;
        fa.max_resonance_db = max_db;
        fa.mean_resonance_db = profile.levels_db.empty()
                                   ? 0.0
                                   : sum / static_cast<double>(profile.levels_db.size());
        frames.push_back(fa);
    }
    return frames;
}

} // namespace resoneq
