#include "resoneq/features.hpp"

#include "resoneq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace resoneq {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr std::size_t kNumMels = 40;
constexpr std::size_t kNumMfcc = 13;
constexpr double kMelLogFloor = 1e-10;
constexpr double kPowerFloor = 1e-30;

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

double frame_rms(const std::vector<double>& x) {
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return std::sqrt(acc / static_cast<double>(x.size()));
}

} // namespace

const std::array<std::string, kNumDescriptors>& descriptor_names() {
    static const std::array<std::string, kNumDescriptors> names = {
        "mfcc01", "mfcc02", "mfcc03", "mfcc04", "mfcc05", "mfcc06", "mfcc07",
        "mfcc08", "mfcc09", "mfcc10", "mfcc11", "mfcc12", "mfcc13",
        "zcr", "spec_energy", "spec_rms", "spec_flux", "spec_rolloff",
        "spec_crest", "spec_flatness_db", "hfc",
        "silence20", "silence30", "silence60",
        "stereo_corr", "stereo_rmsdiff"};
    return names;
}

const std::array<std::string, kNumStatistics>& statistic_names() {
    static const std::array<std::string, kNumStatistics> names = {
        "mean", "median", "std", "skew", "kurt", "p10", "p90"};
    return names;
}

FrameDescriptorExtractor::FrameDescriptorExtractor(int sample_rate)
    : sample_rate_(sample_rate), fft_(kDescriptorFrameSize) {
    if (sample_rate <= 0)
        throw std::invalid_argument("FrameDescriptorExtractor: bad sample rate");

    hann_.resize(kDescriptorFrameSize);
    for (std::size_t i = 0; i < kDescriptorFrameSize; ++i)
        hann_[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) /
                                        static_cast<double>(kDescriptorFrameSize));

    // triangular mel filterbank, 20 Hz .. Nyquist
    const std::size_t n_bins = fft_.bins();
    const double nyquist = sample_rate / 2.0;
    const double mel_lo = hz_to_mel(20.0);
    const double mel_hi = hz_to_mel(nyquist);
    std::vector<double> edges(kNumMels + 2);
    for (std::size_t m = 0; m < edges.size(); ++m)
        edges[m] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(m) /
                                          static_cast<double>(kNumMels + 1));

    mel_weights_.assign(kNumMels * n_bins, 0.0);
    for (std::size_t m = 0; m < kNumMels; ++m) {
        const double f_lo = edges[m], f_mid = edges[m + 1], f_hi = edges[m + 2];
        for (std::size_t k = 0; k < n_bins; ++k) {
            const double f = bin_frequency(k, kDescriptorFrameSize, sample_rate);
            double w = 0.0;
            if (f > f_lo && f < f_hi)
                w = f <= f_mid ? (f - f_lo) / (f_mid - f_lo) : (f_hi - f) / (f_hi - f_mid);
            mel_weights_[m * n_bins + k] = w;
        }
    }

    // orthonormal DCT-II, coefficients 0..12 over 40 mel energies
    dct_.assign(kNumMfcc * kNumMels, 0.0);
    const double scale0 = std::sqrt(1.0 / static_cast<double>(kNumMels));
    const double scale = std::sqrt(2.0 / static_cast<double>(kNumMels));
    for (std::size_t c = 0; c < kNumMfcc; ++c)
        for (std::size_t m = 0; m < kNumMels; ++m)
            dct_[c * kNumMels + m] =
                (c == 0 ? scale0 : scale) *
                std::cos(kPi * static_cast<double>(c) * (static_cast<double>(m) + 0.5) /
                         static_cast<double>(kNumMels));
}

void FrameDescriptorExtractor::begin_clip(double clip_rms) {
    clip_rms_ = clip_rms;
    have_prev_ = false;
    prev_magnitude_.clear();
}

std::array<double, kNumDescriptors> FrameDescriptorExtractor::compute(
    const std::vector<double>& left, const std::vector<double>& right) {
    if (left.size() != kDescriptorFrameSize || right.size() != kDescriptorFrameSize)
        throw std::invalid_argument("compute_frame_descriptors: frame must hold 1024 samples");

    std::array<double, kNumDescriptors> d{};

    std::vector<double> mono(kDescriptorFrameSize);
    for (std::size_t i = 0; i < kDescriptorFrameSize; ++i) mono[i] = 0.5 * (left[i] + right[i]);

    std::vector<double> windowed(kDescriptorFrameSize);
    for (std::size_t i = 0; i < kDescriptorFrameSize; ++i) windowed[i] = mono[i] * hann_[i];

    const auto spectrum = fft_.forward(windowed);
    const std::size_t n_bins = spectrum.size();
    std::vector<double> magnitude(n_bins), power(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k) {
        power[k] = std::norm(spectrum[k]);
        magnitude[k] = std::sqrt(power[k]);
    }

    // MFCC 1..13
    {
        std::vector<double> mel(kNumMels);
        for (std::size_t m = 0; m < kNumMels; ++m) {
            double acc = 0.0;
            const double* w = &mel_weights_[m * n_bins];
            for (std::size_t k = 0; k < n_bins; ++k) acc += w[k] * power[k];
            mel[m] = std::log(std::max(acc, kMelLogFloor));
        }
        for (std::size_t c = 0; c < kNumMfcc; ++c) {
            double acc = 0.0;
            const double* row = &dct_[c * kNumMels];
            for (std::size_t m = 0; m < kNumMels; ++m) acc += row[m] * mel[m];
            d[c] = acc;
        }
    }

    // zero-crossing rate, crossings per sample, on the raw mono frame
    {
        std::size_t crossings = 0;
        for (std::size_t i = 1; i < kDescriptorFrameSize; ++i)
            if (mono[i - 1] * mono[i] < 0.0) ++crossings;
        d[13] = static_cast<double>(crossings) / static_cast<double>(kDescriptorFrameSize);
    }

    // spectral energy and spectral RMS
    const double energy = std::accumulate(power.begin(), power.end(), 0.0);
    d[14] = energy;
    d[15] = std::sqrt(energy / static_cast<double>(n_bins));

    // spectral flux: L2 norm of positive magnitude increments
    {
        double acc = 0.0;
        if (have_prev_) {
            for (std::size_t k = 0; k < n_bins; ++k) {
                const double diff = magnitude[k] - prev_magnitude_[k];
                if (diff > 0.0) acc += diff * diff;
            }
            acc = std::sqrt(acc);
        }
        d[16] = acc;
        prev_magnitude_ = magnitude;
        have_prev_ = true;
    }

    // rolloff: lowest frequency containing 85% of the spectral energy
    {
        double rolloff = 0.0;
        if (energy > 0.0) {
            const double target = 0.85 * energy;
            double cum = 0.0;
            for (std::size_t k = 0; k < n_bins; ++k) {
                cum += power[k];
                if (cum >= target) {
                    rolloff = bin_frequency(k, kDescriptorFrameSize, sample_rate_);
                    break;
                }
            }
        }
        d[17] = rolloff;
    }

    // crest: max/mean of the magnitude spectrum (flat for silence)
    {
        const double mx = *std::max_element(magnitude.begin(), magnitude.end());
        const double mn = std::accumulate(magnitude.begin(), magnitude.end(), 0.0) /
                          static_cast<double>(n_bins);
        d[18] = mn > 0.0 ? mx / mn : 1.0;
    }

    // flatness: 10*log10(geometric mean / arithmetic mean) of floored powers
    {
        double log_acc = 0.0, lin_acc = 0.0;
        for (std::size_t k = 0; k < n_bins; ++k) {
            const double p = std::max(power[k], kPowerFloor);
            log_acc += std::log(p);
            lin_acc += p;
        }
        const double geo = std::exp(log_acc / static_cast<double>(n_bins));
        const double arith = lin_acc / static_cast<double>(n_bins);
        d[19] = 10.0 * std::log10(geo / arith);
    }

    // high-frequency coefficient
    {
        double acc = 0.0;
        for (std::size_t k = 0; k < n_bins; ++k) acc += static_cast<double>(k) * power[k];
        d[20] = acc;
    }

    // silence indicators at -20/-30/-60 dB relative to the clip RMS
    {
        const double rms = frame_rms(mono);
        const double thresholds[3] = {-20.0, -30.0, -60.0};
        for (int t = 0; t < 3; ++t)
            d[21 + static_cast<std::size_t>(t)] =
                rms <= clip_rms_ * std::pow(10.0, thresholds[t] / 20.0) ? 1.0 : 0.0;
    }

    // stereo width: inter-channel Pearson correlation and RMS difference
    {
        const double ml = std::accumulate(left.begin(), left.end(), 0.0) /
                          static_cast<double>(kDescriptorFrameSize);
        const double mr = std::accumulate(right.begin(), right.end(), 0.0) /
                          static_cast<double>(kDescriptorFrameSize);
        double vl = 0, vr = 0, cov = 0;
        for (std::size_t i = 0; i < kDescriptorFrameSize; ++i) {
            const double dl = left[i] - ml, dr = right[i] - mr;
            vl += dl * dl;
            vr += dr * dr;
            cov += dl * dr;
        }
        d[24] = (vl > 0.0 && vr > 0.0) ? cov / std::sqrt(vl * vr) : 1.0;
        d[25] = std::abs(frame_rms(left) - frame_rms(right));
    }

    return d;
}

std::array<double, kNumDescriptors> compute_frame_descriptors(const std::vector<double>& left,
                                                              const std::vector<double>& right,
                                                              int sample_rate) {
    FrameDescriptorExtractor extractor(sample_rate);
    std::vector<double> mono(left.size());
    for (std::size_t i = 0; i < left.size(); ++i) mono[i] = 0.5 * (left[i] + right[i]);
    extractor.begin_clip(frame_rms(mono));
    return extractor.compute(left, right);
}

DescriptorFrameMatrix compute_descriptor_frames(const AudioClip& window) {
    window.validate();
    const std::size_t n = window.num_samples();
    if (n < kDescriptorFrameSize)
        throw std::runtime_error("compute_descriptor_frames: window too short");

    const std::vector<double>& left = window.channels[0];
    const std::vector<double>& right =
        window.num_channels() == 2 ? window.channels[1] : window.channels[0];

    FrameDescriptorExtractor extractor(window.sample_rate);
    extractor.begin_clip(window.rms());

    const std::size_t n_frames = (n - kDescriptorFrameSize + kDescriptorHopSize - 1) /
                                     kDescriptorHopSize + 1;

    DescriptorFrameMatrix matrix;
    matrix.rows.reserve(n_frames);
    std::vector<double> frame_l(kDescriptorFrameSize), frame_r(kDescriptorFrameSize);
    for (std::size_t f = 0; f < n_frames; ++f) {
        const std::size_t start = f * kDescriptorHopSize;
        for (std::size_t i = 0; i < kDescriptorFrameSize; ++i) {
            const std::size_t idx = start + i;
            frame_l[i] = idx < n ? left[idx] : 0.0; // zero-pad the last frame
            frame_r[i] = idx < n ? right[idx] : 0.0;
        }
        matrix.rows.push_back(extractor.compute(frame_l, frame_r));
    }
    return matrix;
}

FeatureVector summarize(const DescriptorFrameMatrix& matrix) {
    if (matrix.rows.empty()) throw std::invalid_argument("summarize: no frames");
    FeatureVector features;
    features.reserve(kFeatureVectorSize);
    std::vector<double> column(matrix.rows.size());
    for (std::size_t c = 0; c < kNumDescriptors; ++c) {
        for (std::size_t r = 0; r < matrix.rows.size(); ++r) column[r] = matrix.rows[r][c];
        features.push_back(mean(column));
        features.push_back(percentile(column, 50.0));
        features.push_back(population_stddev(column));
        features.push_back(skewness(column));
        features.push_back(excess_kurtosis(column));
        features.push_back(percentile(column, 10.0));
        features.push_back(percentile(column, 90.0));
    }
    return features;
}

FeatureVector extract_feature_vector(const AudioClip& window) {
    return summarize(compute_descriptor_frames(window));
}

} // namespace resoneq
