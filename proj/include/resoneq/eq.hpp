#pragma once

#include "resoneq/audio.hpp"
#include "resoneq/elc.hpp"
#include "resoneq/fft.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace resoneq {

// Configuration of the resonance equalizer analysis chain.
struct EqConfig {
    double window_seconds = 0.5;
    double hop_fraction = 0.5;     // hop = window * hop_fraction
    int n_bands = 400;             // log-spaced analysis bands
    double phon_level = 80.0;      // monitoring level for the loudness weighting
    double smooth_sigma_bands = 12.0;
    double f_min = 20.0;
    double f_max = 20000.0;        // clipped to Nyquist

    void validate() const;

    // Window length in samples, forced even.
    std::size_t window_length(int sample_rate) const;
};

// Log-spaced band spectrum, levels in dB.
struct BandSpectrum {
    std::vector<double> band_centers; // Hz, geometric centers
    std::vector<double> levels_db;
};

// Per-band positive excess of the spectrum over its smoothed version, dB.
struct ResonanceProfile {
    std::vector<double> levels_db; // >= 0
};

// Per-DFT-bin linear power multipliers in (0, 1].
struct ScalingVector {
    std::vector<double> factors;
};

// ELC-weighted log band spectrum of a per-bin power spectrum. The curve must
// hold one weight per DFT bin (power.size() entries). Band edges are
// geometrically spaced over [f_min, min(f_max, Nyquist)]; empty bands are
// filled by linear interpolation in dB; a -120 dB floor applies.
BandSpectrum log_band_spectrum(const std::vector<double>& power, int sample_rate,
                               const EqConfig& cfg, const ElcCurve& elc);

// Gaussian smoothing in band index, kernel truncated at +-4 sigma and
// renormalized, reflective boundaries.
BandSpectrum smooth_spectrum(const BandSpectrum& bands, double sigma);

// r_b = max(0, bands_b - smoothed_b)
ResonanceProfile detect_resonances(const BandSpectrum& bands, const BandSpectrum& smoothed);

// Per-band attenuation -alpha * r_b (dB), interpolated to bin frequencies
// linearly in (log f, dB), held constant beyond the outermost band centers,
// then converted to linear power factors.
ScalingVector scaling_vector(const ResonanceProfile& resonances, double alpha,
                             const std::vector<double>& bin_freqs,
                             const std::vector<double>& band_centers);

// Precomputed analysis state for one (EqConfig, sample rate) pair: FFT plan,
// bin frequencies, loudness weights, band layout. One instance per thread.
class EqProcessor {
public:
    EqProcessor(const EqConfig& cfg, int sample_rate);

    const EqConfig& config() const { return cfg_; }
    int sample_rate() const { return sample_rate_; }
    std::size_t window_length() const { return window_len_; }
    std::size_t hop_length() const { return hop_len_; }
    const std::vector<double>& bin_frequencies() const { return bin_freqs_; }
    const std::vector<double>& band_centers() const { return band_centers_; }
    const ElcCurve& elc() const { return elc_; }

    // ELC-weighted log band spectrum of a per-bin power spectrum.
    BandSpectrum band_spectrum(const std::vector<double>& power) const;

    // Full detection chain for one (already windowed) frame.
    ResonanceProfile frame_resonances(const std::vector<double>& frame);

    // Detection chain plus attenuation mapping.
    ScalingVector frame_scaling(const std::vector<double>& frame, double alpha);

    // Spectral processing of one rectangular window: detect on the window
    // itself, scale each bin's amplitude by sqrt(power factor), inverse DFT.
    std::vector<double> process_window(const std::vector<double>& window, double alpha);

    // FFT access for callers that manage their own windowing.
    RealFft& fft() { return fft_; }

private:
    EqConfig cfg_;
    int sample_rate_;
    std::size_t window_len_;
    std::size_t hop_len_;
    RealFft fft_;
    std::vector<double> bin_freqs_;
    ElcCurve elc_;
    std::vector<double> band_centers_;
    std::vector<int> bin_band_; // band index per bin, -1 if outside [f_min, f_max]
};

// Per-frame data handed to observers during track processing.
struct FrameInfo {
    std::size_t frame_index;
    double alpha;
    const ResonanceProfile& resonances;
    const ScalingVector& scaling;
};

using FrameObserver = std::function<void(const FrameInfo&)>;

// Attenuation factor source for process_track: the factor for frame i is
// requested with the raw (unwindowed) stereo audio of frame i-1, enforcing
// causal prediction; frame 0 always uses alpha = 0.
using FactorProvider = std::function<double(std::size_t frame_index, const AudioClip& previous_frame)>;

// Overlap-add resonance equalization of a whole clip with a constant factor.
// Detection runs on the sqrt-Hann-windowed mono mix; the resulting scaling is
// applied identically to every channel (sqrt-Hann analysis and synthesis
// windows). Output length equals input length.
AudioClip process_track(const AudioClip& clip, double alpha, const EqConfig& cfg = {},
                        const FrameObserver& observer = nullptr);

// Same, with a causal per-frame factor provider.
AudioClip process_track(const AudioClip& clip, const FactorProvider& provider,
                        const EqConfig& cfg = {}, const FrameObserver& observer = nullptr);

// Per-frame resonance summary of a clip (frames fully inside the signal).
struct FrameAnalysis {
    std::size_t frame_index;
    double time_seconds;
    double max_resonance_db;
    double mean_resonance_db;
};

std::vector<FrameAnalysis> analyze_track(const AudioClip& clip, const EqConfig& cfg = {});

} // namespace resoneq
