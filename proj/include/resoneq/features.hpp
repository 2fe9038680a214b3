#pragma once

#include "resoneq/audio.hpp"
#include "resoneq/fft.hpp"

#include <array>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace resoneq {

inline constexpr std::size_t kNumDescriptors = 26;
inline constexpr std::size_t kNumStatistics = 7;
inline constexpr std::size_t kFeatureVectorSize = kNumDescriptors * kNumStatistics; // 182

inline constexpr std::size_t kDescriptorFrameSize = 1024;
inline constexpr std::size_t kDescriptorHopSize = 512;

// Canonical column order; feature CSV headers derive from these.
const std::array<std::string, kNumDescriptors>& descriptor_names();
const std::array<std::string, kNumStatistics>& statistic_names();

// rows = analysis frames, 26 descriptor values each
struct DescriptorFrameMatrix {
    std::vector<std::array<double, kNumDescriptors>> rows;
};

using FeatureVector = std::vector<double>; // length kFeatureVectorSize

// Frame-level descriptor computation with the per-clip state the descriptors
// need: the clip RMS reference for the silence indicators and the previous
// frame's magnitude spectrum for the spectral flux.
class FrameDescriptorExtractor {
public:
    explicit FrameDescriptorExtractor(int sample_rate);

    // Clears flux state and sets the silence reference level.
    void begin_clip(double clip_rms);

    // One 1024-sample stereo block (mono callers pass the same span twice).
    std::array<double, kNumDescriptors> compute(const std::vector<double>& left,
                                                const std::vector<double>& right);

private:
    int sample_rate_;
    RealFft fft_;
    std::vector<double> hann_;
    std::vector<double> mel_weights_; // 40 x bins, row-major
    std::vector<double> dct_;         // 13 x 40, row-major, orthonormal DCT-II
    double clip_rms_ = 0.0;
    bool have_prev_ = false;
    std::vector<double> prev_magnitude_;
};

// Descriptors of a single stereo 1024-sample block. Flux is 0 (no previous
// frame) and the silence reference is the block's own RMS.
std::array<double, kNumDescriptors> compute_frame_descriptors(const std::vector<double>& left,
                                                              const std::vector<double>& right,
                                                              int sample_rate);

// Frame matrix of a whole window at 1024/512 framing (last frame zero-padded).
DescriptorFrameMatrix compute_descriptor_frames(const AudioClip& window);

// 7 summary statistics per descriptor column, descriptor-major order:
// mean, median, std, skew, kurtosis, p10, p90.
FeatureVector summarize(const DescriptorFrameMatrix& matrix);

// Full pipeline for one 0.5 s analysis window.
FeatureVector extract_feature_vector(const AudioClip& window);

} // namespace resoneq
