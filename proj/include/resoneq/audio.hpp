#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace resoneq {

// Multichannel PCM audio. Samples are dimensionless amplitudes, nominally in
// [-1, 1]; they are clamped only at write time so intermediate processing
// keeps full headroom.
struct AudioClip {
    std::vector<std::vector<double>> channels; // 1 or 2 channels, equal length
    int sample_rate = 0;                       // Hz, > 0

    std::size_t num_channels() const { return channels.size(); }
    std::size_t num_samples() const { return channels.empty() ? 0 : channels[0].size(); }
    double duration_seconds() const {
        return sample_rate > 0 ? static_cast<double>(num_samples()) / sample_rate : 0.0;
    }

    // Throws std::invalid_argument when a structural invariant is violated
    // (channel count, ragged channels, non-finite samples, bad rate).
    void validate() const;

    // Mean of channels.
    std::vector<double> mono_mix() const;

    // [start, start+count) from every channel; caller guarantees bounds.
    AudioClip slice(std::size_t start, std::size_t count) const;

    // Overall RMS across all channels and samples.
    double rms() const;
};

enum class WavBitDepth { Pcm16, Pcm24, Float32 };

// RIFF/WAVE reader. Accepts PCM 16/24-bit integer and IEEE float32, 1-2
// channels; everything else is a decode error naming the subformat.
AudioClip read_wav(const std::string& path);

// Writes little-endian RIFF/WAVE. Samples are clamped to [-1, 1] and
// quantized round-to-nearest for the integer depths.
void write_wav(const std::string& path, const AudioClip& clip, WavBitDepth depth);

// Band-limited polyphase resampler (windowed sinc, Kaiser beta=8, 32 zero
// crossings per side) with anti-alias filtering on downsample.
AudioClip resample(const AudioClip& clip, int target_rate);

// Scales the clip so its overall RMS matches target_dbfs (single gain, so
// channel balance is preserved). Throws on digital silence.
AudioClip rms_normalize(const AudioClip& clip, double target_dbfs = -20.0);

} // namespace resoneq
