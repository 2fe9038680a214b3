#pragma once

#include "resoneq/audio.hpp"
#include "resoneq/dataset.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace resoneq {

// Synthetic corpus generation. Each track is pink noise plus 2-5 harmonic
// tone stacks, shaped by K in {0..4} peaking resonators (center 100 Hz-8 kHz,
// gain 3-18 dB, Q 4-20), RMS-normalized. Tracks are built by spectral
// synthesis on the 0.5 s analysis grid, so every analysis window sees the
// same deterministic spectrum regardless of offset.
struct SynthConfig {
    std::size_t n_tracks = 60;
    double duration_seconds = 4.0;
    int sample_rate = 44100;
    std::uint64_t seed = 7;
    int n_raters = 15;
};

struct SynthResult {
    DatasetManifest manifest;
    std::vector<int> resonator_counts; // per track, for diagnostics
};

// Writes <out_dir>/trk###.wav plus <out_dir>/manifest.csv and returns the
// manifest. Deterministic: same config -> bit-identical files.
SynthResult synth_generate(const SynthConfig& cfg, const std::string& out_dir);

// One synthesized track without file I/O (fixtures and tests).
AudioClip synth_track(const SynthConfig& cfg, std::size_t track_index, int* resonator_count_out,
                      int forced_resonator_count = -1);

// Deterministic preference underlying the simulated ratings: the mean over
// 0.5 s windows of the maximum detected resonance, saturated at 12 dB and
// scaled to [0, 1].
double oracle_base_preference(const AudioClip& track);

// Simulated rater panel: base preference plus per-rater Gaussian noise
// (sigma 0.1), clamped, snapped to the 17-step grid; about 5% of ratings are
// dropped ("no rating"). Requires at least 3 s of audio.
std::vector<double> oracle_ratings(const AudioClip& track, int n_raters, std::uint64_t seed);

} // namespace resoneq
