#pragma once

#include "resoneq/audio.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace resoneq {

// One training unit: an audio file plus the attenuation ratings it received.
// Ratings live on the 17-step grid {0, 1/16, ..., 1}.
struct RatedTrack {
    std::string id;
    std::string wav_path; // resolved to an absolute/openable path at load
    std::vector<double> ratings;
};

struct DatasetManifest {
    std::vector<RatedTrack> entries;
    std::string provenance;
};

// CSV schema: optional leading "# provenance: ..." comment, then one row per
// track: id,relative wav path,rating,rating,... (empty fields mark raters who
// declined). Paths are stored relative to the manifest location.
void save_manifest(const std::string& path, const DatasetManifest& manifest);

// Loads and validates: unique ids, referenced files exist, ratings on the
// 1/16 grid. Tracks with fewer than 3 ratings are excluded.
DatasetManifest load_manifest(const std::string& path);

// True if the value sits on the 17-level rating grid (within 1e-9).
bool on_rating_grid(double value);

// n random 0.5 s windows with uniform start offsets, fully inside the track.
std::vector<AudioClip> sample_frames(const AudioClip& track, std::size_t n, std::uint64_t seed,
                                     double window_seconds = 0.5);

} // namespace resoneq
