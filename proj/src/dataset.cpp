#include "resoneq/dataset.hpp"

#include "resoneq/rng.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace resoneq {

namespace fs = std::filesystem;

bool on_rating_grid(double value) {
    if (value < 0.0 || value > 1.0) return false;
    const double snapped = std::round(value * 16.0) / 16.0;
    return std::abs(snapped - value) < 1e-9;
}

void save_manifest(const std::string& path, const DatasetManifest& manifest) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("save_manifest: cannot open '" + path + "'");
    if (!manifest.provenance.empty()) f << "# provenance: " << manifest.provenance << "\n";
    const fs::path base = fs::path(path).parent_path();
    for (const RatedTrack& track : manifest.entries) {
        fs::path rel = track.wav_path;
        if (!base.empty() && rel.is_absolute())
            rel = fs::relative(rel, base);
        f << track.id << ',' << rel.generic_string();
        for (double r : track.ratings) f << ',' << r;
        f << '\n';
    }
    if (!f) throw std::runtime_error("save_manifest: write failed for '" + path + "'");
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_manifest: cannot open '" + path + "'");
    const fs::path base = fs::path(path).parent_path();

    DatasetManifest manifest;
    std::set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string tag = "# provenance: ";
            if (line.rfind(tag, 0) == 0) manifest.provenance = line.substr(tag.size());
            continue;
        }
        std::stringstream row(line);
        std::string field;
        RatedTrack track;
        if (!std::getline(row, track.id, ','))
            throw std::runtime_error("load_manifest: malformed line " + std::to_string(line_no));
        std::string rel_path;
        if (!std::getline(row, rel_path, ','))
            throw std::runtime_error("load_manifest: missing path on line " +
                                     std::to_string(line_no));
        while (std::getline(row, field, ',')) {
            if (field.empty()) continue; // declined rating
            const double value = std::stod(field);
            if (!on_rating_grid(value))
                throw std::runtime_error("load_manifest: rating off the 1/16 grid on line " +
                                         std::to_string(line_no));
            track.ratings.push_back(value);
        }
        if (!seen_ids.insert(track.id).second)
            throw std::runtime_error("load_manifest: duplicate track id '" + track.id + "'");

        const fs::path wav = fs::path(rel_path).is_absolute() ? fs::path(rel_path)
                                                              : base / rel_path;
        if (!fs::exists(wav))
            throw std::runtime_error("load_manifest: missing audio file '" + wav.string() + "'");
        track.wav_path = wav.string();

        if (track.ratings.size() < 3) continue; // too few ratings to bound
        manifest.entries.push_back(std::move(track));
    }
    return manifest;
}

std::vector<AudioClip> sample_frames(const AudioClip& track, std::size_t n, std::uint64_t seed,
                                     double window_seconds) {
    track.validate();
    const auto window =
        static_cast<std::size_t>(std::llround(window_seconds * track.sample_rate));
    if (track.num_samples() < window)
        throw std::runtime_error("sample_frames: track shorter than the window");

    Rng rng(derive_seed(seed, 0xf7a3e5u));
    const auto max_start = static_cast<std::int64_t>(track.num_samples() - window);
    std::vector<AudioClip> frames;
    frames.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto start = static_cast<std::size_t>(rng.uniform_int(0, max_start));
        frames.push_back(track.slice(start, window));
    }
    return frames;
}

} // namespace resoneq
