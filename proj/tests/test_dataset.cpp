#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "resoneq/dataset.hpp"
#include "resoneq/eq.hpp"
#include "resoneq/rng.hpp"
#include "resoneq/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

using namespace resoneq;

namespace {

namespace fs = std::filesystem;

std::string tmp_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

std::vector<unsigned char> slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

double track_max_resonance(const AudioClip& clip) {
    // measured over the oracle's rating band (the full-range detector keeps a
    // small constant excess at the 12.5 kHz loudness-table knee)
    EqConfig cfg;
    cfg.f_max = 10000.0;
    EqProcessor proc(cfg, clip.sample_rate);
    const std::size_t window = proc.window_length();
    const std::vector<double> mono = clip.mono_mix();
    double worst = 0.0;
    std::vector<double> frame(window);
    for (std::size_t start = 0; start + window <= clip.num_samples(); start += window) {
        std::copy(mono.begin() + static_cast<std::ptrdiff_t>(start),
                  mono.begin() + static_cast<std::ptrdiff_t>(start + window), frame.begin());
        const ResonanceProfile profile = proc.frame_resonances(frame);
        worst = std::max(worst, *std::max_element(profile.levels_db.begin(),
                                                  profile.levels_db.end()));
    }
    return worst;
}

SynthConfig small_cfg(std::uint64_t seed) {
    SynthConfig cfg;
    cfg.n_tracks = 10;
    cfg.duration_seconds = 3.0;
    cfg.seed = seed;
    return cfg;
}

} // namespace

TEST_CASE("manifest round-trip with relative paths and empty rating slots") {
    const std::string dir = tmp_dir("rq_manifest");
    // a real (tiny) wav so existence validation passes
    AudioClip clip;
    clip.sample_rate = 22050;
    clip.channels = {std::vector<double>(256, 0.1)};
    write_wav(dir + "/a.wav", clip, WavBitDepth::Pcm16);
    write_wav(dir + "/b.wav", clip, WavBitDepth::Pcm16);

    {
        std::ofstream f(dir + "/manifest.csv");
        f << "# provenance: synthetic seed=5\n";
        f << "a,a.wav,0.25,,0.3125,0.5\n";     // one declined rating
        f << "b,b.wav,0.0625,0.125\n";         // only 2 ratings: excluded
    }
    const DatasetManifest m = load_manifest(dir + "/manifest.csv");
    CHECK(m.provenance == "synthetic seed=5");
    REQUIRE(m.entries.size() == 1);
    CHECK(m.entries[0].id == "a");
    CHECK(m.entries[0].ratings == std::vector<double>{0.25, 0.3125, 0.5});

    // save/load round-trip
    save_manifest(dir + "/copy.csv", m);
    const DatasetManifest back = load_manifest(dir + "/copy.csv");
    REQUIRE(back.entries.size() == 1);
    CHECK(back.entries[0].ratings == m.entries[0].ratings);
    CHECK(back.provenance == m.provenance);
}

TEST_CASE("manifest validation: off-grid ratings, duplicates, missing files") {
    const std::string dir = tmp_dir("rq_manifest_bad");
    AudioClip clip;
    clip.sample_rate = 22050;
    clip.channels = {std::vector<double>(64, 0.1)};
    write_wav(dir + "/a.wav", clip, WavBitDepth::Pcm16);

    {
        std::ofstream f(dir + "/off_grid.csv");
        f << "a,a.wav,0.33,0.25,0.5\n";
    }
    CHECK_THROWS_WITH_AS(load_manifest(dir + "/off_grid.csv"), doctest::Contains("grid"),
                         std::runtime_error);

    {
        std::ofstream f(dir + "/dup.csv");
        f << "a,a.wav,0.25,0.25,0.5\n";
        f << "a,a.wav,0.25,0.25,0.5\n";
    }
    CHECK_THROWS_WITH_AS(load_manifest(dir + "/dup.csv"), doctest::Contains("duplicate"),
                         std::runtime_error);

    {
        std::ofstream f(dir + "/missing.csv");
        f << "x,nope.wav,0.25,0.25,0.5\n";
    }
    CHECK_THROWS_WITH_AS(load_manifest(dir + "/missing.csv"), doctest::Contains("missing"),
                         std::runtime_error);
}

TEST_CASE("rating grid membership") {
    CHECK(on_rating_grid(0.0));
    CHECK(on_rating_grid(1.0));
    CHECK(on_rating_grid(0.3125));
    CHECK(!on_rating_grid(0.33));
    CHECK(!on_rating_grid(-0.0625));
    CHECK(!on_rating_grid(1.0625));
}

TEST_CASE("sample_frames: count, bounds, determinism") {
    Rng rng(5);
    AudioClip track;
    track.sample_rate = 22050;
    track.channels.assign(2, std::vector<double>(22050 * 3));
    for (auto& ch : track.channels)
        for (double& s : ch) s = rng.uniform(-0.5, 0.5);

    const auto frames = sample_frames(track, 100, 99);
    REQUIRE(frames.size() == 100);
    const auto window = static_cast<std::size_t>(std::llround(0.5 * 22050));
    for (const AudioClip& f : frames) {
        CHECK(f.num_samples() == window);
        CHECK(f.num_channels() == 2);
    }
    const auto again = sample_frames(track, 100, 99);
    for (std::size_t i = 0; i < frames.size(); ++i)
        REQUIRE(frames[i].channels[0][0] == again[i].channels[0][0]);

    const auto different = sample_frames(track, 100, 100);
    bool any_diff = false;
    for (std::size_t i = 0; i < frames.size(); ++i)
        any_diff |= frames[i].channels[0][0] != different[i].channels[0][0];
    CHECK(any_diff);

    AudioClip tiny;
    tiny.sample_rate = 22050;
    tiny.channels = {std::vector<double>(1000, 0.1)};
    CHECK_THROWS_AS(sample_frames(tiny, 3, 1), std::runtime_error);
}

TEST_CASE("synth_generate is bit-deterministic and writes n manifest entries") {
    const std::string dir_a = tmp_dir("rq_synth_a");
    const std::string dir_b = tmp_dir("rq_synth_b");
    const SynthConfig cfg = small_cfg(7);
    const SynthResult ra = synth_generate(cfg, dir_a);
    const SynthResult rb = synth_generate(cfg, dir_b);

    REQUIRE(ra.manifest.entries.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) {
        const auto bytes_a = slurp(ra.manifest.entries[i].wav_path);
        const auto bytes_b = slurp(rb.manifest.entries[i].wav_path);
        REQUIRE(!bytes_a.empty());
        REQUIRE(bytes_a == bytes_b);
        CHECK(ra.manifest.entries[i].ratings == rb.manifest.entries[i].ratings);
    }

    // manifest loads back and keeps every track (>= 3 ratings each)
    const DatasetManifest loaded = load_manifest(dir_a + "/manifest.csv");
    CHECK(loaded.entries.size() == 10);
    for (const RatedTrack& t : loaded.entries) {
        CHECK(t.ratings.size() >= 3);
        for (double r : t.ratings) CHECK(on_rating_grid(r));
    }
}

TEST_CASE("resonator-free tracks score below heavily resonant tracks") {
    SynthConfig cfg = small_cfg(21);
    int k = -1;
    const AudioClip k0 = synth_track(cfg, 0, &k, /*forced_resonator_count=*/0);
    CHECK(k == 0);
    const double base_k0 = track_max_resonance(k0);

    // every K>=2 track from the same family detects more resonance
    for (std::size_t idx = 1; idx <= 4; ++idx) {
        const AudioClip k2 = synth_track(cfg, idx, &k, /*forced_resonator_count=*/2 + (idx % 3));
        CHECK(track_max_resonance(k2) > base_k0);
    }
}

TEST_CASE("oracle: resonance-free track rates near zero") {
    const SynthConfig cfg = small_cfg(3);
    const AudioClip clean = synth_track(cfg, 2, nullptr, /*forced_resonator_count=*/0);
    const double base = oracle_base_preference(clean);
    CHECK(base < 0.12);

    const auto ratings = oracle_ratings(clean, 15, 5);
    REQUIRE(ratings.size() >= 3);
    std::vector<double> sorted = ratings;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    CHECK(median <= 1.0 / 16.0 + 1e-12);
}

TEST_CASE("oracle: heavily resonant fixture saturates the preference") {
    // hand-built fixture: a 0.5 s-periodic noise bed with a narrow band boosted
    // by 20 dB amplitude, so every window detects >= 12 dB of resonance
    const int rate = 44100;
    const std::size_t period = EqConfig{}.window_length(rate);
    RealFft fft(period);
    Rng rng(404);
    std::vector<std::complex<double>> spectrum(period / 2 + 1, {0.0, 0.0});
    for (std::size_t k = 1; k + 1 < spectrum.size(); ++k) {
        const double f = bin_frequency(k, period, rate);
        if (f < 30.0 || f > 18000.0) continue;
        double amp = 1.0 / std::sqrt(f);
        if (f >= 1400.0 && f <= 1600.0) amp *= 10.0; // +20 dB amplitude boost
        spectrum[k] = std::polar(amp, rng.uniform(0.0, 2.0 * M_PI));
    }
    const std::vector<double> base_period = fft.inverse(spectrum);
    AudioClip resonant;
    resonant.sample_rate = rate;
    resonant.channels.assign(2, std::vector<double>(8 * period));
    for (auto& ch : resonant.channels)
        for (std::size_t p = 0; p < 8; ++p)
            std::copy(base_period.begin(), base_period.end(),
                      ch.begin() + static_cast<std::ptrdiff_t>(p * period));
    resonant = rms_normalize(resonant, -20.0);

    CHECK(track_max_resonance(resonant) >= 12.0);
    CHECK(oracle_base_preference(resonant) == doctest::Approx(1.0));

    const auto ratings = oracle_ratings(resonant, 15, 6);
    REQUIRE(ratings.size() >= 3);
    std::vector<double> sorted = ratings;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted[sorted.size() / 2] >= 14.0 / 16.0);
    for (double r : ratings) CHECK(on_rating_grid(r));
}

TEST_CASE("oracle ratings stay on the 17-level grid and respect the drop rate") {
    const SynthConfig cfg = small_cfg(17);
    const AudioClip track = synth_track(cfg, 4, nullptr);
    const auto ratings = oracle_ratings(track, 200, 9);
    for (double r : ratings) CHECK(on_rating_grid(r));
    // with 200 raters and 5% drop, expect roughly 182-198 kept
    CHECK(ratings.size() >= 175);
    CHECK(ratings.size() <= 200);

    const auto again = oracle_ratings(track, 200, 9);
    CHECK(ratings == again);
}

TEST_CASE("oracle rejects short tracks") {
    SynthConfig cfg = small_cfg(1);
    AudioClip track = synth_track(cfg, 0, nullptr);
    track.channels[0].resize(22050);
    track.channels[1].resize(22050);
    CHECK_THROWS_AS(oracle_ratings(track, 15, 1), std::runtime_error);
}
