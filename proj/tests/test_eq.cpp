#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "resoneq/eq.hpp"
#include "resoneq/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace resoneq;

namespace {

std::vector<double> pink_noise(std::size_t n, std::uint64_t seed, double amp = 0.2) {
    Rng rng(seed);
    std::vector<double> x(n);
    double b0 = 0, b1 = 0, b2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double white = rng.uniform(-1.0, 1.0);
        b0 = 0.99765 * b0 + white * 0.0990460;
        b1 = 0.96300 * b1 + white * 0.2965164;
        b2 = 0.57000 * b2 + white * 1.0526913;
        x[i] = amp * 0.25 * (b0 + b1 + b2 + white * 0.1848);
    }
    return x;
}

double rel_rms_error(const std::vector<double>& a, const std::vector<double>& b) {
    double err = 0, ref = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        err += d * d;
        ref += a[i] * a[i];
    }
    return std::sqrt(err / std::max(ref, 1e-300));
}

ElcCurve unit_elc(const std::vector<double>& freqs) {
    ElcCurve c;
    c.frequencies = freqs;
    c.power_weights.assign(freqs.size(), 1.0);
    return c;
}

} // namespace

TEST_CASE("default configuration yields 400 bands") {
    EqProcessor proc(EqConfig{}, 44100);
    const std::vector<double> power(proc.bin_frequencies().size(), 1.0);
    const BandSpectrum bands = proc.band_spectrum(power);
    CHECK(bands.levels_db.size() == 400);
    CHECK(bands.band_centers.size() == 400);
    // geometric spacing: constant center ratio
    const double r0 = bands.band_centers[1] / bands.band_centers[0];
    for (std::size_t b = 2; b < bands.band_centers.size(); ++b) {
        const double r = bands.band_centers[b] / bands.band_centers[b - 1];
        CHECK(std::abs(r / r0 - 1.0) < 1e-9);
    }
}

TEST_CASE("flat power spectrum with unit ELC gives equal band levels") {
    EqConfig cfg;
    const int rate = 44100;
    const std::size_t n_bins = cfg.window_length(rate) / 2 + 1;
    std::vector<double> freqs(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k)
        freqs[k] = bin_frequency(k, cfg.window_length(rate), rate);
    const std::vector<double> power(n_bins, 2.5);
    const BandSpectrum bands = log_band_spectrum(power, rate, cfg, unit_elc(freqs));
    const double expected = 10.0 * std::log10(2.5);
    for (double level : bands.levels_db) CHECK(level == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("a 1 kHz sine peaks in the band containing 1 kHz") {
    EqConfig cfg;
    const int rate = 44100;
    EqProcessor proc(cfg, rate);
    const std::size_t L = proc.window_length();
    std::vector<double> window(L);
    for (std::size_t i = 0; i < L; ++i)
        window[i] = std::sin(2.0 * M_PI * 1000.0 * static_cast<double>(i) / rate);
    const auto power = power_spectrum(proc.fft().forward(window));
    const BandSpectrum bands = proc.band_spectrum(power);

    const auto argmax = static_cast<std::size_t>(
        std::max_element(bands.levels_db.begin(), bands.levels_db.end()) -
        bands.levels_db.begin());
    // band index holding 1 kHz from the layout formula
    const double nyq = rate / 2.0;
    const double step = (std::log(std::min(cfg.f_max, nyq)) - std::log(cfg.f_min)) / cfg.n_bands;
    const auto expected = static_cast<std::size_t>((std::log(1000.0) - std::log(cfg.f_min)) / step);
    CHECK(argmax == expected);
}

TEST_CASE("smoothing a constant spectrum is the identity") {
    BandSpectrum bands;
    bands.band_centers.resize(100);
    std::iota(bands.band_centers.begin(), bands.band_centers.end(), 1.0);
    bands.levels_db.assign(100, -7.25);
    const BandSpectrum out = smooth_spectrum(bands, 12.0);
    for (double v : out.levels_db) CHECK(v == doctest::Approx(-7.25).epsilon(1e-12));
}

TEST_CASE("smoothing kernel is normalized") {
    const double sigma = 12.0;
    BandSpectrum bands;
    bands.band_centers.resize(401);
    std::iota(bands.band_centers.begin(), bands.band_centers.end(), 1.0);
    bands.levels_db.assign(401, 0.0);
    bands.levels_db[200] = 1.0; // unit impulse, dB values treated as raw numbers

    const BandSpectrum out = smooth_spectrum(bands, sigma);
    const double total = std::accumulate(out.levels_db.begin(), out.levels_db.end(), 0.0);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

    // independently computed center weight of the truncated, renormalized kernel
    const int radius = static_cast<int>(std::ceil(4.0 * sigma));
    double ksum = 0.0;
    for (int k = -radius; k <= radius; ++k) ksum += std::exp(-0.5 * (k / sigma) * (k / sigma));
    CHECK(out.levels_db[200] == doctest::Approx(1.0 / ksum).epsilon(1e-9));
}

TEST_CASE("smoothing does not increase total variation") {
    Rng rng(123);
    for (int trial = 0; trial < 20; ++trial) {
        BandSpectrum bands;
        const std::size_t n = 150;
        bands.band_centers.resize(n);
        std::iota(bands.band_centers.begin(), bands.band_centers.end(), 1.0);
        bands.levels_db.resize(n);
        for (double& v : bands.levels_db) v = rng.uniform(-60.0, 0.0);
        const BandSpectrum smooth = smooth_spectrum(bands, rng.uniform(0.5, 20.0));
        auto tv = [](const std::vector<double>& v) {
            double acc = 0;
            for (std::size_t i = 1; i < v.size(); ++i) acc += std::abs(v[i] - v[i - 1]);
            return acc;
        };
        CHECK(tv(smooth.levels_db) <= tv(bands.levels_db) + 1e-9);
    }
}

TEST_CASE("detect_resonances clips negative excess to zero") {
    BandSpectrum bands, smoothed;
    bands.levels_db = {-10.0, -7.0, -10.0, -13.0};
    smoothed.levels_db = {-10.0, -10.0, -10.0, -10.0};
    const ResonanceProfile r = detect_resonances(bands, smoothed);
    CHECK(r.levels_db[0] == 0.0);
    CHECK(r.levels_db[1] == doctest::Approx(3.0));
    CHECK(r.levels_db[2] == 0.0);
    CHECK(r.levels_db[3] == 0.0); // anti-resonance (dip) clamps to zero
}

TEST_CASE("detect_resonances of identical spectra is all zeros") {
    BandSpectrum bands;
    bands.levels_db = {-3.0, -2.0, -1.0};
    const ResonanceProfile r = detect_resonances(bands, bands);
    for (double v : r.levels_db) CHECK(v == 0.0);
}

TEST_CASE("scaling_vector implements -alpha*r in dB power") {
    ResonanceProfile res;
    res.levels_db = {0.0, 12.0, 0.0};
    const std::vector<double> centers = {100.0, 1000.0, 10000.0};
    const std::vector<double> bins = {50.0, 100.0, 1000.0, 10000.0, 20000.0};

    SUBCASE("alpha 0 gives exact ones") {
        const ScalingVector sv = scaling_vector(res, 0.0, bins, centers);
        for (double f : sv.factors) CHECK(f == 1.0);
    }
    SUBCASE("alpha 0.5 on a 12 dB resonance") {
        const ScalingVector sv = scaling_vector(res, 0.5, bins, centers);
        CHECK(sv.factors[2] == doctest::Approx(std::pow(10.0, -6.0 / 10.0)).epsilon(1e-12));
        CHECK(sv.factors[2] == doctest::Approx(0.2512).epsilon(1e-3));
    }
    SUBCASE("alpha 1 keeps factors strictly positive") {
        const ScalingVector sv = scaling_vector(res, 1.0, bins, centers);
        CHECK(sv.factors[2] == doctest::Approx(0.0631).epsilon(1e-2));
        for (double f : sv.factors) {
            CHECK(f > 0.0);
            CHECK(f <= 1.0);
        }
    }
    SUBCASE("bins surrounded by zero-resonance bands stay at exactly 1") {
        const ScalingVector sv = scaling_vector(res, 1.0, bins, centers);
        CHECK(sv.factors[0] == 1.0); // below first center, held at r=0 band
        CHECK(sv.factors[4] == 1.0); // above last center
    }
}

TEST_CASE("per-bin factors are non-increasing in alpha") {
    const int rate = 44100;
    EqProcessor proc(EqConfig{}, rate);
    const std::size_t L = proc.window_length();
    std::vector<double> window = pink_noise(L, 99);
    for (std::size_t i = 0; i < L; ++i)
        window[i] += 0.5 * std::sin(2.0 * M_PI * 2000.0 * static_cast<double>(i) / rate);

    std::vector<double> prev;
    for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const ScalingVector sv = proc.frame_scaling(window, alpha);
        if (!prev.empty())
            for (std::size_t k = 0; k < sv.factors.size(); ++k)
                CHECK(sv.factors[k] <= prev[k] + 1e-12);
        prev = sv.factors;
    }
}

TEST_CASE("process_window with alpha 0 is the identity") {
    const int rate = 44100;
    EqProcessor proc(EqConfig{}, rate);
    const std::vector<double> window = pink_noise(proc.window_length(), 5);
    const std::vector<double> out = proc.process_window(window, 0.0);
    CHECK(rel_rms_error(window, out) < 1e-9);
}

TEST_CASE("process_window attenuates a sine riding on pink noise") {
    const int rate = 44100;
    EqProcessor proc(EqConfig{}, rate);
    const std::size_t L = proc.window_length();
    // sine on an exact bin, ~20 dB above the noise floor
    const double f_sine = 1000.0;
    std::vector<double> window = pink_noise(L, 17, 0.05);
    for (std::size_t i = 0; i < L; ++i)
        window[i] += 0.4 * std::sin(2.0 * M_PI * f_sine * static_cast<double>(i) / rate);

    const std::vector<double> out = proc.process_window(window, 1.0);

    const auto bin = static_cast<std::size_t>(f_sine * static_cast<double>(L) / rate);
    const auto p_in = power_spectrum(proc.fft().forward(window));
    const auto p_out = power_spectrum(proc.fft().forward(out));
    const double drop_db = 10.0 * std::log10(p_in[bin] / p_out[bin]);
    CHECK(drop_db >= 6.0);
}

TEST_CASE("process_window preserves DC-free inputs") {
    const int rate = 44100;
    EqProcessor proc(EqConfig{}, rate);
    std::vector<double> window = pink_noise(proc.window_length(), 3);
    const double mean_in =
        std::accumulate(window.begin(), window.end(), 0.0) / static_cast<double>(window.size());
    for (double& s : window) s -= mean_in;
    const std::vector<double> out = proc.process_window(window, 1.0);
    const double mean_out =
        std::accumulate(out.begin(), out.end(), 0.0) / static_cast<double>(out.size());
    CHECK(std::abs(mean_out) < 1e-12);
}

TEST_CASE("corrected bin powers never exceed the originals") {
    const int rate = 44100;
    EqProcessor proc(EqConfig{}, rate);
    Rng rng(31);
    const std::vector<double> window = pink_noise(proc.window_length(), 77);
    for (int trial = 0; trial < 5; ++trial) {
        const double alpha = rng.uniform();
        const auto out = proc.process_window(window, alpha);
        const auto p_in = power_spectrum(proc.fft().forward(window));
        const auto p_out = power_spectrum(proc.fft().forward(out));
        for (std::size_t k = 0; k < p_in.size(); ++k)
            CHECK(p_out[k] <= p_in[k] * (1.0 + 1e-9) + 1e-12);
    }
}

TEST_CASE("process_track with alpha 0 reconstructs the input") {
    AudioClip clip;
    clip.sample_rate = 44100;
    clip.channels = {pink_noise(static_cast<std::size_t>(44100 * 1.3), 11),
                     pink_noise(static_cast<std::size_t>(44100 * 1.3), 12)};
    const AudioClip out = process_track(clip, 0.0);
    REQUIRE(out.num_samples() == clip.num_samples());
    for (std::size_t c = 0; c < 2; ++c)
        CHECK(rel_rms_error(clip.channels[c], out.channels[c]) < 1e-4);
}

TEST_CASE("identical input channels give identical output channels") {
    const auto mono = pink_noise(static_cast<std::size_t>(44100 * 1.1), 21);
    AudioClip clip;
    clip.sample_rate = 44100;
    clip.channels = {mono, mono};
    const AudioClip out = process_track(clip, 0.7);
    for (std::size_t i = 0; i < out.num_samples(); ++i)
        REQUIRE(out.channels[0][i] == out.channels[1][i]);
}

TEST_CASE("clip shorter than one window is rejected") {
    AudioClip clip;
    clip.sample_rate = 44100;
    clip.channels = {std::vector<double>(1000, 0.1)};
    CHECK_THROWS_AS(process_track(clip, 0.5), std::runtime_error);
}

TEST_CASE("alternating per-frame factors alternate the applied scaling") {
    AudioClip clip;
    clip.sample_rate = 44100;
    const std::size_t n = static_cast<std::size_t>(44100 * 2.0);
    clip.channels = {pink_noise(n, 40)};
    for (std::size_t i = 0; i < n; ++i)
        clip.channels[0][i] += 0.5 * std::sin(2.0 * M_PI * 3000.0 * static_cast<double>(i) / 44100.0);

    std::vector<double> alphas;
    std::vector<double> min_factors;
    const FactorProvider provider = [](std::size_t frame_index, const AudioClip&) {
        return frame_index % 2 == 0 ? 0.0 : 1.0;
    };
    const FrameObserver observer = [&](const FrameInfo& info) {
        alphas.push_back(info.alpha);
        min_factors.push_back(*std::min_element(info.scaling.factors.begin(),
                                                info.scaling.factors.end()));
    };
    process_track(clip, provider, EqConfig{}, observer);

    REQUIRE(alphas.size() >= 4);
    CHECK(alphas[0] == 0.0); // causal rule: first frame bypasses
    for (std::size_t j = 0; j < alphas.size(); ++j) {
        if (alphas[j] == 0.0) {
            CHECK(min_factors[j] == 1.0);
        } else {
            CHECK(min_factors[j] < 0.9); // resonant fixture gets real attenuation
        }
    }
}

TEST_CASE("factor provider sees the previous frame's audio") {
    AudioClip clip;
    clip.sample_rate = 44100;
    const std::size_t n = static_cast<std::size_t>(44100 * 1.5);
    clip.channels = {std::vector<double>(n)};
    // ramp so frame content identifies position
    for (std::size_t i = 0; i < n; ++i)
        clip.channels[0][i] = static_cast<double>(i) / static_cast<double>(n) - 0.5;

    EqConfig cfg;
    const std::size_t L = cfg.window_length(44100);
    const std::size_t H = L / 2;
    const std::size_t pad = L;

    bool checked = false;
    const FactorProvider provider = [&](std::size_t frame_index, const AudioClip& prev) {
        REQUIRE(frame_index >= 1);
        REQUIRE(prev.num_samples() == L);
        // frame i receives audio starting at (i-1)*H in padded coordinates
        const std::size_t prev_start = (frame_index - 1) * H;
        if (prev_start >= pad && prev_start + L <= pad + n) {
            const double expected = clip.channels[0][prev_start - pad];
            REQUIRE(prev.channels[0][0] == doctest::Approx(expected));
            checked = true;
        }
        return 0.0;
    };
    process_track(clip, provider, cfg);
    CHECK(checked);
}

TEST_CASE("analyze_track reports per-frame resonance summaries") {
    AudioClip clip;
    clip.sample_rate = 44100;
    const std::size_t n = static_cast<std::size_t>(44100 * 1.5);
    clip.channels = {pink_noise(n, 60)};
    const auto frames = analyze_track(clip);
    REQUIRE(!frames.empty());
    for (const auto& f : frames) {
        CHECK(f.max_resonance_db >= 0.0);
        CHECK(f.mean_resonance_db >= 0.0);
        CHECK(f.mean_resonance_db <= f.max_resonance_db);
        CHECK(std::isfinite(f.max_resonance_db));
    }
}
