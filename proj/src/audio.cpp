#include "resoneq/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace resoneq {

void AudioClip::validate() const {
    if (sample_rate <= 0) throw std::invalid_argument("AudioClip: sample rate must be positive");
    if (channels.empty() || channels.size() > 2)
        throw std::invalid_argument("AudioClip: channel count must be 1 or 2");
    const std::size_t n = channels[0].size();
    for (const auto& ch : channels) {
        if (ch.size() != n)
            throw std::invalid_argument("AudioClip: channels have unequal lengths");
        for (double s : ch)
            if (!std::isfinite(s))
                throw std::invalid_argument("AudioClip: non-finite sample");
    }
}

std::vector<double> AudioClip::mono_mix() const {
    const std::size_t n = num_samples();
    std::vector<double> mix(n, 0.0);
    for (const auto& ch : channels)
        for (std::size_t i = 0; i < n; ++i) mix[i] += ch[i];
    const double inv = channels.empty() ? 1.0 : 1.0 / static_cast<double>(channels.size());
    for (double& s : mix) s *= inv;
    return mix;
}

AudioClip AudioClip::slice(std::size_t start, std::size_t count) const {
    AudioClip out;
    out.sample_rate = sample_rate;
    out.channels.reserve(channels.size());
    for (const auto& ch : channels) {
        if (start + count > ch.size())
            throw std::out_of_range("AudioClip::slice: range exceeds clip length");
        out.channels.emplace_back(ch.begin() + static_cast<std::ptrdiff_t>(start),
                                  ch.begin() + static_cast<std::ptrdiff_t>(start + count));
    }
    return out;
}

double AudioClip::rms() const {
    double acc = 0.0;
    std::size_t count = 0;
    for (const auto& ch : channels) {
        for (double s : ch) acc += s * s;
        count += ch.size();
    }
    return count == 0 ? 0.0 : std::sqrt(acc / static_cast<double>(count));
}

// ---------------------------------------------------------------------------
// WAV I/O
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatAlaw = 0x0006;
constexpr std::uint16_t kFormatMulaw = 0x0007;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::string format_name(std::uint16_t tag) {
    switch (tag) {
        case kFormatPcm: return "PCM";
        case kFormatFloat: return "IEEE float";
        case kFormatAlaw: return "A-law";
        case kFormatMulaw: return "mu-law";
        case kFormatExtensible: return "extensible";
        default: return "tag 0x" + [tag] {
            char buf[8];
            std::snprintf(buf, sizeof(buf), "%04x", tag);
            return std::string(buf);
        }();
    }
}

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<unsigned char>& v, std::uint16_t x) {
    v.push_back(static_cast<unsigned char>(x & 0xff));
    v.push_back(static_cast<unsigned char>((x >> 8) & 0xff));
}

void put_u32(std::vector<unsigned char>& v, std::uint32_t x) {
    for (int i = 0; i < 4; ++i) v.push_back(static_cast<unsigned char>((x >> (8 * i)) & 0xff));
}

struct FmtChunk {
    std::uint16_t format_tag = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t bits_per_sample = 0;
};

} // namespace

AudioClip read_wav(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_wav: cannot open '" + path + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw std::runtime_error("read_wav: '" + path + "' is not a RIFF/WAVE file");

    FmtChunk fmt;
    bool have_fmt = false;
    const unsigned char* data_ptr = nullptr;
    std::size_t data_len = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
        const std::uint32_t size = read_u32(bytes.data() + pos + 4);
        pos += 8;
        if (pos + size > bytes.size())
            throw std::runtime_error("read_wav: truncated file '" + path + "'");
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (size < 16) throw std::runtime_error("read_wav: malformed fmt chunk");
            const unsigned char* p = bytes.data() + pos;
            fmt.format_tag = read_u16(p);
            fmt.channels = read_u16(p + 2);
            fmt.sample_rate = read_u32(p + 4);
            fmt.bits_per_sample = read_u16(p + 14);
            if (fmt.format_tag == kFormatExtensible && size >= 40) {
                // first two bytes of the subformat GUID carry the real tag
                fmt.format_tag = read_u16(p + 24);
            }
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data_ptr = bytes.data() + pos;
            data_len = size;
        }
        pos += size + (size & 1); // chunks are word-aligned
    }

    if (!have_fmt) throw std::runtime_error("read_wav: missing fmt chunk in '" + path + "'");
    if (data_ptr == nullptr) throw std::runtime_error("read_wav: missing data chunk in '" + path + "'");
    if (fmt.channels < 1 || fmt.channels > 2)
        throw std::runtime_error("read_wav: unsupported channel count " +
                                 std::to_string(fmt.channels));

    const bool is_pcm16 = fmt.format_tag == kFormatPcm && fmt.bits_per_sample == 16;
    const bool is_pcm24 = fmt.format_tag == kFormatPcm && fmt.bits_per_sample == 24;
    const bool is_f32 = fmt.format_tag == kFormatFloat && fmt.bits_per_sample == 32;
    if (!is_pcm16 && !is_pcm24 && !is_f32)
        throw std::runtime_error("read_wav: unsupported subformat: " +
                                 format_name(fmt.format_tag) + " " +
                                 std::to_string(fmt.bits_per_sample) + "-bit");

    const std::size_t bytes_per_sample = fmt.bits_per_sample / 8;
    const std::size_t frame_bytes = bytes_per_sample * fmt.channels;
    const std::size_t n_frames = data_len / frame_bytes;

    AudioClip clip;
    clip.sample_rate = static_cast<int>(fmt.sample_rate);
    clip.channels.assign(fmt.channels, std::vector<double>(n_frames));

    for (std::size_t i = 0; i < n_frames; ++i) {
        const unsigned char* frame = data_ptr + i * frame_bytes;
        for (std::size_t c = 0; c < fmt.channels; ++c) {
            const unsigned char* p = frame + c * bytes_per_sample;
            double s;
            if (is_pcm16) {
                const auto v = static_cast<std::int16_t>(read_u16(p));
                s = static_cast<double>(v) / 32768.0;
            } else if (is_pcm24) {
                std::int32_t v = static_cast<std::int32_t>(p[0]) |
                                 (static_cast<std::int32_t>(p[1]) << 8) |
                                 (static_cast<std::int32_t>(p[2]) << 16);
                if (v & 0x800000) v -= 0x1000000;
                s = static_cast<double>(v) / 8388608.0;
            } else {
                float fv;
                std::memcpy(&fv, p, 4);
                s = std::clamp(static_cast<double>(fv), -1.0, 1.0);
            }
            clip.channels[c][i] = s;
        }
    }
    clip.validate();
    return clip;
}

void write_wav(const std::string& path, const AudioClip& clip, WavBitDepth depth) {
    clip.validate();
    const std::size_t n_frames = clip.num_samples();
    const std::uint16_t n_channels = static_cast<std::uint16_t>(clip.num_channels());
    const bool is_float = depth == WavBitDepth::Float32;
    const std::uint16_t bits = depth == WavBitDepth::Pcm16 ? 16
                             : depth == WavBitDepth::Pcm24 ? 24
                                                           : 32;
    const std::uint16_t block_align = static_cast<std::uint16_t>(n_channels * bits / 8);
    const std::uint32_t data_size = static_cast<std::uint32_t>(n_frames * block_align);

    std::vector<unsigned char> out;
    out.reserve(64 + data_size);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put_u32(out, 0); // patched below
    out.insert(out.end(), {'W', 'A', 'V', 'E'});

    out.insert(out.end(), {'f', 'm', 't', ' '});
    put_u32(out, 16);
    put_u16(out, is_float ? kFormatFloat : kFormatPcm);
    put_u16(out, n_channels);
    put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
    put_u32(out, static_cast<std::uint32_t>(clip.sample_rate) * block_align);
    put_u16(out, block_align);
    put_u16(out, bits);

    if (is_float) {
        // fact chunk is required for non-PCM formats
        out.insert(out.end(), {'f', 'a', 'c', 't'});
        put_u32(out, 4);
        put_u32(out, static_cast<std::uint32_t>(n_frames));
    }

    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put_u32(out, data_size);

    for (std::size_t i = 0; i < n_frames; ++i) {
        for (std::size_t c = 0; c < n_channels; ++c) {
            const double s = std::clamp(clip.channels[c][i], -1.0, 1.0);
            if (depth == WavBitDepth::Pcm16) {
                const auto q = static_cast<std::int32_t>(
                    std::clamp(std::lround(s * 32768.0), -32768L, 32767L));
                put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
            } else if (depth == WavBitDepth::Pcm24) {
                const auto q = static_cast<std::int32_t>(
                    std::clamp(std::lround(s * 8388608.0), -8388608L, 8388607L));
                out.push_back(static_cast<unsigned char>(q & 0xff));
                out.push_back(static_cast<unsigned char>((q >> 8) & 0xff));
                out.push_back(static_cast<unsigned char>((q >> 16) & 0xff));
            } else {
                const float fv = static_cast<float>(s);
                unsigned char buf[4];
                std::memcpy(buf, &fv, 4);
                out.insert(out.end(), buf, buf + 4);
            }
        }
    }

    const std::uint32_t riff_size = static_cast<std::uint32_t>(out.size() - 8);
    for (int i = 0; i < 4; ++i) out[4 + i] = static_cast<unsigned char>((riff_size >> (8 * i)) & 0xff);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("write_wav: cannot open '" + path + "' for writing");
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("write_wav: write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Resampling
// ---------------------------------------------------------------------------

namespace {

// Modified Bessel function of the first kind, order zero (power series).
double bessel_i0(double x) {
    double sum = 1.0, term = 1.0;
    const double half_sq = 0.25 * x * x;
    for (int k = 1; k < 64; ++k) {
        term *= half_sq / (static_cast<double>(k) * k);
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    const double px = 3.14159265358979323846 * x;
    return std::sin(px) / px;
}

constexpr double kKaiserBeta = 8.0;
constexpr int kZeroCrossings = 32;
constexpr int kKernelOversample = 512;

// Right half of the Kaiser-windowed sinc, tabulated at kKernelOversample
// points per source sample for linear interpolation.
std::vector<double> build_kernel_table(double cutoff, double half_width) {
    const auto n = static_cast<std::size_t>(half_width * kKernelOversample) + 2;
    const double i0_beta = bessel_i0(kKaiserBeta);
    std::vector<double> table(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / kKernelOversample;
        if (t > half_width) break;
        const double u = t / half_width;
        const double w = bessel_i0(kKaiserBeta * std::sqrt(std::max(0.0, 1.0 - u * u))) / i0_beta;
        table[i] = cutoff * sinc(cutoff * t) * w;
    }
    return table;
}

} // namespace

AudioClip resample(const AudioClip& clip, int target_rate) {
    clip.validate();
    if (target_rate <= 0) throw std::invalid_argument("resample: target rate must be positive");
    if (target_rate == clip.sample_rate) return clip;

    const double ratio = static_cast<double>(target_rate) / clip.sample_rate;
    const std::size_t in_len = clip.num_samples();
    const auto out_len = static_cast<std::size_t>(
        std::llround(static_cast<double>(in_len) * ratio));

    // cutoff relative to the source Nyquist; on downsample the kernel widens
    const double cutoff = std::min(1.0, ratio);
    const double half_width = kZeroCrossings / cutoff;
    const std::vector<double> table = build_kernel_table(cutoff, half_width);

    auto kernel = [&](double t) {
        const double a = std::abs(t) * kKernelOversample;
        const auto i = static_cast<std::size_t>(a);
        if (i + 1 >= table.size()) return 0.0;
        const double frac = a - static_cast<double>(i);
        return table[i] + frac * (table[i + 1] - table[i]);
    };

    AudioClip out;
    out.sample_rate = target_rate;
    out.channels.assign(clip.num_channels(), std::vector<double>(out_len, 0.0));

    for (std::size_t c = 0; c < clip.num_channels(); ++c) {
        const std::vector<double>& x = clip.channels[c];
        std::vector<double>& y = out.channels[c];
        for (std::size_t n = 0; n < out_len; ++n) {
            const double center = static_cast<double>(n) / ratio;
            const auto m0 = static_cast<std::int64_t>(std::ceil(center - half_width));
            const auto m1 = static_cast<std::int64_t>(std::floor(center + half_width));
            double acc = 0.0, norm = 0.0;
            for (std::int64_t m = m0; m <= m1; ++m) {
                const double h = kernel(static_cast<double>(m) - center);
                norm += h;
                if (m >= 0 && m < static_cast<std::int64_t>(in_len))
                    acc += x[static_cast<std::size_t>(m)] * h;
            }
            y[n] = norm > 1e-12 ? acc / norm : 0.0;
        }
    }
    return out;
}

AudioClip rms_normalize(const AudioClip& clip, double target_dbfs) {
    clip.validate();
    const double current = clip.rms();
    if (current <= 0.0) throw std::runtime_error("rms_normalize: silent input");
    const double target = std::pow(10.0, target_dbfs / 20.0);
    const double gain = target / current;
    AudioClip out = clip;
    for (auto& ch : out.channels)
        for (double& s : ch) s *= gain;
    return out;
}

} // namespace resoneq
