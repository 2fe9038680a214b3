#include "resoneq/elc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace resoneq {

namespace {

// ISO 226:2003 parameters at the 29 reference frequencies.
constexpr int kNumRef = 29;

constexpr double kRefFreq[kNumRef] = {
    20.0,   25.0,   31.5,   40.0,   50.0,   63.0,   80.0,    100.0,   125.0,  160.0,
    200.0,  250.0,  315.0,  400.0,  500.0,  630.0,  800.0,   1000.0,  1250.0, 1600.0,
    2000.0, 2500.0, 3150.0, 4000.0, 5000.0, 6300.0, 8000.0,  10000.0, 12500.0};

// exponent of loudness perception
constexpr double kAlphaF[kNumRef] = {
    0.532, 0.506, 0.480, 0.455, 0.432, 0.409, 0.387, 0.367, 0.349, 0.330,
    0.315, 0.301, 0.288, 0.276, 0.267, 0.259, 0.253, 0.250, 0.246, 0.244,
    0.243, 0.243, 0.243, 0.242, 0.242, 0.245, 0.254, 0.271, 0.301};

// magnitude of the linear transfer function, dB
constexpr double kLu[kNumRef] = {
    -31.6, -27.2, -23.0, -19.1, -15.9, -13.0, -10.3, -8.1, -6.2, -4.5,
    -3.1,  -2.0,  -1.1,  -0.4,  0.0,   0.3,   0.5,   0.0,  -2.7, -4.1,
    -1.0,  1.7,   2.5,   1.2,   -2.1,  -7.1,  -11.2, -10.7, -3.1};

// threshold of hearing, dB SPL
constexpr double kTf[kNumRef] = {
    78.5, 68.7, 59.5, 51.1, 44.0, 37.5, 31.5, 26.5, 22.1, 17.9,
    14.4, 11.4, 8.6,  6.2,  4.4,  3.0,  2.2,  2.4,  3.5,  1.7,
    -1.3, -4.2, -6.0, -5.4, -1.5, 6.0,  12.6, 13.9, 12.3};

double spl_at_reference(int i, double phon) {
    const double af = kAlphaF[i];
    const double a_f = 4.47e-3 * (std::pow(10.0, 0.025 * phon) - 1.15) +
                       std::pow(0.4 * std::pow(10.0, (kTf[i] + kLu[i]) / 10.0 - 9.0), af);
    return 10.0 / af * std::log10(a_f) - kLu[i] + 94.0;
}

} // namespace

double iso226_spl(double frequency_hz, double phon) {
    if (phon < 0.0 || phon > 90.0)
        throw std::invalid_argument("iso226_spl: phon level must be in [0, 90]");
    if (frequency_hz <= kRefFreq[0]) return spl_at_reference(0, phon);
    if (frequency_hz >= kRefFreq[kNumRef - 1]) return spl_at_reference(kNumRef - 1, phon);

    int hi = 1;
    while (kRefFreq[hi] < frequency_hz) ++hi;
    const int lo = hi - 1;
    const double t = (std::log(frequency_hz) - std::log(kRefFreq[lo])) /
                     (std::log(kRefFreq[hi]) - std::log(kRefFreq[lo]));
    return (1.0 - t) * spl_at_reference(lo, phon) + t * spl_at_reference(hi, phon);
}

ElcCurve elc_power_weights(const std::vector<double>& frequencies_hz, double phon) {
    const double spl_1k = iso226_spl(1000.0, phon);
    ElcCurve curve;
    curve.frequencies = frequencies_hz;
    curve.power_weights.reserve(frequencies_hz.size());
    for (double f : frequencies_hz) {
        if (f < 0.0) throw std::invalid_argument("elc_power_weights: negative frequency");
        const double spl = iso226_spl(std::max(f, 1e-6), phon);
        curve.power_weights.push_back(std::pow(10.0, (spl_1k - spl) / 10.0));
    }
    return curve;
}

void ElcCurve::validate() const {
    if (frequencies.size() != power_weights.size())
        throw std::invalid_argument("ElcCurve: size mismatch");
    for (std::size_t i = 1; i < frequencies.size(); ++i)
        if (frequencies[i] < frequencies[i - 1])
            throw std::invalid_argument("ElcCurve: frequencies not ascending");
    for (double w : power_weights)
        if (!std::isfinite(w) || w < 0.0)
            throw std::invalid_argument("ElcCurve: invalid weight");
}

} // namespace resoneq
