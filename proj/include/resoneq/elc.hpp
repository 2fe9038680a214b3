#pragma once

#include <vector>

namespace resoneq {

// Equal-loudness weighting curve sampled at a set of frequencies. Weights are
// linear power multipliers, 1.0 at 1 kHz; frequencies less audible at the
// given phon level get weights below 1.
struct ElcCurve {
    std::vector<double> frequencies;   // Hz, ascending
    std::vector<double> power_weights; // >= 0, finite

    void validate() const;
};

// Sound pressure level (dB SPL) that produces the given loudness (phon) at
// the given frequency, per the ISO 226:2003 parameterization. Between the
// standard's 29 reference frequencies the SPL is interpolated linearly in
// log-frequency; outside [20, 12500] Hz the endpoint value is held.
double iso226_spl(double frequency_hz, double phon);

// Power weight 10^((Lp(1kHz) - Lp(f))/10) evaluated at each frequency.
ElcCurve elc_power_weights(const std::vector<double>& frequencies_hz, double phon);

} // namespace resoneq
