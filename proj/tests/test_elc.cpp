#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "resoneq/elc.hpp"

#include <cmath>

using namespace resoneq;

TEST_CASE("weight at 1 kHz is exactly 1") {
    const ElcCurve c = elc_power_weights({1000.0}, 80.0);
    CHECK(c.power_weights[0] == 1.0);
}

TEST_CASE("low frequencies are strongly down-weighted at 80 phon") {
    // independent evaluation of the 226 parameterization at a reference
    // frequency: alpha=0.480, Lu=-23.0, Tf=59.5 at 31.5 Hz
    const double phon = 80.0;
    const double af = 0.480;
    const double a_f = 4.47e-3 * (std::pow(10.0, 0.025 * phon) - 1.15) +
                       std::pow(0.4 * std::pow(10.0, (59.5 - 23.0) / 10.0 - 9.0), af);
    const double spl_315 = 10.0 / af * std::log10(a_f) + 23.0 + 94.0;
    CHECK(iso226_spl(31.5, phon) == doctest::Approx(spl_315).epsilon(1e-12));

    const ElcCurve c = elc_power_weights({31.5}, phon);
    CHECK(c.power_weights[0] < 0.2);
    const double expected = std::pow(10.0, (iso226_spl(1000.0, phon) - spl_315) / 10.0);
    CHECK(c.power_weights[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("the 2-4 kHz sensitivity peak gets weights above 1") {
    const ElcCurve c = elc_power_weights({3150.0}, 80.0);
    CHECK(c.power_weights[0] > 1.0);
}

TEST_CASE("SPL at 1 kHz equals the phon level by construction") {
    for (double phon : {20.0, 40.0, 60.0, 80.0})
        CHECK(iso226_spl(1000.0, phon) == doctest::Approx(phon).epsilon(2e-3));
}

TEST_CASE("interpolation is continuous and endpoint weights are held") {
    const double phon = 80.0;
    // continuity across a table point
    CHECK(iso226_spl(999.0, phon) == doctest::Approx(iso226_spl(1001.0, phon)).epsilon(1e-3));
    // clamped outside the standard's range
    CHECK(iso226_spl(5.0, phon) == iso226_spl(20.0, phon));
    CHECK(iso226_spl(19000.0, phon) == iso226_spl(12500.0, phon));
}

TEST_CASE("curves are finite and non-negative across the audio band") {
    std::vector<double> freqs;
    for (double f = 0.0; f < 22050.0; f += 97.0) freqs.push_back(f);
    const ElcCurve c = elc_power_weights(freqs, 80.0);
    c.validate();
    for (double w : c.power_weights) {
        CHECK(std::isfinite(w));
        CHECK(w >= 0.0);
    }
}
