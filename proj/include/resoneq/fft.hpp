#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace resoneq {

// Real-to-complex FFT of a fixed even length, backed by FFTW.
//
// Each instance owns its plans and buffers, so distinct instances can be
// used from distinct threads. Plan creation itself is serialized internally
// (FFTW's planner is not thread-safe).
class RealFft {
public:
    explicit RealFft(std::size_t length);
    ~RealFft();

    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    std::size_t length() const { return length_; }
    std::size_t bins() const { return length_ / 2 + 1; }

    // time -> spectrum (unnormalized, FFTW convention)
    std::vector<std::complex<double>> forward(const std::vector<double>& input) const;

    // spectrum -> time, scaled by 1/N so inverse(forward(x)) == x
    std::vector<double> inverse(const std::vector<std::complex<double>>& spectrum) const;

private:
    std::size_t length_;
    void* plan_fwd_;
    void* plan_inv_;
    double* real_buf_;
    void* cplx_buf_;
};

// Power spectrum |X_k|^2 for k = 0..N/2.
std::vector<double> power_spectrum(const std::vector<std::complex<double>>& spectrum);

// Frequency of DFT bin k for the given transform length and sample rate.
inline double bin_frequency(std::size_t k, std::size_t fft_length, double sample_rate) {
    return static_cast<double>(k) * sample_rate / static_cast<double>(fft_length);
}

} // namespace resoneq
