#include "resoneq/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>
#include <stdexcept>

namespace resoneq {

namespace {
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
} // namespace

RealFft::RealFft(std::size_t length) : length_(length) {
    if (length < 2) throw std::invalid_argument("RealFft: length must be >= 2");
    real_buf_ = fftw_alloc_real(length);
    cplx_buf_ = fftw_alloc_complex(length / 2 + 1);
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan_fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(length), real_buf_,
                                     static_cast<fftw_complex*>(cplx_buf_), FFTW_ESTIMATE);
    plan_inv_ = fftw_plan_dft_c2r_1d(static_cast<int>(length),
                                     static_cast<fftw_complex*>(cplx_buf_), real_buf_,
                                     FFTW_ESTIMATE);
    if (plan_fwd_ == nullptr || plan_inv_ == nullptr)
        throw std::runtime_error("RealFft: FFTW plan creation failed");
}

RealFft::~RealFft() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
    fftw_free(real_buf_);
    fftw_free(cplx_buf_);
}

std::vector<std::complex<double>> RealFft::forward(const std::vector<double>& input) const {
    if (input.size() != length_)
        throw std::invalid_argument("RealFft::forward: input length mismatch");
    std::memcpy(real_buf_, input.data(), length_ * sizeof(double));
    fftw_execute(static_cast<fftw_plan>(plan_fwd_));
    std::vector<std::complex<double>> out(bins());
    std::memcpy(out.data(), cplx_buf_, bins() * sizeof(fftw_complex));
    return out;
}

std::vector<double> RealFft::inverse(const std::vector<std::complex<double>>& spectrum) const {
    if (spectrum.size() != bins())
        throw std::invalid_argument("RealFft::inverse: spectrum length mismatch");
    std::memcpy(cplx_buf_, spectrum.data(), bins() * sizeof(fftw_complex));
    fftw_execute(static_cast<fftw_plan>(plan_inv_));
    std::vector<double> out(length_);
    const double scale = 1.0 / static_cast<double>(length_);
    for (std::size_t i = 0; i < length_; ++i) out[i] = real_buf_[i] * scale;
    return out;
}

std::vector<double> power_spectrum(const std::vector<std::complex<double>>& spectrum) {
    std::vector<double> p(spectrum.size());
    for (std::size_t i = 0; i < spectrum.size(); ++i) p[i] = std::norm(spectrum[i]);
    return p;
}

} // namespace resoneq
