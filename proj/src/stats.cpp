#include "resoneq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace resoneq {

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("percentile: empty input");
    if (p < 0.0 || p > 100.0) throw std::invalid_argument("percentile: p must be in [0, 100]");
    std::sort(values.begin(), values.end());
    const double rank = (static_cast<double>(values.size()) - 1.0) * p / 100.0;
    const auto lo = static_cast<std::size_t>(rank);
    if (lo + 1 >= values.size()) return values.back();
    const double frac = rank - static_cast<double>(lo);
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

double mean(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("mean: empty input");
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc / static_cast<double>(values.size());
}

double population_stddev(const std::vector<double>& values) {
    const double m = mean(values);
    double acc = 0.0;
    for (double v : values) acc += (v - m) * (v - m);
    return std::sqrt(acc / static_cast<double>(values.size()));
}

double sample_stddev(const std::vector<double>& values) {
    if (values.size() < 2) return 0.0;
    const double m = mean(values);
    double acc = 0.0;
    for (double v : values) acc += (v - m) * (v - m);
    return std::sqrt(acc / static_cast<double>(values.size() - 1));
}

namespace {

bool degenerate(const std::vector<double>& values) {
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return *lo == *hi;
}

} // namespace

double skewness(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("skewness: empty input");
    if (degenerate(values)) return 0.0;
    const double m = mean(values);
    double m2 = 0.0, m3 = 0.0;
    for (double v : values) {
        const double d = v - m;
        m2 += d * d;
        m3 += d * d * d;
    }
    const auto n = static_cast<double>(values.size());
    m2 /= n;
    m3 /= n;
    const double sd = std::sqrt(m2);
    return sd > 0.0 ? m3 / (sd * sd * sd) : 0.0;
}

double excess_kurtosis(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("excess_kurtosis: empty input");
    if (degenerate(values)) return 0.0;
    const double m = mean(values);
    double m2 = 0.0, m4 = 0.0;
    for (double v : values) {
        const double d = v - m;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    const auto n = static_cast<double>(values.size());
    m2 /= n;
    m4 /= n;
    return m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;
}

namespace {

double log_gamma(double x) { return std::lgamma(x); }

// continued fraction for the incomplete beta function (Lentz's method)
double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 1e-14;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

} // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front =
        log_gamma(a + b) - log_gamma(a) - log_gamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_critical(double confidence, int dof) {
    if (dof < 1) throw std::invalid_argument("student_t_critical: dof must be >= 1");
    if (confidence <= 0.0 || confidence >= 1.0)
        throw std::invalid_argument("student_t_critical: confidence must be in (0, 1)");

    // P(|T| <= t) = 1 - I_{dof/(dof+t^2)}(dof/2, 1/2); monotone in t, bisect
    const auto cdf_two_sided = [dof](double t) {
        const double x = dof / (dof + t * t);
        return 1.0 - regularized_incomplete_beta(dof / 2.0, 0.5, x);
    };
    double lo = 0.0, hi = 1.0;
    while (cdf_two_sided(hi) < confidence) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (cdf_two_sided(mid) < confidence)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-12) break;
    }
    return 0.5 * (lo + hi);
}

} // namespace resoneq
