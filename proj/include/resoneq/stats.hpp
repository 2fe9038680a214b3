#pragma once

#include <cstddef>
#include <vector>

namespace resoneq {

// Order statistic with linear interpolation between closest ranks:
// rank = (n-1)*p/100. Throws on an empty input; p must be in [0, 100].
double percentile(std::vector<double> values, double p);

double mean(const std::vector<double>& values);

// Population standard deviation (divide by n).
double population_stddev(const std::vector<double>& values);

// Sample standard deviation (divide by n-1); 0 for fewer than two values.
double sample_stddev(const std::vector<double>& values);

// Standardized central moments of a sample (population convention).
// Degenerate samples (all values equal) yield 0 for both.
double skewness(const std::vector<double>& values);
double excess_kurtosis(const std::vector<double>& values);

// Two-sided Student-t critical value t such that P(|T_dof| <= t) = confidence.
double student_t_critical(double confidence, int dof);

// Regularized incomplete beta function I_x(a, b), used by the t distribution.
double regularized_incomplete_beta(double a, double b, double x);

} // namespace resoneq
