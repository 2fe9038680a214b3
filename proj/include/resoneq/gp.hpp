#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace resoneq {

struct SearchDimension {
    enum class Kind { Continuous, Integer, LogContinuous };
    std::string name;
    Kind kind = Kind::Continuous;
    double lower = 0.0;
    double upper = 1.0;
};

// Hyper-parameter box; points are carried internally in the unit hypercube.
struct SearchSpace {
    std::vector<SearchDimension> dimensions;

    void validate() const;
    std::size_t size() const { return dimensions.size(); }

    // unit cube -> parameter values (integers rounded, log dims exponentiated)
    std::vector<double> decode(const std::vector<double>& unit) const;
    // parameter values -> unit cube
    std::vector<double> encode(const std::vector<double>& params) const;
};

struct Observation {
    std::vector<double> point; // unit-cube coordinates
    double loss = 0.0;
};

struct GpConfig {
    double length_scale = 0.2;    // in unit-cube units
    double signal_variance = 1.0;
    double noise_variance = 1e-4;
    double kappa = 2.0;
    std::size_t n_candidates = 1024;

    void validate() const;
};

struct GpPosterior {
    std::vector<double> mean;   // de-standardized (original loss units)
    std::vector<double> stddev; // >= 0
};

// Exact GP regression with a squared-exponential kernel; losses are
// standardized internally (zero mean, unit variance) and the posterior is
// mapped back to loss units. A singular kernel matrix gets 1e-8 jitter, then
// an error if still singular.
GpPosterior gp_posterior(const std::vector<Observation>& observations,
                         const std::vector<std::vector<double>>& queries, const GpConfig& cfg);

// Next point to evaluate (unit-cube coordinates): minimizes mu - kappa*sigma
// over seeded low-discrepancy candidates (Halton with a random digital
// shift). Empty history yields the cube center. Candidates that decode onto
// an already-evaluated point are skipped in favor of the next best.
std::vector<double> suggest(const std::vector<Observation>& observations,
                            const SearchSpace& space, const GpConfig& cfg, std::uint64_t seed);

struct OptimizeResult {
    std::vector<double> best_point; // decoded parameter values
    double best_loss = 0.0;
    std::vector<Observation> history;           // unit-cube points
    std::vector<std::vector<double>> decoded;   // decoded per iteration
};

// suggest -> evaluate -> record loop. Objective failures (exceptions) are
// recorded as worst-so-far * 10 and the search continues.
OptimizeResult optimize(const std::function<double(const std::vector<double>&)>& objective,
                        const SearchSpace& space, std::size_t budget, const GpConfig& cfg,
                        std::uint64_t seed);

} // namespace resoneq
