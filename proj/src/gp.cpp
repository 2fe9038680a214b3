#include "resoneq/gp.hpp"

#include "resoneq/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace resoneq {

void SearchSpace::validate() const {
    if (dimensions.empty()) throw std::invalid_argument("SearchSpace: no dimensions");
    std::vector<std::string> names;
    for (const SearchDimension& d : dimensions) {
        if (!(d.lower < d.upper))
            throw std::invalid_argument("SearchSpace: lower must be < upper for '" + d.name + "'");
        if (d.kind == SearchDimension::Kind::LogContinuous && d.lower <= 0.0)
            throw std::invalid_argument("SearchSpace: log dimension '" + d.name +
                                        "' needs positive bounds");
        names.push_back(d.name);
    }
    std::sort(names.begin(), names.end());
    if (std::adjacent_find(names.begin(), names.end()) != names.end())
        throw std::invalid_argument("SearchSpace: duplicate dimension names");
}

std::vector<double> SearchSpace::decode(const std::vector<double>& unit) const {
    if (unit.size() != dimensions.size())
        throw std::invalid_argument("SearchSpace::decode: dimension mismatch");
    std::vector<double> out(unit.size());
    for (std::size_t i = 0; i < unit.size(); ++i) {
        const SearchDimension& d = dimensions[i];
        const double u = std::clamp(unit[i], 0.0, 1.0);
        switch (d.kind) {
            case SearchDimension::Kind::Continuous:
                out[i] = d.lower + u * (d.upper - d.lower);
                break;
            case SearchDimension::Kind::Integer:
                out[i] = std::clamp(std::round(d.lower + u * (d.upper - d.lower)), d.lower, d.upper);
                break;
            case SearchDimension::Kind::LogContinuous:
                out[i] = std::exp(std::log(d.lower) + u * (std::log(d.upper) - std::log(d.lower)));
                break;
        }
    }
    return out;
}

std::vector<double> SearchSpace::encode(const std::vector<double>& params) const {
    if (params.size() != dimensions.size())
        throw std::invalid_argument("SearchSpace::encode: dimension mismatch");
    std::vector<double> out(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const SearchDimension& d = dimensions[i];
        double u;
        if (d.kind == SearchDimension::Kind::LogContinuous)
            u = (std::log(params[i]) - std::log(d.lower)) / (std::log(d.upper) - std::log(d.lower));
        else
            u = (params[i] - d.lower) / (d.upper - d.lower);
        out[i] = std::clamp(u, 0.0, 1.0);
    }
    return out;
}

void GpConfig::validate() const {
    if (length_scale <= 0.0 || signal_variance <= 0.0 || noise_variance <= 0.0 || kappa <= 0.0 ||
        n_candidates == 0)
        throw std::invalid_argument("GpConfig: all parameters must be positive");
}

namespace {

double sq_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

// In-place Cholesky of a symmetric positive-definite matrix (row-major).
// Returns false if a non-positive pivot appears.
bool cholesky(std::vector<double>& m, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = m[i * n + j];
            for (std::size_t k = 0; k < j; ++k) sum -= m[i * n + k] * m[j * n + k];
            if (i == j) {
                if (sum <= 0.0) return false;
                m[i * n + i] = std::sqrt(sum);
            } else {
                m[i * n + j] = sum / m[j * n + j];
            }
        }
        for (std::size_t j = i + 1; j < n; ++j) m[i * n + j] = 0.0;
    }
    return true;
}

void solve_lower(const std::vector<double>& chol, std::size_t n, std::vector<double>& rhs) {
    for (std::size_t i = 0; i < n; ++i) {
        double sum = rhs[i];
        for (std::size_t k = 0; k < i; ++k) sum -= chol[i * n + k] * rhs[k];
        rhs[i] = sum / chol[i * n + i];
    }
}

void solve_upper_from_lower(const std::vector<double>& chol, std::size_t n,
                            std::vector<double>& rhs) {
    for (std::size_t ii = n; ii-- > 0;) {
        double sum = rhs[ii];
        for (std::size_t k = ii + 1; k < n; ++k) sum -= chol[k * n + ii] * rhs[k];
        rhs[ii] = sum / chol[ii * n + ii];
    }
}

struct StandardizedGp {
    std::vector<double> chol;      // Cholesky factor of K
    std::vector<double> alpha;     // K^-1 z
    double mean_y = 0.0;
    double std_y = 1.0;
    std::size_t n = 0;

    double kernel(double sq_dist, const GpConfig& cfg) const {
        return cfg.signal_variance * std::exp(-sq_dist / (2.0 * cfg.length_scale * cfg.length_scale));
    }
};

StandardizedGp fit_gp(const std::vector<Observation>& observations, const GpConfig& cfg) {
    cfg.validate();
    const std::size_t n = observations.size();
    if (n == 0) throw std::invalid_argument("gp_posterior: need at least one observation");
    for (const Observation& o : observations) {
        if (!std::isfinite(o.loss)) throw std::invalid_argument("gp_posterior: non-finite loss");
        for (double c : o.point)
            if (c < 0.0 || c > 1.0)
                throw std::invalid_argument("gp_posterior: point outside the unit cube");
    }

    StandardizedGp gp;
    gp.n = n;
    double acc = 0.0;
    for (const Observation& o : observations) acc += o.loss;
    gp.mean_y = acc / static_cast<double>(n);
    double var = 0.0;
    for (const Observation& o : observations) var += (o.loss - gp.mean_y) * (o.loss - gp.mean_y);
    var /= static_cast<double>(n);
    gp.std_y = var > 0.0 ? std::sqrt(var) : 1.0;

    std::vector<double> K(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            K[i * n + j] = gp.kernel(sq_distance(observations[i].point, observations[j].point), cfg) +
                           (i == j ? cfg.noise_variance : 0.0);

    gp.chol = K;
    if (!cholesky(gp.chol, n)) {
        gp.chol = K;
        for (std::size_t i = 0; i < n; ++i) gp.chol[i * n + i] += 1e-8; // jitter
        if (!cholesky(gp.chol, n))
            throw std::runtime_error("gp_posterior: kernel matrix is singular");
    }

    gp.alpha.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        gp.alpha[i] = (observations[i].loss - gp.mean_y) / gp.std_y;
    solve_lower(gp.chol, n, gp.alpha);
    solve_upper_from_lower(gp.chol, n, gp.alpha);
    return gp;
}

// standardized posterior at one query
void gp_query(const StandardizedGp& gp, const std::vector<Observation>& observations,
              const GpConfig& cfg, const std::vector<double>& q, double& mean_std,
              double& std_std) {
    const std::size_t n = gp.n;
    std::vector<double> kstar(n);
    for (std::size_t i = 0; i < n; ++i)
        kstar[i] = gp.kernel(sq_distance(observations[i].point, q), cfg);

    mean_std = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean_std += kstar[i] * gp.alpha[i];

    std::vector<double> v = kstar;
    solve_lower(gp.chol, n, v);
    double reduction = 0.0;
    for (double x : v) reduction += x * x;
    const double var = std::max(0.0, cfg.signal_variance - reduction);
    std_std = std::sqrt(var);
}

} // namespace

GpPosterior gp_posterior(const std::vector<Observation>& observations,
                         const std::vector<std::vector<double>>& queries, const GpConfig& cfg) {
    const StandardizedGp gp = fit_gp(observations, cfg);
    GpPosterior post;
    post.mean.reserve(queries.size());
    post.stddev.reserve(queries.size());
    for (const auto& q : queries) {
        double m, s;
        gp_query(gp, observations, cfg, q, m, s);
        post.mean.push_back(gp.mean_y + m * gp.std_y);
        post.stddev.push_back(s * gp.std_y);
    }
    return post;
}

namespace {

// Halton sequence with a seeded Cranley-Patterson rotation: low-discrepancy
// but different per seed.
std::vector<std::vector<double>> candidate_points(std::size_t count, std::size_t dims,
                                                  std::uint64_t seed) {
    static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    if (dims > sizeof(primes) / sizeof(primes[0]))
        throw std::invalid_argument("suggest: too many dimensions");

    Rng rng(derive_seed(seed, 0xca4du));
    std::vector<double> shift(dims);
    for (double& s : shift) s = rng.uniform();

    std::vector<std::vector<double>> points(count, std::vector<double>(dims));
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t d = 0; d < dims; ++d) {
            const int base = primes[d];
            double f = 1.0, value = 0.0;
            std::size_t idx = i + 1;
            while (idx > 0) {
                f /= base;
                value += f * static_cast<double>(idx % static_cast<std::size_t>(base));
                idx /= static_cast<std::size_t>(base);
            }
            value += shift[d];
            points[i][d] = value - std::floor(value);
        }
    }
    return points;
}

bool same_decoded(const std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i] - b[i]) > 1e-12 * std::max(1.0, std::abs(a[i]))) return false;
    return true;
}

} // namespace

std::vector<double> suggest(const std::vector<Observation>& observations,
                            const SearchSpace& space, const GpConfig& cfg, std::uint64_t seed) {
    space.validate();
    cfg.validate();
    if (observations.empty()) return std::vector<double>(space.size(), 0.5);

    const StandardizedGp gp = fit_gp(observations, cfg);
    const auto candidates = candidate_points(cfg.n_candidates, space.size(), seed);

    std::vector<std::vector<double>> decoded_obs;
    decoded_obs.reserve(observations.size());
    for (const Observation& o : observations) decoded_obs.push_back(space.decode(o.point));

    std::vector<std::size_t> order(candidates.size());
    std::vector<double> score(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        double m, s;
        gp_query(gp, observations, cfg, candidates[i], m, s);
        score[i] = m - cfg.kappa * s;
        order[i] = i;
    }
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });

    // best non-duplicate candidate; fall back to the overall best
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const auto& candidate = candidates[order[rank]];
        const std::vector<double> decoded = space.decode(candidate);
        bool duplicate = false;
        for (const auto& seen : decoded_obs)
            if (same_decoded(decoded, seen)) {
                duplicate = true;
                break;
            }
        if (!duplicate) return candidate;
    }
    return candidates[order[0]];
}

OptimizeResult optimize(const std::function<double(const std::vector<double>&)>& objective,
                        const SearchSpace& space, std::size_t budget, const GpConfig& cfg,
                        std::uint64_t seed) {
    if (budget == 0) throw std::invalid_argument("optimize: budget must be >= 1");
    if (!objective) throw std::invalid_argument("optimize: null objective");
    space.validate();

    OptimizeResult result;
    result.best_loss = std::numeric_limits<double>::infinity();
    double worst_success = -std::numeric_limits<double>::infinity();

    for (std::size_t it = 0; it < budget; ++it) {
        const std::vector<double> unit =
            suggest(result.history, space, cfg, derive_seed(seed, 0x0b7u, it));
        const std::vector<double> decoded = space.decode(unit);

        double loss;
        try {
            loss = objective(decoded);
            if (!std::isfinite(loss)) throw std::runtime_error("non-finite objective value");
            worst_success = std::max(worst_success, loss);
        } catch (const std::exception&) {
            // worst-so-far * 10, kept strictly worse even for tiny/negative losses
            loss = std::isfinite(worst_success)
                       ? std::max(worst_success * 10.0, worst_success + 1.0)
                       : 1e6;
        }

        result.history.push_back({unit, loss});
        result.decoded.push_back(decoded);
        if (loss < result.best_loss) {
            result.best_loss = loss;
            result.best_point = decoded;
        }
    }
    return result;
}

} // namespace resoneq
