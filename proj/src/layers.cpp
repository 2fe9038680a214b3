#include "resoneq/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

#if defined(__GNUC__) || defined(__clang__)
#define RESONEQ_RESTRICT __restrict__
#else
#define RESONEQ_RESTRICT
#endif

namespace resoneq {

// ---------------------------------------------------------------------------
// Dense
// ---------------------------------------------------------------------------

Dense::Dense(std::size_t in_features, std::size_t out_features)
    : weights({in_features, out_features}),
      bias({out_features}),
      grad_weights({in_features, out_features}),
      grad_bias({out_features}),
      in_(in_features),
      out_(out_features) {
    if (in_features == 0 || out_features == 0)
        throw std::invalid_argument("Dense: sizes must be positive");
}

void Dense::init_he_normal(Rng& rng) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(in_));
    for (double& w : weights.values()) w = rng.gaussian(0.0, stddev);
    bias.fill(0.0);
}

Tensor Dense::forward(const Tensor& x, Mode mode) {
    if (x.rank() != 2 || x.dim(1) != in_)
        throw std::invalid_argument("Dense::forward: expected [batch, " + std::to_string(in_) +
                                    "], got " + x.shape_string());
    if (mode == Mode::Train) cached_input_ = x;
    const std::size_t batch = x.dim(0);
    Tensor y({batch, out_});
    const double* xp = x.data();
    const double* wp = weights.data();
    double* yp = y.data();
    for (std::size_t b = 0; b < batch; ++b) {
        double* yrow = yp + b * out_;
        std::memcpy(yrow, bias.data(), out_ * sizeof(double));
        const double* xrow = xp + b * in_;
        for (std::size_t i = 0; i < in_; ++i) {
            const double xv = xrow[i];
            const double* wrow = wp + i * out_;
            for (std::size_t o = 0; o < out_; ++o) yrow[o] += xv * wrow[o];
        }
    }
    return y;
}

Tensor Dense::backward(const Tensor& grad_out) {
    const std::size_t batch = cached_input_.dim(0);
    if (grad_out.rank() != 2 || grad_out.dim(0) != batch || grad_out.dim(1) != out_)
        throw std::invalid_argument("Dense::backward: gradient shape mismatch");

    Tensor grad_in({batch, in_});
    const double* gp = grad_out.data();
    const double* xp = cached_input_.data();
    const double* wp = weights.data();
    double* gw = grad_weights.data();
    double* gb = grad_bias.data();
    double* gi = grad_in.data();

    for (std::size_t b = 0; b < batch; ++b) {
        const double* grow = gp + b * out_;
        const double* xrow = xp + b * in_;
        double* girow = gi + b * in_;
        for (std::size_t o = 0; o < out_; ++o) gb[o] += grow[o];
        for (std::size_t i = 0; i < in_; ++i) {
            const double xv = xrow[i];
            const double* wrow = wp + i * out_;
            double* gwrow = gw + i * out_;
            double acc = 0.0;
            for (std::size_t o = 0; o < out_; ++o) {
                gwrow[o] += xv * grow[o];
                acc += wrow[o] * grow[o];
            }
            girow[i] = acc;
        }
    }
    return grad_in;
}

std::vector<ParamRef> Dense::params() {
    return {{"W", &weights, &grad_weights}, {"b", &bias, &grad_bias}};
}

// ---------------------------------------------------------------------------
// BatchNorm
// ---------------------------------------------------------------------------

BatchNorm::BatchNorm(std::size_t num_features, bool init_running_stats)
    : gamma({num_features}),
      beta({num_features}),
      grad_gamma({num_features}),
      grad_beta({num_features}),
      running_mean({num_features}),
      running_var({num_features}),
      initialized_({1}),
      features_(num_features) {
    if (num_features == 0) throw std::invalid_argument("BatchNorm: feature count must be positive");
    gamma.fill(1.0);
    if (init_running_stats) {
        running_var.fill(1.0);
        initialized_[0] = 1.0;
    }
}

namespace {

// Feature axis layout shared by forward/backward: [batch, F] has F features
// with per-element stride 1 and batch stride F; [batch, C, T] has C features
// over batch*T samples.
struct NormLayout {
    std::size_t features;
    std::size_t outer;  // batch
    std::size_t inner;  // time (1 for dense input)
};

NormLayout norm_layout(const Tensor& x, std::size_t features) {
    if (x.rank() == 2) {
        if (x.dim(1) != features)
            throw std::invalid_argument("BatchNorm: feature dimension mismatch");
        return {features, x.dim(0), 1};
    }
    if (x.rank() == 3) {
        if (x.dim(1) != features)
            throw std::invalid_argument("BatchNorm: map dimension mismatch");
        return {features, x.dim(0), x.dim(2)};
    }
    throw std::invalid_argument("BatchNorm: expected rank 2 or 3, got " + x.shape_string());
}

} // namespace

Tensor BatchNorm::forward(const Tensor& x, Mode mode) {
    const NormLayout layout = norm_layout(x, features_);
    const std::size_t n_per_feature = layout.outer * layout.inner;
    Tensor y(x.shape());
    cached_shape_ = x.shape();
    cached_train_ = mode == Mode::Train;

    std::vector<double> mean_f(features_, 0.0), var_f(features_, 0.0);

    if (mode == Mode::Train) {
        std::vector<double> sumsq(features_, 0.0);
        for (std::size_t b = 0; b < layout.outer; ++b)
            for (std::size_t f = 0; f < features_; ++f) {
                const double* xp = x.data() + (b * features_ + f) * layout.inner;
                double s = 0.0, sq = 0.0;
                for (std::size_t t = 0; t < layout.inner; ++t) {
                    s += xp[t];
                    sq += xp[t] * xp[t];
                }
                mean_f[f] += s;
                sumsq[f] += sq;
            }
        for (std::size_t f = 0; f < features_; ++f) {
            mean_f[f] /= static_cast<double>(n_per_feature);
            var_f[f] = std::max(0.0, sumsq[f] / static_cast<double>(n_per_feature) -
                                         mean_f[f] * mean_f[f]);
        }

        for (std::size_t f = 0; f < features_; ++f) {
            running_mean[f] = (1.0 - kMomentum) * running_mean[f] + kMomentum * mean_f[f];
            running_var[f] = (1.0 - kMomentum) * running_var[f] + kMomentum * var_f[f];
        }
        initialized_[0] = 1.0;
    } else {
        if (initialized_[0] == 0.0)
            throw std::runtime_error("BatchNorm: uninitialized running statistics");
        for (std::size_t f = 0; f < features_; ++f) {
            mean_f[f] = running_mean[f];
            var_f[f] = running_var[f];
        }
    }

    cached_invstd_.assign(features_, 0.0);
    for (std::size_t f = 0; f < features_; ++f)
        cached_invstd_[f] = 1.0 / std::sqrt(var_f[f] + kEpsilon);

    if (mode == Mode::Train) {
        cached_xhat_ = Tensor(x.shape());
        for (std::size_t b = 0; b < layout.outer; ++b)
            for (std::size_t f = 0; f < features_; ++f) {
                const double* xp = x.data() + (b * features_ + f) * layout.inner;
                double* hp = cached_xhat_.data() + (b * features_ + f) * layout.inner;
                double* yp = y.data() + (b * features_ + f) * layout.inner;
                const double m = mean_f[f];
                const double inv = cached_invstd_[f];
                const double g = gamma[f], bta = beta[f];
                for (std::size_t t = 0; t < layout.inner; ++t) {
                    const double h = (xp[t] - m) * inv;
                    hp[t] = h;
                    yp[t] = g * h + bta;
                }
            }
    } else {
        for (std::size_t b = 0; b < layout.outer; ++b)
            for (std::size_t f = 0; f < features_; ++f) {
                const double* xp = x.data() + (b * features_ + f) * layout.inner;
                double* yp = y.data() + (b * features_ + f) * layout.inner;
                const double scale = gamma[f] * cached_invstd_[f];
                const double shift = beta[f] - mean_f[f] * scale;
                for (std::size_t t = 0; t < layout.inner; ++t) yp[t] = scale * xp[t] + shift;
            }
    }
    return y;
}

Tensor BatchNorm::backward(const Tensor& grad_out) {
    if (grad_out.shape() != cached_shape_)
        throw std::invalid_argument("BatchNorm::backward: gradient shape mismatch");
    if (cached_xhat_.shape() != cached_shape_)
        throw std::runtime_error("BatchNorm::backward: requires a training-mode forward pass");
    const NormLayout layout = norm_layout(grad_out, features_);
    const double n = static_cast<double>(layout.outer * layout.inner);

    Tensor grad_in(grad_out.shape());
    std::vector<double> sum_g(features_, 0.0), sum_gh(features_, 0.0);

    for (std::size_t b = 0; b < layout.outer; ++b)
        for (std::size_t f = 0; f < features_; ++f) {
            const double* gp = grad_out.data() + (b * features_ + f) * layout.inner;
            const double* hp = cached_xhat_.data() + (b * features_ + f) * layout.inner;
            double a = 0.0, c = 0.0;
            for (std::size_t t = 0; t < layout.inner; ++t) {
                a += gp[t];
                c += gp[t] * hp[t];
            }
            sum_g[f] += a;
            sum_gh[f] += c;
        }

    for (std::size_t f = 0; f < features_; ++f) {
        grad_beta[f] += sum_g[f];
        grad_gamma[f] += sum_gh[f];
    }

    if (cached_train_) {
        for (std::size_t b = 0; b < layout.outer; ++b)
            for (std::size_t f = 0; f < features_; ++f) {
                const double* gp = grad_out.data() + (b * features_ + f) * layout.inner;
                const double* hp = cached_xhat_.data() + (b * features_ + f) * layout.inner;
                double* op = grad_in.data() + (b * features_ + f) * layout.inner;
                const double k = gamma[f] * cached_invstd_[f];
                const double mg = sum_g[f] / n;
                const double mgh = sum_gh[f] / n;
                for (std::size_t t = 0; t < layout.inner; ++t)
                    op[t] = k * (gp[t] - mg - hp[t] * mgh);
            }
    } else {
        // inference-mode statistics are constants
        for (std::size_t b = 0; b < layout.outer; ++b)
            for (std::size_t f = 0; f < features_; ++f) {
                const double* gp = grad_out.data() + (b * features_ + f) * layout.inner;
                double* op = grad_in.data() + (b * features_ + f) * layout.inner;
                const double k = gamma[f] * cached_invstd_[f];
                for (std::size_t t = 0; t < layout.inner; ++t) op[t] = k * gp[t];
            }
    }
    return grad_in;
}

std::vector<ParamRef> BatchNorm::params() {
    return {{"gamma", &gamma, &grad_gamma}, {"beta", &beta, &grad_beta}};
}

std::vector<StateRef> BatchNorm::state() {
    return {{"running_mean", &running_mean},
            {"running_var", &running_var},
            {"initialized", &initialized_}};
}

// ---------------------------------------------------------------------------
// Relu
// ---------------------------------------------------------------------------

Tensor Relu::forward(const Tensor& x, Mode mode) {
    Tensor y(x.shape());
    if (mode == Mode::Train) {
        cached_shape_ = x.shape();
        mask_.assign(x.numel(), 0);
        for (std::size_t i = 0; i < x.numel(); ++i) {
            if (x[i] > 0.0) {
                y[i] = x[i];
                mask_[i] = 1;
            }
        }
    } else {
        for (std::size_t i = 0; i < x.numel(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    }
    return y;
}

Tensor Relu::backward(const Tensor& grad_out) {
    if (grad_out.shape() != cached_shape_)
        throw std::invalid_argument("Relu::backward: gradient shape mismatch");
    Tensor grad_in(grad_out.shape());
    for (std::size_t i = 0; i < grad_out.numel(); ++i)
        grad_in[i] = mask_[i] ? grad_out[i] : 0.0;
    return grad_in;
}

// ---------------------------------------------------------------------------
// Conv1dDilated
// ---------------------------------------------------------------------------

Conv1dDilated::Conv1dDilated(std::size_t in_maps, std::size_t out_maps, std::size_t kernel_size,
                             std::size_t dilation)
    : kernels({out_maps, in_maps, kernel_size}),
      bias({out_maps}),
      grad_kernels({out_maps, in_maps, kernel_size}),
      grad_bias({out_maps}),
      in_maps_(in_maps),
      out_maps_(out_maps),
      kernel_(kernel_size),
      dilation_(dilation) {
    if (in_maps == 0 || out_maps == 0 || kernel_size == 0)
        throw std::invalid_argument("Conv1dDilated: sizes must be positive");
    if (dilation == 0) throw std::invalid_argument("Conv1dDilated: dilation must be >= 1");
    const std::size_t total_pad = (kernel_size - 1) * dilation;
    pad_left_ = static_cast<std::ptrdiff_t>((total_pad + 1) / 2);
}

void Conv1dDilated::init_he_normal(Rng& rng) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(in_maps_ * kernel_));
    for (double& w : kernels.values()) w = rng.gaussian(0.0, stddev);
    bias.fill(0.0);
}

namespace {

// The time axis is processed in chunks; per chunk the input rows (every map,
// chunk plus halo, zero-padded at the signal edges) are staged into a small
// contiguous panel that stays cache-resident while all output maps consume it.
constexpr std::ptrdiff_t kConvChunk = 512;

struct ConvGeometry {
    std::ptrdiff_t off_min;   // most negative tap offset
    std::ptrdiff_t halo;      // off_max - off_min
    std::vector<std::ptrdiff_t> offsets;
};

ConvGeometry conv_geometry(std::size_t kernel, std::size_t dilation, std::ptrdiff_t pad_left) {
    ConvGeometry geom;
    geom.offsets.resize(kernel);
    std::ptrdiff_t off_max = std::numeric_limits<std::ptrdiff_t>::min();
    geom.off_min = std::numeric_limits<std::ptrdiff_t>::max();
    for (std::size_t p = 0; p < kernel; ++p) {
        geom.offsets[p] = static_cast<std::ptrdiff_t>(p * dilation) - pad_left;
        geom.off_min = std::min(geom.off_min, geom.offsets[p]);
        off_max = std::max(off_max, geom.offsets[p]);
    }
    geom.halo = off_max - geom.off_min;
    return geom;
}

// rows[i] <- x[i][lo .. lo+len) with zeros outside [0, T)
void stage_panel(const double* x_base, std::size_t row_stride, std::size_t rows,
                 std::ptrdiff_t lo, std::ptrdiff_t len, std::ptrdiff_t T, double* panel) {
    const std::ptrdiff_t valid_lo = std::clamp<std::ptrdiff_t>(lo, 0, T);
    const std::ptrdiff_t valid_hi = std::clamp<std::ptrdiff_t>(lo + len, 0, T);
    const std::ptrdiff_t n_prefix = valid_lo - lo;
    const std::ptrdiff_t n_valid = std::max<std::ptrdiff_t>(0, valid_hi - valid_lo);
    for (std::size_t i = 0; i < rows; ++i) {
        const double* row = x_base + i * row_stride;
        double* dst = panel + static_cast<std::size_t>(len) * i;
        std::fill(dst, dst + n_prefix, 0.0);
        std::memcpy(dst + n_prefix, row + valid_lo,
                    static_cast<std::size_t>(n_valid) * sizeof(double));
        std::fill(dst + n_prefix + n_valid, dst + len, 0.0);
    }
}

} // namespace

Tensor Conv1dDilated::forward(const Tensor& x, Mode mode) {
    if (x.rank() != 3 || x.dim(1) != in_maps_)
        throw std::invalid_argument("Conv1dDilated::forward: expected [batch, " +
                                    std::to_string(in_maps_) + ", T], got " + x.shape_string());
    if (mode == Mode::Train) cached_input_ = x;
    const std::size_t batch = x.dim(0);
    const std::size_t T = x.dim(2);
    Tensor y({batch, out_maps_, T});
    const auto sT = static_cast<std::ptrdiff_t>(T);

    const ConvGeometry geom = conv_geometry(kernel_, dilation_, pad_left_);
    const std::ptrdiff_t panel_len = std::min(kConvChunk, sT) + geom.halo;
    std::vector<double> panel(static_cast<std::size_t>(panel_len) * in_maps_);
    std::vector<double> acc(4 * static_cast<std::size_t>(std::min(kConvChunk, sT)));

    for (std::size_t b = 0; b < batch; ++b) {
        const double* xb = x.data() + b * in_maps_ * T;
        for (std::ptrdiff_t cs = 0; cs < sT; cs += kConvChunk) {
            const std::ptrdiff_t n = std::min(kConvChunk, sT - cs);
            stage_panel(xb, T, in_maps_, cs + geom.off_min, n + geom.halo, sT, panel.data());

            // four output maps at a time so every staged input load feeds
            // four accumulators
            std::size_t o = 0;
            for (; o + 4 <= out_maps_; o += 4) {
                double* RESONEQ_RESTRICT a0 = acc.data();
                double* RESONEQ_RESTRICT a1 = acc.data() + n;
                double* RESONEQ_RESTRICT a2 = acc.data() + 2 * n;
                double* RESONEQ_RESTRICT a3 = acc.data() + 3 * n;
                for (std::ptrdiff_t j = 0; j < n; ++j) {
                    a0[j] = bias[o];
                    a1[j] = bias[o + 1];
                    a2[j] = bias[o + 2];
                    a3[j] = bias[o + 3];
                }
                for (std::size_t i = 0; i < in_maps_; ++i) {
                    const double* prow = panel.data() + static_cast<std::size_t>(n + geom.halo) * i;
                    for (std::size_t p = 0; p < kernel_; ++p) {
                        const std::size_t kidx = i * kernel_ + p;
                        const double w0 = kernels[(o + 0) * in_maps_ * kernel_ + kidx];
                        const double w1 = kernels[(o + 1) * in_maps_ * kernel_ + kidx];
                        const double w2 = kernels[(o + 2) * in_maps_ * kernel_ + kidx];
                        const double w3 = kernels[(o + 3) * in_maps_ * kernel_ + kidx];
                        const double* RESONEQ_RESTRICT src =
                            prow + (geom.offsets[p] - geom.off_min);
                        for (std::ptrdiff_t j = 0; j < n; ++j) {
                            const double xv = src[j];
                            a0[j] += w0 * xv;
                            a1[j] += w1 * xv;
                            a2[j] += w2 * xv;
                            a3[j] += w3 * xv;
                        }
                    }
                }
                for (std::size_t u = 0; u < 4; ++u)
                    std::memcpy(y.data() + (b * out_maps_ + o + u) * T + cs, acc.data() + u * n,
                                static_cast<std::size_t>(n) * sizeof(double));
            }
            for (; o < out_maps_; ++o) {
                double* RESONEQ_RESTRICT a = acc.data();
                const double bv = bias[o];
                for (std::ptrdiff_t j = 0; j < n; ++j) a[j] = bv;
                const double* krow = kernels.data() + o * in_maps_ * kernel_;
                for (std::size_t i = 0; i < in_maps_; ++i) {
                    const double* prow = panel.data() + static_cast<std::size_t>(n + geom.halo) * i;
                    for (std::size_t p = 0; p < kernel_; ++p) {
                        const double w = krow[i * kernel_ + p];
                        const double* RESONEQ_RESTRICT src =
                            prow + (geom.offsets[p] - geom.off_min);
                        for (std::ptrdiff_t j = 0; j < n; ++j) a[j] += w * src[j];
                    }
                }
                std::memcpy(y.data() + (b * out_maps_ + o) * T + cs, acc.data(),
                            static_cast<std::size_t>(n) * sizeof(double));
            }
        }
    }
    return y;
}

Tensor Conv1dDilated::backward(const Tensor& grad_out) {
    const std::size_t batch = cached_input_.dim(0);
    const std::size_t T = cached_input_.dim(2);
    if (grad_out.rank() != 3 || grad_out.dim(0) != batch || grad_out.dim(1) != out_maps_ ||
        grad_out.dim(2) != T)
        throw std::invalid_argument("Conv1dDilated::backward: gradient shape mismatch");

    Tensor grad_in({batch, in_maps_, T});
    const auto sT = static_cast<std::ptrdiff_t>(T);

    const ConvGeometry geom = conv_geometry(kernel_, dilation_, pad_left_);
    const std::ptrdiff_t chunk = std::min(kConvChunk, sT);
    const std::ptrdiff_t panel_len = chunk + geom.halo;
    std::vector<double> x_panel(static_cast<std::size_t>(panel_len) * in_maps_);
    std::vector<double> dx_panel(static_cast<std::size_t>(panel_len) * in_maps_);

    for (std::size_t b = 0; b < batch; ++b) {
        const double* xb = cached_input_.data() + b * in_maps_ * T;
        double* gib = grad_in.data() + b * in_maps_ * T;

        for (std::size_t o = 0; o < out_maps_; ++o) {
            const double* gp = grad_out.data() + (b * out_maps_ + o) * T;
            double gb = 0.0;
            for (std::size_t t = 0; t < T; ++t) gb += gp[t];
            grad_bias[o] += gb;
        }

        for (std::ptrdiff_t cs = 0; cs < sT; cs += chunk) {
            const std::ptrdiff_t n = std::min(chunk, sT - cs);
            const std::ptrdiff_t len = n + geom.halo;
            stage_panel(xb, T, in_maps_, cs + geom.off_min, len, sT, x_panel.data());
            std::fill(dx_panel.begin(),
                      dx_panel.begin() + static_cast<std::size_t>(len) * in_maps_, 0.0);

            std::size_t o = 0;
            for (; o + 4 <= out_maps_; o += 4) {
                const double* RESONEQ_RESTRICT g0 = grad_out.data() + (b * out_maps_ + o) * T + cs;
                const double* RESONEQ_RESTRICT g1 = g0 + T;
                const double* RESONEQ_RESTRICT g2 = g1 + T;
                const double* RESONEQ_RESTRICT g3 = g2 + T;
                for (std::size_t i = 0; i < in_maps_; ++i) {
                    const double* xr = x_panel.data() + static_cast<std::size_t>(len) * i;
                    double* dxr = dx_panel.data() + static_cast<std::size_t>(len) * i;
                    for (std::size_t p = 0; p < kernel_; ++p) {
                        const std::size_t kidx = i * kernel_ + p;
                        const std::ptrdiff_t shift = geom.offsets[p] - geom.off_min;
                        const double* RESONEQ_RESTRICT xs = xr + shift;
                        double* RESONEQ_RESTRICT dxs = dxr + shift;
                        const double w0 = kernels[(o + 0) * in_maps_ * kernel_ + kidx];
                        const double w1 = kernels[(o + 1) * in_maps_ * kernel_ + kidx];
                        const double w2 = kernels[(o + 2) * in_maps_ * kernel_ + kidx];
                        const double w3 = kernels[(o + 3) * in_maps_ * kernel_ + kidx];
                        double gk0 = 0.0, gk1 = 0.0, gk2 = 0.0, gk3 = 0.0;
                        for (std::ptrdiff_t j = 0; j < n; ++j) {
                            const double xv = xs[j];
                            gk0 += g0[j] * xv;
                            gk1 += g1[j] * xv;
                            gk2 += g2[j] * xv;
                            gk3 += g3[j] * xv;
                            dxs[j] += w0 * g0[j] + w1 * g1[j] + w2 * g2[j] + w3 * g3[j];
                        }
                        grad_kernels[(o + 0) * in_maps_ * kernel_ + kidx] += gk0;
                        grad_kernels[(o + 1) * in_maps_ * kernel_ + kidx] += gk1;
                        grad_kernels[(o + 2) * in_maps_ * kernel_ + kidx] += gk2;
                        grad_kernels[(o + 3) * in_maps_ * kernel_ + kidx] += gk3;
                    }
                }
            }
            for (; o < out_maps_; ++o) {
                const double* RESONEQ_RESTRICT g = grad_out.data() + (b * out_maps_ + o) * T + cs;
                const double* krow = kernels.data() + o * in_maps_ * kernel_;
                double* gkrow = grad_kernels.data() + o * in_maps_ * kernel_;
                for (std::size_t i = 0; i < in_maps_; ++i) {
                    const double* xr = x_panel.data() + static_cast<std::size_t>(len) * i;
                    double* dxr = dx_panel.data() + static_cast<std::size_t>(len) * i;
                    for (std::size_t p = 0; p < kernel_; ++p) {
                        const std::ptrdiff_t shift = geom.offsets[p] - geom.off_min;
                        const double* RESONEQ_RESTRICT xs = xr + shift;
                        double* RESONEQ_RESTRICT dxs = dxr + shift;
                        const double w = krow[i * kernel_ + p];
                        double gk = 0.0;
                        for (std::ptrdiff_t j = 0; j < n; ++j) {
                            gk += g[j] * xs[j];
                            dxs[j] += w * g[j];
                        }
                        gkrow[i * kernel_ + p] += gk;
                    }
                }
            }

            // flush the haloed panel back into the batch gradient
            for (std::size_t i = 0; i < in_maps_; ++i) {
                const double* dxr = dx_panel.data() + static_cast<std::size_t>(len) * i;
                double* dst = gib + i * T;
                for (std::ptrdiff_t j = 0; j < len; ++j) {
                    const std::ptrdiff_t t = cs + geom.off_min + j;
                    if (t >= 0 && t < sT) dst[t] += dxr[j];
                }
            }
        }
    }
    return grad_in;
}

std::vector<ParamRef> Conv1dDilated::params() {
    return {{"K", &kernels, &grad_kernels}, {"b", &bias, &grad_bias}};
}

// ---------------------------------------------------------------------------
// AvgPool1d
// ---------------------------------------------------------------------------

AvgPool1d::AvgPool1d(std::size_t window) : window_(window) {
    if (window == 0) throw std::invalid_argument("AvgPool1d: window must be >= 1");
}

Tensor AvgPool1d::forward(const Tensor& x, Mode) {
    if (x.rank() != 3)
        throw std::invalid_argument("AvgPool1d::forward: expected [batch, maps, T]");
    cached_shape_ = x.shape();
    const std::size_t batch = x.dim(0), maps = x.dim(1), T = x.dim(2);
    const std::size_t out_t = (T + window_ - 1) / window_;
    Tensor y({batch, maps, out_t});
    for (std::size_t bm = 0; bm < batch * maps; ++bm) {
        const double* xp = x.data() + bm * T;
        double* yp = y.data() + bm * out_t;
        for (std::size_t u = 0; u < out_t; ++u) {
            const std::size_t lo = u * window_;
            const std::size_t hi = std::min(T, lo + window_);
            double acc = 0.0;
            for (std::size_t t = lo; t < hi; ++t) acc += xp[t];
            yp[u] = acc / static_cast<double>(hi - lo);
        }
    }
    return y;
}

Tensor AvgPool1d::backward(const Tensor& grad_out) {
    const std::size_t batch = cached_shape_[0], maps = cached_shape_[1], T = cached_shape_[2];
    const std::size_t out_t = (T + window_ - 1) / window_;
    if (grad_out.rank() != 3 || grad_out.dim(2) != out_t)
        throw std::invalid_argument("AvgPool1d::backward: gradient shape mismatch");
    Tensor grad_in({batch, maps, T});
    for (std::size_t bm = 0; bm < batch * maps; ++bm) {
        const double* gp = grad_out.data() + bm * out_t;
        double* gip = grad_in.data() + bm * T;
        for (std::size_t u = 0; u < out_t; ++u) {
            const std::size_t lo = u * window_;
            const std::size_t hi = std::min(T, lo + window_);
            const double share = gp[u] / static_cast<double>(hi - lo);
            for (std::size_t t = lo; t < hi; ++t) gip[t] = share;
        }
    }
    return grad_in;
}

// ---------------------------------------------------------------------------
// Flatten
// ---------------------------------------------------------------------------

Tensor Flatten::forward(const Tensor& x, Mode) {
    if (x.rank() < 2) throw std::invalid_argument("Flatten::forward: expected rank >= 2");
    cached_shape_ = x.shape();
    return x.reshaped({x.dim(0), x.numel() / x.dim(0)});
}

Tensor Flatten::backward(const Tensor& grad_out) {
    return grad_out.reshaped(cached_shape_);
}

// ---------------------------------------------------------------------------
// ResidualBlock
// ---------------------------------------------------------------------------

ResidualBlock::ResidualBlock(std::size_t in_maps, std::size_t out_maps, std::size_t kernel_size,
                             std::size_t dilation, bool init_running_stats)
    : left_conv(in_maps, out_maps, kernel_size, dilation),
      left_bn(out_maps, init_running_stats),
      right_conv(in_maps, out_maps, 1, 1),
      right_bn(out_maps, init_running_stats) {}

void ResidualBlock::init_he_normal(Rng& rng) {
    left_conv.init_he_normal(rng);
    right_conv.init_he_normal(rng);
}

Tensor ResidualBlock::forward(const Tensor& x, Mode mode) {
    Tensor left = left_bn.forward(left_conv.forward(x, mode), mode);
    const Tensor right = right_bn.forward(right_conv.forward(x, mode), mode);
    for (std::size_t i = 0; i < left.numel(); ++i) left[i] += right[i];
    return relu.forward(left, mode);
}

Tensor ResidualBlock::backward(const Tensor& grad_out) {
    const Tensor grad_sum = relu.backward(grad_out);
    Tensor grad_left = left_conv.backward(left_bn.backward(grad_sum));
    const Tensor grad_right = right_conv.backward(right_bn.backward(grad_sum));
    for (std::size_t i = 0; i < grad_left.numel(); ++i) grad_left[i] += grad_right[i];
    return grad_left;
}

namespace {

void append_prefixed(std::vector<ParamRef>& out, const std::string& prefix, Layer& layer) {
    for (ParamRef p : layer.params()) {
        p.name = prefix + p.name;
        out.push_back(p);
    }
}

void append_prefixed_state(std::vector<StateRef>& out, const std::string& prefix, Layer& layer) {
    for (StateRef s : layer.state()) {
        s.name = prefix + s.name;
        out.push_back(s);
    }
}

} // namespace

std::vector<ParamRef> ResidualBlock::params() {
    std::vector<ParamRef> out;
    append_prefixed(out, "left_conv.", left_conv);
    append_prefixed(out, "left_bn.", left_bn);
    append_prefixed(out, "right_conv.", right_conv);
    append_prefixed(out, "right_bn.", right_bn);
    return out;
}

std::vector<StateRef> ResidualBlock::state() {
    std::vector<StateRef> out;
    append_prefixed_state(out, "left_bn.", left_bn);
    append_prefixed_state(out, "right_bn.", right_bn);
    return out;
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

Tensor Model::forward(const Tensor& x, Mode mode) {
    Tensor h = x;
    for (auto& layer : layers_) h = layer->forward(h, mode);
    return h;
}

Tensor Model::backward(const Tensor& grad_out) {
    Tensor g = grad_out;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
}

std::vector<ParamRef> Model::params() {
    std::vector<ParamRef> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const std::string prefix = "L" + std::to_string(i) + "." + layers_[i]->kind() + ".";
        append_prefixed(out, prefix, *layers_[i]);
    }
    return out;
}

std::vector<StateRef> Model::state() {
    std::vector<StateRef> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const std::string prefix = "L" + std::to_string(i) + "." + layers_[i]->kind() + ".";
        append_prefixed_state(out, prefix, *layers_[i]);
    }
    return out;
}

void Model::zero_grad() {
    for (const ParamRef& p : params()) p.grad->fill(0.0);
}

std::size_t Model::parameter_count() {
    std::size_t n = 0;
    for (const ParamRef& p : params()) n += p.value->numel();
    return n;
}

std::vector<Tensor> Model::snapshot() {
    std::vector<Tensor> snap;
    for (const ParamRef& p : params()) snap.push_back(*p.value);
    for (const StateRef& s : state()) snap.push_back(*s.value);
    return snap;
}

void Model::restore(const std::vector<Tensor>& snap) {
    std::size_t idx = 0;
    for (const ParamRef& p : params()) *p.value = snap.at(idx++);
    for (const StateRef& s : state()) *s.value = snap.at(idx++);
}

} // namespace resoneq
