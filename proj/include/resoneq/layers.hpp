#pragma once

#include "resoneq/rng.hpp"
#include "resoneq/tensor.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace resoneq {

enum class Mode { Train, Infer };

// Trainable parameter exposed by a layer: value and gradient accumulator.
struct ParamRef {
    std::string name;
    Tensor* value;
    Tensor* grad;
};

// Non-trainable persistent state (batch-norm running statistics).
struct StateRef {
    std::string name;
    Tensor* value;
};

// One differentiable layer with cached activations for manual backprop.
// forward() must precede backward(); backward() accumulates into the
// parameter gradients and returns the gradient with respect to the input.
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x, Mode mode) = 0;
    virtual Tensor backward(const Tensor& grad_out) = 0;
    virtual std::vector<ParamRef> params() { return {}; }
    virtual std::vector<StateRef> state() { return {}; }
    virtual std::string kind() const = 0;
};

// y = x W + b for x:[batch, in] -> [batch, out]
class Dense : public Layer {
public:
    Dense(std::size_t in_features, std::size_t out_features);

    void init_he_normal(Rng& rng); // He-normal weights, zero biases

    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<ParamRef> params() override;
    std::string kind() const override { return "dense"; }

    std::size_t in_features() const { return in_; }
    std::size_t out_features() const { return out_; }

    Tensor weights; // [in, out]
    Tensor bias;    // [out]
    Tensor grad_weights;
    Tensor grad_bias;

private:
    std::size_t in_, out_;
    Tensor cached_input_;
};

// Per-feature batch normalization. Accepts [batch, features] (normalizes each
// feature over the batch) or [batch, maps, time] (normalizes each map over
// batch x time). Running statistics update with momentum 0.1 in train mode;
// inference uses the running statistics and fails if they were never set.
class BatchNorm : public Layer {
public:
    explicit BatchNorm(std::size_t num_features, bool init_running_stats = false);

    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<ParamRef> params() override;
    std::vector<StateRef> state() override;
    std::string kind() const override { return "batch_norm"; }

    std::size_t num_features() const { return features_; }
    bool has_running_stats() const { return initialized_[0] != 0.0; }

    Tensor gamma, beta;
    Tensor grad_gamma, grad_beta;
    Tensor running_mean, running_var;
    Tensor initialized_; // 1-element flag tensor, persisted with the state

    static constexpr double kEpsilon = 1e-5;
    static constexpr double kMomentum = 0.1;

private:
    std::size_t features_;
    Tensor cached_xhat_;
    std::vector<double> cached_invstd_;
    std::vector<std::size_t> cached_shape_;
    bool cached_train_ = false;
};

// Elementwise max(0, x); the subgradient at 0 is 0.
class Relu : public Layer {
public:
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string kind() const override { return "relu"; }

private:
    std::vector<std::uint8_t> mask_;
    std::vector<std::size_t> cached_shape_;
};

// Dilated 1-D cross-correlation with "same" zero padding: output length
// equals input length; total padding (k-1)*d split ceil-left / floor-right.
class Conv1dDilated : public Layer {
public:
    Conv1dDilated(std::size_t in_maps, std::size_t out_maps, std::size_t kernel_size,
                  std::size_t dilation);

    void init_he_normal(Rng& rng);

    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<ParamRef> params() override;
    std::string kind() const override { return "conv1d_dilated"; }

    std::size_t in_maps() const { return in_maps_; }
    std::size_t out_maps() const { return out_maps_; }
    std::size_t kernel_size() const { return kernel_; }
    std::size_t dilation() const { return dilation_; }

    Tensor kernels; // [out_maps, in_maps, k]
    Tensor bias;    // [out_maps]
    Tensor grad_kernels;
    Tensor grad_bias;

private:
    std::size_t in_maps_, out_maps_, kernel_, dilation_;
    std::ptrdiff_t pad_left_;
    Tensor cached_input_;
};

// Non-overlapping window means along time; the final partial window is
// averaged over its actual length. [batch, maps, T] -> [batch, maps, ceil(T/w)]
class AvgPool1d : public Layer {
public:
    explicit AvgPool1d(std::size_t window);

    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string kind() const override { return "avg_pool1d"; }

    std::size_t window() const { return window_; }

private:
    std::size_t window_;
    std::vector<std::size_t> cached_shape_;
};

// [batch, ...] -> [batch, prod(...)]
class Flatten : public Layer {
public:
    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::string kind() const override { return "flatten"; }

private:
    std::vector<std::size_t> cached_shape_;
};

// Two-path residual block: conv(k, d) -> BN summed with conv(1x1) -> BN,
// then ReLU. The 1x1 path reshapes the input so the sum is well-formed.
class ResidualBlock : public Layer {
public:
    ResidualBlock(std::size_t in_maps, std::size_t out_maps, std::size_t kernel_size,
                  std::size_t dilation, bool init_running_stats = false);

    void init_he_normal(Rng& rng);

    Tensor forward(const Tensor& x, Mode mode) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<ParamRef> params() override;
    std::vector<StateRef> state() override;
    std::string kind() const override { return "residual_block"; }

    Conv1dDilated left_conv;
    BatchNorm left_bn;
    Conv1dDilated right_conv;
    BatchNorm right_bn;
    Relu relu;
};

// Ordered layer stack with named parameters ("L<i>.<layer>.<param>").
class Model {
public:
    Model() = default;

    void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }
    std::size_t size() const { return layers_.size(); }
    Layer& layer(std::size_t i) { return *layers_[i]; }

    Tensor forward(const Tensor& x, Mode mode);
    Tensor backward(const Tensor& grad_out);

    std::vector<ParamRef> params();
    std::vector<StateRef> state();
    void zero_grad();
    std::size_t parameter_count();

    // Deep copies of all parameter and state tensors, used to keep the best
    // validation epoch.
    std::vector<Tensor> snapshot();
    void restore(const std::vector<Tensor>& snap);

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

} // namespace resoneq
