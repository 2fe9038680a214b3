#pragma once

#include "resoneq/layers.hpp"
#include "resoneq/tensor.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace resoneq {

// Zero-penalty rating interval [lo, hi] for one training instance.
struct RatingBounds {
    double lo = 0.0;
    double hi = 0.0;

    void validate() const {
        if (!(lo <= hi)) throw std::invalid_argument("RatingBounds: lo must not exceed hi");
        if (lo < 0.0 || hi > 1.0)
            throw std::invalid_argument("RatingBounds: bounds must lie in [0, 1]");
    }
};

// Squared-bounds error of one prediction: zero inside [lo, hi], squared
// distance to the nearest bound outside. Returns {loss, dloss/dpred}.
struct MsbeValue {
    double loss;
    double grad;
};
MsbeValue msbe_instance(double pred, const RatingBounds& bounds);

// Mean over instances (predictions tensor shaped [batch, 1]).
double msbe_batch(const Tensor& preds, const std::vector<RatingBounds>& bounds, Tensor* grad_out);

struct Instance {
    Tensor input;
    RatingBounds bounds;
};

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t batch_size = 16;
    int max_epochs = 100;
    int early_stop_patience = 10;
    double min_delta = 1e-5;
    double lr_reduce_factor = 0.5;
    int lr_reduce_patience = 4;
    std::uint64_t seed = 0;

    void validate() const;
};

// Adam with bias correction; one slot pair (m, v) per parameter tensor.
class AdamOptimizer {
public:
    AdamOptimizer(Model& model, double learning_rate);

    double learning_rate() const { return lr_; }
    void set_learning_rate(double lr) { lr_ = lr; }
    void step(); // applies accumulated gradients, then advances time

    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEpsilon = 1e-8;

private:
    Model& model_;
    double lr_;
    std::int64_t t_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

// Training instances for one epoch. Implementations may regenerate instances
// per epoch (random crops); the count should stay stable across epochs.
class TrainingData {
public:
    virtual ~TrainingData() = default;
    virtual std::vector<Instance> epoch_instances(int epoch) = 0;
};

class FixedTrainingData : public TrainingData {
public:
    explicit FixedTrainingData(std::vector<Instance> instances)
        : instances_(std::move(instances)) {}
    std::vector<Instance> epoch_instances(int) override { return instances_; }

private:
    std::vector<Instance> instances_;
};

struct EpochStats {
    int epoch;
    double train_loss;
    double val_loss;
    double learning_rate;
};

struct TrainResult {
    std::vector<EpochStats> history;
    int best_epoch = -1;
    double best_val_loss = 0.0;
};

// Raised when the training loss stops being finite.
class TrainingDivergence : public std::runtime_error {
public:
    TrainingDivergence(int epoch, const std::string& what)
        : std::runtime_error(what), epoch_(epoch) {}
    int epoch() const { return epoch_; }

private:
    int epoch_;
};

// Mini-batch MSBE training with reduce-on-plateau and early stopping on the
// validation loss. The model is left holding the parameters (and batch-norm
// statistics) of the best validation epoch. Deterministic given cfg.seed.
TrainResult train_model(Model& model, TrainingData& data, const std::vector<Instance>& validation,
                        const TrainConfig& cfg);

// Validation-style evaluation: mean MSBE over instances in inference mode,
// with predictions clamped to [0, 1] (the inference contract).
double evaluate_msbe(Model& model, const std::vector<Instance>& instances,
                     std::size_t batch_size = 32);

} // namespace resoneq
