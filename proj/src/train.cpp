#include "resoneq/train.hpp"

#include "resoneq/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace resoneq {

MsbeValue msbe_instance(double pred, const RatingBounds& bounds) {
    bounds.validate();
    const double over = std::max(0.0, pred - bounds.hi);  // [f - hi]^+
    const double under = std::min(0.0, pred - bounds.lo); // [f - lo]^-
    const double e = over + under;
    return {e * e, 2.0 * e};
}

double msbe_batch(const Tensor& preds, const std::vector<RatingBounds>& bounds, Tensor* grad_out) {
    if (preds.rank() != 2 || preds.dim(1) != 1 || preds.dim(0) != bounds.size())
        throw std::invalid_argument("msbe_batch: predictions must be [n, 1] matching bounds");
    const std::size_t n = bounds.size();
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const MsbeValue v = msbe_instance(preds[i], bounds[i]);
        loss += v.loss;
        if (grad_out != nullptr) (*grad_out)[i] = v.grad / static_cast<double>(n);
    }
    return loss / static_cast<double>(n);
}

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (max_epochs < 1) throw std::invalid_argument("TrainConfig: max_epochs must be >= 1");
    if (early_stop_patience < 1 || lr_reduce_patience < 1)
        throw std::invalid_argument("TrainConfig: patiences must be >= 1");
    if (lr_reduce_factor <= 0.0 || lr_reduce_factor >= 1.0)
        throw std::invalid_argument("TrainConfig: lr_reduce_factor must be in (0, 1)");
    if (min_delta < 0.0) throw std::invalid_argument("TrainConfig: min_delta must be >= 0");
}

AdamOptimizer::AdamOptimizer(Model& model, double learning_rate)
    : model_(model), lr_(learning_rate) {
    for (const ParamRef& p : model_.params()) {
        m_.emplace_back(p.value->shape());
        v_.emplace_back(p.value->shape());
    }
}

void AdamOptimizer::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    const auto params = model_.params();
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& theta = *params[i].value;
        const Tensor& g = *params[i].grad;
        Tensor& m = m_[i];
        Tensor& v = v_[i];
        for (std::size_t j = 0; j < theta.numel(); ++j) {
            m[j] = kBeta1 * m[j] + (1.0 - kBeta1) * g[j];
            v[j] = kBeta2 * v[j] + (1.0 - kBeta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            theta[j] -= lr_ * mhat / (std::sqrt(vhat) + kEpsilon);
        }
    }
}

namespace {

Tensor stack_batch(const std::vector<Instance>& instances, const std::vector<std::size_t>& order,
                   std::size_t first, std::size_t count, std::vector<RatingBounds>& bounds_out) {
    std::vector<const Tensor*> rows;
    rows.reserve(count);
    bounds_out.clear();
    for (std::size_t i = first; i < first + count; ++i) {
        rows.push_back(&instances[order[i]].input);
        bounds_out.push_back(instances[order[i]].bounds);
    }
    return stack(rows);
}

} // namespace

double evaluate_msbe(Model& model, const std::vector<Instance>& instances,
                     std::size_t batch_size) {
    if (instances.empty()) throw std::invalid_argument("evaluate_msbe: empty instance set");
    std::vector<std::size_t> order(instances.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    double total = 0.0;
    std::vector<RatingBounds> bounds;
    for (std::size_t first = 0; first < instances.size(); first += batch_size) {
        const std::size_t count = std::min(batch_size, instances.size() - first);
        const Tensor inputs = stack_batch(instances, order, first, count, bounds);
        Tensor preds = model.forward(inputs, Mode::Infer);
        // inference-time predictions are clamped to [0, 1]
        for (double& p : preds.values()) p = std::clamp(p, 0.0, 1.0);
        total += msbe_batch(preds, bounds, nullptr) * static_cast<double>(count);
    }
    return total / static_cast<double>(instances.size());
}

TrainResult train_model(Model& model, TrainingData& data, const std::vector<Instance>& validation,
                        const TrainConfig& cfg) {
    cfg.validate();
    if (validation.empty()) throw std::invalid_argument("train_model: empty validation set");

    AdamOptimizer optimizer(model, cfg.learning_rate);
    TrainResult result;

    double best_val = std::numeric_limits<double>::infinity();
    std::vector<Tensor> best_snapshot;
    int epochs_since_improvement = 0;
    int epochs_since_lr_event = 0;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::vector<Instance> instances = data.epoch_instances(epoch);
        if (instances.empty()) throw std::invalid_argument("train_model: empty training epoch");

        // deterministic shuffle, independent stream per epoch
        std::vector<std::size_t> order(instances.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng shuffle_rng(derive_seed(cfg.seed, 0x5u, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1],
                      order[static_cast<std::size_t>(shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);

        double epoch_loss = 0.0;
        std::vector<RatingBounds> bounds;
        for (std::size_t first = 0; first < instances.size(); first += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, instances.size() - first);
            const Tensor inputs = stack_batch(instances, order, first, count, bounds);

            model.zero_grad();
            const Tensor preds = model.forward(inputs, Mode::Train);
            Tensor grad({count, 1});
            const double batch_loss = msbe_batch(preds, bounds, &grad);
            if (!std::isfinite(batch_loss))
                throw TrainingDivergence(epoch, "train_model: non-finite loss at epoch " +
                                                    std::to_string(epoch));
            model.backward(grad);
            optimizer.step();
            epoch_loss += batch_loss * static_cast<double>(count);
        }
        epoch_loss /= static_cast<double>(instances.size());

        const double val_loss = evaluate_msbe(model, validation);
        if (!std::isfinite(val_loss))
            throw TrainingDivergence(epoch, "train_model: non-finite validation loss at epoch " +
                                                std::to_string(epoch));
        result.history.push_back({epoch, epoch_loss, val_loss, optimizer.learning_rate()});

        if (val_loss < best_val - cfg.min_delta) {
            best_val = val_loss;
            best_snapshot = model.snapshot();
            result.best_epoch = epoch;
            epochs_since_improvement = 0;
            epochs_since_lr_event = 0;
        } else {
            ++epochs_since_improvement;
            ++epochs_since_lr_event;
            if (epochs_since_improvement >= cfg.early_stop_patience) break;
            if (epochs_since_lr_event >= cfg.lr_reduce_patience) {
                optimizer.set_learning_rate(optimizer.learning_rate() * cfg.lr_reduce_factor);
                epochs_since_lr_event = 0;
            }
        }
    }

    if (!best_snapshot.empty()) model.restore(best_snapshot);
    result.best_val_loss = best_val;
    return result;
}

} // namespace resoneq
