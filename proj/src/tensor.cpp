#include "resoneq/tensor.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace resoneq {

namespace {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        if (d == 0) throw std::invalid_argument("Tensor: zero extent");
        n *= d;
    }
    return shape.empty() ? 0 : n;
}

} // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
    if (data_.size() != shape_numel(shape_))
        throw std::invalid_argument("Tensor: data length does not match shape");
}

void Tensor::fill(double v) {
    for (double& x : data_) x = v;
}

Tensor Tensor::reshaped(std::vector<std::size_t> new_shape) const {
    if (shape_numel(new_shape) != data_.size())
        throw std::invalid_argument("Tensor::reshaped: element count mismatch");
    return Tensor(std::move(new_shape), data_);
}

void Tensor::check_finite(const std::string& where) const {
    for (double v : data_)
        if (!std::isfinite(v)) throw std::runtime_error(where + ": non-finite value in tensor");
}

std::string Tensor::shape_string() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape_[i]);
    }
    return s + "]";
}

Tensor stack(const std::vector<const Tensor*>& instances) {
    if (instances.empty()) throw std::invalid_argument("stack: no instances");
    const auto& first_shape = instances[0]->shape();
    std::vector<std::size_t> out_shape;
    out_shape.push_back(instances.size());
    out_shape.insert(out_shape.end(), first_shape.begin(), first_shape.end());
    Tensor out(out_shape);
    const std::size_t stride = instances[0]->numel();
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (instances[i]->shape() != first_shape)
            throw std::invalid_argument("stack: shape mismatch across instances");
        std::memcpy(out.data() + i * stride, instances[i]->data(), stride * sizeof(double));
    }
    return out;
}

} // namespace resoneq
