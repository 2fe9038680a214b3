#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace resoneq {

// Dense row-major n-dimensional array of 64-bit floats.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> values);

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_[i]; }
    std::size_t numel() const { return data_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    void fill(double v);
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    // Reinterprets the layout; element count must match.
    Tensor reshaped(std::vector<std::size_t> new_shape) const;

    // Throws std::runtime_error naming `where` if any element is not finite.
    void check_finite(const std::string& where) const;

    std::string shape_string() const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

// [rows] of equal-shaped instance tensors stacked along a new leading axis.
Tensor stack(const std::vector<const Tensor*>& instances);

} // namespace resoneq
