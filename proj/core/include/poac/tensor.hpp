#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "poac/errors.hpp"
#include "poac/rng.hpp"

namespace poac {

// Dense row-major array of 64-bit floats. Rank 0 (scalar), 1 and 2 are the
// only ranks the pipeline uses. Construction rejects NaN/Inf entries.
class Tensor {
public:
    Tensor() = default;

    Tensor(std::vector<size_t> shape, std::vector<double> data);

    // Zero-filled tensor.
    static Tensor zeros(std::vector<size_t> shape);
    static Tensor full(std::vector<size_t> shape, double v);
    static Tensor scalar(double v);
    static Tensor row(std::vector<double> v);
    // i.i.d. standard normal entries scaled by std, drawn from rng.
    static Tensor randn(std::vector<size_t> shape, Rng& rng, double std_dev = 1.0);

    const std::vector<size_t>& shape() const { return shape_; }
    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    size_t rank() const { return shape_.size(); }
    size_t numel() const { return data_.size(); }
    size_t rows() const;
    size_t cols() const;

    bool is_scalar() const { return data_.size() == 1 && shape_.size() <= 1; }
    double scalar_value() const;

    double& at(size_t i) { return data_[i]; }
    double at(size_t i) const { return data_[i]; }
    double& at2(size_t r, size_t c) { return data_[r * cols() + c]; }
    double at2(size_t r, size_t c) const { return data_[r * cols() + c]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
    std::string shape_str() const;

    bool all_finite() const;

    // Euclidean norm of the flattened data.
    double l2_norm() const;

private:
    std::vector<size_t> shape_;
    std::vector<double> data_;
};

size_t shape_numel(const std::vector<size_t>& shape);

}  // namespace poac
