#include "poac/tensor.hpp"

#include <cmath>
#include <sstream>

namespace poac {

size_t shape_numel(const std::vector<size_t>& shape) {
    size_t n = 1;
    for (size_t d : shape) {
        n *= d;
    }
    return n;
}

Tensor::Tensor(std::vector<size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_numel(shape_) != data_.size()) {
        throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_str());
    }
    if (!all_finite()) {
        throw NumericError("tensor constructed with non-finite entries");
    }
}

Tensor Tensor::zeros(std::vector<size_t> shape) {
    std::vector<double> d(shape_numel(shape), 0.0);
    return Tensor(std::move(shape), std::move(d));
}

Tensor Tensor::full(std::vector<size_t> shape, double v) {
    std::vector<double> d(shape_numel(shape), v);
    return Tensor(std::move(shape), std::move(d));
}

Tensor Tensor::scalar(double v) { return Tensor({}, {v}); }

Tensor Tensor::row(std::vector<double> v) {
    std::vector<size_t> shape{v.size()};
    return Tensor(std::move(shape), std::move(v));
}

Tensor Tensor::randn(std::vector<size_t> shape, Rng& rng, double std_dev) {
    std::vector<double> d(shape_numel(shape));
    for (double& x : d) {
        x = rng.gaussian() * std_dev;
    }
    return Tensor(std::move(shape), std::move(d));
}

size_t Tensor::rows() const {
    if (shape_.size() != 2) {
        throw ShapeError("rows() on tensor of shape " + shape_str());
    }
    return shape_[0];
}

size_t Tensor::cols() const {
    if (shape_.size() != 2) {
        throw ShapeError("cols() on tensor of shape " + shape_str());
    }
    return shape_[1];
}

double Tensor::scalar_value() const {
    if (!is_scalar()) {
        throw ShapeError("scalar_value() on tensor of shape " + shape_str());
    }
    return data_[0];
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape_.size(); ++i) {
        os << (i ? "," : "") << shape_[i];
    }
    os << "]";
    return os.str();
}

bool Tensor::all_finite() const {
    for (double x : data_) {
        if (!std::isfinite(x)) {
            return false;
        }
    }
    return true;
}

double Tensor::l2_norm() const {
    double s = 0.0;
    for (double x : data_) {
        s += x * x;
    }
    return std::sqrt(s);
}

}  // namespace poac
