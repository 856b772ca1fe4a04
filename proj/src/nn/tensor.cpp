#include "petition/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "petition/errors.hpp"

namespace petition::nn {

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != element_count(shape_)) {
        throw ValidationError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                              shape_string());
    }
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

std::string Tensor::shape_string() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i > 0) s += ", ";
        s += std::to_string(shape_[i]);
    }
    return s + "]";
}

}  // namespace petition::nn
