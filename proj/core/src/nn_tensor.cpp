#include "aicatcher/nn/tensor.hpp"

#include <algorithm>
#include <numeric>

#include "aicatcher/errors.hpp"

namespace aicatcher::nn {

std::string to_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

std::size_t element_count(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

namespace {
void check_shape(const Shape& shape) {
    if (shape.empty()) throw ShapeMismatch("tensor shape must have at least one dimension");
    if (std::find(shape.begin(), shape.end(), std::size_t{0}) != shape.end()) {
        throw ShapeMismatch("tensor dimensions must be >= 1, got " + to_string(shape));
    }
}
}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(element_count(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (data_.size() != element_count(shape_)) {
        throw ShapeMismatch("tensor data size " + std::to_string(data_.size()) + " does not match shape " +
                            to_string(shape_));
    }
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Tensor Tensor::reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape() != b.shape()) {
        throw ShapeMismatch(std::string(what) + ": " + to_string(a.shape()) + " vs " + to_string(b.shape()));
    }
}

}  // namespace aicatcher::nn
