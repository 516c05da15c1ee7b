#include "aicatcher/nn/adam.hpp"

#include <cmath>

#include "aicatcher/errors.hpp"

namespace aicatcher::nn {

Adam::Adam(AdamConfig config) : config_(config) {
    if (!(config_.learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be non-negative");
}

void Adam::step(std::span<Parameter> params) {
    if (m_.empty()) {
        for (const auto& p : params) {
            m_.push_back(Tensor::zeros_like(p.value));
            v_.push_back(Tensor::zeros_like(p.value));
        }
    }
    if (m_.size() != params.size()) throw ShapeMismatch("adam: parameter count changed between steps");
    for (std::size_t i = 0; i < params.size(); ++i) {
        require_same_shape(params[i].value, params[i].grad, "adam gradient");
        require_same_shape(params[i].value, m_[i], "adam moment");
    }

    ++step_count_;
    const double t = static_cast<double>(step_count_);
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double correction1 = 1.0 - std::pow(b1, t);
    const double correction2 = 1.0 - std::pow(b2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i];
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t k = 0; k < p.value.size(); ++k) {
            const double g = p.grad[k];
            m[k] = b1 * m[k] + (1.0 - b1) * g;
            v[k] = b2 * v[k] + (1.0 - b2) * g * g;
            const double m_hat = m[k] / correction1;
            const double v_hat = v[k] / correction2;
            p.value[k] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
        }
    }
}

}  // namespace aicatcher::nn
