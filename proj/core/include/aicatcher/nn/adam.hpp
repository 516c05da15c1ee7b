#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "aicatcher/nn/layers.hpp"

namespace aicatcher::nn {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Bias-corrected Adam. Moment buffers are created on the first step and
// must keep matching the parameter shapes afterwards.
class Adam {
public:
    explicit Adam(AdamConfig config = {});

    void step(std::span<Parameter> params);

    std::size_t step_count() const noexcept { return step_count_; }
    const AdamConfig& config() const noexcept { return config_; }
    const std::vector<Tensor>& first_moments() const noexcept { return m_; }
    const std::vector<Tensor>& second_moments() const noexcept { return v_; }

private:
    AdamConfig config_;
    std::size_t step_count_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

}  // namespace aicatcher::nn
