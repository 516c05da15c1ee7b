#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aicatcher/nn/tensor.hpp"
#include "aicatcher/rng.hpp"

// The fixed layer set of the detector network as pure forward/backward
// functions. Backward functions return the gradient with respect to the
// layer input and ADD parameter gradients into the supplied buffers.
//
// Every op accepts an optional leading batch dimension: a rank one higher
// than the single-sample form is treated as [batch, ...].
namespace aicatcher::nn {

enum class Mode { Train, Eval };

enum class LayerKind { Embedding, SpatialDropout1D, Conv1D, GlobalMaxPool1D, Dense, ReLU, Sigmoid, Concat };

std::string_view to_string(LayerKind kind);

struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(Tensor::zeros_like(value)) {}
};

// --- embedding: indices [seq] -> [seq, dim]; batch [B][seq] -> [B, seq, dim]

Tensor embedding_forward(std::span<const std::int32_t> indices, const Tensor& table);
Tensor embedding_forward(std::span<const std::vector<std::int32_t>> batch, const Tensor& table);
void embedding_backward(std::span<const std::int32_t> indices, const Tensor& grad_out, Tensor& grad_table);
void embedding_backward(std::span<const std::vector<std::int32_t>> batch, const Tensor& grad_out, Tensor& grad_table);

// --- spatial dropout: one keep/drop draw per channel (feature column) ---

struct ChannelMask {
    std::size_t channels = 0;
    std::vector<double> scale;  // per (sample, channel): 0 or 1/(1-rate)

    std::size_t dropped() const;
};

ChannelMask draw_channel_mask(std::size_t batch, std::size_t channels, double rate, Rng& rng);
Tensor apply_channel_mask(const Tensor& x, const ChannelMask& mask);

// Train mode draws a fresh mask (returned through mask_out when given);
// Eval mode, or rate 0, returns x unchanged and draws nothing.
Tensor spatial_dropout_forward(const Tensor& x, double rate, Mode mode, Rng& rng, ChannelMask* mask_out = nullptr);
// The mask is its own transpose.
inline Tensor spatial_dropout_backward(const Tensor& grad_out, const ChannelMask& mask) {
    return apply_channel_mask(grad_out, mask);
}

// --- conv1d: x [seq, in], w [kernel, in, filters], b [filters] -> [seq-kernel+1, filters]

Tensor conv1d_forward(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor conv1d_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out, Tensor& grad_w, Tensor& grad_b);

// --- global max pool over time: [time, filters] -> [filters]

struct MaxPoolResult {
    Tensor values;
    std::vector<std::size_t> argmax;  // per (sample, filter); lowest index wins ties
};

MaxPoolResult global_max_pool_forward(const Tensor& x);
Tensor global_max_pool_backward(const MaxPoolResult& forward, const Shape& input_shape, const Tensor& grad_out);

// --- dense: x [in], w [in, out], b [out] -> [out]

Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor dense_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out, Tensor& grad_w, Tensor& grad_b);

// --- activations and loss

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);

double sigmoid(double x);
Tensor sigmoid(const Tensor& x);
Tensor sigmoid_backward(const Tensor& y, const Tensor& grad_out);

inline constexpr double kBceClamp = 1e-7;
// p is clamped to [1e-7, 1 - 1e-7].
double bce_loss(double p, int label);
// d bce(sigmoid(z), y) / dz for an unclamped sigmoid output.
inline double bce_sigmoid_grad(double p, int label) { return p - static_cast<double>(label); }

// --- concat along the last axis (rank 1, or rank 2 with matching batch)

Tensor concat(const Tensor& a, const Tensor& b);
void split_grad(const Tensor& grad, std::size_t left_width, Tensor& grad_a, Tensor& grad_b);

// --- initialization

// Uniform in +-sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng);
void uniform_init(Tensor& t, double lo, double hi, Rng& rng);
// Rounds every element to the nearest float32 value.
void round_to_float32(Tensor& t);

}  // namespace aicatcher::nn
