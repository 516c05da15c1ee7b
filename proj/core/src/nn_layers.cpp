#include "aicatcher/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "aicatcher/errors.hpp"

namespace aicatcher::nn {

std::string_view to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::Embedding: return "Embedding";
        case LayerKind::SpatialDropout1D: return "SpatialDropout1D";
        case LayerKind::Conv1D: return "Conv1D";
        case LayerKind::GlobalMaxPool1D: return "GlobalMaxPool1D";
        case LayerKind::Dense: return "Dense";
        case LayerKind::ReLU: return "ReLU";
        case LayerKind::Sigmoid: return "Sigmoid";
        case LayerKind::Concat: return "Concat";
    }
    return "?";
}

namespace {

// Splits x into (batch, per-sample rank) given the single-sample rank.
std::size_t batch_of(const Tensor& x, std::size_t sample_rank, const char* op) {
    if (x.rank() == sample_rank) return 1;
    if (x.rank() == sample_rank + 1) return x.dim(0);
    throw ShapeMismatch(std::string(op) + ": unexpected input shape " + to_string(x.shape()));
}

std::size_t trailing(const Tensor& x, std::size_t from_end) { return x.dim(x.rank() - from_end); }

Shape with_batch(const Tensor& like, std::size_t sample_rank, Shape sample) {
    if (like.rank() == sample_rank + 1) sample.insert(sample.begin(), like.dim(0));
    return sample;
}

}  // namespace

// --- embedding --------------------------------------------------------------

Tensor embedding_forward(std::span<const std::int32_t> indices, const Tensor& table) {
    if (table.rank() != 2) throw ShapeMismatch("embedding table must be [vocab, dim]");
    if (indices.empty()) throw ShapeMismatch("embedding input is empty");
    const auto vocab = table.dim(0);
    const auto dim = table.dim(1);
    Tensor out({indices.size(), dim});
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto idx = indices[i];
        if (idx < 0 || static_cast<std::size_t>(idx) >= vocab) {
            throw IndexOutOfVocab("index " + std::to_string(idx) + " outside vocabulary of " + std::to_string(vocab));
        }
        std::copy_n(table.raw() + static_cast<std::size_t>(idx) * dim, dim, out.raw() + i * dim);
    }
    return out;
}

Tensor embedding_forward(std::span<const std::vector<std::int32_t>> batch, const Tensor& table) {
    if (batch.empty()) throw ShapeMismatch("embedding batch is empty");
    const auto seq = batch.front().size();
    const auto dim = table.rank() == 2 ? table.dim(1) : 0;
    Tensor out({batch.size(), seq, dim});
    for (std::size_t b = 0; b < batch.size(); ++b) {
        if (batch[b].size() != seq) throw ShapeMismatch("embedding batch rows differ in length");
        const auto rows = embedding_forward(batch[b], table);
        std::copy(rows.raw(), rows.raw() + rows.size(), out.raw() + b * seq * dim);
    }
    return out;
}

void embedding_backward(std::span<const std::int32_t> indices, const Tensor& grad_out, Tensor& grad_table) {
    const auto dim = grad_table.dim(1);
    if (grad_out.rank() != 2 || grad_out.dim(0) != indices.size() || grad_out.dim(1) != dim) {
        throw ShapeMismatch("embedding gradient shape " + to_string(grad_out.shape()));
    }
    for (std::size_t i = 0; i < indices.size(); ++i) {
        double* row = grad_table.raw() + static_cast<std::size_t>(indices[i]) * dim;
        const double* g = grad_out.raw() + i * dim;
        for (std::size_t d = 0; d < dim; ++d) row[d] += g[d];
    }
}

void embedding_backward(std::span<const std::vector<std::int32_t>> batch, const Tensor& grad_out, Tensor& grad_table) {
    if (grad_out.rank() != 3 || grad_out.dim(0) != batch.size()) throw ShapeMismatch("embedding batch gradient shape");
    const auto seq = grad_out.dim(1);
    const auto dim = grad_out.dim(2);
    for (std::size_t b = 0; b < batch.size(); ++b) {
        std::vector<double> slice(grad_out.raw() + b * seq * dim, grad_out.raw() + (b + 1) * seq * dim);
        embedding_backward(batch[b], Tensor({seq, dim}, std::move(slice)), grad_table);
    }
}

// --- spatial dropout ----------------------------------------------------------

std::size_t ChannelMask::dropped() const {
    return static_cast<std::size_t>(std::count(scale.begin(), scale.end(), 0.0));
}

ChannelMask draw_channel_mask(std::size_t batch, std::size_t channels, double rate, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must be in [0, 1)");
    ChannelMask mask;
    mask.channels = channels;
    mask.scale.resize(batch * channels);
    const double keep_scale = 1.0 / (1.0 - rate);
    for (auto& s : mask.scale) s = rng.uniform() < rate ? 0.0 : keep_scale;
    return mask;
}

Tensor apply_channel_mask(const Tensor& x, const ChannelMask& mask) {
    const auto batch = batch_of(x, 2, "spatial dropout");
    const auto seq = trailing(x, 2);
    const auto ch = trailing(x, 1);
    if (ch != mask.channels || mask.scale.size() != batch * ch) throw ShapeMismatch("dropout mask does not match input");
    Tensor out(x.shape());
    for (std::size_t b = 0; b < batch; ++b) {
        const double* s = mask.scale.data() + b * ch;
        for (std::size_t t = 0; t < seq; ++t) {
            const std::size_t off = (b * seq + t) * ch;
            for (std::size_t c = 0; c < ch; ++c) out[off + c] = x[off + c] * s[c];
        }
    }
    return out;
}

Tensor spatial_dropout_forward(const Tensor& x, double rate, Mode mode, Rng& rng, ChannelMask* mask_out) {
    if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must be in [0, 1)");
    const auto batch = batch_of(x, 2, "spatial dropout");
    const auto ch = trailing(x, 1);
    if (mode == Mode::Eval || rate == 0.0) {
        if (mask_out) *mask_out = ChannelMask{ch, std::vector<double>(batch * ch, 1.0)};
        return x;
    }
    auto mask = draw_channel_mask(batch, ch, rate, rng);
    auto out = apply_channel_mask(x, mask);
    if (mask_out) *mask_out = std::move(mask);
    return out;
}

// --- conv1d -------------------------------------------------------------------

namespace {

void check_conv(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (w.rank() != 3) throw ShapeMismatch("conv1d weights must be [kernel, in, filters]");
    if (b.rank() != 1 || b.dim(0) != w.dim(2)) throw ShapeMismatch("conv1d bias must be [filters]");
    batch_of(x, 2, "conv1d");
    if (trailing(x, 1) != w.dim(1)) {
        throw ShapeMismatch("conv1d input channels " + std::to_string(trailing(x, 1)) + " vs weights " +
                            std::to_string(w.dim(1)));
    }
    if (trailing(x, 2) < w.dim(0)) {
        throw SequenceTooShort("conv1d sequence of " + std::to_string(trailing(x, 2)) + " shorter than kernel " +
                               std::to_string(w.dim(0)));
    }
}

}  // namespace

Tensor conv1d_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
    check_conv(x, w, b);
    const auto batch = batch_of(x, 2, "conv1d");
    const auto seq = trailing(x, 2);
    const auto in = w.dim(1);
    const auto kernel = w.dim(0);
    const auto filters = w.dim(2);
    const auto steps = seq - kernel + 1;
    Tensor out(with_batch(x, 2, {steps, filters}));
    for (std::size_t n = 0; n < batch; ++n) {
        const double* xs = x.raw() + n * seq * in;
        double* os = out.raw() + n * steps * filters;
        for (std::size_t t = 0; t < steps; ++t) {
            double* o = os + t * filters;
            std::copy_n(b.raw(), filters, o);
            for (std::size_t k = 0; k < kernel; ++k) {
                const double* xr = xs + (t + k) * in;
                const double* wk = w.raw() + k * in * filters;
                for (std::size_t c = 0; c < in; ++c) {
                    const double xv = xr[c];
                    if (xv == 0.0) continue;
                    const double* wr = wk + c * filters;
                    for (std::size_t f = 0; f < filters; ++f) o[f] += xv * wr[f];
                }
            }
        }
    }
    return out;
}

Tensor conv1d_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out, Tensor& grad_w, Tensor& grad_b) {
    check_conv(x, w, grad_b);
    require_same_shape(w, grad_w, "conv1d weight gradient");
    const auto batch = batch_of(x, 2, "conv1d");
    const auto seq = trailing(x, 2);
    const auto in = w.dim(1);
    const auto kernel = w.dim(0);
    const auto filters = w.dim(2);
    const auto steps = seq - kernel + 1;
    if (grad_out.shape() != with_batch(x, 2, {steps, filters})) {
        throw ShapeMismatch("conv1d output gradient shape " + to_string(grad_out.shape()));
    }
    Tensor dx(x.shape());
    // Behind a max pool most of grad_out is zero, so only the nonzero
    // filters of each row are visited.
    std::vector<std::size_t> nz;
    nz.reserve(filters);
    for (std::size_t n = 0; n < batch; ++n) {
        const double* xs = x.raw() + n * seq * in;
        double* dxs = dx.raw() + n * seq * in;
        const double* gs = grad_out.raw() + n * steps * filters;
        for (std::size_t t = 0; t < steps; ++t) {
            const double* g = gs + t * filters;
            nz.clear();
            for (std::size_t f = 0; f < filters; ++f) {
                if (g[f] != 0.0) nz.push_back(f);
            }
            if (nz.empty()) continue;
            const bool dense = nz.size() == filters;
            for (const auto f : nz) grad_b[f] += g[f];
            for (std::size_t k = 0; k < kernel; ++k) {
                const double* xr = xs + (t + k) * in;
                double* dxr = dxs + (t + k) * in;
                const double* wk = w.raw() + k * in * filters;
                double* dwk = grad_w.raw() + k * in * filters;
                for (std::size_t c = 0; c < in; ++c) {
                    const double* wr = wk + c * filters;
                    double* dwr = dwk + c * filters;
                    const double xv = xr[c];
                    double acc = 0.0;
                    if (dense) {
                        for (std::size_t f = 0; f < filters; ++f) {
                            dwr[f] += xv * g[f];
                            acc += wr[f] * g[f];
                        }
                    } else {
                        for (const auto f : nz) {
                            dwr[f] += xv * g[f];
                            acc += wr[f] * g[f];
                        }
                    }
                    dxr[c] += acc;
                }
            }
        }
    }
    return dx;
}

// --- global max pool ------------------------------------------------------------

MaxPoolResult global_max_pool_forward(const Tensor& x) {
    const auto batch = batch_of(x, 2, "global max pool");
    const auto time = trailing(x, 2);
    const auto filters = trailing(x, 1);
    if (time == 0) throw EmptyTimeAxis("global max pool over an empty time axis");
    MaxPoolResult r{Tensor(with_batch(x, 2, {filters})), std::vector<std::size_t>(batch * filters, 0)};
    for (std::size_t n = 0; n < batch; ++n) {
        const double* xs = x.raw() + n * time * filters;
        double* vals = r.values.raw() + n * filters;
        std::size_t* arg = r.argmax.data() + n * filters;
        std::copy_n(xs, filters, vals);
        for (std::size_t t = 1; t < time; ++t) {
            const double* row = xs + t * filters;
            for (std::size_t f = 0; f < filters; ++f) {
                if (row[f] > vals[f]) {
                    vals[f] = row[f];
                    arg[f] = t;
                }
            }
        }
    }
    return r;
}

Tensor global_max_pool_backward(const MaxPoolResult& forward, const Shape& input_shape, const Tensor& grad_out) {
    require_same_shape(forward.values, grad_out, "global max pool gradient");
    Tensor dx(input_shape);
    const auto time = input_shape[input_shape.size() - 2];
    const auto filters = input_shape.back();
    const auto batch = forward.argmax.size() / filters;
    for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t f = 0; f < filters; ++f) {
            const auto t = forward.argmax[n * filters + f];
            dx[(n * time + t) * filters + f] += grad_out[n * filters + f];
        }
    }
    return dx;
}

// --- dense ------------------------------------------------------------------------

namespace {
void check_dense(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (w.rank() != 2) throw ShapeMismatch("dense weights must be [in, out]");
    if (b.rank() != 1 || b.dim(0) != w.dim(1)) throw ShapeMismatch("dense bias must be [out]");
    batch_of(x, 1, "dense");
    if (trailing(x, 1) != w.dim(0)) {
        throw ShapeMismatch("dense input width " + std::to_string(trailing(x, 1)) + " vs weights " +
                            to_string(w.shape()));
    }
}
}  // namespace

Tensor dense_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
    check_dense(x, w, b);
    const auto batch = batch_of(x, 1, "dense");
    const auto in = w.dim(0);
    const auto out_w = w.dim(1);
    Tensor out(with_batch(x, 1, {out_w}));
    for (std::size_t n = 0; n < batch; ++n) {
        const double* xs = x.raw() + n * in;
        double* o = out.raw() + n * out_w;
        std::copy_n(b.raw(), out_w, o);
        for (std::size_t i = 0; i < in; ++i) {
            const double xv = xs[i];
            if (xv == 0.0) continue;
            const double* wr = w.raw() + i * out_w;
            for (std::size_t j = 0; j < out_w; ++j) o[j] += xv * wr[j];
        }
    }
    return out;
}

Tensor dense_backward(const Tensor& x, const Tensor& w, const Tensor& grad_out, Tensor& grad_w, Tensor& grad_b) {
    check_dense(x, w, grad_b);
    require_same_shape(w, grad_w, "dense weight gradient");
    const auto batch = batch_of(x, 1, "dense");
    const auto in = w.dim(0);
    const auto out_w = w.dim(1);
    if (grad_out.shape() != with_batch(x, 1, {out_w})) {
        throw ShapeMismatch("dense output gradient shape " + to_string(grad_out.shape()));
    }
    Tensor dx(x.shape());
    for (std::size_t n = 0; n < batch; ++n) {
        const double* xs = x.raw() + n * in;
        const double* g = grad_out.raw() + n * out_w;
        double* dxs = dx.raw() + n * in;
        for (std::size_t j = 0; j < out_w; ++j) grad_b[j] += g[j];
        for (std::size_t i = 0; i < in; ++i) {
            const double* wr = w.raw() + i * out_w;
            double* dwr = grad_w.raw() + i * out_w;
            const double xv = xs[i];
            double acc = 0.0;
            for (std::size_t j = 0; j < out_w; ++j) {
                dwr[j] += xv * g[j];
                acc += wr[j] * g[j];
            }
            dxs[i] = acc;
        }
    }
    return dx;
}

// --- activations ------------------------------------------------------------------

Tensor relu(const Tensor& x) {
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
    require_same_shape(x, grad_out, "relu gradient");
    Tensor dx(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > 0.0 ? grad_out[i] : 0.0;
    return dx;
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Tensor sigmoid(const Tensor& x) {
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = sigmoid(x[i]);
    return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& grad_out) {
    require_same_shape(y, grad_out, "sigmoid gradient");
    Tensor dx(y.shape());
    for (std::size_t i = 0; i < y.size(); ++i) dx[i] = grad_out[i] * y[i] * (1.0 - y[i]);
    return dx;
}

double bce_loss(double p, int label) {
    const double q = std::clamp(p, kBceClamp, 1.0 - kBceClamp);
    return label ? -std::log(q) : -std::log(1.0 - q);
}

// --- concat -----------------------------------------------------------------------

Tensor concat(const Tensor& a, const Tensor& b) {
    if (a.rank() != b.rank() || a.rank() < 1 || a.rank() > 2) throw ShapeMismatch("concat needs rank-1 or rank-2 inputs");
    if (a.rank() == 2 && a.dim(0) != b.dim(0)) throw ShapeMismatch("concat batch sizes differ");
    const auto batch = a.rank() == 2 ? a.dim(0) : 1;
    const auto wa = trailing(a, 1);
    const auto wb = trailing(b, 1);
    Tensor out(a.rank() == 2 ? Shape{batch, wa + wb} : Shape{wa + wb});
    for (std::size_t n = 0; n < batch; ++n) {
        std::copy_n(a.raw() + n * wa, wa, out.raw() + n * (wa + wb));
        std::copy_n(b.raw() + n * wb, wb, out.raw() + n * (wa + wb) + wa);
    }
    return out;
}

void split_grad(const Tensor& grad, std::size_t left_width, Tensor& grad_a, Tensor& grad_b) {
    const auto batch = grad.rank() == 2 ? grad.dim(0) : 1;
    const auto width = trailing(grad, 1);
    if (left_width >= width) throw ShapeMismatch("split width out of range");
    const auto right_width = width - left_width;
    grad_a = Tensor(grad.rank() == 2 ? Shape{batch, left_width} : Shape{left_width});
    grad_b = Tensor(grad.rank() == 2 ? Shape{batch, right_width} : Shape{right_width});
    for (std::size_t n = 0; n < batch; ++n) {
        std::copy_n(grad.raw() + n * width, left_width, grad_a.raw() + n * left_width);
        std::copy_n(grad.raw() + n * width + left_width, right_width, grad_b.raw() + n * right_width);
    }
}

// --- init -------------------------------------------------------------------------

void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    uniform_init(t, -limit, limit, rng);
}

void uniform_init(Tensor& t, double lo, double hi, Rng& rng) {
    for (auto& v : t.data()) v = rng.uniform(lo, hi);
}

void round_to_float32(Tensor& t) {
    for (auto& v : t.data()) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace aicatcher::nn
