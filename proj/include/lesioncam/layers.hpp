#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "lesioncam/errors.hpp"
#include "lesioncam/tensor.hpp"

namespace lesioncam::nn {

// Uniform double in [0,1) from the raw 32-bit stream; keeps dropout masks and
// weight init bit-identical for a fixed seed regardless of libstdc++
// distribution internals.
inline double uniform01(std::mt19937& rng) {
    return rng() * (1.0 / 4294967296.0);
}

template <typename T>
struct ConvGrads {
    Tensor4T<T> input;
    Tensor4T<T> kernels;
    std::vector<T> bias;
};

namespace detail {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline int conv_out_size(int in, int k, int stride, int pad, const char* what) {
    const int span = in + 2 * pad - k;
    if (span < 0 || span % stride != 0) {
        throw ShapeError(std::string("conv2d: ") + what + " size " + std::to_string(in) +
                         " with kernel " + std::to_string(k) + ", stride " +
                         std::to_string(stride) + ", pad " + std::to_string(pad) +
                         " yields no integer output size");
    }
    return span / stride + 1;
}

// col is (ic*kh*kw) x (oh*ow), row-major, for one batch item.
template <typename T>
void im2col(const Tensor4T<T>& in, int item, int kh, int kw, int stride, int pad,
            int oh, int ow, MatRM<T>& col) {
    int row = 0;
    for (int ic = 0; ic < in.c; ++ic) {
        for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx, ++row) {
                T* dst = col.data() + static_cast<std::ptrdiff_t>(row) * oh * ow;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        dst[oy * ow + ox] =
                            (iy >= 0 && iy < in.h && ix >= 0 && ix < in.w)
                                ? in.at(item, ic, iy, ix)
                                : T(0);
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im_accumulate(const MatRM<T>& col, Tensor4T<T>& grad, int item, int kh, int kw,
                       int stride, int pad, int oh, int ow) {
    int row = 0;
    for (int ic = 0; ic < grad.c; ++ic) {
        for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx, ++row) {
                const T* src = col.data() + static_cast<std::ptrdiff_t>(row) * oh * ow;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= grad.h) continue;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        if (ix < 0 || ix >= grad.w) continue;
                        grad.at(item, ic, iy, ix) += src[oy * ow + ox];
                    }
                }
            }
        }
    }
}

}  // namespace detail

// Cross-correlation (no kernel flip). kernels: (oc, ic, kh, kw).
template <typename T>
Tensor4T<T> conv2d_forward(const Tensor4T<T>& in, const Tensor4T<T>& kernels,
                           const std::vector<T>& bias, int stride, int pad) {
    if (stride < 1) throw UsageError("conv2d: stride must be >= 1");
    if (pad < 0) throw UsageError("conv2d: padding must be >= 0");
    if (kernels.c != in.c) {
        throw ShapeError("conv2d: kernel channels " + kernels.shape_str() +
                         " do not match input " + in.shape_str());
    }
    if (static_cast<int>(bias.size()) != kernels.n) {
        throw ShapeError("conv2d: bias length " + std::to_string(bias.size()) +
                         " does not match " + std::to_string(kernels.n) + " kernels");
    }
    const int oc = kernels.n, kh = kernels.h, kw = kernels.w;
    const int oh = detail::conv_out_size(in.h, kh, stride, pad, "height");
    const int ow = detail::conv_out_size(in.w, kw, stride, pad, "width");

    Tensor4T<T> out(in.n, oc, oh, ow);
    using Mat = detail::MatRM<T>;
    Eigen::Map<const Mat> K(kernels.data.data(), oc, in.c * kh * kw);
    Mat col(in.c * kh * kw, oh * ow);
    for (int item = 0; item < in.n; ++item) {
        detail::im2col(in, item, kh, kw, stride, pad, oh, ow, col);
        Eigen::Map<Mat> O(out.data.data() + out.index(item, 0, 0, 0), oc, oh * ow);
        O.noalias() = K * col;
        for (int o = 0; o < oc; ++o) O.row(o).array() += bias[o];
    }
    return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor4T<T>& upstream, const Tensor4T<T>& in,
                             const Tensor4T<T>& kernels, int stride, int pad) {
    const int oc = kernels.n, kh = kernels.h, kw = kernels.w;
    const int oh = detail::conv_out_size(in.h, kh, stride, pad, "height");
    const int ow = detail::conv_out_size(in.w, kw, stride, pad, "width");
    if (upstream.n != in.n || upstream.c != oc || upstream.h != oh || upstream.w != ow) {
        throw ShapeError("conv2d_backward: upstream " + upstream.shape_str() +
                         " does not match forward output shape");
    }

    ConvGrads<T> g{Tensor4T<T>(in.n, in.c, in.h, in.w),
                   Tensor4T<T>(oc, in.c, kh, kw), std::vector<T>(oc, T(0))};
    using Mat = detail::MatRM<T>;
    Eigen::Map<const Mat> K(kernels.data.data(), oc, in.c * kh * kw);
    Eigen::Map<Mat> GK(g.kernels.data.data(), oc, in.c * kh * kw);
    Mat col(in.c * kh * kw, oh * ow);
    Mat colgrad(in.c * kh * kw, oh * ow);
    for (int item = 0; item < in.n; ++item) {
        detail::im2col(in, item, kh, kw, stride, pad, oh, ow, col);
        Eigen::Map<const Mat> G(upstream.data.data() + upstream.index(item, 0, 0, 0),
                                oc, oh * ow);
        GK.noalias() += G * col.transpose();
        for (int o = 0; o < oc; ++o) g.bias[o] += G.row(o).sum();
        colgrad.noalias() = K.transpose() * G;
        detail::col2im_accumulate(colgrad, g.input, item, kh, kw, stride, pad, oh, ow);
    }
    return g;
}

template <typename T>
Tensor4T<T> maxpool2x2_forward(const Tensor4T<T>& in) {
    if (in.h % 2 != 0 || in.w % 2 != 0) {
        throw ShapeError("maxpool2x2: spatial dims must be even, got " + in.shape_str());
    }
    Tensor4T<T> out(in.n, in.c, in.h / 2, in.w / 2);
    for (int n = 0; n < in.n; ++n)
        for (int c = 0; c < in.c; ++c)
            for (int y = 0; y < out.h; ++y)
                for (int x = 0; x < out.w; ++x) {
                    T best = in.at(n, c, 2 * y, 2 * x);
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx) {
                            const T v = in.at(n, c, 2 * y + dy, 2 * x + dx);
                            if (v > best) best = v;  // ties keep the earlier cell
                        }
                    out.at(n, c, y, x) = best;
                }
    return out;
}

template <typename T>
Tensor4T<T> maxpool2x2_backward(const Tensor4T<T>& upstream, const Tensor4T<T>& in) {
    if (upstream.n != in.n || upstream.c != in.c || upstream.h != in.h / 2 ||
        upstream.w != in.w / 2) {
        throw ShapeError("maxpool2x2_backward: upstream " + upstream.shape_str() +
                         " does not match pooled shape of " + in.shape_str());
    }
    Tensor4T<T> grad(in.n, in.c, in.h, in.w);
    for (int n = 0; n < in.n; ++n)
        for (int c = 0; c < in.c; ++c)
            for (int y = 0; y < upstream.h; ++y)
                for (int x = 0; x < upstream.w; ++x) {
                    int by = 2 * y, bx = 2 * x;
                    T best = in.at(n, c, by, bx);
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx) {
                            const T v = in.at(n, c, 2 * y + dy, 2 * x + dx);
                            if (v > best) {
                                best = v;
                                by = 2 * y + dy;
                                bx = 2 * x + dx;
                            }
                        }
                    grad.at(n, c, by, bx) += upstream.at(n, c, y, x);
                }
    return grad;
}

template <typename T>
Tensor4T<T> relu_forward(const Tensor4T<T>& in) {
    Tensor4T<T> out(in.n, in.c, in.h, in.w);
    for (std::size_t i = 0; i < in.data.size(); ++i)
        out.data[i] = in.data[i] > T(0) ? in.data[i] : T(0);
    return out;
}

// Subgradient at 0 fixed to 0.
template <typename T>
Tensor4T<T> relu_backward(const Tensor4T<T>& upstream, const Tensor4T<T>& in) {
    if (!upstream.same_shape(in)) {
        throw ShapeError("relu_backward: upstream " + upstream.shape_str() +
                         " vs input " + in.shape_str());
    }
    Tensor4T<T> grad(in.n, in.c, in.h, in.w);
    for (std::size_t i = 0; i < in.data.size(); ++i)
        grad.data[i] = in.data[i] > T(0) ? upstream.data[i] : T(0);
    return grad;
}

// Per-channel spatial mean: (n,c,h,w) -> (n,c,1,1).
template <typename T>
Tensor4T<T> gap_forward(const Tensor4T<T>& in) {
    if (in.h * in.w < 1) throw ShapeError("gap: empty spatial extent " + in.shape_str());
    Tensor4T<T> out(in.n, in.c, 1, 1);
    const T inv = T(1) / static_cast<T>(in.h * in.w);
    for (int n = 0; n < in.n; ++n)
        for (int c = 0; c < in.c; ++c) {
            T sum = T(0);
            for (int y = 0; y < in.h; ++y)
                for (int x = 0; x < in.w; ++x) sum += in.at(n, c, y, x);
            out.at(n, c, 0, 0) = sum * inv;
        }
    return out;
}

template <typename T>
Tensor4T<T> gap_backward(const Tensor4T<T>& upstream, int h, int w) {
    Tensor4T<T> grad(upstream.n, upstream.c, h, w);
    const T inv = T(1) / static_cast<T>(h * w);
    for (int n = 0; n < upstream.n; ++n)
        for (int c = 0; c < upstream.c; ++c) {
            const T g = upstream.at(n, c, 0, 0) * inv;
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) grad.at(n, c, y, x) = g;
        }
    return grad;
}

enum class Mode { Train, Eval };

// Inverted dropout: survivors scaled by 1/(1-p), eval mode is identity.
// mask_out records kept elements (1) for the backward pass.
template <typename T>
Tensor4T<T> dropout_forward(const Tensor4T<T>& in, double p, Mode mode,
                            std::mt19937& rng, std::vector<std::uint8_t>& mask_out) {
    if (p < 0.0 || p >= 1.0) throw UsageError("dropout: p must be in [0,1)");
    mask_out.assign(in.data.size(), 1);
    Tensor4T<T> out = in;
    if (mode == Mode::Eval || p == 0.0) return out;
    const T scale = T(1.0 / (1.0 - p));
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        if (uniform01(rng) < p) {
            mask_out[i] = 0;
            out.data[i] = T(0);
        } else {
            out.data[i] *= scale;
        }
    }
    return out;
}

template <typename T>
Tensor4T<T> dropout_backward(const Tensor4T<T>& upstream, double p,
                             const std::vector<std::uint8_t>& mask) {
    if (mask.size() != upstream.data.size()) {
        throw UsageError("dropout_backward: mask/upstream size mismatch");
    }
    Tensor4T<T> grad = upstream;
    const T scale = T(1.0 / (1.0 - p));
    for (std::size_t i = 0; i < grad.data.size(); ++i)
        grad.data[i] = mask[i] ? grad.data[i] * scale : T(0);
    return grad;
}

// Bias-free fully connected head. in: (n,K,1,1), weights: (C,K,1,1) -> (n,C,1,1).
template <typename T>
Tensor4T<T> fc_forward(const Tensor4T<T>& in, const Tensor4T<T>& weights) {
    if (weights.c != in.c || in.h != 1 || in.w != 1) {
        throw ShapeError("fc: weights " + weights.shape_str() + " incompatible with input " +
                         in.shape_str());
    }
    Tensor4T<T> out(in.n, weights.n, 1, 1);
    for (int n = 0; n < in.n; ++n)
        for (int cls = 0; cls < weights.n; ++cls) {
            T sum = T(0);
            for (int k = 0; k < in.c; ++k)
                sum += weights.at(cls, k, 0, 0) * in.at(n, k, 0, 0);
            out.at(n, cls, 0, 0) = sum;
        }
    return out;
}

template <typename T>
struct FcGrads {
    Tensor4T<T> input;
    Tensor4T<T> weights;
};

template <typename T>
FcGrads<T> fc_backward(const Tensor4T<T>& upstream, const Tensor4T<T>& in,
                       const Tensor4T<T>& weights) {
    if (upstream.n != in.n || upstream.c != weights.n) {
        throw ShapeError("fc_backward: upstream " + upstream.shape_str() +
                         " does not match forward output shape");
    }
    FcGrads<T> g{Tensor4T<T>(in.n, in.c, 1, 1), Tensor4T<T>(weights.n, weights.c, 1, 1)};
    for (int n = 0; n < in.n; ++n)
        for (int cls = 0; cls < weights.n; ++cls) {
            const T u = upstream.at(n, cls, 0, 0);
            for (int k = 0; k < in.c; ++k) {
                g.input.at(n, k, 0, 0) += u * weights.at(cls, k, 0, 0);
                g.weights.at(cls, k, 0, 0) += u * in.at(n, k, 0, 0);
            }
        }
    return g;
}

// Max-subtracted softmax over a flat logit vector.
template <typename T>
std::vector<T> softmax(const std::vector<T>& logits) {
    if (logits.empty()) throw UsageError("softmax: empty logit vector");
    const T m = *std::max_element(logits.begin(), logits.end());
    std::vector<T> out(logits.size());
    T sum = T(0);
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        sum += out[i];
    }
    for (auto& v : out) v /= sum;
    return out;
}

// Row-wise softmax for batched logits (n,C,1,1).
template <typename T>
Tensor4T<T> softmax_batch(const Tensor4T<T>& logits) {
    Tensor4T<T> out(logits.n, logits.c, 1, 1);
    for (int n = 0; n < logits.n; ++n) {
        std::vector<T> row(logits.c);
        for (int c = 0; c < logits.c; ++c) row[c] = logits.at(n, c, 0, 0);
        const std::vector<T> p = softmax(row);
        for (int c = 0; c < logits.c; ++c) out.at(n, c, 0, 0) = p[c];
    }
    return out;
}

// Mean negative log-likelihood over the batch; probability clamped at 1e-12.
template <typename T>
T cross_entropy(const Tensor4T<T>& probs, const std::vector<int>& labels) {
    if (static_cast<int>(labels.size()) != probs.n) {
        throw UsageError("cross_entropy: label count does not match batch size");
    }
    T loss = T(0);
    for (int n = 0; n < probs.n; ++n) {
        if (labels[n] < 0 || labels[n] >= probs.c) {
            throw UsageError("cross_entropy: class " + std::to_string(labels[n]) +
                             " out of range for " + std::to_string(probs.c) + " classes");
        }
        const T p = std::max(probs.at(n, labels[n], 0, 0), T(1e-12));
        loss -= std::log(p);
    }
    return loss / static_cast<T>(probs.n);
}

// Gradient of mean cross-entropy w.r.t. logits: (p - onehot) / batch.
template <typename T>
Tensor4T<T> softmax_ce_grad(const Tensor4T<T>& probs, const std::vector<int>& labels) {
    Tensor4T<T> grad(probs.n, probs.c, 1, 1);
    const T inv = T(1) / static_cast<T>(probs.n);
    for (int n = 0; n < probs.n; ++n)
        for (int c = 0; c < probs.c; ++c)
            grad.at(n, c, 0, 0) =
                (probs.at(n, c, 0, 0) - (labels[n] == c ? T(1) : T(0))) * inv;
    return grad;
}

// v <- momentum*v + grad + weight_decay*w; w <- w - lr*v; grad zeroed.
template <typename T>
void sgd_step(ParamT<T>& p, double lr, double momentum, double weight_decay) {
    for (std::size_t i = 0; i < p.value.data.size(); ++i) {
        p.velocity.data[i] = T(momentum) * p.velocity.data[i] + p.grad.data[i] +
                             T(weight_decay) * p.value.data[i];
        p.value.data[i] -= T(lr) * p.velocity.data[i];
    }
    p.zero_grad();
}

template <typename T>
void sgd_step(VecParamT<T>& p, double lr, double momentum, double weight_decay) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
        p.velocity[i] = T(momentum) * p.velocity[i] + p.grad[i] + T(weight_decay) * p.value[i];
        p.value[i] -= T(lr) * p.velocity[i];
    }
    p.zero_grad();
}

template <typename T>
void he_uniform_init(Tensor4T<T>& t, int fan_in, std::mt19937& rng) {
    const double limit = std::sqrt(6.0 / fan_in);
    for (auto& v : t.data) v = static_cast<T>((2.0 * uniform01(rng) - 1.0) * limit);
}

}  // namespace lesioncam::nn
