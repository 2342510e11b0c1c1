#pragma once

#include <cstdint>
#include <cstddef>
#include <string>
#include <vector>

#include "lesioncam/errors.hpp"

namespace lesioncam {

// Dense NCHW tensor, row-major. Templated so the gradient-check harness can
// run a 64-bit replica of every op; the network itself uses Tensor4 (float).
template <typename T>
struct Tensor4T {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> data;

    Tensor4T() = default;
    Tensor4T(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_),
          data(static_cast<std::size_t>(n_) * c_ * h_ * w_, T(0)) {
        if (n_ < 0 || c_ < 0 || h_ < 0 || w_ < 0) {
            throw ShapeError("Tensor4: negative dimension in shape " + shape_str());
        }
    }

    std::size_t size() const { return data.size(); }

    std::size_t index(int in, int ic, int iy, int ix) const {
        return ((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix;
    }

    T& at(int in, int ic, int iy, int ix) { return data[index(in, ic, iy, ix)]; }
    T at(int in, int ic, int iy, int ix) const { return data[index(in, ic, iy, ix)]; }

    bool same_shape(const Tensor4T& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }

    std::string shape_str() const {
        return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
               std::to_string(h) + "," + std::to_string(w) + ")";
    }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    template <typename U>
    Tensor4T<U> cast() const {
        Tensor4T<U> out(n, c, h, w);
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

using Tensor4 = Tensor4T<float>;

// Learnable tensor with its gradient and SGD momentum buffer.
template <typename T>
struct ParamT {
    Tensor4T<T> value;
    Tensor4T<T> grad;
    Tensor4T<T> velocity;

    ParamT() = default;
    explicit ParamT(Tensor4T<T> v)
        : value(std::move(v)),
          grad(value.n, value.c, value.h, value.w),
          velocity(value.n, value.c, value.h, value.w) {}

    void zero_grad() { grad.fill(T(0)); }
};

// Flat parameter vector (conv biases).
template <typename T>
struct VecParamT {
    std::vector<T> value;
    std::vector<T> grad;
    std::vector<T> velocity;

    VecParamT() = default;
    explicit VecParamT(std::size_t len)
        : value(len, T(0)), grad(len, T(0)), velocity(len, T(0)) {}

    void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

using Param = ParamT<float>;
using VecParam = VecParamT<float>;

}  // namespace lesioncam
