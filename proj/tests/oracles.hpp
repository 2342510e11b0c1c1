#pragma once

// Independent reference implementations used to check the library: naive
// nested-loop ops, central finite differences, pairwise AUC. These must stay
// free of the library's own forward/backward code paths.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "lesioncam/eval.hpp"
#include "lesioncam/tensor.hpp"

namespace oracles {

using lesioncam::Tensor4T;

template <typename T>
Tensor4T<T> random_tensor(int n, int c, int h, int w, std::mt19937& rng, double scale = 1.0) {
    Tensor4T<T> t(n, c, h, w);
    std::uniform_real_distribution<double> dist(-scale, scale);
    for (auto& v : t.data) v = static_cast<T>(dist(rng));
    return t;
}

// Six-nested-loop direct cross-correlation.
template <typename T>
Tensor4T<T> naive_conv2d(const Tensor4T<T>& in, const Tensor4T<T>& kernels,
                         const std::vector<T>& bias, int stride, int pad) {
    const int oh = (in.h + 2 * pad - kernels.h) / stride + 1;
    const int ow = (in.w + 2 * pad - kernels.w) / stride + 1;
    Tensor4T<T> out(in.n, kernels.n, oh, ow);
    for (int n = 0; n < in.n; ++n)
        for (int o = 0; o < kernels.n; ++o)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    T sum = bias[o];
                    for (int ic = 0; ic < in.c; ++ic)
                        for (int ky = 0; ky < kernels.h; ++ky)
                            for (int kx = 0; kx < kernels.w; ++kx) {
                                const int iy = oy * stride - pad + ky;
                                const int ix = ox * stride - pad + kx;
                                if (iy < 0 || iy >= in.h || ix < 0 || ix >= in.w) continue;
                                sum += kernels.at(o, ic, ky, kx) * in.at(n, ic, iy, ix);
                            }
                    out.at(n, o, oy, ox) = sum;
                }
    return out;
}

// Window-scan 2x2 max pooling.
template <typename T>
Tensor4T<T> naive_maxpool2x2(const Tensor4T<T>& in) {
    Tensor4T<T> out(in.n, in.c, in.h / 2, in.w / 2);
    for (int n = 0; n < in.n; ++n)
        for (int c = 0; c < in.c; ++c)
            for (int y = 0; y < out.h; ++y)
                for (int x = 0; x < out.w; ++x)
                    out.at(n, c, y, x) = std::max(
                        std::max(in.at(n, c, 2 * y, 2 * x), in.at(n, c, 2 * y, 2 * x + 1)),
                        std::max(in.at(n, c, 2 * y + 1, 2 * x),
                                 in.at(n, c, 2 * y + 1, 2 * x + 1)));
    return out;
}

template <typename T>
Tensor4T<T> naive_gap(const Tensor4T<T>& in) {
    Tensor4T<T> out(in.n, in.c, 1, 1);
    for (int n = 0; n < in.n; ++n)
        for (int c = 0; c < in.c; ++c) {
            T sum = T(0);
            for (int y = 0; y < in.h; ++y)
                for (int x = 0; x < in.w; ++x) sum += in.at(n, c, y, x);
            out.at(n, c, 0, 0) = sum / static_cast<T>(in.h * in.w);
        }
    return out;
}

inline double max_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
    return m;
}

// Central finite difference of a scalar-valued functional w.r.t. one tensor,
// compared against the analytic gradient. Returns the max relative error
// (absolute error where the scale is tiny).
inline double gradient_check(std::vector<double>& params,
                             const std::function<double()>& loss,
                             const std::vector<double>& analytic, double step = 1e-4) {
    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + step;
        const double up = loss();
        params[i] = saved - step;
        const double down = loss();
        params[i] = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-4});
        worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
    }
    return worst;
}

// O(n^2) pairwise AUC with half credit on ties.
inline double pairwise_auc(const std::vector<lesioncam::ScoredSample>& samples) {
    double wins = 0.0;
    std::size_t pairs = 0;
    for (const auto& p : samples) {
        if (!p.label) continue;
        for (const auto& n : samples) {
            if (n.label) continue;
            ++pairs;
            if (p.score > n.score) wins += 1.0;
            else if (p.score == n.score) wins += 0.5;
        }
    }
    return wins / pairs;
}

}  // namespace oracles
