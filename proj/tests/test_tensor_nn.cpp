#include <doctest.h>

#include <random>

#include "lesioncam/layers.hpp"
#include "grad_check.hpp"
#include "oracles.hpp"

using namespace lesioncam;
namespace nn = lesioncam::nn;

TEST_CASE("conv2d identity kernel") {
    Tensor4 in(1, 1, 1, 1);
    in.data[0] = 5.0f;
    Tensor4 k(1, 1, 1, 1);
    k.data[0] = 1.0f;
    const Tensor4 out = nn::conv2d_forward(in, k, {0.0f}, 1, 0);
    CHECK(out.data[0] == doctest::Approx(5.0f));
}

TEST_CASE("conv2d all-ones 3x3 sums to nine") {
    Tensor4 in(1, 1, 3, 3);
    in.fill(1.0f);
    Tensor4 k(1, 1, 3, 3);
    k.fill(1.0f);
    const Tensor4 out = nn::conv2d_forward(in, k, {0.0f}, 1, 0);
    REQUIRE(out.h == 1);
    REQUIRE(out.w == 1);
    CHECK(out.data[0] == doctest::Approx(9.0f));
}

TEST_CASE("conv2d matches naive-loop oracle") {
    std::mt19937 rng(11);
    const Tensor4 in = oracles::random_tensor<float>(2, 3, 8, 8, rng);
    const Tensor4 k = oracles::random_tensor<float>(4, 3, 3, 3, rng);
    std::vector<float> bias = {0.1f, -0.2f, 0.3f, 0.0f};
    const Tensor4 got = nn::conv2d_forward(in, k, bias, 1, 1);
    const Tensor4 want = oracles::naive_conv2d(in, k, bias, 1, 1);
    REQUIRE(got.same_shape(want));
    CHECK(oracles::max_abs_diff(got.data, want.data) < 1e-5);
}

TEST_CASE("conv2d shape mismatch names both shapes") {
    Tensor4 in(1, 2, 4, 4);
    Tensor4 k(1, 3, 3, 3);
    CHECK_THROWS_WITH_AS(nn::conv2d_forward(in, k, {0.0f}, 1, 0),
                         doctest::Contains("(1,3,3,3)"), ShapeError);
}

TEST_CASE("conv2d_backward zero upstream gives zero gradients") {
    std::mt19937 rng(3);
    const Tensor4 in = oracles::random_tensor<float>(1, 2, 5, 5, rng);
    const Tensor4 k = oracles::random_tensor<float>(3, 2, 3, 3, rng);
    Tensor4 upstream(1, 3, 3, 3);  // stays zero
    const auto g = nn::conv2d_backward(upstream, in, k, 1, 0);
    for (float v : g.input.data) CHECK(v == 0.0f);
    for (float v : g.kernels.data) CHECK(v == 0.0f);
    for (float v : g.bias) CHECK(v == 0.0f);
}

TEST_CASE("conv2d_backward through 1x1 identity kernel passes upstream") {
    std::mt19937 rng(4);
    const Tensor4 in = oracles::random_tensor<float>(1, 1, 4, 4, rng);
    Tensor4 k(1, 1, 1, 1);
    k.data[0] = 1.0f;
    const Tensor4 upstream = oracles::random_tensor<float>(1, 1, 4, 4, rng);
    const auto g = nn::conv2d_backward(upstream, in, k, 1, 0);
    CHECK(oracles::max_abs_diff(g.input.data, upstream.data) == 0.0);
}

TEST_CASE("conv2d gradients match finite differences") {
    std::mt19937 rng(21);
    for (int i = 0; i < 5; ++i) {
        auto c = gradcheck::random_conv_case(rng);
        CHECK(gradcheck::conv_grad_error(std::move(c), rng) < 1e-5);
    }
}

TEST_CASE("maxpool basic windows") {
    Tensor4 in(1, 1, 2, 2);
    in.data = {1, 2, 3, 4};
    CHECK(nn::maxpool2x2_forward(in).data[0] == doctest::Approx(4.0f));

    Tensor4 flat(1, 1, 4, 4);
    flat.fill(7.0f);
    const Tensor4 out = nn::maxpool2x2_forward(flat);
    REQUIRE(out.h == 2);
    for (float v : out.data) CHECK(v == doctest::Approx(7.0f));
}

TEST_CASE("maxpool rejects odd spatial dims") {
    Tensor4 in(1, 1, 3, 4);
    CHECK_THROWS_AS(nn::maxpool2x2_forward(in), ShapeError);
}

TEST_CASE("maxpool matches window-scan oracle, backward matches FD") {
    std::mt19937 rng(5);
    const Tensor4 in = oracles::random_tensor<float>(1, 2, 6, 6, rng);
    const Tensor4 got = nn::maxpool2x2_forward(in);
    const Tensor4 want = oracles::naive_maxpool2x2(in);
    CHECK(oracles::max_abs_diff(got.data, want.data) == 0.0);
    for (int i = 0; i < 5; ++i) CHECK(gradcheck::maxpool_grad_error(rng) < 1e-5);
}

TEST_CASE("maxpool ties route gradient to first cell in row-major order") {
    Tensor4 in(1, 1, 2, 2);
    in.fill(3.0f);
    Tensor4 upstream(1, 1, 1, 1);
    upstream.data[0] = 1.0f;
    const Tensor4 g = nn::maxpool2x2_backward(upstream, in);
    CHECK(g.data[0] == 1.0f);
    CHECK(g.data[1] == 0.0f);
    CHECK(g.data[2] == 0.0f);
    CHECK(g.data[3] == 0.0f);
}

TEST_CASE("gap constant and single-spike maps") {
    Tensor4 c(1, 1, 3, 3);
    c.fill(4.5f);
    CHECK(nn::gap_forward(c).data[0] == doctest::Approx(4.5f));

    Tensor4 spike(1, 1, 4, 4);
    spike.at(0, 0, 2, 1) = 1.0f;
    CHECK(nn::gap_forward(spike).data[0] == doctest::Approx(1.0f / 16.0f));
}

TEST_CASE("gap matches mean oracle, backward matches FD") {
    std::mt19937 rng(6);
    const Tensor4 in = oracles::random_tensor<float>(2, 3, 5, 7, rng);
    const Tensor4 got = nn::gap_forward(in);
    const Tensor4 want = oracles::naive_gap(in);
    CHECK(oracles::max_abs_diff(got.data, want.data) < 1e-6);
    for (int i = 0; i < 5; ++i) CHECK(gradcheck::gap_grad_error(rng) < 1e-5);
}

TEST_CASE("relu clamps negatives, gradient matches FD away from zero") {
    Tensor4 in(1, 1, 1, 3);
    in.data = {-1.0f, 0.0f, 2.0f};
    const Tensor4 out = nn::relu_forward(in);
    CHECK(out.data[0] == 0.0f);
    CHECK(out.data[1] == 0.0f);
    CHECK(out.data[2] == 2.0f);

    Tensor4 neg(1, 2, 2, 2);
    neg.fill(-3.0f);
    for (float v : nn::relu_forward(neg).data) CHECK(v == 0.0f);

    std::mt19937 rng(7);
    for (int i = 0; i < 5; ++i) CHECK(gradcheck::relu_grad_error(rng) < 1e-5);
}

TEST_CASE("dropout p=0 and eval mode are identities") {
    std::mt19937 rng(8);
    const Tensor4 in = oracles::random_tensor<float>(1, 2, 4, 4, rng);
    std::vector<std::uint8_t> mask;
    CHECK(oracles::max_abs_diff(
              nn::dropout_forward(in, 0.0, nn::Mode::Train, rng, mask).data, in.data) == 0.0);
    CHECK(oracles::max_abs_diff(
              nn::dropout_forward(in, 0.5, nn::Mode::Eval, rng, mask).data, in.data) == 0.0);
}

TEST_CASE("dropout train mode preserves the mean within 3 standard errors") {
    std::mt19937 rng(9);
    Tensor4 in(1, 1, 100, 1000);
    in.fill(1.0f);
    std::vector<std::uint8_t> mask;
    const Tensor4 out = nn::dropout_forward(in, 0.5, nn::Mode::Train, rng, mask);
    double sum = 0.0;
    for (float v : out.data) sum += v;
    const double mean = sum / out.data.size();
    // each output element is 0 or 2 with variance 1; se of the mean = 1/sqrt(N)
    const double se = 1.0 / std::sqrt(static_cast<double>(out.data.size()));
    CHECK(std::abs(mean - 1.0) < 3.0 * se);
}

TEST_CASE("dropout masks reproduce for a fixed seed") {
    Tensor4 in(1, 1, 10, 10);
    in.fill(1.0f);
    std::mt19937 a(42), b(42);
    std::vector<std::uint8_t> ma, mb;
    const Tensor4 oa = nn::dropout_forward(in, 0.3, nn::Mode::Train, a, ma);
    const Tensor4 ob = nn::dropout_forward(in, 0.3, nn::Mode::Train, b, mb);
    CHECK(ma == mb);
    CHECK(oa.data == ob.data);
}

TEST_CASE("fc identity and zero weights") {
    Tensor4 in(1, 3, 1, 1);
    in.data = {1.0f, 2.0f, 3.0f};
    Tensor4 eye(3, 3, 1, 1);
    for (int i = 0; i < 3; ++i) eye.at(i, i, 0, 0) = 1.0f;
    CHECK(nn::fc_forward(in, eye).data == in.data);

    Tensor4 zero(3, 3, 1, 1);
    for (float v : nn::fc_forward(in, zero).data) CHECK(v == 0.0f);
}

TEST_CASE("fc dimension mismatch raises shape error") {
    Tensor4 in(1, 3, 1, 1);
    Tensor4 w(2, 4, 1, 1);
    CHECK_THROWS_AS(nn::fc_forward(in, w), ShapeError);
}

TEST_CASE("fc matches dot-product oracle and finite differences") {
    std::mt19937 rng(10);
    const Tensor4 in = oracles::random_tensor<float>(2, 5, 1, 1, rng);
    const Tensor4 w = oracles::random_tensor<float>(3, 5, 1, 1, rng);
    const Tensor4 got = nn::fc_forward(in, w);
    for (int n = 0; n < 2; ++n)
        for (int c = 0; c < 3; ++c) {
            float want = 0.0f;
            for (int k = 0; k < 5; ++k) want += w.at(c, k, 0, 0) * in.at(n, k, 0, 0);
            CHECK(got.at(n, c, 0, 0) == doctest::Approx(want).epsilon(1e-5));
        }
    for (int i = 0; i < 5; ++i) CHECK(gradcheck::fc_grad_error(rng) < 1e-5);
}

TEST_CASE("softmax closed forms and shift invariance") {
    const auto uniform = nn::softmax(std::vector<float>{0.0f, 0.0f, 0.0f});
    for (float v : uniform) CHECK(v == doctest::Approx(1.0f / 3.0f));

    const auto two = nn::softmax(std::vector<float>{0.0f, std::log(3.0f)});
    CHECK(two[0] == doctest::Approx(0.25f));
    CHECK(two[1] == doctest::Approx(0.75f));

    std::mt19937 rng(12);
    std::uniform_real_distribution<float> dist(-3.0f, 3.0f);
    std::vector<float> x(4);
    for (auto& v : x) v = dist(rng);
    std::vector<float> shifted = x;
    for (auto& v : shifted) v += 17.5f;
    const auto a = nn::softmax(x), b = nn::softmax(shifted);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-5));

    double sum = 0.0;
    for (float v : a) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("cross entropy closed forms") {
    Tensor4 sure(1, 3, 1, 1);
    sure.at(0, 1, 0, 0) = 1.0f;
    CHECK(nn::cross_entropy(sure, {1}) == doctest::Approx(0.0f));

    Tensor4 uniform(1, 3, 1, 1);
    uniform.fill(1.0f / 3.0f);
    CHECK(nn::cross_entropy(uniform, {2}) == doctest::Approx(std::log(3.0f)));

    CHECK_THROWS_AS(nn::cross_entropy(uniform, {5}), UsageError);
}

TEST_CASE("softmax+CE gradient matches finite differences") {
    std::mt19937 rng(13);
    for (int i = 0; i < 5; ++i) CHECK(gradcheck::softmax_ce_grad_error(rng) < 1e-5);
}

TEST_CASE("sgd step closed forms") {
    Param p(Tensor4(1, 1, 1, 2));
    p.value.data = {1.0f, -2.0f};
    p.grad.data = {0.5f, 0.5f};

    SUBCASE("lr 0 leaves weights unchanged") {
        nn::sgd_step(p, 0.0, 0.9, 0.0);
        CHECK(p.value.data[0] == 1.0f);
        CHECK(p.value.data[1] == -2.0f);
        CHECK(p.grad.data[0] == 0.0f);  // grads zeroed
    }

    SUBCASE("plain gradient descent") {
        nn::sgd_step(p, 0.1, 0.0, 0.0);
        CHECK(p.value.data[0] == doctest::Approx(1.0f - 0.1f * 0.5f));
        CHECK(p.value.data[1] == doctest::Approx(-2.0f - 0.1f * 0.5f));
    }

    SUBCASE("momentum matches the hand-unrolled recurrence") {
        // step 1: v1 = g1, w1 = w0 - lr*v1
        // step 2: v2 = 0.9*v1 + g2, w2 = w1 - lr*v2
        const double lr = 0.1, g1 = 0.5, g2 = 0.25, w0 = 1.0;
        nn::sgd_step(p, lr, 0.9, 0.0);
        p.grad.data = {static_cast<float>(g2), static_cast<float>(g2)};
        nn::sgd_step(p, lr, 0.9, 0.0);
        const double v1 = g1, w1 = w0 - lr * v1;
        const double v2 = 0.9 * v1 + g2, w2 = w1 - lr * v2;
        CHECK(p.value.data[0] == doctest::Approx(w2).epsilon(1e-6));
    }
}
