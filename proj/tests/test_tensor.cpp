#include <gtest/gtest.h>

#include <cmath>

#include "tooluse/gradcheck.hpp"
#include "tooluse/random.hpp"
#include "tooluse/tensor.hpp"

using namespace tooluse;

namespace {

// Brute-force valid cross-correlation, kept deliberately independent of the
// library loops.
Tensor conv_reference(const Tensor& input, const Tensor& kernels, std::size_t stride) {
    const std::size_t C = input.shape[0], H = input.shape[1], W = input.shape[2];
    const std::size_t K = kernels.shape[0], kh = kernels.shape[2], kw = kernels.shape[3];
    const std::size_t oh = (H - kh) / stride + 1, ow = (W - kw) / stride + 1;
    Tensor out = Tensor::zeros({K, oh, ow});
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox) {
                double acc = 0.0;
                for (std::size_t c = 0; c < C; ++c)
                    for (std::size_t dy = 0; dy < kh; ++dy)
                        for (std::size_t dx = 0; dx < kw; ++dx)
                            acc += kernels.data[((k * C + c) * kh + dy) * kw + dx] *
                                   input.data[(c * H + oy * stride + dy) * W + ox * stride + dx];
                out.data[(k * oh + oy) * ow + ox] = acc;
            }
    return out;
}

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

}  // namespace

TEST(Affine, ZeroWeightsPassBias) {
    Tensor x = Tensor::vec({1, 2});
    Tensor W = Tensor::zeros({2, 2});
    Tensor b = Tensor::vec({3, 4});
    Tensor out = affine_forward(x, W, b);
    EXPECT_EQ(out.data, (std::vector<double>{3, 4}));
}

TEST(Affine, Identity) {
    Tensor x = Tensor::vec({1, 2});
    Tensor W({2, 2}, {1, 0, 0, 1});
    Tensor b = Tensor::vec({0, 0});
    EXPECT_EQ(affine_forward(x, W, b).data, (std::vector<double>{1, 2}));
}

TEST(Affine, HandComputed) {
    Tensor x = Tensor::vec({1, -1});
    Tensor W({2, 2}, {2, 3, 0, 1});
    Tensor b = Tensor::vec({1, 0});
    EXPECT_EQ(affine_forward(x, W, b).data, (std::vector<double>{0, -1}));
}

TEST(Affine, ShapeMismatchNamesBothShapes) {
    Tensor x = Tensor::vec({1, 2, 3});
    Tensor W = Tensor::zeros({2, 2});
    Tensor b = Tensor::vec({0, 0});
    try {
        affine_forward(x, W, b);
        FAIL() << "expected dimension_error";
    } catch (const dimension_error& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("(2x2)"), std::string::npos) << msg;
        EXPECT_NE(msg.find("(3)"), std::string::npos) << msg;
    }
}

TEST(Conv2d, IdentityKernel) {
    Rng rng(7);
    Tensor input = random_tensor({2, 5, 6}, rng);
    Tensor kernels = Tensor::zeros({2, 2, 1, 1});
    kernels.data[0 * 2 + 0] = 1.0;  // k0 reads c0
    kernels.data[1 * 2 + 1] = 1.0;  // k1 reads c1
    Tensor out = conv2d_forward(input, kernels, 1);
    EXPECT_EQ(out.shape, input.shape);
    EXPECT_EQ(out.data, input.data);
}

TEST(Conv2d, ZeroKernels) {
    Rng rng(8);
    Tensor input = random_tensor({1, 4, 4}, rng);
    Tensor kernels = Tensor::zeros({3, 1, 2, 2});
    Tensor out = conv2d_forward(input, kernels, 1);
    for (double v : out.data) EXPECT_EQ(v, 0.0);
}

TEST(Conv2d, WindowSums) {
    Tensor input = Tensor::zeros({1, 4, 4});
    for (std::size_t i = 0; i < 16; ++i) input.data[i] = static_cast<double>(i + 1);
    Tensor kernels({1, 1, 3, 3}, std::vector<double>(9, 1.0));
    Tensor out = conv2d_forward(input, kernels, 1);
    EXPECT_EQ(out.shape, (std::vector<std::size_t>{1, 2, 2}));
    EXPECT_EQ(out.data, (std::vector<double>{54, 63, 90, 99}));
    EXPECT_EQ(conv_reference(input, kernels, 1).data, out.data);
}

TEST(Conv2d, MatchesReferenceOnRandomShapes) {
    Rng rng(99);
    for (int iter = 0; iter < 20; ++iter) {
        const std::size_t C = 1 + rng.index(3), K = 1 + rng.index(3);
        const std::size_t H = 3 + rng.index(5), W = 3 + rng.index(5);
        const std::size_t k = 1 + rng.index(3), stride = 1 + rng.index(2);
        if (k > H || k > W) continue;
        Tensor input = random_tensor({C, H, W}, rng);
        Tensor kernels = random_tensor({K, C, k, k}, rng);
        Tensor a = conv2d_forward(input, kernels, stride);
        Tensor b = conv_reference(input, kernels, stride);
        ASSERT_EQ(a.data, b.data);
    }
}

TEST(Conv2d, KernelLargerThanInputThrows) {
    Tensor input = Tensor::zeros({1, 2, 2});
    Tensor kernels = Tensor::zeros({1, 1, 3, 3});
    EXPECT_THROW(conv2d_forward(input, kernels, 1), dimension_error);
}

TEST(Conv2dBackward, ZeroUpstream) {
    Rng rng(3);
    Tensor input = random_tensor({1, 4, 4}, rng);
    Tensor kernels = random_tensor({2, 1, 2, 2}, rng);
    Tensor upstream = Tensor::zeros({2, 3, 3});
    ConvGrads g = conv2d_backward(input, kernels, upstream, 1);
    for (double v : g.grad_input.data) EXPECT_EQ(v, 0.0);
    for (double v : g.grad_kernels.data) EXPECT_EQ(v, 0.0);
}

TEST(Conv2dBackward, ScalarChainRule) {
    Tensor input({1, 1, 1}, {3.0});
    Tensor kernels({1, 1, 1, 1}, {2.0});
    Tensor upstream({1, 1, 1}, {5.0});
    ConvGrads g = conv2d_backward(input, kernels, upstream, 1);
    EXPECT_EQ(g.grad_kernels.data[0], 15.0);  // upstream * input
    EXPECT_EQ(g.grad_input.data[0], 10.0);    // upstream * kernel
}

TEST(Conv2dBackward, MatchesFiniteDifferences) {
    Rng rng(42);
    Tensor input = random_tensor({1, 4, 4}, rng);
    Tensor kernels = random_tensor({2, 1, 3, 3}, rng);
    Tensor target = random_tensor({2, 2, 2}, rng);
    auto loss_of = [&](const Tensor& in, const Tensor& ker) {
        Tensor out = conv2d_forward(in, ker, 1);
        double l = 0.0;
        for (std::size_t i = 0; i < out.data.size(); ++i) {
            const double d = out.data[i] - target.data[i];
            l += d * d;
        }
        return l;
    };
    Tensor out = conv2d_forward(input, kernels, 1);
    Tensor upstream = Tensor::zeros(out.shape);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        upstream.data[i] = 2.0 * (out.data[i] - target.data[i]);
    }
    ConvGrads g = conv2d_backward(input, kernels, upstream, 1);
    GradCheckReport rk = finite_diff_check([&](const Tensor& k) { return loss_of(input, k); },
                                           kernels, g.grad_kernels, 1e-5);
    EXPECT_LT(rk.max_relative_error, 1e-6);
    GradCheckReport ri = finite_diff_check([&](const Tensor& in) { return loss_of(in, kernels); },
                                           input, g.grad_input, 1e-5);
    EXPECT_LT(ri.max_relative_error, 1e-6);
}

// The transpose op must be the exact adjoint of conv2d_forward:
// <conv(x), y> == <x, conv_transpose(y)> for all x, y.
TEST(ConvTranspose, AdjointIdentity) {
    Rng rng(17);
    Tensor input = random_tensor({2, 6, 7}, rng);
    Tensor kernels = random_tensor({3, 2, 3, 3}, rng);
    const std::size_t stride = 2;
    Tensor fwd = conv2d_forward(input, kernels, stride);
    Tensor cotangent = random_tensor(fwd.shape, rng);
    Tensor back = conv2d_transpose_forward(cotangent, kernels, stride, 6, 7);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < fwd.data.size(); ++i) lhs += fwd.data[i] * cotangent.data[i];
    for (std::size_t i = 0; i < input.data.size(); ++i) rhs += input.data[i] * back.data[i];
    EXPECT_NEAR(lhs, rhs, 1e-10);
}

TEST(ConvTranspose, BackwardMatchesFiniteDifferences) {
    Rng rng(18);
    Tensor input = random_tensor({2, 3, 3}, rng);
    Tensor kernels = random_tensor({2, 1, 3, 3}, rng);
    const std::size_t stride = 2, oh = 7, ow = 7;
    Tensor target = random_tensor({1, oh, ow}, rng);
    auto loss_of = [&](const Tensor& in, const Tensor& ker) {
        Tensor out = conv2d_transpose_forward(in, ker, stride, oh, ow);
        double l = 0.0;
        for (std::size_t i = 0; i < out.data.size(); ++i) {
            const double d = out.data[i] - target.data[i];
            l += d * d;
        }
        return l;
    };
    Tensor out = conv2d_transpose_forward(input, kernels, stride, oh, ow);
    Tensor upstream = Tensor::zeros(out.shape);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        upstream.data[i] = 2.0 * (out.data[i] - target.data[i]);
    }
    ConvGrads g = conv2d_transpose_backward(input, kernels, upstream, stride);
    GradCheckReport rk = finite_diff_check([&](const Tensor& k) { return loss_of(input, k); },
                                           kernels, g.grad_kernels, 1e-5);
    EXPECT_LT(rk.max_relative_error, 1e-6);
    GradCheckReport ri = finite_diff_check([&](const Tensor& in) { return loss_of(in, kernels); },
                                           input, g.grad_input, 1e-5);
    EXPECT_LT(ri.max_relative_error, 1e-6);
}

TEST(Activations, KnownValues) {
    Tensor x = Tensor::vec({0.0});
    EXPECT_EQ(tanh_act(x).data[0], 0.0);
    EXPECT_EQ(sigmoid_act(x).data[0], 0.5);
}

TEST(Activations, TanhDerivativeByFiniteDifferences) {
    const double x0 = 0.3, eps = 1e-6;
    const double fd = (std::tanh(x0 + eps) - std::tanh(x0 - eps)) / (2 * eps);
    const double analytic = 1.0 - std::tanh(x0) * std::tanh(x0);
    EXPECT_NEAR(fd, analytic, 1e-9);
}

TEST(Activations, Ranges) {
    Rng rng(5);
    Tensor x = random_tensor({100}, rng, -20.0, 20.0);
    Tensor t = tanh_act(x), s = sigmoid_act(x);
    for (double v : t.data) {
        EXPECT_GT(v, -1.0);
        EXPECT_LT(v, 1.0);
    }
    for (double v : s.data) {
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
}

TEST(Sgd, ZeroGradIsNoop) {
    Tensor p = Tensor::vec({1, 2, 3});
    Tensor g = Tensor::zeros({3});
    EXPECT_EQ(sgd_step(p, g, 0.5).data, p.data);
}

TEST(Sgd, Arithmetic) {
    Tensor p = Tensor::vec({1});
    Tensor g = Tensor::vec({2});
    EXPECT_EQ(sgd_step(p, g, 0.1).data[0], 0.8);
}

TEST(Sgd, TwoStepsOnQuadratic) {
    // f(w) = w^2, grad = 2w, alpha = 0.1, from w = 1: 0.8 then 0.64.
    Tensor w = Tensor::vec({1});
    for (int i = 0; i < 2; ++i) {
        Tensor g = Tensor::vec({2 * w.data[0]});
        w = sgd_step(w, g, 0.1);
    }
    EXPECT_NEAR(w.data[0], 0.64, 1e-15);
}

TEST(Sgd, NonFiniteGradientThrowsWithIteration) {
    Tensor p = Tensor::vec({1});
    Tensor g = Tensor::vec({std::nan("")});
    try {
        sgd_step(p, g, 0.1, 37);
        FAIL() << "expected training_error";
    } catch (const training_error& e) {
        EXPECT_EQ(e.iteration(), 37u);
        EXPECT_NE(std::string(e.what()).find("37"), std::string::npos);
    }
}

TEST(GradCheck, QuadraticLoss) {
    Rng rng(11);
    Tensor p = random_tensor({10}, rng);
    auto loss = [](const Tensor& t) {
        double l = 0.0;
        for (double v : t.data) l += v * v;
        return l;
    };
    Tensor analytic = p;
    for (double& v : analytic.data) v *= 2.0;
    GradCheckReport r = finite_diff_check(loss, p, analytic, 1e-5);
    EXPECT_LT(r.max_relative_error, 1e-7);
    EXPECT_EQ(r.per_parameter_errors.size(), 10u);
}

TEST(Determinism, OpsAreBitStable) {
    Rng rng(23);
    Tensor input = random_tensor({2, 6, 6}, rng);
    Tensor kernels = random_tensor({2, 2, 3, 3}, rng);
    Tensor a = conv2d_forward(input, kernels, 1);
    Tensor b = conv2d_forward(input, kernels, 1);
    EXPECT_EQ(a.data, b.data);
}

TEST(Random, DeriveSeedIsStableAndLabelSensitive) {
    const std::uint64_t root = 1234;
    EXPECT_EQ(derive_seed(root, "a"), derive_seed(root, "a"));
    EXPECT_NE(derive_seed(root, "a"), derive_seed(root, "b"));
    EXPECT_NE(derive_seed(root, "a"), derive_seed(root + 1, "a"));
}
