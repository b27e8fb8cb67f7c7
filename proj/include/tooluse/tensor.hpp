#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "tooluse/errors.hpp"

namespace tooluse {

// Dense row-major tensor of 64-bit floats. All numeric work happens in
// doubles; files narrow to 32-bit on serialization.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> s, std::vector<double> d)
        : shape(std::move(s)), data(std::move(d)) {}

    static Tensor zeros(std::vector<std::size_t> s) {
        std::size_t n = 1;
        for (std::size_t d : s) n *= d;
        return Tensor(std::move(s), std::vector<double>(n, 0.0));
    }

    static Tensor vec(std::initializer_list<double> vals) {
        return Tensor({vals.size()}, std::vector<double>(vals));
    }

    std::size_t numel() const {
        std::size_t n = 1;
        for (std::size_t d : shape) n *= d;
        return n;
    }

    double& at(std::size_t i) { return data[i]; }
    double at(std::size_t i) const { return data[i]; }
};

inline std::string shape_string(const std::vector<std::size_t>& s) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << ")";
    return os.str();
}

inline void require_shape(const Tensor& t, const std::vector<std::size_t>& want,
                          const char* who) {
    if (t.shape != want) {
        throw dimension_error(std::string(who) + ": expected shape " + shape_string(want) +
                              ", got " + shape_string(t.shape));
    }
}

// out[i] = sum_j W[i][j] * x[j] + b[i]
inline Tensor affine_forward(const Tensor& x, const Tensor& W, const Tensor& b) {
    if (W.shape.size() != 2 || x.shape.size() != 1 || b.shape.size() != 1 ||
        W.shape[1] != x.shape[0] || W.shape[0] != b.shape[0]) {
        throw dimension_error("affine_forward: W " + shape_string(W.shape) + " incompatible with x " +
                              shape_string(x.shape) + " and b " + shape_string(b.shape));
    }
    const std::size_t rows = W.shape[0], cols = W.shape[1];
    Tensor out = Tensor::zeros({rows});
    for (std::size_t i = 0; i < rows; ++i) {
        double acc = 0.0;
        const double* wrow = &W.data[i * cols];
        for (std::size_t j = 0; j < cols; ++j) acc += wrow[j] * x.data[j];
        out.data[i] = acc + b.data[i];
    }
    return out;
}

struct AffineGrads {
    Tensor grad_x;
    Tensor grad_W;
    Tensor grad_b;
};

inline AffineGrads affine_backward(const Tensor& x, const Tensor& W, const Tensor& upstream) {
    if (W.shape.size() != 2 || upstream.shape != std::vector<std::size_t>{W.shape[0]} ||
        x.shape != std::vector<std::size_t>{W.shape[1]}) {
        throw dimension_error("affine_backward: W " + shape_string(W.shape) + " incompatible with x " +
                              shape_string(x.shape) + " and upstream " + shape_string(upstream.shape));
    }
    const std::size_t rows = W.shape[0], cols = W.shape[1];
    AffineGrads g{Tensor::zeros({cols}), Tensor::zeros({rows, cols}), upstream};
    for (std::size_t i = 0; i < rows; ++i) {
        const double gi = upstream.data[i];
        const double* wrow = &W.data[i * cols];
        double* gwrow = &g.grad_W.data[i * cols];
        for (std::size_t j = 0; j < cols; ++j) {
            g.grad_x.data[j] += gi * wrow[j];
            gwrow[j] = gi * x.data[j];
        }
    }
    return g;
}

inline void check_conv_shapes(const Tensor& input, const Tensor& kernels, std::size_t stride,
                              const char* who) {
    if (input.shape.size() != 3 || kernels.shape.size() != 4) {
        throw dimension_error(std::string(who) + ": input " + shape_string(input.shape) +
                              " must be CxHxW and kernels " + shape_string(kernels.shape) +
                              " must be KxCxKHxKW");
    }
    if (stride == 0) throw dimension_error(std::string(who) + ": stride must be positive");
    if (kernels.shape[1] != input.shape[0]) {
        throw dimension_error(std::string(who) + ": kernel channels " + shape_string(kernels.shape) +
                              " do not match input " + shape_string(input.shape));
    }
    if (kernels.shape[2] > input.shape[1] || kernels.shape[3] > input.shape[2]) {
        throw dimension_error(std::string(who) + ": kernel " + shape_string(kernels.shape) +
                              " larger than input " + shape_string(input.shape));
    }
}

// Valid (unpadded) cross-correlation. H' = (H-kh)/stride + 1.
inline Tensor conv2d_forward(const Tensor& input, const Tensor& kernels, std::size_t stride) {
    check_conv_shapes(input, kernels, stride, "conv2d_forward");
    const std::size_t C = input.shape[0], H = input.shape[1], W = input.shape[2];
    const std::size_t K = kernels.shape[0], kh = kernels.shape[2], kw = kernels.shape[3];
    const std::size_t oh = (H - kh) / stride + 1, ow = (W - kw) / stride + 1;
    Tensor out = Tensor::zeros({K, oh, ow});
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                double acc = 0.0;
                for (std::size_t c = 0; c < C; ++c) {
                    const double* kbase = &kernels.data[((k * C + c) * kh) * kw];
                    const double* ibase = &input.data[(c * H + oy * stride) * W + ox * stride];
                    for (std::size_t dy = 0; dy < kh; ++dy) {
                        const double* krow = kbase + dy * kw;
                        const double* irow = ibase + dy * W;
                        for (std::size_t dx = 0; dx < kw; ++dx) acc += krow[dx] * irow[dx];
                    }
                }
                out.data[(k * oh + oy) * ow + ox] = acc;
            }
        }
    }
    return out;
}

struct ConvGrads {
    Tensor grad_input;
    Tensor grad_kernels;
};

inline ConvGrads conv2d_backward(const Tensor& input, const Tensor& kernels,
                                 const Tensor& upstream, std::size_t stride) {
    check_conv_shapes(input, kernels, stride, "conv2d_backward");
    const std::size_t C = input.shape[0], H = input.shape[1], W = input.shape[2];
    const std::size_t K = kernels.shape[0], kh = kernels.shape[2], kw = kernels.shape[3];
    const std::size_t oh = (H - kh) / stride + 1, ow = (W - kw) / stride + 1;
    require_shape(upstream, {K, oh, ow}, "conv2d_backward upstream");
    ConvGrads g{Tensor::zeros(input.shape), Tensor::zeros(kernels.shape)};
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                const double go = upstream.data[(k * oh + oy) * ow + ox];
                if (go == 0.0) continue;
                for (std::size_t c = 0; c < C; ++c) {
                    const double* kbase = &kernels.data[((k * C + c) * kh) * kw];
                    double* gkbase = &g.grad_kernels.data[((k * C + c) * kh) * kw];
                    const double* ibase = &input.data[(c * H + oy * stride) * W + ox * stride];
                    double* gibase = &g.grad_input.data[(c * H + oy * stride) * W + ox * stride];
                    for (std::size_t dy = 0; dy < kh; ++dy) {
                        for (std::size_t dx = 0; dx < kw; ++dx) {
                            gkbase[dy * kw + dx] += go * ibase[dy * W + dx];
                            gibase[dy * W + dx] += go * kbase[dy * kw + dx];
                        }
                    }
                }
            }
        }
    }
    return g;
}

// Adjoint of conv2d_forward: maps a KxH'xW' feature map back to CxHxW image
// space. Output positions never read by the forward pass stay zero.
inline Tensor conv2d_transpose_forward(const Tensor& input, const Tensor& kernels,
                                       std::size_t stride, std::size_t out_h, std::size_t out_w) {
    if (input.shape.size() != 3 || kernels.shape.size() != 4 || kernels.shape[0] != input.shape[0]) {
        throw dimension_error("conv2d_transpose_forward: input " + shape_string(input.shape) +
                              " incompatible with kernels " + shape_string(kernels.shape));
    }
    const std::size_t K = input.shape[0], ih = input.shape[1], iw = input.shape[2];
    const std::size_t C = kernels.shape[1], kh = kernels.shape[2], kw = kernels.shape[3];
    if ((ih - 1) * stride + kh > out_h || (iw - 1) * stride + kw > out_w) {
        throw dimension_error("conv2d_transpose_forward: kernels " + shape_string(kernels.shape) +
                              " overflow requested output " + shape_string({C, out_h, out_w}));
    }
    Tensor out = Tensor::zeros({C, out_h, out_w});
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t oy = 0; oy < ih; ++oy) {
            for (std::size_t ox = 0; ox < iw; ++ox) {
                const double v = input.data[(k * ih + oy) * iw + ox];
                if (v == 0.0) continue;
                for (std::size_t c = 0; c < C; ++c) {
                    const double* kbase = &kernels.data[((k * C + c) * kh) * kw];
                    double* obase = &out.data[(c * out_h + oy * stride) * out_w + ox * stride];
                    for (std::size_t dy = 0; dy < kh; ++dy) {
                        for (std::size_t dx = 0; dx < kw; ++dx) {
                            obase[dy * out_w + dx] += v * kbase[dy * kw + dx];
                        }
                    }
                }
            }
        }
    }
    return out;
}

inline ConvGrads conv2d_transpose_backward(const Tensor& input, const Tensor& kernels,
                                           const Tensor& upstream, std::size_t stride) {
    const std::size_t K = input.shape[0], ih = input.shape[1], iw = input.shape[2];
    const std::size_t C = kernels.shape[1], kh = kernels.shape[2], kw = kernels.shape[3];
    if (upstream.shape.size() != 3 || upstream.shape[0] != C) {
        throw dimension_error("conv2d_transpose_backward: upstream " + shape_string(upstream.shape) +
                              " incompatible with kernels " + shape_string(kernels.shape));
    }
    const std::size_t out_h = upstream.shape[1], out_w = upstream.shape[2];
    ConvGrads g{Tensor::zeros(input.shape), Tensor::zeros(kernels.shape)};
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t oy = 0; oy < ih; ++oy) {
            for (std::size_t ox = 0; ox < iw; ++ox) {
                double acc = 0.0;
                const double v = input.data[(k * ih + oy) * iw + ox];
                for (std::size_t c = 0; c < C; ++c) {
                    const double* kbase = &kernels.data[((k * C + c) * kh) * kw];
                    double* gkbase = &g.grad_kernels.data[((k * C + c) * kh) * kw];
                    const double* ubase = &upstream.data[(c * out_h + oy * stride) * out_w + ox * stride];
                    for (std::size_t dy = 0; dy < kh; ++dy) {
                        for (std::size_t dx = 0; dx < kw; ++dx) {
                            acc += kbase[dy * kw + dx] * ubase[dy * out_w + dx];
                            gkbase[dy * kw + dx] += v * ubase[dy * out_w + dx];
                        }
                    }
                }
                g.grad_input.data[(k * ih + oy) * iw + ox] = acc;
            }
        }
    }
    return g;
}

inline Tensor tanh_act(const Tensor& x) {
    Tensor out = x;
    for (double& v : out.data) v = std::tanh(v);
    return out;
}

inline Tensor sigmoid_act(const Tensor& x) {
    Tensor out = x;
    for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
    return out;
}

// Backward helpers take the forward *outputs*, not the pre-activations.
inline void tanh_backward_inplace(const std::vector<double>& y, std::vector<double>& upstream) {
    for (std::size_t i = 0; i < y.size(); ++i) upstream[i] *= 1.0 - y[i] * y[i];
}

inline void sigmoid_backward_inplace(const std::vector<double>& y, std::vector<double>& upstream) {
    for (std::size_t i = 0; i < y.size(); ++i) upstream[i] *= y[i] * (1.0 - y[i]);
}

// params' = params - alpha * grads, plain gradient descent.
inline Tensor sgd_step(const Tensor& params, const Tensor& grads, double alpha,
                       std::uint64_t iteration = 0) {
    if (params.shape != grads.shape) {
        throw dimension_error("sgd_step: params " + shape_string(params.shape) +
                              " vs grads " + shape_string(grads.shape));
    }
    Tensor out = params;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        if (!std::isfinite(grads.data[i])) {
            throw training_error("sgd_step: non-finite gradient", iteration);
        }
        out.data[i] -= alpha * grads.data[i];
    }
    return out;
}

// Gradient-descent state for one flat parameter block. momentum = 0 reduces to
// the plain rule above; a nonzero momentum keeps a velocity buffer.
struct GdUpdater {
    double alpha = 1e-3;
    double momentum = 0.0;
    std::vector<double> velocity;

    void step(std::vector<double>& params, const std::vector<double>& grads,
              std::uint64_t iteration) {
        if (params.size() != grads.size()) {
            throw dimension_error("GdUpdater::step: params " + shape_string({params.size()}) +
                                  " vs grads " + shape_string({grads.size()}));
        }
        if (momentum != 0.0 && velocity.size() != params.size()) velocity.assign(params.size(), 0.0);
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double g = grads[i];
            if (!std::isfinite(g)) throw training_error("non-finite gradient", iteration);
            if (momentum != 0.0) {
                velocity[i] = momentum * velocity[i] + g;
                params[i] -= alpha * velocity[i];
            } else {
                params[i] -= alpha * g;
            }
        }
    }
};

}  // namespace tooluse
