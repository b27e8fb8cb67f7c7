#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "tooluse/errors.hpp"
#include "tooluse/random.hpp"
#include "tooluse/serialize.hpp"
#include "tooluse/tensor.hpp"
#include "tooluse/threading.hpp"

namespace tooluse {

struct ConvLayerSpec {
    std::size_t kernels = 0;
    std::size_t ksize = 0;
    std::size_t stride = 1;
};

enum class Activation : std::uint8_t { Tanh = 0, Sigmoid = 1 };

// Hourglass geometry: conv stack, then fully connected layers narrowing to
// feature_dim; the decoder mirrors every stage back out to the image shape.
struct CaeConfig {
    std::size_t image_width = 32;
    std::size_t image_height = 24;
    std::size_t channels = 3;
    std::size_t feature_dim = 20;
    std::vector<ConvLayerSpec> conv_layers = {{16, 5, 2}, {32, 5, 2}};
    std::vector<std::size_t> fc_layers = {120};  // hidden widths before the bottleneck
    Activation hidden_activation = Activation::Tanh;
    Activation output_activation = Activation::Sigmoid;

    struct StageShape {
        std::size_t c, h, w;
    };

    // Shapes entering each conv layer, plus the final conv output.
    std::vector<StageShape> conv_chain() const {
        std::vector<StageShape> chain;
        StageShape s{channels, image_height, image_width};
        chain.push_back(s);
        for (const ConvLayerSpec& l : conv_layers) {
            if (l.ksize > s.h || l.ksize > s.w) {
                throw dimension_error("CaeConfig: kernel " + std::to_string(l.ksize) +
                                      " larger than stage input " + shape_string({s.c, s.h, s.w}));
            }
            if (l.stride == 0 || l.kernels == 0) {
                throw dimension_error("CaeConfig: conv layer needs kernels >= 1 and stride >= 1");
            }
            s = {l.kernels, (s.h - l.ksize) / l.stride + 1, (s.w - l.ksize) / l.stride + 1};
            chain.push_back(s);
        }
        return chain;
    }

    std::size_t flat_size() const {
        const StageShape s = conv_chain().back();
        return s.c * s.h * s.w;
    }

    // Encoder fully connected widths: flat -> fc_layers... -> feature_dim.
    std::vector<std::size_t> fc_chain() const {
        std::vector<std::size_t> widths;
        widths.push_back(flat_size());
        for (std::size_t w : fc_layers) widths.push_back(w);
        widths.push_back(feature_dim);
        return widths;
    }

    void validate() const {
        if (feature_dim < 1) throw dimension_error("CaeConfig: feature_dim must be >= 1");
        if (image_width < 1 || image_height < 1 || channels < 1) {
            throw dimension_error("CaeConfig: image dims must be >= 1");
        }
        for (std::size_t w : fc_layers) {
            if (w < 1) throw dimension_error("CaeConfig: fc width must be >= 1");
        }
        (void)conv_chain();
    }
};

// Parameter declaration order fixes the model-file layout:
// encoder conv (kernels, bias) per layer, encoder fc (W, b) per layer,
// decoder fc (W, b) per layer, decoder conv (kernels, bias) per layer.
struct CaeParams {
    CaeConfig config;
    std::vector<Tensor> enc_kernels;
    std::vector<Tensor> enc_conv_bias;  // one bias per output channel
    std::vector<Tensor> enc_fc_W;
    std::vector<Tensor> enc_fc_b;
    std::vector<Tensor> dec_fc_W;
    std::vector<Tensor> dec_fc_b;
    std::vector<Tensor> dec_kernels;    // layer i mirrors encoder layer (L-1-i)
    std::vector<Tensor> dec_conv_bias;
    std::uint64_t iterations_trained = 0;

    std::vector<Tensor*> all_tensors() {
        std::vector<Tensor*> out;
        auto add = [&](std::vector<Tensor>& v) {
            for (Tensor& t : v) out.push_back(&t);
        };
        add(enc_kernels);
        add(enc_conv_bias);
        add(enc_fc_W);
        add(enc_fc_b);
        add(dec_fc_W);
        add(dec_fc_b);
        add(dec_kernels);
        add(dec_conv_bias);
        return out;
    }

    std::vector<const Tensor*> all_tensors() const {
        auto ptrs = const_cast<CaeParams*>(this)->all_tensors();
        return std::vector<const Tensor*>(ptrs.begin(), ptrs.end());
    }
};

inline CaeParams init_cae_params(const CaeConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    CaeParams p;
    p.config = cfg;
    Rng rng(seed);
    const auto chain = cfg.conv_chain();
    for (std::size_t i = 0; i < cfg.conv_layers.size(); ++i) {
        const ConvLayerSpec& l = cfg.conv_layers[i];
        const std::size_t in_c = chain[i].c;
        Tensor k = Tensor::zeros({l.kernels, in_c, l.ksize, l.ksize});
        init_uniform_scaled(k, in_c * l.ksize * l.ksize, rng);
        p.enc_kernels.push_back(std::move(k));
        p.enc_conv_bias.push_back(Tensor::zeros({l.kernels}));
    }
    const auto fc = cfg.fc_chain();
    for (std::size_t i = 0; i + 1 < fc.size(); ++i) {
        Tensor W = Tensor::zeros({fc[i + 1], fc[i]});
        init_uniform_scaled(W, fc[i], rng);
        p.enc_fc_W.push_back(std::move(W));
        p.enc_fc_b.push_back(Tensor::zeros({fc[i + 1]}));
    }
    for (std::size_t i = fc.size() - 1; i >= 1; --i) {
        Tensor W = Tensor::zeros({fc[i - 1], fc[i]});
        init_uniform_scaled(W, fc[i], rng);
        p.dec_fc_W.push_back(std::move(W));
        p.dec_fc_b.push_back(Tensor::zeros({fc[i - 1]}));
    }
    for (std::size_t i = cfg.conv_layers.size(); i >= 1; --i) {
        const ConvLayerSpec& l = cfg.conv_layers[i - 1];
        const std::size_t out_c = chain[i - 1].c;
        Tensor k = Tensor::zeros({l.kernels, out_c, l.ksize, l.ksize});
        init_uniform_scaled(k, l.kernels * l.ksize * l.ksize, rng);
        p.dec_kernels.push_back(std::move(k));
        p.dec_conv_bias.push_back(Tensor::zeros({out_c}));
    }
    return p;
}

namespace detail {

inline void apply_activation(Tensor& t, Activation a) {
    if (a == Activation::Tanh) {
        for (double& v : t.data) v = std::tanh(v);
    } else {
        for (double& v : t.data) v = 1.0 / (1.0 + std::exp(-v));
    }
}

inline void activation_backward(const Tensor& y, Activation a, Tensor& upstream) {
    if (a == Activation::Tanh) {
        for (std::size_t i = 0; i < y.data.size(); ++i) {
            upstream.data[i] *= 1.0 - y.data[i] * y.data[i];
        }
    } else {
        for (std::size_t i = 0; i < y.data.size(); ++i) {
            upstream.data[i] *= y.data[i] * (1.0 - y.data[i]);
        }
    }
}

inline void add_channel_bias(Tensor& t, const Tensor& bias) {
    const std::size_t C = t.shape[0], plane = t.shape[1] * t.shape[2];
    for (std::size_t c = 0; c < C; ++c) {
        const double b = bias.data[c];
        double* base = &t.data[c * plane];
        for (std::size_t i = 0; i < plane; ++i) base[i] += b;
    }
}

// Every intermediate activation, kept for the backward pass.
struct CaeTrace {
    std::vector<Tensor> enc_conv_out;  // post-activation, per conv layer
    std::vector<Tensor> enc_fc_out;    // post-activation, per fc layer (last = feature)
    std::vector<Tensor> dec_fc_out;
    std::vector<Tensor> dec_conv_out;  // last = reconstruction
};

inline Tensor cae_forward(const Tensor& image, const CaeParams& p, CaeTrace* trace) {
    const CaeConfig& cfg = p.config;
    const auto chain = cfg.conv_chain();
    require_shape(image, {cfg.channels, cfg.image_height, cfg.image_width}, "cae encode input");
    Tensor cur = image;
    for (std::size_t i = 0; i < p.enc_kernels.size(); ++i) {
        Tensor z = conv2d_forward(cur, p.enc_kernels[i], cfg.conv_layers[i].stride);
        add_channel_bias(z, p.enc_conv_bias[i]);
        apply_activation(z, cfg.hidden_activation);
        if (trace) trace->enc_conv_out.push_back(z);
        cur = std::move(z);
    }
    cur.shape = {cur.numel()};
    for (std::size_t i = 0; i < p.enc_fc_W.size(); ++i) {
        Tensor z = affine_forward(cur, p.enc_fc_W[i], p.enc_fc_b[i]);
        apply_activation(z, cfg.hidden_activation);
        if (trace) trace->enc_fc_out.push_back(z);
        cur = std::move(z);
    }
    const bool fc_only = p.dec_kernels.empty();
    for (std::size_t i = 0; i < p.dec_fc_W.size(); ++i) {
        Tensor z = affine_forward(cur, p.dec_fc_W[i], p.dec_fc_b[i]);
        apply_activation(z, (fc_only && i + 1 == p.dec_fc_W.size()) ? cfg.output_activation
                                                                    : cfg.hidden_activation);
        if (trace) trace->dec_fc_out.push_back(z);
        cur = std::move(z);
    }
    const std::size_t L = p.dec_kernels.size();
    CaeConfig::StageShape fs = chain[L];
    cur.shape = {fs.c, fs.h, fs.w};
    for (std::size_t i = 0; i < L; ++i) {
        const std::size_t enc_layer = L - 1 - i;
        const CaeConfig::StageShape& target = chain[enc_layer];
        Tensor z = conv2d_transpose_forward(cur, p.dec_kernels[i], cfg.conv_layers[enc_layer].stride,
                                            target.h, target.w);
        add_channel_bias(z, p.dec_conv_bias[i]);
        apply_activation(z, i + 1 == L ? cfg.output_activation : cfg.hidden_activation);
        if (trace) trace->dec_conv_out.push_back(z);
        cur = std::move(z);
    }
    return cur;
}

}  // namespace detail

// Raw bottleneck activations (tanh range) for one [0,1]-normalized image.
inline std::vector<double> encode(const Tensor& image, const CaeParams& p) {
    const CaeConfig& cfg = p.config;
    require_shape(image, {cfg.channels, cfg.image_height, cfg.image_width}, "encode input");
    Tensor cur = image;
    for (std::size_t i = 0; i < p.enc_kernels.size(); ++i) {
        Tensor z = conv2d_forward(cur, p.enc_kernels[i], cfg.conv_layers[i].stride);
        detail::add_channel_bias(z, p.enc_conv_bias[i]);
        detail::apply_activation(z, cfg.hidden_activation);
        cur = std::move(z);
    }
    cur.shape = {cur.numel()};
    for (std::size_t i = 0; i < p.enc_fc_W.size(); ++i) {
        Tensor z = affine_forward(cur, p.enc_fc_W[i], p.enc_fc_b[i]);
        detail::apply_activation(z, cfg.hidden_activation);
        cur = std::move(z);
    }
    return cur.data;
}

inline Tensor decode(const std::vector<double>& feature, const CaeParams& p) {
    const CaeConfig& cfg = p.config;
    if (feature.size() != cfg.feature_dim) {
        throw dimension_error("decode: feature " + shape_string({feature.size()}) +
                              " vs feature_dim " + shape_string({cfg.feature_dim}));
    }
    const auto chain = cfg.conv_chain();
    Tensor cur({feature.size()}, feature);
    const bool fc_only = p.dec_kernels.empty();
    for (std::size_t i = 0; i < p.dec_fc_W.size(); ++i) {
        Tensor z = affine_forward(cur, p.dec_fc_W[i], p.dec_fc_b[i]);
        detail::apply_activation(z, (fc_only && i + 1 == p.dec_fc_W.size())
                                        ? cfg.output_activation
                                        : cfg.hidden_activation);
        cur = std::move(z);
    }
    const std::size_t L = p.dec_kernels.size();
    CaeConfig::StageShape fs = chain[L];
    cur.shape = {fs.c, fs.h, fs.w};
    for (std::size_t i = 0; i < L; ++i) {
        const std::size_t enc_layer = L - 1 - i;
        const CaeConfig::StageShape& target = chain[enc_layer];
        Tensor z = conv2d_transpose_forward(cur, p.dec_kernels[i], cfg.conv_layers[enc_layer].stride,
                                            target.h, target.w);
        detail::add_channel_bias(z, p.dec_conv_bias[i]);
        detail::apply_activation(z, i + 1 == L ? cfg.output_activation : cfg.hidden_activation);
        cur = std::move(z);
    }
    return cur;
}

namespace detail {

// Per-image gradient of the mean squared reconstruction error. Returns the
// MSE; gradients are accumulated into `grads` (same layout as params).
inline double cae_backward(const Tensor& image, const CaeParams& p, std::vector<Tensor>& grads) {
    const CaeConfig& cfg = p.config;
    const auto chain = cfg.conv_chain();
    CaeTrace tr;
    Tensor recon = cae_forward(image, p, &tr);
    const double inv_n = 1.0 / static_cast<double>(recon.data.size());
    double mse = 0.0;
    Tensor up = Tensor::zeros(recon.shape);
    for (std::size_t i = 0; i < recon.data.size(); ++i) {
        const double d = recon.data[i] - image.data[i];
        mse += d * d;
        up.data[i] = 2.0 * d * inv_n;
    }
    mse *= inv_n;

    // Gradient slots mirror CaeParams::all_tensors() order.
    std::size_t gi = 0;
    const std::size_t n_conv = p.enc_kernels.size();
    const std::size_t n_fc = p.enc_fc_W.size();
    Tensor* g_enc_k = &grads[gi];
    gi += n_conv;
    Tensor* g_enc_cb = &grads[gi];
    gi += n_conv;
    Tensor* g_enc_W = &grads[gi];
    gi += n_fc;
    Tensor* g_enc_b = &grads[gi];
    gi += n_fc;
    Tensor* g_dec_W = &grads[gi];
    gi += n_fc;
    Tensor* g_dec_b = &grads[gi];
    gi += n_fc;
    Tensor* g_dec_k = &grads[gi];
    gi += n_conv;
    Tensor* g_dec_cb = &grads[gi];

    // Decoder conv stack, in reverse.
    for (std::size_t i = n_conv; i-- > 0;) {
        const std::size_t enc_layer = n_conv - 1 - i;
        const Tensor& y = tr.dec_conv_out[i];
        activation_backward(y, i + 1 == n_conv ? cfg.output_activation : cfg.hidden_activation, up);
        const std::size_t C = y.shape[0], plane = y.shape[1] * y.shape[2];
        for (std::size_t c = 0; c < C; ++c) {
            double acc = 0.0;
            const double* base = &up.data[c * plane];
            for (std::size_t k = 0; k < plane; ++k) acc += base[k];
            g_dec_cb[i].data[c] += acc;
        }
        Tensor reshaped;
        const Tensor* input = nullptr;
        if (i == 0) {
            reshaped = Tensor({chain[n_conv].c, chain[n_conv].h, chain[n_conv].w},
                              tr.dec_fc_out.back().data);
            input = &reshaped;
        } else {
            input = &tr.dec_conv_out[i - 1];
        }
        ConvGrads cg = conv2d_transpose_backward(*input, p.dec_kernels[i], up,
                                                 cfg.conv_layers[enc_layer].stride);
        for (std::size_t k = 0; k < cg.grad_kernels.data.size(); ++k) {
            g_dec_k[i].data[k] += cg.grad_kernels.data[k];
        }
        up = std::move(cg.grad_input);
    }
    up.shape = {up.numel()};

    // Decoder fc stack, in reverse.
    for (std::size_t i = n_fc; i-- > 0;) {
        const Tensor& y = tr.dec_fc_out[i];
        activation_backward(y, (n_conv == 0 && i + 1 == n_fc) ? cfg.output_activation
                                                              : cfg.hidden_activation,
                            up);
        const Tensor& input = (i == 0) ? tr.enc_fc_out.back() : tr.dec_fc_out[i - 1];
        AffineGrads ag = affine_backward(input, p.dec_fc_W[i], up);
        for (std::size_t k = 0; k < ag.grad_W.data.size(); ++k) g_dec_W[i].data[k] += ag.grad_W.data[k];
        for (std::size_t k = 0; k < ag.grad_b.data.size(); ++k) g_dec_b[i].data[k] += ag.grad_b.data[k];
        up = std::move(ag.grad_x);
    }

    // Encoder fc stack.
    for (std::size_t i = n_fc; i-- > 0;) {
        const Tensor& y = tr.enc_fc_out[i];
        activation_backward(y, cfg.hidden_activation, up);
        Tensor input;
        if (i == 0) {
            input = Tensor({tr.enc_conv_out.back().numel()}, tr.enc_conv_out.back().data);
        } else {
            input = tr.enc_fc_out[i - 1];
        }
        AffineGrads ag = affine_backward(input, p.enc_fc_W[i], up);
        for (std::size_t k = 0; k < ag.grad_W.data.size(); ++k) g_enc_W[i].data[k] += ag.grad_W.data[k];
        for (std::size_t k = 0; k < ag.grad_b.data.size(); ++k) g_enc_b[i].data[k] += ag.grad_b.data[k];
        up = std::move(ag.grad_x);
    }

    // Encoder conv stack.
    for (std::size_t i = n_conv; i-- > 0;) {
        const Tensor& y = tr.enc_conv_out[i];
        up.shape = y.shape;
        activation_backward(y, cfg.hidden_activation, up);
        const std::size_t C = y.shape[0], plane = y.shape[1] * y.shape[2];
        for (std::size_t c = 0; c < C; ++c) {
            double acc = 0.0;
            const double* base = &up.data[c * plane];
            for (std::size_t k = 0; k < plane; ++k) acc += base[k];
            g_enc_cb[i].data[c] += acc;
        }
        const Tensor& input = (i == 0) ? image : tr.enc_conv_out[i - 1];
        ConvGrads cg = conv2d_backward(input, p.enc_kernels[i], up, cfg.conv_layers[i].stride);
        for (std::size_t k = 0; k < cg.grad_kernels.data.size(); ++k) {
            g_enc_k[i].data[k] += cg.grad_kernels.data[k];
        }
        up = std::move(cg.grad_input);
    }
    return mse;
}

inline std::vector<Tensor> zero_like_params(CaeParams& p) {
    std::vector<Tensor> grads;
    for (Tensor* t : p.all_tensors()) grads.push_back(Tensor::zeros(t->shape));
    return grads;
}

}  // namespace detail

struct CaeTrainConfig {
    std::uint64_t iterations = 1;
    double alpha = 0.02;
    double momentum = 0.0;
    std::size_t batch_size = 0;  // 0 = full batch
    std::uint64_t seed = 1;
    std::size_t threads = 1;

    void validate() const {
        if (iterations < 1) throw dimension_error("CaeTrainConfig: iterations must be >= 1");
        if (alpha <= 0.0) throw dimension_error("CaeTrainConfig: alpha must be > 0");
    }
};

struct CaeTrainResult {
    CaeParams params;
    std::vector<double> loss_curve;  // batch-mean reconstruction MSE per iteration
};

inline double reconstruction_mse(const std::vector<Tensor>& images, const CaeParams& p,
                                 std::size_t threads = 1) {
    std::vector<double> per_image(images.size(), 0.0);
    parallel_for(images.size(), threads, [&](std::size_t i) {
        Tensor recon = detail::cae_forward(images[i], p, nullptr);
        double mse = 0.0;
        for (std::size_t k = 0; k < recon.data.size(); ++k) {
            const double d = recon.data[k] - images[i].data[k];
            mse += d * d;
        }
        per_image[i] = mse / static_cast<double>(recon.data.size());
    });
    double total = 0.0;
    for (double v : per_image) total += v;
    return total / static_cast<double>(images.empty() ? 1 : images.size());
}

// Minibatch gradient descent on mean squared reconstruction error. Batches
// are drawn from a seeded stream, and per-image gradients are reduced in
// batch order, so results are bit-identical at any thread count.
inline CaeTrainResult train_cae(const std::vector<Tensor>& images, const CaeConfig& cfg,
                                const CaeTrainConfig& tc) {
    cfg.validate();
    tc.validate();
    if (images.empty()) throw dimension_error("train_cae: need at least one image");
    for (const Tensor& img : images) {
        require_shape(img, {cfg.channels, cfg.image_height, cfg.image_width}, "train_cae image");
    }
    CaeTrainResult out;
    out.params = init_cae_params(cfg, derive_seed(tc.seed, "cae-init"));
    out.loss_curve.reserve(tc.iterations);
    Rng batch_rng(derive_seed(tc.seed, "cae-batches"));
    const std::size_t batch = (tc.batch_size == 0 || tc.batch_size > images.size())
                                  ? images.size()
                                  : tc.batch_size;
    std::vector<Tensor*> param_ptrs = out.params.all_tensors();
    std::vector<GdUpdater> updaters(param_ptrs.size());
    for (auto& u : updaters) {
        u.alpha = tc.alpha;
        u.momentum = tc.momentum;
    }
    std::vector<std::vector<Tensor>> item_grads(batch);
    std::vector<double> item_mse(batch, 0.0);
    std::vector<std::size_t> indices(batch);
    for (std::uint64_t it = 0; it < tc.iterations; ++it) {
        if (batch == images.size()) {
            for (std::size_t b = 0; b < batch; ++b) indices[b] = b;
        } else {
            for (std::size_t b = 0; b < batch; ++b) indices[b] = batch_rng.index(images.size());
        }
        parallel_for(batch, tc.threads, [&](std::size_t b) {
            if (item_grads[b].empty()) item_grads[b] = detail::zero_like_params(out.params);
            for (Tensor& g : item_grads[b]) std::fill(g.data.begin(), g.data.end(), 0.0);
            item_mse[b] = detail::cae_backward(images[indices[b]], out.params, item_grads[b]);
        });
        double loss = 0.0;
        for (std::size_t b = 0; b < batch; ++b) loss += item_mse[b];
        loss /= static_cast<double>(batch);
        if (!std::isfinite(loss)) throw training_error("train_cae: loss diverged", it);
        out.loss_curve.push_back(loss);
        const double inv_batch = 1.0 / static_cast<double>(batch);
        for (std::size_t t = 0; t < param_ptrs.size(); ++t) {
            Tensor& g0 = item_grads[0][t];
            for (std::size_t b = 1; b < batch; ++b) {
                const Tensor& gb = item_grads[b][t];
                for (std::size_t k = 0; k < g0.data.size(); ++k) g0.data[k] += gb.data[k];
            }
            for (double& v : g0.data) v *= inv_batch;
            updaters[t].step(param_ptrs[t]->data, g0.data, it);
        }
        out.params.iterations_trained++;
    }
    return out;
}

// Spec-shaped convenience overload.
inline CaeTrainResult train_cae(const std::vector<Tensor>& images, const CaeConfig& cfg,
                                std::uint64_t iterations, double alpha, std::uint64_t seed) {
    CaeTrainConfig tc;
    tc.iterations = iterations;
    tc.alpha = alpha;
    tc.seed = seed;
    return train_cae(images, cfg, tc);
}

// Per-component affine map taking dataset-wide min/max to [-1, 1]. Components
// with a degenerate range map to 0.
struct FeatureScaling {
    std::vector<double> min_v;
    std::vector<double> max_v;

    static constexpr double kDegenerate = 1e-12;

    double rescale_one(double raw, std::size_t k) const {
        const double range = max_v[k] - min_v[k];
        if (range < kDegenerate) return 0.0;
        return -1.0 + 2.0 * (raw - min_v[k]) / range;
    }

    double inverse_one(double scaled, std::size_t k) const {
        const double range = max_v[k] - min_v[k];
        if (range < kDegenerate) return min_v[k];
        return min_v[k] + (scaled + 1.0) * range / 2.0;
    }

    std::vector<double> rescale(const std::vector<double>& raw) const {
        std::vector<double> out(raw.size());
        for (std::size_t k = 0; k < raw.size(); ++k) out[k] = rescale_one(raw[k], k);
        return out;
    }

    // For images outside the training set the affine map can exceed [-1, 1];
    // emitted features are clamped to keep the contract.
    std::vector<double> rescale_clamped(const std::vector<double>& raw) const {
        std::vector<double> out = rescale(raw);
        for (double& v : out) v = std::clamp(v, -1.0, 1.0);
        return out;
    }
};

struct FeatureExtraction {
    std::vector<std::vector<std::vector<double>>> sequences;  // seq x T x feature_dim
    FeatureScaling scaling;
    bool untrained_warning = false;
};

// Encodes every frame of every sequence and rescales each feature component
// so its dataset-wide min/max map to [-1, 1].
inline FeatureExtraction extract_feature_sequences(
    const std::vector<std::vector<Tensor>>& image_sequences, const CaeParams& p,
    std::size_t threads = 1) {
    FeatureExtraction out;
    out.untrained_warning = p.iterations_trained == 0;
    const std::size_t dim = p.config.feature_dim;
    out.sequences.resize(image_sequences.size());
    std::vector<std::size_t> offsets;
    std::size_t total = 0;
    for (const auto& seq : image_sequences) {
        offsets.push_back(total);
        total += seq.size();
    }
    std::vector<std::vector<double>> raw(total);
    parallel_for(total, threads, [&](std::size_t flat) {
        std::size_t s = 0;
        while (s + 1 < offsets.size() && offsets[s + 1] <= flat) ++s;
        raw[flat] = encode(image_sequences[s][flat - offsets[s]], p);
    });
    out.scaling.min_v.assign(dim, std::numeric_limits<double>::infinity());
    out.scaling.max_v.assign(dim, -std::numeric_limits<double>::infinity());
    for (const auto& f : raw) {
        for (std::size_t k = 0; k < dim; ++k) {
            out.scaling.min_v[k] = std::min(out.scaling.min_v[k], f[k]);
            out.scaling.max_v[k] = std::max(out.scaling.max_v[k], f[k]);
        }
    }
    for (std::size_t s = 0; s < image_sequences.size(); ++s) {
        out.sequences[s].resize(image_sequences[s].size());
        for (std::size_t t = 0; t < image_sequences[s].size(); ++t) {
            out.sequences[s][t] = out.scaling.rescale(raw[offsets[s] + t]);
        }
    }
    return out;
}

// ---- model file (magic CAE1) ----

inline void save_cae(const std::string& path, const CaeParams& p) {
    std::ofstream os = open_output(path);
    write_magic(os, "CAE1");
    const CaeConfig& c = p.config;
    write_u32(os, static_cast<std::uint32_t>(c.image_width));
    write_u32(os, static_cast<std::uint32_t>(c.image_height));
    write_u32(os, static_cast<std::uint32_t>(c.channels));
    write_u32(os, static_cast<std::uint32_t>(c.feature_dim));
    write_u32(os, static_cast<std::uint32_t>(c.conv_layers.size()));
    for (const ConvLayerSpec& l : c.conv_layers) {
        write_u32(os, static_cast<std::uint32_t>(l.kernels));
        write_u32(os, static_cast<std::uint32_t>(l.ksize));
        write_u32(os, static_cast<std::uint32_t>(l.stride));
    }
    write_u32(os, static_cast<std::uint32_t>(c.fc_layers.size()));
    for (std::size_t w : c.fc_layers) write_u32(os, static_cast<std::uint32_t>(w));
    write_u32(os, static_cast<std::uint32_t>(c.hidden_activation));
    write_u32(os, static_cast<std::uint32_t>(c.output_activation));
    write_u64(os, p.iterations_trained);
    for (const Tensor* t : p.all_tensors()) write_f32_array(os, t->data);
    if (!os) throw io_error("write failed: " + path);
}

inline CaeParams load_cae(const std::string& path) {
    std::ifstream is = open_input(path);
    expect_magic(is, "CAE1", path);
    CaeConfig c;
    c.image_width = read_u32(is, path);
    c.image_height = read_u32(is, path);
    c.channels = read_u32(is, path);
    c.feature_dim = read_u32(is, path);
    c.conv_layers.resize(read_u32(is, path));
    for (ConvLayerSpec& l : c.conv_layers) {
        l.kernels = read_u32(is, path);
        l.ksize = read_u32(is, path);
        l.stride = read_u32(is, path);
    }
    c.fc_layers.resize(read_u32(is, path));
    for (std::size_t& w : c.fc_layers) w = read_u32(is, path);
    c.hidden_activation = static_cast<Activation>(read_u32(is, path));
    c.output_activation = static_cast<Activation>(read_u32(is, path));
    const std::uint64_t iters = read_u64(is, path);
    CaeParams p = init_cae_params(c, 0);
    p.iterations_trained = iters;
    for (Tensor* t : p.all_tensors()) read_f32_array(is, t->data, t->numel(), path);
    return p;
}

}  // namespace tooluse
