#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tooluse/errors.hpp"
#include "tooluse/random.hpp"
#include "tooluse/serialize.hpp"
#include "tooluse/tensor.hpp"
#include "tooluse/threading.hpp"

namespace tooluse {

using Frame = std::vector<double>;
using FrameSequence = std::vector<Frame>;  // T frames of io_count values each

// Node groups in index order: IO, then fast context, then slow context.
// A trailing virtual node with constant output 1 carries the biases, so the
// weight matrix has one extra column.
struct MtrnnConfig {
    std::size_t io_count = 26;  // 20 image features + 6 joints
    std::size_t cf_count = 50;
    std::size_t cs_count = 6;
    double tau_io = 1.0;
    double tau_cf = 5.0;
    double tau_cs = 40.0;
    std::size_t seq_len = 144;
    // Wiring: IO<->Cf and Cf<->Cs plus recurrence within each group. Direct
    // IO<->Cs connections are off by default.
    bool io_cs_connected = false;

    std::size_t total_nodes() const { return io_count + cf_count + cs_count; }
    std::size_t cols() const { return total_nodes() + 1; }

    double tau_of(std::size_t i) const {
        if (i < io_count) return tau_io;
        if (i < io_count + cf_count) return tau_cf;
        return tau_cs;
    }

    void validate() const {
        if (io_count < 1 || cf_count < 1 || cs_count < 1) {
            throw dimension_error("MtrnnConfig: node counts must be >= 1");
        }
        if (tau_io < 1.0 || tau_cf < 1.0 || tau_cs < 1.0 || tau_io > tau_cf || tau_cf > tau_cs) {
            throw dimension_error("MtrnnConfig: need 1 <= tau_io <= tau_cf <= tau_cs");
        }
        if (seq_len < 2) throw dimension_error("MtrnnConfig: seq_len must be >= 2");
    }
};

enum class NodeGroup { Io, Cf, Cs };

inline NodeGroup group_of(const MtrnnConfig& cfg, std::size_t i) {
    if (i < cfg.io_count) return NodeGroup::Io;
    if (i < cfg.io_count + cfg.cf_count) return NodeGroup::Cf;
    return NodeGroup::Cs;
}

// Row-major n x (n+1) mask; entry 1 means the connection exists. The bias
// column is always connected.
inline std::vector<std::uint8_t> connectivity_mask(const MtrnnConfig& cfg) {
    const std::size_t n = cfg.total_nodes(), cols = cfg.cols();
    std::vector<std::uint8_t> mask(n * cols, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const NodeGroup gi = group_of(cfg, i);
        for (std::size_t j = 0; j < n; ++j) {
            const NodeGroup gj = group_of(cfg, j);
            bool connected = (gi == gj);
            if ((gi == NodeGroup::Io && gj == NodeGroup::Cf) ||
                (gi == NodeGroup::Cf && gj == NodeGroup::Io) ||
                (gi == NodeGroup::Cf && gj == NodeGroup::Cs) ||
                (gi == NodeGroup::Cs && gj == NodeGroup::Cf)) {
                connected = true;
            }
            if (cfg.io_cs_connected && ((gi == NodeGroup::Io && gj == NodeGroup::Cs) ||
                                        (gi == NodeGroup::Cs && gj == NodeGroup::Io))) {
                connected = true;
            }
            mask[i * cols + j] = connected ? 1 : 0;
        }
        mask[i * cols + n] = 1;  // bias
    }
    return mask;
}

struct MtrnnParams {
    Tensor W;                                  // n x (n+1), masked entries exactly zero
    std::vector<std::uint8_t> mask;            // same layout as W
    std::vector<std::vector<double>> cs0_bank;  // one Cs(0) per training sequence
    std::uint64_t iterations_trained = 0;
};

inline MtrnnParams init_mtrnn_params(const MtrnnConfig& cfg, std::uint64_t seed,
                                     std::size_t n_sequences = 0) {
    cfg.validate();
    const std::size_t n = cfg.total_nodes(), cols = cfg.cols();
    MtrnnParams p;
    p.mask = connectivity_mask(cfg);
    p.W = Tensor::zeros({n, cols});
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t fan_in = 0;
        for (std::size_t j = 0; j < cols; ++j) fan_in += p.mask[i * cols + j];
        const double r = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t j = 0; j < cols; ++j) {
            const double v = rng.uniform(-r, r);  // fixed draw order regardless of mask
            p.W.data[i * cols + j] = p.mask[i * cols + j] ? v : 0.0;
        }
    }
    p.cs0_bank.assign(n_sequences, std::vector<double>(cfg.cs_count, 0.0));
    return p;
}

struct StepState {
    std::vector<double> u;
    std::vector<double> y;
    std::size_t t = 0;
};

constexpr double kCs0Clamp = 0.999;

// Cs(0) enters the dynamics as the initial Cs activation: u_Cs(0) =
// atanh(Cs(0)), so y_Cs(0) = Cs(0) exactly. IO and Cf start at u = 0.
inline StepState initial_state(const std::vector<double>& cs0, const MtrnnConfig& cfg) {
    if (cs0.size() != cfg.cs_count) {
        throw dimension_error("initial_state: cs0 " + shape_string({cs0.size()}) +
                              " vs cs_count " + shape_string({cfg.cs_count}));
    }
    StepState s;
    const std::size_t n = cfg.total_nodes();
    s.u.assign(n, 0.0);
    s.y.assign(n, 0.0);
    const std::size_t cs_base = cfg.io_count + cfg.cf_count;
    for (std::size_t k = 0; k < cfg.cs_count; ++k) {
        const double c = std::clamp(cs0[k], -kCs0Clamp, kCs0Clamp);
        s.u[cs_base + k] = std::atanh(c);
    }
    for (std::size_t i = 0; i < n; ++i) s.y[i] = std::tanh(s.u[i]);
    s.t = 0;
    return s;
}

// u_i(t) = (1 - 1/tau_i) u_i(t-1) + (1/tau_i) sum_j w_ij x_j(t);  y = tanh(u)
inline StepState forward_step(const StepState& prev, const std::vector<double>& x,
                              const MtrnnParams& params, const MtrnnConfig& cfg) {
    const std::size_t n = cfg.total_nodes(), cols = cfg.cols();
    if (x.size() != n) {
        throw dimension_error("forward_step: x " + shape_string({x.size()}) + " vs node count " +
                              shape_string({n}));
    }
    StepState next;
    next.u.resize(n);
    next.y.resize(n);
    next.t = prev.t + 1;
    for (std::size_t i = 0; i < n; ++i) {
        const double tau = cfg.tau_of(i);
        const double* wrow = &params.W.data[i * cols];
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += wrow[j] * x[j];
        acc += wrow[n];  // bias node outputs constant 1
        next.u[i] = (1.0 - 1.0 / tau) * prev.u[i] + (1.0 / tau) * acc;
        next.y[i] = std::tanh(next.u[i]);
    }
    return next;
}

namespace detail {

// Unrolled pass storage: y for steps 0..T-1 and the IO slice of x for steps
// 1..T-1 (the context slices of x are just the previous y).
struct Rollout {
    std::vector<std::vector<double>> y;     // [T][n]
    std::vector<std::vector<double>> x_io;  // [T][io], index s >= 1 used
    std::vector<double> u_final;
    std::vector<double> u0;
};

// Shared rollout core. teach has T frames; closed_loop picks the IO input
// from the network's own previous output (frames[0] seeds step 1).
inline Rollout run_rollout(const FrameSequence& teach, const std::vector<double>& cs0,
                           const MtrnnParams& params, const MtrnnConfig& cfg, bool closed_loop) {
    const std::size_t T = teach.size();
    const std::size_t n = cfg.total_nodes(), cols = cfg.cols(), io = cfg.io_count;
    Rollout r;
    r.y.assign(T, std::vector<double>(n, 0.0));
    r.x_io.assign(T, std::vector<double>(io, 0.0));
    StepState st = initial_state(cs0, cfg);
    r.u0 = st.u;
    r.y[0] = st.y;
    std::vector<double> inv_tau(n), leak(n);
    for (std::size_t i = 0; i < n; ++i) {
        inv_tau[i] = 1.0 / cfg.tau_of(i);
        leak[i] = 1.0 - inv_tau[i];
    }
    std::vector<double> u_prev = st.u;
    std::vector<double> u_next(n);
    std::vector<double> x(n);
    for (std::size_t s = 1; s < T; ++s) {
        for (std::size_t k = 0; k < io; ++k) {
            r.x_io[s][k] = (closed_loop && s > 1) ? r.y[s - 1][k] : teach[s - 1][k];
        }
        for (std::size_t k = 0; k < io; ++k) x[k] = r.x_io[s][k];
        for (std::size_t k = io; k < n; ++k) x[k] = r.y[s - 1][k];
        for (std::size_t i = 0; i < n; ++i) {
            const double* wrow = &params.W.data[i * cols];
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += wrow[j] * x[j];
            acc += wrow[n];
            u_next[i] = leak[i] * u_prev[i] + inv_tau[i] * acc;
            r.y[s][i] = std::tanh(u_next[i]);
        }
        std::swap(u_prev, u_next);
    }
    r.u_final = u_prev;
    return r;
}

enum class LossKind { AllFrames, EndpointImage };

struct SequenceGrads {
    std::vector<double> grad_W;    // n x (n+1), unmasked
    std::vector<double> grad_cs0;  // cs_count
    double error = 0.0;
};

// BPTT over one unrolled sequence. For LossKind::AllFrames the target is the
// teaching sequence shifted by one (y(t-1) vs T(t)); for EndpointImage only
// the first frame (full IO, constant w.r.t. parameters) and the final frame's
// leading img_count dims carry error.
inline SequenceGrads backward_sequence(const Rollout& r, const FrameSequence& teach,
                                       const std::vector<double>& cs0_raw,
                                       const MtrnnParams& params, const MtrnnConfig& cfg,
                                       bool closed_loop, LossKind loss, std::size_t img_count,
                                       bool want_weight_grads) {
    const std::size_t T = teach.size();
    const std::size_t n = cfg.total_nodes(), cols = cfg.cols(), io = cfg.io_count;
    const std::size_t cs_base = cfg.io_count + cfg.cf_count;
    SequenceGrads g;
    if (want_weight_grads) g.grad_W.assign(n * cols, 0.0);
    g.grad_cs0.assign(cfg.cs_count, 0.0);

    if (loss == LossKind::EndpointImage) {
        // t=1 term of the recognition error: y(0) is parameter-independent.
        for (std::size_t k = 0; k < io; ++k) {
            const double d = r.y[0][k] - teach[0][k];
            g.error += d * d;
        }
    }

    std::vector<double> inv_tau(n), leak(n);
    for (std::size_t i = 0; i < n; ++i) {
        inv_tau[i] = 1.0 / cfg.tau_of(i);
        leak[i] = 1.0 - inv_tau[i];
    }
    // Column access to W dominates the feedback pass; transpose once.
    std::vector<double> Wt(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) Wt[j * n + i] = params.W.data[i * cols + j];
    }
    std::vector<double> du_next(n, 0.0);  // dE/du at step s+1
    std::vector<double> du(n, 0.0);
    std::vector<double> dy(n, 0.0);
    std::vector<double> scaled_du(n, 0.0);
    std::vector<double> x(n + 1);
    for (std::size_t s = T - 1; s >= 1; --s) {
        std::fill(dy.begin(), dy.end(), 0.0);
        if (loss == LossKind::AllFrames) {
            for (std::size_t k = 0; k < io; ++k) {
                const double d = r.y[s][k] - teach[s][k];
                g.error += d * d;
                dy[k] += 2.0 * d;
            }
        } else if (s == T - 1) {
            for (std::size_t k = 0; k < img_count; ++k) {
                const double d = r.y[s][k] - teach[s][k];
                g.error += d * d;
                dy[k] += 2.0 * d;
            }
        }
        // Input feedback from step s+1: x(s+1) = y(s) for context nodes, and
        // for IO nodes too when running closed loop.
        if (s + 1 <= T - 1) {
            for (std::size_t i = 0; i < n; ++i) scaled_du[i] = du_next[i] * inv_tau[i];
            const std::size_t j0 = closed_loop ? 0 : io;
            for (std::size_t j = j0; j < n; ++j) {
                const double* wcol = &Wt[j * n];
                double acc = 0.0;
                for (std::size_t i = 0; i < n; ++i) acc += scaled_du[i] * wcol[i];
                dy[j] += acc;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            du[i] = dy[i] * (1.0 - r.y[s][i] * r.y[s][i]) + du_next[i] * leak[i];
        }
        if (want_weight_grads) {
            for (std::size_t k = 0; k < io; ++k) x[k] = r.x_io[s][k];
            for (std::size_t k = io; k < n; ++k) x[k] = r.y[s - 1][k];
            x[n] = 1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double scale = du[i] * inv_tau[i];
                if (scale == 0.0) continue;
                double* grow = &g.grad_W[i * cols];
                for (std::size_t j = 0; j <= n; ++j) grow[j] += scale * x[j];
            }
        }
        std::swap(du, du_next);
    }
    // Step-0 boundary: x_Cs(1) = y_Cs(0) = tanh(u_Cs(0)) and the leak path
    // u_Cs(1) <- u_Cs(0); u_Cs(0) = atanh(clamped Cs(0)).
    for (std::size_t i = 0; i < n; ++i) scaled_du[i] = du_next[i] * inv_tau[i];
    for (std::size_t k = 0; k < cfg.cs_count; ++k) {
        const std::size_t jc = cs_base + k;
        const double* wcol = &Wt[jc * n];
        double dy0 = 0.0;
        for (std::size_t i = 0; i < n; ++i) dy0 += scaled_du[i] * wcol[i];
        const double y0 = r.y[0][jc];
        const double du0 = dy0 * (1.0 - y0 * y0) + du_next[jc] * (1.0 - 1.0 / cfg.tau_cs);
        // d u0 / d cs0 = 1/(1 - c^2) inside the clamp range, 0 outside.
        g.grad_cs0[k] = std::abs(cs0_raw[k]) > kCs0Clamp ? 0.0 : du0 / (1.0 - y0 * y0);
    }
    return g;
}

}  // namespace detail

struct OpenLoopResult {
    FrameSequence predictions;  // y_IO at steps 1..T-1, predicting frames 2..T
    StepState final_state;
};

inline OpenLoopResult run_open_loop(const FrameSequence& teach, const std::vector<double>& cs0,
                                    const MtrnnParams& params, const MtrnnConfig& cfg) {
    if (teach.size() < 2) throw dimension_error("run_open_loop: need at least 2 frames");
    for (const Frame& f : teach) {
        if (f.size() != cfg.io_count) {
            throw dimension_error("run_open_loop: frame " + shape_string({f.size()}) +
                                  " vs io_count " + shape_string({cfg.io_count}));
        }
    }
    detail::Rollout r = detail::run_rollout(teach, cs0, params, cfg, /*closed_loop=*/false);
    OpenLoopResult out;
    const std::size_t T = teach.size();
    out.predictions.assign(T - 1, Frame(cfg.io_count, 0.0));
    for (std::size_t s = 1; s < T; ++s) {
        for (std::size_t k = 0; k < cfg.io_count; ++k) out.predictions[s - 1][k] = r.y[s][k];
    }
    out.final_state.u = r.u_final;
    out.final_state.y = r.y[T - 1];
    out.final_state.t = T - 1;
    return out;
}

// Closed-loop generation: frame 1 is io0 itself; every later frame is the
// network's own IO output fed back per x(t+1) = y(t).
inline FrameSequence run_closed_loop(const Frame& io0, const std::vector<double>& cs0,
                                     const MtrnnParams& params, const MtrnnConfig& cfg,
                                     std::size_t T) {
    if (io0.size() != cfg.io_count) {
        throw dimension_error("run_closed_loop: io0 " + shape_string({io0.size()}) +
                              " vs io_count " + shape_string({cfg.io_count}));
    }
    if (T < 2) throw dimension_error("run_closed_loop: need T >= 2");
    FrameSequence seed(T, Frame(cfg.io_count, 0.0));
    seed[0] = io0;
    detail::Rollout r = detail::run_rollout(seed, cs0, params, cfg, /*closed_loop=*/true);
    FrameSequence out(T, Frame(cfg.io_count, 0.0));
    out[0] = io0;
    for (std::size_t s = 1; s < T; ++s) {
        for (std::size_t k = 0; k < cfg.io_count; ++k) out[s][k] = r.y[s][k];
    }
    return out;
}

struct BpttResult {
    Tensor grad_W;                              // masked
    std::vector<std::vector<double>> grad_cs0;  // per sequence
    double error = 0.0;
};

// Exact gradients of E = sum_t sum_{i in IO} (y_i(t-1) - T_i(t))^2 over all
// sequences, w.r.t. unmasked weights and each sequence's Cs(0).
inline BpttResult bptt_gradients(const std::vector<FrameSequence>& sequences,
                                 const MtrnnParams& params, const MtrnnConfig& cfg,
                                 bool teacher_forcing = true, std::size_t threads = 1) {
    if (sequences.empty()) throw dimension_error("bptt_gradients: no sequences");
    if (params.cs0_bank.size() != sequences.size()) {
        throw dimension_error("bptt_gradients: cs0 bank " + shape_string({params.cs0_bank.size()}) +
                              " vs sequences " + shape_string({sequences.size()}));
    }
    const std::size_t n = cfg.total_nodes(), cols = cfg.cols();
    std::vector<detail::SequenceGrads> partial(sequences.size());
    parallel_for(sequences.size(), threads, [&](std::size_t s) {
        detail::Rollout r =
            detail::run_rollout(sequences[s], params.cs0_bank[s], params, cfg, !teacher_forcing);
        partial[s] = detail::backward_sequence(r, sequences[s], params.cs0_bank[s], params, cfg,
                                               !teacher_forcing, detail::LossKind::AllFrames, 0,
                                               /*want_weight_grads=*/true);
    });
    BpttResult out;
    out.grad_W = Tensor::zeros({n, cols});
    out.grad_cs0.resize(sequences.size());
    for (std::size_t s = 0; s < sequences.size(); ++s) {
        for (std::size_t i = 0; i < n * cols; ++i) out.grad_W.data[i] += partial[s].grad_W[i];
        out.grad_cs0[s] = std::move(partial[s].grad_cs0);
        out.error += partial[s].error;
        if (!std::isfinite(partial[s].error)) {
            throw training_error("bptt_gradients: non-finite error in sequence " + std::to_string(s),
                                 0);
        }
    }
    for (std::size_t i = 0; i < n * cols; ++i) {
        if (!params.mask[i]) out.grad_W.data[i] = 0.0;
    }
    return out;
}

struct MtrnnTrainConfig {
    double alpha = 1e-3;
    std::uint64_t iterations = 1;
    bool teacher_forcing = true;
    double momentum = 0.0;
    std::uint64_t seed = 1;
    std::size_t threads = 1;

    void validate() const {
        // alpha = 0 is admitted as the degenerate "no update" case.
        if (alpha < 0.0) throw dimension_error("MtrnnTrainConfig: alpha must be >= 0");
        if (iterations < 1) throw dimension_error("MtrnnTrainConfig: iterations must be >= 1");
    }
};

struct MtrnnTrainResult {
    MtrnnParams params;
    std::vector<double> loss_curve;  // E per iteration, after the update
};

// Joint update of weights (Eq. 5 form) and per-sequence Cs(0) (Eq. 6 form)
// by full-batch gradient descent.
inline MtrnnTrainResult train_mtrnn(const std::vector<FrameSequence>& sequences,
                                    const MtrnnConfig& cfg, const MtrnnTrainConfig& tc) {
    cfg.validate();
    tc.validate();
    if (sequences.empty()) throw dimension_error("train_mtrnn: no sequences");
    for (const FrameSequence& s : sequences) {
        if (s.size() != cfg.seq_len) {
            throw dimension_error("train_mtrnn: sequence length " + shape_string({s.size()}) +
                                  " vs configured " + shape_string({cfg.seq_len}));
        }
    }
    MtrnnTrainResult out;
    out.params = init_mtrnn_params(cfg, tc.seed, sequences.size());
    out.loss_curve.reserve(tc.iterations);
    GdUpdater w_upd{tc.alpha, tc.momentum, {}};
    GdUpdater cs_upd{tc.alpha, tc.momentum, {}};
    std::vector<double> cs_flat(sequences.size() * cfg.cs_count, 0.0);
    std::vector<double> cs_grad(cs_flat.size(), 0.0);
    for (std::uint64_t it = 0; it < tc.iterations; ++it) {
        BpttResult g = bptt_gradients(sequences, out.params, cfg, tc.teacher_forcing, tc.threads);
        if (!std::isfinite(g.error)) throw training_error("train_mtrnn: loss diverged", it);
        w_upd.step(out.params.W.data, g.grad_W.data, it);
        for (std::size_t s = 0; s < sequences.size(); ++s) {
            for (std::size_t k = 0; k < cfg.cs_count; ++k) {
                cs_flat[s * cfg.cs_count + k] = out.params.cs0_bank[s][k];
                cs_grad[s * cfg.cs_count + k] = g.grad_cs0[s][k];
            }
        }
        cs_upd.step(cs_flat, cs_grad, it);
        for (std::size_t s = 0; s < sequences.size(); ++s) {
            for (std::size_t k = 0; k < cfg.cs_count; ++k) {
                out.params.cs0_bank[s][k] = cs_flat[s * cfg.cs_count + k];
            }
        }
        out.params.iterations_trained++;
        out.loss_curve.push_back(g.error);
    }
    return out;
}

struct RecognitionTarget {
    Frame io0;                               // full IO frame at t=1
    std::vector<double> goal_image_features;  // img-dim subset at t=T
    std::uint64_t iterations = 1000;
    double alpha = 1e-2;
    double momentum = 0.0;
    std::uint64_t seed = 0;  // reserved for non-zero Cs(0) initializations
};

struct RecognitionResult {
    std::vector<double> cs0_hat;
    std::vector<double> error_trace;  // E per iteration (before each update)
};

// Gradient descent on Cs(0) through the frozen trained network: closed-loop
// rollout from io0, error on the full first frame plus the image dims of the
// final frame. Weights are never touched.
inline RecognitionResult recognize_cs0(const RecognitionTarget& target, const MtrnnParams& params,
                                       const MtrnnConfig& cfg, std::size_t img_count) {
    if (target.io0.size() != cfg.io_count) {
        throw dimension_error("recognize_cs0: io0 " + shape_string({target.io0.size()}) +
                              " vs io_count " + shape_string({cfg.io_count}));
    }
    if (img_count > cfg.io_count || target.goal_image_features.size() != img_count) {
        throw dimension_error("recognize_cs0: goal features " +
                              shape_string({target.goal_image_features.size()}) + " vs img subset " +
                              shape_string({img_count}));
    }
    FrameSequence teach(cfg.seq_len, Frame(cfg.io_count, 0.0));
    teach[0] = target.io0;
    for (std::size_t k = 0; k < img_count; ++k) {
        teach[cfg.seq_len - 1][k] = target.goal_image_features[k];
    }
    RecognitionResult out;
    out.cs0_hat.assign(cfg.cs_count, 0.0);
    out.error_trace.reserve(target.iterations);
    GdUpdater upd{target.alpha, target.momentum, {}};
    for (std::uint64_t it = 0; it < target.iterations; ++it) {
        detail::Rollout r = detail::run_rollout(teach, out.cs0_hat, params, cfg, /*closed_loop=*/true);
        detail::SequenceGrads g =
            detail::backward_sequence(r, teach, out.cs0_hat, params, cfg, /*closed_loop=*/true,
                                      detail::LossKind::EndpointImage, img_count,
                                      /*want_weight_grads=*/false);
        if (!std::isfinite(g.error)) throw training_error("recognize_cs0: error diverged", it);
        out.error_trace.push_back(g.error);
        upd.step(out.cs0_hat, g.grad_cs0, it);
    }
    return out;
}

struct GeneratedSequence {
    FrameSequence frames;  // T x io_count
    std::size_t img_count = 0;

    std::vector<std::vector<double>> image_features() const {
        std::vector<std::vector<double>> out(frames.size());
        for (std::size_t t = 0; t < frames.size(); ++t) {
            out[t].assign(frames[t].begin(), frames[t].begin() + img_count);
        }
        return out;
    }

    std::vector<std::vector<double>> joints() const {
        std::vector<std::vector<double>> out(frames.size());
        for (std::size_t t = 0; t < frames.size(); ++t) {
            out[t].assign(frames[t].begin() + img_count, frames[t].end());
        }
        return out;
    }
};

inline GeneratedSequence generate_from_recognition(const std::vector<double>& cs0_hat,
                                                   const Frame& io0, const MtrnnParams& params,
                                                   const MtrnnConfig& cfg, std::size_t img_count) {
    GeneratedSequence g;
    g.frames = run_closed_loop(io0, cs0_hat, params, cfg, cfg.seq_len);
    g.img_count = img_count;
    return g;
}

// ---- model file (magic MTR1) ----

struct MtrnnModel {
    MtrnnConfig config;
    MtrnnParams params;
};

inline void save_mtrnn(const std::string& path, const MtrnnModel& m) {
    std::ofstream os = open_output(path);
    write_magic(os, "MTR1");
    write_u32(os, static_cast<std::uint32_t>(m.config.io_count));
    write_u32(os, static_cast<std::uint32_t>(m.config.cf_count));
    write_u32(os, static_cast<std::uint32_t>(m.config.cs_count));
    write_f32(os, m.config.tau_io);
    write_f32(os, m.config.tau_cf);
    write_f32(os, m.config.tau_cs);
    write_u32(os, static_cast<std::uint32_t>(m.config.seq_len));
    write_u32(os, m.config.io_cs_connected ? 1 : 0);
    write_u64(os, m.params.iterations_trained);
    write_u32(os, static_cast<std::uint32_t>(m.params.cs0_bank.size()));
    os.write(reinterpret_cast<const char*>(m.params.mask.data()),
             static_cast<std::streamsize>(m.params.mask.size()));
    write_f32_array(os, m.params.W.data);
    for (const auto& cs0 : m.params.cs0_bank) write_f32_array(os, cs0);
    if (!os) throw io_error("write failed: " + path);
}

inline MtrnnModel load_mtrnn(const std::string& path) {
    std::ifstream is = open_input(path);
    expect_magic(is, "MTR1", path);
    MtrnnModel m;
    m.config.io_count = read_u32(is, path);
    m.config.cf_count = read_u32(is, path);
    m.config.cs_count = read_u32(is, path);
    m.config.tau_io = read_f32(is, path);
    m.config.tau_cf = read_f32(is, path);
    m.config.tau_cs = read_f32(is, path);
    m.config.seq_len = read_u32(is, path);
    m.config.io_cs_connected = read_u32(is, path) != 0;
    m.config.validate();
    m.params.iterations_trained = read_u64(is, path);
    const std::uint32_t n_seq = read_u32(is, path);
    const std::size_t n = m.config.total_nodes(), cols = m.config.cols();
    m.params.mask.resize(n * cols);
    if (!is.read(reinterpret_cast<char*>(m.params.mask.data()),
                 static_cast<std::streamsize>(m.params.mask.size()))) {
        throw io_error("truncated mask in " + path);
    }
    m.params.W.shape = {n, cols};
    read_f32_array(is, m.params.W.data, n * cols, path);
    m.params.cs0_bank.assign(n_seq, std::vector<double>(m.config.cs_count, 0.0));
    for (auto& cs0 : m.params.cs0_bank) read_f32_array(is, cs0, m.config.cs_count, path);
    return m;
}

}  // namespace tooluse
