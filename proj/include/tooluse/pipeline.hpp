#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "tooluse/analysis.hpp"
#include "tooluse/cae.hpp"
#include "tooluse/errors.hpp"
#include "tooluse/log.hpp"
#include "tooluse/mtrnn.hpp"
#include "tooluse/pca.hpp"
#include "tooluse/png.hpp"
#include "tooluse/sim.hpp"

namespace tooluse {

// One document drives the whole pipeline; a single root seed fans out to the
// simulator ("sim"), CAE training ("cae") and MTRNN training ("mtrnn")
// streams via derive_seed.
struct PipelineConfig {
    std::string preset = "desk";
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    SimConfig sim;
    CaeConfig cae;
    CaeTrainConfig cae_train;
    MtrnnConfig mtrnn;
    MtrnnTrainConfig mtrnn_train;
    std::uint64_t recognition_iterations = 4000;
    double recognition_alpha = 2e-2;
    double recognition_momentum = 0.9;

    static PipelineConfig desk() {
        PipelineConfig c;
        c.preset = "desk";
        c.sim.width = 32;
        c.sim.height = 24;
        c.cae.image_width = 32;
        c.cae.image_height = 24;
        c.cae.fc_layers = {120};
        c.cae_train.iterations = 12000;
        c.cae_train.alpha = 0.05;
        c.cae_train.momentum = 0.9;
        c.cae_train.batch_size = 32;
        c.mtrnn_train.iterations = 15000;
        c.mtrnn_train.alpha = 2e-5;
        c.mtrnn_train.momentum = 0.9;
        return c;
    }

    static PipelineConfig paper() {
        PipelineConfig c;
        c.preset = "paper";
        c.sim.width = 64;
        c.sim.height = 48;
        c.cae.image_width = 64;
        c.cae.image_height = 48;
        c.cae.fc_layers = {256};
        c.cae_train.iterations = 150000;
        c.cae_train.alpha = 0.05;
        c.cae_train.momentum = 0.9;
        c.cae_train.batch_size = 32;
        c.mtrnn_train.iterations = 150000;
        c.mtrnn_train.alpha = 2e-5;
        c.mtrnn_train.momentum = 0.9;
        c.recognition_iterations = 150000;
        return c;
    }

    static PipelineConfig from_preset(const std::string& name) {
        if (name == "paper") return paper();
        if (name == "desk") return desk();
        throw dimension_error("unknown preset: " + name + " (expected desk or paper)");
    }

    void validate() const {
        sim.validate();
        cae.validate();
        mtrnn.validate();
        if (sim.width != cae.image_width || sim.height != cae.image_height) {
            throw dimension_error("PipelineConfig: simulator and CAE image dims disagree");
        }
        if (mtrnn.io_count != cae.feature_dim + 6) {
            throw dimension_error("PipelineConfig: io_count must be feature_dim + 6 joints");
        }
        if (mtrnn.seq_len != sim.frames) {
            throw dimension_error("PipelineConfig: mtrnn seq_len must equal simulator frames");
        }
    }
};

inline nlohmann::json pipeline_to_json(const PipelineConfig& c) {
    nlohmann::json j;
    j["preset"] = c.preset;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["simulator"] = {{"width", c.sim.width},
                      {"height", c.sim.height},
                      {"supersample", c.sim.supersample},
                      {"frames", c.sim.frames},
                      {"joint_noise_std", c.sim.joint_noise_std}};
    nlohmann::json conv = nlohmann::json::array();
    for (const ConvLayerSpec& l : c.cae.conv_layers) {
        conv.push_back({l.kernels, l.ksize, l.stride});
    }
    j["cae"] = {{"feature_dim", c.cae.feature_dim},
                {"conv_layers", conv},
                {"fc_layers", c.cae.fc_layers}};
    j["cae_train"] = {{"iterations", c.cae_train.iterations},
                      {"alpha", c.cae_train.alpha},
                      {"momentum", c.cae_train.momentum},
                      {"batch_size", c.cae_train.batch_size}};
    j["mtrnn"] = {{"io_count", c.mtrnn.io_count},   {"cf_count", c.mtrnn.cf_count},
                  {"cs_count", c.mtrnn.cs_count},   {"tau_io", c.mtrnn.tau_io},
                  {"tau_cf", c.mtrnn.tau_cf},       {"tau_cs", c.mtrnn.tau_cs},
                  {"seq_len", c.mtrnn.seq_len},     {"io_cs_connected", c.mtrnn.io_cs_connected}};
    j["mtrnn_train"] = {{"iterations", c.mtrnn_train.iterations},
                        {"alpha", c.mtrnn_train.alpha},
                        {"momentum", c.mtrnn_train.momentum},
                        {"teacher_forcing", c.mtrnn_train.teacher_forcing}};
    j["recognition"] = {{"iterations", c.recognition_iterations},
                        {"alpha", c.recognition_alpha},
                        {"momentum", c.recognition_momentum}};
    return j;
}

inline PipelineConfig pipeline_from_json(const nlohmann::json& j) {
    PipelineConfig c = PipelineConfig::from_preset(j.value("preset", std::string("desk")));
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    if (j.contains("simulator")) {
        const auto& s = j.at("simulator");
        c.sim.width = s.value("width", c.sim.width);
        c.sim.height = s.value("height", c.sim.height);
        c.sim.supersample = s.value("supersample", c.sim.supersample);
        c.sim.frames = s.value("frames", c.sim.frames);
        c.sim.joint_noise_std = s.value("joint_noise_std", c.sim.joint_noise_std);
        c.cae.image_width = c.sim.width;
        c.cae.image_height = c.sim.height;
        c.mtrnn.seq_len = c.sim.frames;
    }
    if (j.contains("cae")) {
        const auto& s = j.at("cae");
        c.cae.feature_dim = s.value("feature_dim", c.cae.feature_dim);
        if (s.contains("conv_layers")) {
            c.cae.conv_layers.clear();
            for (const auto& l : s.at("conv_layers")) {
                c.cae.conv_layers.push_back({l.at(0).get<std::size_t>(),
                                             l.at(1).get<std::size_t>(),
                                             l.at(2).get<std::size_t>()});
            }
        }
        if (s.contains("fc_layers")) {
            c.cae.fc_layers = s.at("fc_layers").get<std::vector<std::size_t>>();
        }
        c.mtrnn.io_count = c.cae.feature_dim + 6;
    }
    if (j.contains("cae_train")) {
        const auto& s = j.at("cae_train");
        c.cae_train.iterations = s.value("iterations", c.cae_train.iterations);
        c.cae_train.alpha = s.value("alpha", c.cae_train.alpha);
        c.cae_train.momentum = s.value("momentum", c.cae_train.momentum);
        c.cae_train.batch_size = s.value("batch_size", c.cae_train.batch_size);
    }
    if (j.contains("mtrnn")) {
        const auto& s = j.at("mtrnn");
        c.mtrnn.io_count = s.value("io_count", c.mtrnn.io_count);
        c.mtrnn.cf_count = s.value("cf_count", c.mtrnn.cf_count);
        c.mtrnn.cs_count = s.value("cs_count", c.mtrnn.cs_count);
        c.mtrnn.tau_io = s.value("tau_io", c.mtrnn.tau_io);
        c.mtrnn.tau_cf = s.value("tau_cf", c.mtrnn.tau_cf);
        c.mtrnn.tau_cs = s.value("tau_cs", c.mtrnn.tau_cs);
        c.mtrnn.seq_len = s.value("seq_len", c.mtrnn.seq_len);
        c.mtrnn.io_cs_connected = s.value("io_cs_connected", c.mtrnn.io_cs_connected);
    }
    if (j.contains("mtrnn_train")) {
        const auto& s = j.at("mtrnn_train");
        c.mtrnn_train.iterations = s.value("iterations", c.mtrnn_train.iterations);
        c.mtrnn_train.alpha = s.value("alpha", c.mtrnn_train.alpha);
        c.mtrnn_train.momentum = s.value("momentum", c.mtrnn_train.momentum);
        c.mtrnn_train.teacher_forcing = s.value("teacher_forcing", c.mtrnn_train.teacher_forcing);
    }
    if (j.contains("recognition")) {
        const auto& s = j.at("recognition");
        c.recognition_iterations = s.value("iterations", c.recognition_iterations);
        c.recognition_alpha = s.value("alpha", c.recognition_alpha);
        c.recognition_momentum = s.value("momentum", c.recognition_momentum);
    }
    return c;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream is = open_input(path, false);
    nlohmann::json j;
    is >> j;
    return pipeline_from_json(j);
}

// Canonical unknown variants for the evaluation experiments.
inline ToolSpec unknown_rake() { return {ToolKind::Rake, 1.25, 0.9, 0.06}; }
inline ObjectSpec unknown_box_x() { return {ObjectKind::ShortBox, 1.15, Rgb{0.30, 0.62, 0.80}}; }
inline ObjectSpec unknown_box_y() { return {ObjectKind::ShortBox, 0.90, Rgb{0.18, 0.82, 0.66}}; }

inline void write_loss_csv(const std::string& path, const std::vector<double>& curve,
                           const char* header) {
    std::ofstream os = open_output(path, false);
    os << "iteration," << header << "\n";
    os.precision(17);
    for (std::size_t i = 0; i < curve.size(); ++i) os << i << "," << curve[i] << "\n";
    if (!os) throw io_error("write failed: " + path);
}

// ---- pipeline stages ----

inline void cmd_gen_data(const PipelineConfig& cfg, const std::string& out_dir,
                         bool dump_png = false) {
    cfg.validate();
    Dataset ds = generate_dataset(cfg.sim, derive_seed(cfg.seed, "sim"));
    save_dataset(out_dir, ds);
    if (dump_png) {
        std::filesystem::create_directories(out_dir + "/png");
        for (const SensorimotorSequence& seq : ds.sequences) {
            std::vector<Tensor> strip;
            for (std::size_t f = 0; f < seq.images.size();
                 f += std::max<std::size_t>(1, seq.images.size() / 8)) {
                strip.push_back(seq.images[f]);
            }
            strip.push_back(seq.images.back());
            write_png_strip(out_dir + "/png/task_" + std::to_string(seq.task.id) + ".png", strip);
        }
    }
    log_info("gen-data: wrote " + std::to_string(ds.sequences.size()) + " sequences to " + out_dir);
}

inline void cmd_train_cae(const PipelineConfig& cfg, const std::string& dataset_dir,
                          const std::string& out_dir) {
    cfg.validate();
    Dataset ds = load_dataset(dataset_dir);
    std::vector<Tensor> images;
    for (const SensorimotorSequence& seq : ds.sequences) {
        for (const Tensor& img : seq.images) images.push_back(img);
    }
    CaeTrainConfig tc = cfg.cae_train;
    tc.seed = derive_seed(cfg.seed, "cae");
    tc.threads = cfg.threads;
    CaeTrainResult r = train_cae(images, cfg.cae, tc);
    std::filesystem::create_directories(out_dir);
    save_cae(out_dir + "/cae.model", r.params);
    write_loss_csv(out_dir + "/cae_loss.csv", r.loss_curve, "mse");
    log_info("train-cae: final batch mse " + std::to_string(r.loss_curve.back()));
}

// Features file (magic FEA1): counts, per-component raw min/max, then the
// rescaled features as little-endian f32 in sequence-major order.
inline void save_features(const std::string& path, const FeatureExtraction& fx) {
    std::ofstream os = open_output(path);
    write_magic(os, "FEA1");
    const std::size_t n_seq = fx.sequences.size();
    const std::size_t T = n_seq ? fx.sequences[0].size() : 0;
    const std::size_t dim = fx.scaling.min_v.size();
    write_u32(os, static_cast<std::uint32_t>(n_seq));
    write_u32(os, static_cast<std::uint32_t>(T));
    write_u32(os, static_cast<std::uint32_t>(dim));
    write_u32(os, fx.untrained_warning ? 1 : 0);
    write_f32_array(os, fx.scaling.min_v);
    write_f32_array(os, fx.scaling.max_v);
    for (const auto& seq : fx.sequences) {
        for (const auto& frame : seq) write_f32_array(os, frame);
    }
    if (!os) throw io_error("write failed: " + path);
}

inline FeatureExtraction load_features(const std::string& path) {
    std::ifstream is = open_input(path);
    expect_magic(is, "FEA1", path);
    const std::uint32_t n_seq = read_u32(is, path);
    const std::uint32_t T = read_u32(is, path);
    const std::uint32_t dim = read_u32(is, path);
    FeatureExtraction fx;
    fx.untrained_warning = read_u32(is, path) != 0;
    read_f32_array(is, fx.scaling.min_v, dim, path);
    read_f32_array(is, fx.scaling.max_v, dim, path);
    fx.sequences.assign(n_seq, std::vector<std::vector<double>>(T));
    for (auto& seq : fx.sequences) {
        for (auto& frame : seq) read_f32_array(is, frame, dim, path);
    }
    return fx;
}

inline void cmd_extract_features(const PipelineConfig& cfg, const std::string& dataset_dir,
                                 const std::string& cae_model, const std::string& out_dir) {
    cfg.validate();
    Dataset ds = load_dataset(dataset_dir);
    CaeParams cae = load_cae(cae_model);
    std::vector<std::vector<Tensor>> image_seqs;
    for (const SensorimotorSequence& seq : ds.sequences) image_seqs.push_back(seq.images);
    FeatureExtraction fx = extract_feature_sequences(image_seqs, cae, cfg.threads);
    std::filesystem::create_directories(out_dir);
    save_features(out_dir + "/features.bin", fx);
    nlohmann::json meta;
    meta["sequences"] = fx.sequences.size();
    meta["frames"] = fx.sequences.empty() ? 0 : fx.sequences[0].size();
    meta["dim"] = fx.scaling.min_v.size();
    meta["rescale_min"] = fx.scaling.min_v;
    meta["rescale_max"] = fx.scaling.max_v;
    if (fx.untrained_warning) meta["warning"] = "CAE parameters were never trained";
    std::ofstream os = open_output(out_dir + "/features.json", false);
    os << meta.dump(2) << "\n";
    if (fx.untrained_warning) log_warn("extract-features: CAE parameters were never trained");
}

inline std::vector<FrameSequence> assemble_io_sequences(const Dataset& ds,
                                                        const FeatureExtraction& fx) {
    if (ds.sequences.size() != fx.sequences.size()) {
        throw dimension_error("assemble_io_sequences: dataset " +
                              shape_string({ds.sequences.size()}) + " vs features " +
                              shape_string({fx.sequences.size()}));
    }
    std::vector<FrameSequence> out(ds.sequences.size());
    for (std::size_t s = 0; s < ds.sequences.size(); ++s) {
        const auto& feats = fx.sequences[s];
        const auto& joints = ds.sequences[s].joints;
        if (feats.size() != joints.size()) {
            throw dimension_error("assemble_io_sequences: frame counts disagree in sequence " +
                                  std::to_string(s));
        }
        out[s].resize(feats.size());
        for (std::size_t t = 0; t < feats.size(); ++t) {
            out[s][t] = feats[t];
            out[s][t].insert(out[s][t].end(), joints[t].begin(), joints[t].end());
        }
    }
    return out;
}

inline void cmd_train_mtrnn(const PipelineConfig& cfg, const std::string& dataset_dir,
                            const std::string& features_path, const std::string& out_dir) {
    cfg.validate();
    Dataset ds = load_dataset(dataset_dir);
    FeatureExtraction fx = load_features(features_path);
    std::vector<FrameSequence> seqs = assemble_io_sequences(ds, fx);
    MtrnnTrainConfig tc = cfg.mtrnn_train;
    tc.seed = derive_seed(cfg.seed, "mtrnn");
    tc.threads = cfg.threads;
    MtrnnTrainResult r = train_mtrnn(seqs, cfg.mtrnn, tc);
    std::filesystem::create_directories(out_dir);
    save_mtrnn(out_dir + "/mtrnn.model", {cfg.mtrnn, r.params});
    write_loss_csv(out_dir + "/mtrnn_loss.csv", r.loss_curve, "E");
    log_info("train-mtrnn: E " + std::to_string(r.loss_curve.front()) + " -> " +
             std::to_string(r.loss_curve.back()));
}

inline TrainedModels load_trained_models(const std::string& dataset_dir,
                                         const std::string& cae_model,
                                         const std::string& mtrnn_model,
                                         const std::string& features_path) {
    TrainedModels m;
    m.cae = load_cae(cae_model);
    m.mtrnn = load_mtrnn(mtrnn_model);
    FeatureExtraction fx = load_features(features_path);
    m.scaling = fx.scaling;
    Dataset ds = load_dataset(dataset_dir);
    for (const SensorimotorSequence& seq : ds.sequences) m.tasks.push_back(seq.task);
    m.initial_joints = ds.sequences.at(0).joints.at(0);
    if (m.mtrnn.params.cs0_bank.size() != m.tasks.size()) {
        throw io_error("trained Cs(0) bank does not match dataset task count");
    }
    return m;
}

}  // namespace tooluse
