#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "tooluse/cae.hpp"
#include "tooluse/errors.hpp"
#include "tooluse/mtrnn.hpp"
#include "tooluse/pca.hpp"
#include "tooluse/png.hpp"
#include "tooluse/sim.hpp"

namespace tooluse {

struct DetectionVerdict {
    ToolKind tool = ToolKind::Stick;
    HeightClass object_height = HeightClass::Short;
    Action action;
    EffectLabel effect = EffectLabel::NoMovement;
    bool matched_expectation = false;
    int nearest_task_id = -1;
    double distance = 0.0;
};

// The expected (tool, object, action, effect) rows: a slide must come from a
// rake pulled low on a short object; no movement from a stick pulled low or
// a rake pulled high over a short object.
inline bool expectation_matches(ToolKind tool, HeightClass object_height, const Action& action,
                                EffectLabel effect) {
    struct Row {
        ToolKind tool;
        HeightClass height;
        Direction dir;
        Height act_height;
        EffectLabel effect;
    };
    static const Row rows[] = {
        {ToolKind::Rake, HeightClass::Short, Direction::Pull, Height::Low, EffectLabel::Slide},
        {ToolKind::Stick, HeightClass::Short, Direction::Pull, Height::Low,
         EffectLabel::NoMovement},
        {ToolKind::Rake, HeightClass::Short, Direction::Pull, Height::High,
         EffectLabel::NoMovement},
    };
    const EffectLabel canon = effect == EffectLabel::Roll ? EffectLabel::Slide : effect;
    for (const Row& r : rows) {
        if (r.tool == tool && r.height == object_height && r.dir == action.direction &&
            r.act_height == action.height && r.effect == canon) {
            return true;
        }
    }
    return false;
}

// Nearest trained Cs(0) decides the detected tool and action; object height
// and effect are read from the goal condition itself.
inline DetectionVerdict classify_recognized(const std::vector<double>& cs0_hat,
                                            const std::vector<std::vector<double>>& cs0_bank,
                                            const std::vector<TaskSpec>& tasks,
                                            HeightClass goal_object_height,
                                            EffectLabel goal_effect) {
    if (cs0_bank.empty() || cs0_bank.size() != tasks.size()) {
        throw dimension_error("classify_recognized: bank " + shape_string({cs0_bank.size()}) +
                              " vs tasks " + shape_string({tasks.size()}));
    }
    std::size_t best = 0;
    double best_d = euclidean(cs0_hat, cs0_bank[0]);
    for (std::size_t i = 1; i < cs0_bank.size(); ++i) {
        const double d = euclidean(cs0_hat, cs0_bank[i]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    DetectionVerdict v;
    v.tool = tasks[best].tool.kind;
    v.action = tasks[best].action;
    v.object_height = goal_object_height;
    v.effect = goal_effect;
    v.nearest_task_id = tasks[best].id;
    v.distance = best_d;
    v.matched_expectation = expectation_matches(v.tool, v.object_height, v.action, v.effect);
    return v;
}

inline nlohmann::json verdict_to_json(const DetectionVerdict& v) {
    nlohmann::json j;
    j["tool"] = to_string(v.tool);
    j["object_height"] = to_string(v.object_height);
    j["direction"] = to_string(v.action.direction);
    j["height"] = to_string(v.action.height);
    j["effect"] = to_string(v.effect);
    j["matched_expectation"] = v.matched_expectation;
    j["nearest_task_id"] = v.nearest_task_id;
    j["distance"] = v.distance;
    return j;
}

enum class Experiment { A, B };

struct ExperimentSpec {
    Experiment experiment = Experiment::A;
    ToolSpec tool;      // unknown rake variant by default
    ObjectSpec object;  // unknown short box variant
    std::uint64_t recognition_iterations = 3000;
    double recognition_alpha = 1e-2;
    double recognition_momentum = 0.0;
};

struct ExperimentResult {
    DetectionVerdict verdict;
    std::vector<double> cs0_hat;
    GeneratedSequence generated;
    std::vector<double> recognition_trace;
    Tensor decoded_first;
    Tensor decoded_last;
};

struct TrainedModels {
    CaeParams cae;
    MtrnnModel mtrnn;
    FeatureScaling scaling;
    std::vector<TaskSpec> tasks;        // aligned with mtrnn cs0 bank
    std::vector<double> initial_joints;  // shared frame-1 joint pose
};

// Full recognition protocol: render the unknown scene, encode initial and
// goal images, infer Cs(0) through the frozen network, generate the
// predicted sequence, and classify against the trained bank.
inline ExperimentResult run_experiment_ab(const TrainedModels& models, const ExperimentSpec& spec,
                                          const SimConfig& sim_cfg) {
    const EffectLabel goal_effect =
        spec.experiment == Experiment::A ? EffectLabel::Slide : EffectLabel::NoMovement;
    RecognitionImages images =
        make_recognition_target({spec.tool, spec.object}, goal_effect, sim_cfg);
    const std::vector<double> init_feat =
        models.scaling.rescale_clamped(encode(images.initial_image, models.cae));
    const std::vector<double> goal_feat =
        models.scaling.rescale_clamped(encode(images.goal_image, models.cae));

    const MtrnnConfig& cfg = models.mtrnn.config;
    const std::size_t img_count = models.cae.config.feature_dim;
    RecognitionTarget target;
    target.io0 = init_feat;
    target.io0.insert(target.io0.end(), models.initial_joints.begin(),
                      models.initial_joints.end());
    target.goal_image_features = goal_feat;
    target.iterations = spec.recognition_iterations;
    target.alpha = spec.recognition_alpha;
    target.momentum = spec.recognition_momentum;

    ExperimentResult result;
    RecognitionResult rec = recognize_cs0(target, models.mtrnn.params, cfg, img_count);
    result.cs0_hat = rec.cs0_hat;
    result.recognition_trace = std::move(rec.error_trace);
    result.generated =
        generate_from_recognition(result.cs0_hat, target.io0, models.mtrnn.params, cfg, img_count);
    result.verdict =
        classify_recognized(result.cs0_hat, models.mtrnn.params.cs0_bank, models.tasks,
                            height_class(spec.object.kind), goal_effect);

    auto decode_frame = [&](const Frame& frame) {
        std::vector<double> feat(frame.begin(), frame.begin() + img_count);
        std::vector<double> raw(feat.size());
        for (std::size_t k = 0; k < feat.size(); ++k) {
            raw[k] = models.scaling.inverse_one(feat[k], k);
        }
        return decode(raw, models.cae);
    };
    result.decoded_first = decode_frame(result.generated.frames.front());
    result.decoded_last = decode_frame(result.generated.frames.back());
    return result;
}

// File outputs for one experiment run: verdict.json, trajectory.csv,
// recognition_trace.csv and a decoded predicted-image strip.
inline void write_experiment_outputs(const std::string& out_dir, const ExperimentResult& result,
                                     const TrainedModels& models,
                                     const std::vector<std::vector<double>>& target_joints) {
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream os = open_output(out_dir + "/verdict.json", false);
        os << verdict_to_json(result.verdict).dump(2) << "\n";
    }
    {
        std::ofstream os = open_output(out_dir + "/trajectory.csv", false);
        os << "frame";
        for (int k = 0; k < 6; ++k) os << ",gen_j" << k;
        for (int k = 0; k < 6; ++k) os << ",target_j" << k;
        os << "\n";
        const auto gen_joints = result.generated.joints();
        for (std::size_t t = 0; t < gen_joints.size(); ++t) {
            os << t;
            for (double v : gen_joints[t]) os << "," << v;
            if (t < target_joints.size()) {
                for (double v : target_joints[t]) os << "," << v;
            } else {
                for (int k = 0; k < 6; ++k) os << ",";
            }
            os << "\n";
        }
    }
    {
        std::ofstream os = open_output(out_dir + "/recognition_trace.csv", false);
        os << "iteration,E\n";
        for (std::size_t i = 0; i < result.recognition_trace.size(); ++i) {
            os << i << "," << result.recognition_trace[i] << "\n";
        }
    }
    const std::size_t img_count = models.cae.config.feature_dim;
    std::vector<Tensor> strip;
    const std::size_t T = result.generated.frames.size();
    for (std::size_t t = 0; t < T; t += std::max<std::size_t>(1, T / 8)) {
        std::vector<double> feat(result.generated.frames[t].begin(),
                                 result.generated.frames[t].begin() + img_count);
        std::vector<double> raw(feat.size());
        for (std::size_t k = 0; k < feat.size(); ++k) {
            raw[k] = models.scaling.inverse_one(feat[k], k);
        }
        strip.push_back(decode(raw, models.cae));
    }
    strip.push_back(result.decoded_last);
    write_png_strip(out_dir + "/predicted_frames.png", strip);
}

// PCA projection rows for every trained task, written as CSV alongside the
// numeric model.
inline void write_pca_projection(const std::string& path, const PcaModel& model,
                                 const std::vector<std::vector<double>>& cs0_bank,
                                 const std::vector<TaskSpec>& tasks) {
    std::ofstream os = open_output(path, false);
    os << "task_id,tool,object,direction,height";
    for (std::size_t k = 0; k < model.axes.size(); ++k) os << ",pc" << (k + 1);
    os << "\n";
    for (std::size_t i = 0; i < cs0_bank.size(); ++i) {
        const std::vector<double> proj = pca_project(model, cs0_bank[i]);
        os << tasks[i].id << "," << to_string(tasks[i].tool.kind) << ","
           << to_string(tasks[i].object.kind) << "," << to_string(tasks[i].action.direction) << ","
           << to_string(tasks[i].action.height);
        for (double v : proj) os << "," << v;
        os << "\n";
    }
}

}  // namespace tooluse
