#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "tooluse/errors.hpp"
#include "tooluse/random.hpp"
#include "tooluse/serialize.hpp"
#include "tooluse/tensor.hpp"

namespace tooluse {

enum class ToolKind { Stick, Rake };
enum class ObjectKind { Ball, TallBox, ShortBox, TallCylinder, ShortCylinder };
enum class Direction { Push, Pull };
enum class Height { High, Low };
enum class EffectLabel { Slide, Topple, Roll, NoMovement };
enum class HeightClass { Short, Tall };

struct Rgb {
    double r, g, b;
};

// Trained tool shapes plus bounded geometry overrides for the "unknown"
// evaluation variants.
struct ToolSpec {
    ToolKind kind = ToolKind::Stick;
    double head_width_scale = 1.0;
    double shaft_scale = 1.0;
    double color_shift = 0.0;

    void validate() const {
        if (head_width_scale < 0.7 || head_width_scale > 1.3 || shaft_scale < 0.7 ||
            shaft_scale > 1.3) {
            throw std::domain_error("ToolSpec: variant geometry outside +-30% of defaults");
        }
    }
};

struct ObjectSpec {
    ObjectKind kind = ObjectKind::Ball;
    double size_scale = 1.0;
    std::optional<Rgb> color_override;

    void validate() const {
        if (size_scale < 0.7 || size_scale > 1.3) {
            throw std::domain_error("ObjectSpec: variant size outside +-30% of defaults");
        }
    }
};

struct Action {
    Direction direction = Direction::Pull;
    Height height = Height::Low;
};

struct Effect {
    EffectLabel label = EffectLabel::NoMovement;
    double toward_robot = 0.0;  // table-plane displacement components
    double lateral = 0.0;
    bool toppled = false;
};

struct TaskSpec {
    int id = 0;
    ToolSpec tool;
    ObjectSpec object;
    Action action;
    bool forbidden = false;
};

inline HeightClass height_class(ObjectKind k) {
    return (k == ObjectKind::TallBox || k == ObjectKind::TallCylinder) ? HeightClass::Tall
                                                                       : HeightClass::Short;
}

inline const char* to_string(ToolKind k) { return k == ToolKind::Stick ? "stick" : "rake"; }
inline const char* to_string(ObjectKind k) {
    switch (k) {
        case ObjectKind::Ball: return "ball";
        case ObjectKind::TallBox: return "tall_box";
        case ObjectKind::ShortBox: return "short_box";
        case ObjectKind::TallCylinder: return "tall_cylinder";
        default: return "short_cylinder";
    }
}
inline const char* to_string(Direction d) { return d == Direction::Push ? "push" : "pull"; }
inline const char* to_string(Height h) { return h == Height::High ? "high" : "low"; }
inline const char* to_string(EffectLabel e) {
    switch (e) {
        case EffectLabel::Slide: return "slide";
        case EffectLabel::Topple: return "topple";
        case EffectLabel::Roll: return "roll";
        default: return "no_movement";
    }
}
inline const char* to_string(HeightClass h) { return h == HeightClass::Tall ? "tall" : "short"; }

inline bool is_forbidden(ObjectKind object, const Action& a) {
    return a.direction == Direction::Pull && a.height == Height::Low &&
           height_class(object) == HeightClass::Tall;
}

// Full 2 x 5 x 4 grid in a fixed order; 4 pull-low-on-tall entries are
// flagged forbidden, leaving 36 executable tasks.
inline std::vector<TaskSpec> enumerate_tasks() {
    std::vector<TaskSpec> tasks;
    int id = 0;
    for (ToolKind tool : {ToolKind::Stick, ToolKind::Rake}) {
        for (ObjectKind object : {ObjectKind::Ball, ObjectKind::TallBox, ObjectKind::ShortBox,
                                  ObjectKind::TallCylinder, ObjectKind::ShortCylinder}) {
            for (Direction dir : {Direction::Push, Direction::Pull}) {
                for (Height h : {Height::High, Height::Low}) {
                    TaskSpec t;
                    t.id = id++;
                    t.tool.kind = tool;
                    t.object.kind = object;
                    t.action = {dir, h};
                    t.forbidden = is_forbidden(object, t.action);
                    tasks.push_back(t);
                }
            }
        }
    }
    return tasks;
}

inline std::vector<TaskSpec> executable_tasks() {
    std::vector<TaskSpec> out;
    for (const TaskSpec& t : enumerate_tasks()) {
        if (!t.forbidden) out.push_back(t);
    }
    return out;
}

// ---- scene geometry (world coordinates x,y in [0,1], y up, robot at right) ----

namespace scene {

constexpr double kTableTop = 0.25;
constexpr double kObjectRestX = 0.45;
constexpr double kRestTipX = 0.74;
constexpr double kTravelY = 0.68;
constexpr double kLowTipY = 0.28;
constexpr double kHighTipY = 0.50;
constexpr double kStroke = 0.26;
constexpr double kRetreatLift = 0.16;
constexpr double kShaftHalfWidth = 0.012;
constexpr double kShaftLength = 0.30;
constexpr double kRakeHeadHalfWidth = 0.055;
constexpr double kRakeHeadHeight = 0.035;
constexpr double kArmHalfWidth = 0.02;
constexpr double kArmTop = 0.98;
// Stroke start offset from the object rest position: clears the widest
// trained object and tool head with a small margin.
constexpr double kApproachOffset = 0.12 + 0.055 + 0.02;

struct ObjectShape {
    double half_width;
    double height;
    bool round;  // ball
    bool rounded_top;
};

inline ObjectShape object_shape(const ObjectSpec& o) {
    ObjectShape s{};
    switch (o.kind) {
        case ObjectKind::Ball: s = {0.06, 0.12, true, false}; break;
        case ObjectKind::TallBox: s = {0.12, 0.36, false, false}; break;
        case ObjectKind::ShortBox: s = {0.12, 0.12, false, false}; break;
        case ObjectKind::TallCylinder: s = {0.09, 0.36, false, true}; break;
        case ObjectKind::ShortCylinder: s = {0.09, 0.12, false, true}; break;
    }
    s.half_width *= o.size_scale;
    s.height *= o.size_scale;
    return s;
}

inline Rgb object_color(const ObjectSpec& o) {
    if (o.color_override) return *o.color_override;
    switch (o.kind) {
        case ObjectKind::Ball: return {0.85, 0.20, 0.20};
        case ObjectKind::TallBox: return {0.20, 0.35, 0.85};
        case ObjectKind::ShortBox: return {0.20, 0.75, 0.85};
        case ObjectKind::TallCylinder: return {0.20, 0.75, 0.30};
        default: return {0.80, 0.80, 0.25};
    }
}

inline Rgb tool_color(const ToolSpec& t) {
    Rgb base = t.kind == ToolKind::Stick ? Rgb{0.62, 0.62, 0.66} : Rgb{0.68, 0.58, 0.48};
    base.r += t.color_shift;
    base.g += t.color_shift;
    base.b += t.color_shift;
    return base;
}

constexpr Rgb kBackground{0.10, 0.12, 0.16};
constexpr Rgb kTable{0.35, 0.22, 0.12};
constexpr Rgb kArm{0.30, 0.30, 0.34};

// Horizontal half-extent of the part of the tool that meets objects.
inline double working_half_width(const ToolSpec& t) {
    return t.kind == ToolKind::Rake ? kRakeHeadHalfWidth * t.head_width_scale : kShaftHalfWidth;
}

inline double stroke_start_x(Direction dir) {
    return dir == Direction::Pull ? kObjectRestX - kApproachOffset : kObjectRestX + kApproachOffset;
}

// Gap between the tool's working edge and the object at stroke start; the
// object begins to move once the sweep has covered it.
inline double contact_gap(const ToolSpec& tool, const ObjectSpec& object, Direction dir) {
    const double hw = object_shape(object).half_width;
    const double work = working_half_width(tool);
    const double start = stroke_start_x(dir);
    const double gap = dir == Direction::Pull ? (kObjectRestX - hw) - (start + work)
                                              : (start - work) - (kObjectRestX + hw);
    return std::max(gap, 0.0);
}

}  // namespace scene

// Effect rule table. Only the rake can hook objects when pulling; both tools
// push; high actions reach tall objects only; pushed tall objects topple.
// Slide/Roll displacement is the stroke length minus the approach gap.
inline Effect effect_of(const ToolSpec& tool, const ObjectSpec& object, const Action& action) {
    if (is_forbidden(object.kind, action)) {
        throw std::domain_error("effect_of: pulling tall objects at a low position is forbidden");
    }
    const bool tall = height_class(object.kind) == HeightClass::Tall;
    const bool ball = object.kind == ObjectKind::Ball;
    Effect e;
    if (action.direction == Direction::Pull) {
        const bool engages = (action.height == Height::Low) ? true : tall;
        if (tool.kind == ToolKind::Rake && engages) {
            e.label = ball ? EffectLabel::Roll : EffectLabel::Slide;
            e.toward_robot = scene::kStroke - scene::contact_gap(tool, object, action.direction);
        } else {
            e.label = EffectLabel::NoMovement;
        }
    } else {
        if (action.height == Height::Low) {
            e.label = ball ? EffectLabel::Roll : EffectLabel::Slide;
            e.lateral = scene::kStroke - scene::contact_gap(tool, object, action.direction);
        } else if (tall) {
            e.label = EffectLabel::Topple;
            e.toppled = true;
        } else {
            e.label = EffectLabel::NoMovement;
        }
    }
    return e;
}

struct WorldState {
    ToolSpec tool;
    ObjectSpec object;
    double tip_x = scene::kRestTipX;
    double tip_y = scene::kTravelY;
    double object_x = scene::kObjectRestX;
    double fall_progress = 0.0;  // 0 upright, 1 fully toppled
    bool show_tool = true;
    bool show_object = true;
    bool contact = false;
};

namespace scene {

// Current object box accounting for the fall animation (a toppled object
// lies on its side: width and height swap as fall_progress goes 0 -> 1).
struct Box {
    double x0, x1, y0, y1;
};

inline Box object_box(const WorldState& w) {
    const ObjectShape s = object_shape(w.object);
    const double p = w.fall_progress;
    const double hw = (1.0 - p) * s.half_width + p * (s.height / 2.0);
    const double h = (1.0 - p) * s.height + p * (2.0 * s.half_width);
    return {w.object_x - hw, w.object_x + hw, kTableTop, kTableTop + h};
}

inline Box tool_working_box(const WorldState& w) {
    const double hw = working_half_width(w.tool);
    const double hh = w.tool.kind == ToolKind::Rake ? kRakeHeadHeight : kShaftLength * 0.4;
    return {w.tip_x - hw, w.tip_x + hw, w.tip_y, w.tip_y + hh};
}

inline bool boxes_touch(const Box& a, const Box& b) {
    const double eps = 1e-9;
    return a.x0 <= b.x1 + eps && b.x0 <= a.x1 + eps && a.y0 <= b.y1 + eps && b.y0 <= a.y1 + eps;
}

}  // namespace scene

inline bool tool_object_contact(const WorldState& w) {
    if (!w.show_tool || !w.show_object) return false;
    return scene::boxes_touch(scene::tool_working_box(w), scene::object_box(w));
}

struct SimConfig {
    std::size_t width = 32;
    std::size_t height = 24;
    std::size_t channels = 3;
    std::size_t supersample = 2;
    std::size_t frames = 144;
    double joint_noise_std = 0.0;  // optional seeded jitter, off by default

    void validate() const {
        if (width < 8 || height < 8) throw dimension_error("SimConfig: image too small");
        if (channels != 3) throw dimension_error("SimConfig: only RGB supported");
        if (supersample < 1) throw dimension_error("SimConfig: supersample must be >= 1");
        if (frames < 2) throw dimension_error("SimConfig: need at least 2 frames");
    }
};

// Flat-shaded orthographic raster of one world state; values in [0,1].
inline Tensor render(const WorldState& w, const SimConfig& cfg) {
    cfg.validate();
    const std::size_t W = cfg.width, H = cfg.height, ss = cfg.supersample;
    Tensor img = Tensor::zeros({3, H, W});
    const scene::ObjectShape oshape = scene::object_shape(w.object);
    const scene::Box obox = scene::object_box(w);
    const Rgb ocolor = scene::object_color(w.object);
    const Rgb tcolor = scene::tool_color(w.tool);
    const double ball_r = oshape.half_width;
    const double ball_cy = scene::kTableTop + ball_r;
    const double shaft_len = scene::kShaftLength * w.tool.shaft_scale;
    const double head_hw = scene::kRakeHeadHalfWidth * w.tool.head_width_scale;
    const double corner_r = 0.025;

    auto sample = [&](double x, double y) -> Rgb {
        Rgb c = y < scene::kTableTop ? scene::kTable : scene::kBackground;
        if (w.show_object) {
            bool inside = false;
            if (oshape.round) {
                const double dx = x - w.object_x, dy = y - ball_cy;
                inside = dx * dx + dy * dy <= ball_r * ball_r;
            } else {
                inside = x >= obox.x0 && x <= obox.x1 && y >= obox.y0 && y <= obox.y1;
                if (inside && oshape.rounded_top && w.fall_progress == 0.0 &&
                    (x < obox.x0 + corner_r || x > obox.x1 - corner_r) && y > obox.y1 - corner_r) {
                    const double cx = x < w.object_x ? obox.x0 + corner_r : obox.x1 - corner_r;
                    const double ddx = x - cx, ddy = y - (obox.y1 - corner_r);
                    inside = ddx * ddx + ddy * ddy <= corner_r * corner_r;
                }
            }
            if (inside) c = ocolor;
        }
        if (w.show_tool) {
            // arm above the shaft
            if (std::abs(x - w.tip_x) <= scene::kArmHalfWidth && y >= w.tip_y + shaft_len &&
                y <= scene::kArmTop) {
                c = scene::kArm;
            }
            // shaft
            if (std::abs(x - w.tip_x) <= scene::kShaftHalfWidth && y >= w.tip_y &&
                y <= w.tip_y + shaft_len) {
                c = tcolor;
            }
            // rake head
            if (w.tool.kind == ToolKind::Rake && std::abs(x - w.tip_x) <= head_hw &&
                y >= w.tip_y && y <= w.tip_y + scene::kRakeHeadHeight) {
                c = tcolor;
            }
        }
        return c;
    };

    const double inv_ss = 1.0 / static_cast<double>(ss);
    for (std::size_t r = 0; r < H; ++r) {
        for (std::size_t col = 0; col < W; ++col) {
            double acc_r = 0.0, acc_g = 0.0, acc_b = 0.0;
            for (std::size_t sy = 0; sy < ss; ++sy) {
                for (std::size_t sx = 0; sx < ss; ++sx) {
                    const double x = (static_cast<double>(col) + (sx + 0.5) * inv_ss) /
                                     static_cast<double>(W);
                    const double y = 1.0 - (static_cast<double>(r) + (sy + 0.5) * inv_ss) /
                                               static_cast<double>(H);
                    const Rgb c = sample(x, y);
                    acc_r += c.r;
                    acc_g += c.g;
                    acc_b += c.b;
                }
            }
            const double norm = inv_ss * inv_ss;
            img.data[(0 * H + r) * W + col] = acc_r * norm;
            img.data[(1 * H + r) * W + col] = acc_g * norm;
            img.data[(2 * H + r) * W + col] = acc_b * norm;
        }
    }
    return img;
}

namespace detail {

inline double smooth01(double s) {
    s = std::clamp(s, 0.0, 1.0);
    return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));  // minimum-jerk ease
}

// Phase boundaries scale with the frame count so short test sequences stay
// well formed.
struct PhasePlan {
    std::size_t rest_end, travel_end, descend_end, stroke_end, retreat_end;

    explicit PhasePlan(std::size_t frames) {
        rest_end = frames * 8 / 144;
        travel_end = frames * 46 / 144;
        descend_end = frames * 68 / 144;
        stroke_end = frames * 120 / 144;
        retreat_end = frames * 132 / 144;
    }
};

inline double phase_progress(std::size_t frame, std::size_t begin, std::size_t end) {
    if (end <= begin) return frame >= end ? 1.0 : 0.0;
    if (frame < begin) return 0.0;
    if (frame >= end) return 1.0;
    return smooth01(static_cast<double>(frame - begin) / static_cast<double>(end - begin));
}

// The tool-tip path is a function of the action alone, so recorded joints and
// rendered arm positions agree across objects and tools.
struct TipPose {
    double x, y;
};

inline TipPose tip_pose(const Action& action, std::size_t frame, const PhasePlan& plan) {
    const double travel = phase_progress(frame, plan.rest_end, plan.travel_end);
    const double descend = phase_progress(frame, plan.travel_end, plan.descend_end);
    const double stroke = phase_progress(frame, plan.descend_end, plan.stroke_end);
    const double retreat = phase_progress(frame, plan.stroke_end, plan.retreat_end);
    const double start_x = scene::stroke_start_x(action.direction);
    const double work_y = action.height == Height::Low ? scene::kLowTipY : scene::kHighTipY;
    const double stroke_sign = action.direction == Direction::Pull ? 1.0 : -1.0;
    TipPose p;
    p.x = scene::kRestTipX + (start_x - scene::kRestTipX) * travel +
          stroke_sign * scene::kStroke * stroke;
    p.y = scene::kTravelY + (work_y - scene::kTravelY) * descend + scene::kRetreatLift * retreat;
    return p;
}

}  // namespace detail

// Per-frame world states for one task. Objects move only while the stroke
// keeps the tool against them; toppling objects fall in place.
inline std::vector<WorldState> trajectory_states(const TaskSpec& task, const SimConfig& cfg) {
    cfg.validate();
    if (task.forbidden) {
        throw std::domain_error("trajectory_states: task " + std::to_string(task.id) +
                                " is forbidden");
    }
    const Effect effect = effect_of(task.tool, task.object, task.action);
    const double gap = scene::contact_gap(task.tool, task.object, task.action.direction);
    const double stroke_sign = task.action.direction == Direction::Pull ? 1.0 : -1.0;
    const bool moves = effect.label == EffectLabel::Slide || effect.label == EffectLabel::Roll;
    const detail::PhasePlan plan(cfg.frames);
    std::vector<WorldState> states(cfg.frames);
    for (std::size_t f = 0; f < cfg.frames; ++f) {
        WorldState w;
        w.tool = task.tool;
        w.object = task.object;
        const detail::TipPose tip = detail::tip_pose(task.action, f, plan);
        w.tip_x = tip.x;
        w.tip_y = tip.y;
        const double stroke = detail::phase_progress(f, plan.descend_end, plan.stroke_end);
        const double swept = scene::kStroke * stroke;
        w.object_x = scene::kObjectRestX;
        if (moves && swept > gap) w.object_x += stroke_sign * (swept - gap);
        if (effect.toppled) {
            // The fall spans a quarter of the stroke after first touch.
            const double fall_span = 0.25 * scene::kStroke;
            w.fall_progress = detail::smooth01((swept - gap) / fall_span);
        }
        w.contact = tool_object_contact(w);
        states[f] = w;
    }
    return states;
}

// 6-dof joint vectors derived from the tool-tip path plus smooth
// action-specific signatures, all within [-0.8, 0.8].
inline std::vector<std::vector<double>> joint_trajectory(const Action& action,
                                                         const Effect& effect,
                                                         const SimConfig& cfg) {
    (void)effect;  // arm motion does not depend on whether the object moved
    cfg.validate();
    const detail::PhasePlan plan(cfg.frames);
    const double dir_sign = action.direction == Direction::Pull ? 1.0 : -1.0;
    const double height_sign = action.height == Height::High ? 1.0 : -1.0;
    std::vector<std::vector<double>> joints(cfg.frames, std::vector<double>(6, 0.0));
    for (std::size_t f = 0; f < cfg.frames; ++f) {
        const detail::TipPose tip = detail::tip_pose(action, f, plan);
        const double stroke = detail::phase_progress(f, plan.descend_end, plan.stroke_end);
        const double descend = detail::phase_progress(f, plan.travel_end, plan.descend_end);
        const double travel = detail::phase_progress(f, plan.rest_end, plan.travel_end);
        const double overall = detail::phase_progress(f, plan.rest_end, plan.retreat_end);
        joints[f][0] = (tip.x - 0.5) * 1.5;
        joints[f][1] = (tip.y - 0.48) * 2.0;
        joints[f][2] = dir_sign * stroke * 0.5;
        joints[f][3] = height_sign * descend * 0.4;
        joints[f][4] = travel * (action.direction == Direction::Pull ? 0.3 : 0.21);
        joints[f][5] = overall * 0.5;
    }
    return joints;
}

struct SensorimotorSequence {
    TaskSpec task;
    std::vector<Tensor> images;               // frames x (C,H,W) in [0,1]
    std::vector<std::vector<double>> joints;  // frames x 6 in [-0.8, 0.8]
};

inline SensorimotorSequence simulate(const TaskSpec& task, const SimConfig& cfg,
                                     std::uint64_t seed = 0) {
    if (task.forbidden) {
        throw std::domain_error("simulate: task " + std::to_string(task.id) + " is forbidden");
    }
    task.tool.validate();
    task.object.validate();
    const Effect effect = effect_of(task.tool, task.object, task.action);
    SensorimotorSequence seq;
    seq.task = task;
    const std::vector<WorldState> states = trajectory_states(task, cfg);
    seq.joints = joint_trajectory(task.action, effect, cfg);
    if (cfg.joint_noise_std > 0.0) {
        Rng rng(derive_seed(seed, "joint-noise"));
        for (auto& frame : seq.joints) {
            for (double& v : frame) {
                v = std::clamp(v + cfg.joint_noise_std * (rng.uniform() * 2.0 - 1.0), -0.8, 0.8);
            }
        }
    }
    seq.images.reserve(cfg.frames);
    for (const WorldState& w : states) seq.images.push_back(render(w, cfg));
    return seq;
}

struct RecognitionScene {
    ToolSpec tool;
    ObjectSpec object;
};

struct RecognitionImages {
    Tensor initial_image;
    Tensor goal_image;
};

// Initial frame shows the rest pose; the goal frame shows the pull-low final
// arm pose with the object either displaced toward the robot (slide/roll) or
// untouched. Both experiment variants share the same goal arm pose.
inline RecognitionImages make_recognition_target(const RecognitionScene& scene_spec,
                                                 EffectLabel goal_effect, const SimConfig& cfg) {
    scene_spec.tool.validate();
    scene_spec.object.validate();
    WorldState initial;
    initial.tool = scene_spec.tool;
    initial.object = scene_spec.object;

    WorldState goal = initial;
    goal.tip_x = scene::stroke_start_x(Direction::Pull) + scene::kStroke;
    goal.tip_y = scene::kLowTipY + scene::kRetreatLift;
    if (goal_effect == EffectLabel::Slide || goal_effect == EffectLabel::Roll) {
        const double gap = scene::contact_gap(scene_spec.tool, scene_spec.object, Direction::Pull);
        goal.object_x = scene::kObjectRestX + (scene::kStroke - gap);
    }
    return {render(initial, cfg), render(goal, cfg)};
}

// ---- dataset directory (manifest.json + one SMS1 file per task) ----

inline void save_sequence(const std::string& path, const SensorimotorSequence& seq) {
    std::ofstream os = open_output(path);
    write_magic(os, "SMS1");
    const Tensor& first = seq.images.at(0);
    write_u32(os, static_cast<std::uint32_t>(seq.images.size()));
    write_u32(os, static_cast<std::uint32_t>(first.shape[0]));
    write_u32(os, static_cast<std::uint32_t>(first.shape[1]));
    write_u32(os, static_cast<std::uint32_t>(first.shape[2]));
    write_u32(os, static_cast<std::uint32_t>(seq.joints.at(0).size()));
    for (std::size_t f = 0; f < seq.images.size(); ++f) {
        write_f32_array(os, seq.images[f].data);
        write_f32_array(os, seq.joints[f]);
    }
    if (!os) throw io_error("write failed: " + path);
}

inline SensorimotorSequence load_sequence(const std::string& path) {
    std::ifstream is = open_input(path);
    expect_magic(is, "SMS1", path);
    const std::uint32_t frames = read_u32(is, path);
    const std::uint32_t c = read_u32(is, path);
    const std::uint32_t h = read_u32(is, path);
    const std::uint32_t w = read_u32(is, path);
    const std::uint32_t jd = read_u32(is, path);
    SensorimotorSequence seq;
    seq.images.reserve(frames);
    seq.joints.reserve(frames);
    for (std::uint32_t f = 0; f < frames; ++f) {
        Tensor img;
        img.shape = {c, h, w};
        read_f32_array(is, img.data, static_cast<std::size_t>(c) * h * w, path);
        seq.images.push_back(std::move(img));
        std::vector<double> joints;
        read_f32_array(is, joints, jd, path);
        seq.joints.push_back(std::move(joints));
    }
    return seq;
}

inline std::string task_file_name(int id) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "task_%02d.sms", id);
    return buf;
}

inline nlohmann::json task_to_json(const TaskSpec& t) {
    nlohmann::json j;
    j["id"] = t.id;
    j["tool"] = to_string(t.tool.kind);
    j["object"] = to_string(t.object.kind);
    j["direction"] = to_string(t.action.direction);
    j["height"] = to_string(t.action.height);
    j["forbidden"] = t.forbidden;
    if (!t.forbidden) {
        const Effect e = effect_of(t.tool, t.object, t.action);
        j["effect"] = to_string(e.label);
    }
    return j;
}

inline TaskSpec task_from_json(const nlohmann::json& j) {
    TaskSpec t;
    t.id = j.at("id").get<int>();
    const std::string tool = j.at("tool").get<std::string>();
    t.tool.kind = tool == "stick" ? ToolKind::Stick : ToolKind::Rake;
    const std::string obj = j.at("object").get<std::string>();
    if (obj == "ball") t.object.kind = ObjectKind::Ball;
    else if (obj == "tall_box") t.object.kind = ObjectKind::TallBox;
    else if (obj == "short_box") t.object.kind = ObjectKind::ShortBox;
    else if (obj == "tall_cylinder") t.object.kind = ObjectKind::TallCylinder;
    else t.object.kind = ObjectKind::ShortCylinder;
    t.action.direction = j.at("direction").get<std::string>() == "push" ? Direction::Push
                                                                        : Direction::Pull;
    t.action.height = j.at("height").get<std::string>() == "high" ? Height::High : Height::Low;
    t.forbidden = j.at("forbidden").get<bool>();
    return t;
}

struct Dataset {
    SimConfig config;
    std::uint64_t seed = 0;
    std::vector<SensorimotorSequence> sequences;  // executable tasks, grid order
};

inline void save_dataset(const std::string& dir, const Dataset& ds) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["format"] = "tooluse-dataset-v1";
    manifest["image"] = {{"width", ds.config.width},
                         {"height", ds.config.height},
                         {"channels", ds.config.channels},
                         {"supersample", ds.config.supersample}};
    manifest["frames"] = ds.config.frames;
    manifest["joint_dim"] = 6;
    manifest["joint_range"] = {-0.8, 0.8};
    manifest["joint_noise_std"] = ds.config.joint_noise_std;
    manifest["seed"] = ds.seed;
    nlohmann::json tasks = nlohmann::json::array();
    for (const SensorimotorSequence& seq : ds.sequences) {
        nlohmann::json t = task_to_json(seq.task);
        t["file"] = task_file_name(seq.task.id);
        tasks.push_back(t);
        save_sequence(dir + "/" + task_file_name(seq.task.id), seq);
    }
    manifest["tasks"] = tasks;
    std::ofstream os = open_output(dir + "/manifest.json", false);
    os << manifest.dump(2) << "\n";
    if (!os) throw io_error("write failed: " + dir + "/manifest.json");
}

inline Dataset load_dataset(const std::string& dir) {
    std::ifstream is = open_input(dir + "/manifest.json", false);
    nlohmann::json manifest;
    is >> manifest;
    Dataset ds;
    ds.config.width = manifest.at("image").at("width").get<std::size_t>();
    ds.config.height = manifest.at("image").at("height").get<std::size_t>();
    ds.config.channels = manifest.at("image").at("channels").get<std::size_t>();
    ds.config.supersample = manifest.at("image").at("supersample").get<std::size_t>();
    ds.config.frames = manifest.at("frames").get<std::size_t>();
    ds.config.joint_noise_std = manifest.value("joint_noise_std", 0.0);
    ds.seed = manifest.at("seed").get<std::uint64_t>();
    for (const nlohmann::json& tj : manifest.at("tasks")) {
        SensorimotorSequence seq = load_sequence(dir + "/" + tj.at("file").get<std::string>());
        seq.task = task_from_json(tj);
        ds.sequences.push_back(std::move(seq));
    }
    return ds;
}

// Dataset generation over all executable tasks, in grid order.
inline Dataset generate_dataset(const SimConfig& cfg, std::uint64_t seed) {
    Dataset ds;
    ds.config = cfg;
    ds.seed = seed;
    for (const TaskSpec& task : executable_tasks()) {
        ds.sequences.push_back(
            simulate(task, cfg, derive_seed(seed, "task-" + std::to_string(task.id))));
    }
    return ds;
}

}  // namespace tooluse
