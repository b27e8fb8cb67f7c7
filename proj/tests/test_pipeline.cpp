#include <gtest/gtest.h>

#include <filesystem>

#include "tooluse/pipeline.hpp"

using namespace tooluse;

namespace fs = std::filesystem;

namespace {

// Shrunken config for end-to-end smoke runs: tiny images, short sequences,
// few iterations. Structure identical to the desk preset.
PipelineConfig mini_config() {
    PipelineConfig c = PipelineConfig::desk();
    c.sim.width = 16;
    c.sim.height = 12;
    c.sim.frames = 24;
    c.cae.image_width = 16;
    c.cae.image_height = 12;
    c.cae.feature_dim = 6;
    c.cae.conv_layers = {{4, 3, 2}, {6, 3, 1}};
    c.cae.fc_layers = {24};
    c.cae_train.iterations = 30;
    c.cae_train.batch_size = 8;
    c.mtrnn.io_count = 12;
    c.mtrnn.cf_count = 10;
    c.mtrnn.cs_count = 3;
    c.mtrnn.seq_len = 24;
    c.mtrnn_train.iterations = 20;
    c.recognition_iterations = 10;
    return c;
}

bool same_file_bytes(const fs::path& a, const fs::path& b) {
    return read_file_bytes(a.string()) == read_file_bytes(b.string());
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST(Presets, PaperPinsPaperDimensions) {
    PipelineConfig c = PipelineConfig::paper();
    EXPECT_EQ(c.sim.width, 64u);
    EXPECT_EQ(c.sim.height, 48u);
    EXPECT_EQ(c.cae.feature_dim, 20u);
    EXPECT_EQ(c.mtrnn.io_count, 26u);
    EXPECT_EQ(c.mtrnn.cf_count, 50u);
    EXPECT_EQ(c.mtrnn.cs_count, 6u);
    EXPECT_EQ(c.mtrnn.tau_io, 1.0);
    EXPECT_EQ(c.mtrnn.tau_cf, 5.0);
    EXPECT_EQ(c.mtrnn.tau_cs, 40.0);
    EXPECT_EQ(c.mtrnn.seq_len, 144u);
    EXPECT_EQ(c.cae_train.iterations, 150000u);
    EXPECT_EQ(c.mtrnn_train.iterations, 150000u);
    EXPECT_EQ(c.recognition_iterations, 150000u);
    c.validate();
}

TEST(Presets, DeskStaysWithinIterationBudget) {
    PipelineConfig c = PipelineConfig::desk();
    EXPECT_EQ(c.sim.width, 32u);
    EXPECT_EQ(c.sim.height, 24u);
    EXPECT_LE(c.cae_train.iterations, 20000u);
    EXPECT_LE(c.mtrnn_train.iterations, 20000u);
    c.validate();
}

TEST(Config, JsonRoundTripPreservesFields) {
    PipelineConfig c = PipelineConfig::desk();
    c.seed = 424242;
    c.threads = 3;
    c.mtrnn_train.alpha = 7e-6;
    nlohmann::json j = pipeline_to_json(c);
    PipelineConfig back = pipeline_from_json(j);
    EXPECT_EQ(back.seed, c.seed);
    EXPECT_EQ(back.threads, c.threads);
    EXPECT_EQ(back.mtrnn_train.alpha, c.mtrnn_train.alpha);
    EXPECT_EQ(back.sim.width, c.sim.width);
    EXPECT_EQ(back.cae.conv_layers.size(), c.cae.conv_layers.size());
}

TEST(Config, EmptyDocumentIsDeskPreset) {
    PipelineConfig c = pipeline_from_json(nlohmann::json::object());
    EXPECT_EQ(c.preset, "desk");
    EXPECT_EQ(c.sim.width, 32u);
    c.validate();
}

TEST(Config, MismatchedDimensionsRejected) {
    PipelineConfig c = PipelineConfig::desk();
    c.cae.image_width = 64;
    EXPECT_THROW(c.validate(), dimension_error);
    c = PipelineConfig::desk();
    c.mtrnn.io_count = 10;
    EXPECT_THROW(c.validate(), dimension_error);
}

TEST(Features, FileRoundTrip) {
    FeatureExtraction fx;
    fx.untrained_warning = true;
    fx.scaling.min_v = {-0.5, -0.25};
    fx.scaling.max_v = {0.5, 1.0};
    fx.sequences = {{{0.1, 0.2}, {-0.3, 0.4}}, {{0.5, -0.6}, {0.7, 0.8}}};
    TempDir tmp("tooluse_features_test");
    const std::string path = (tmp.path / "features.bin").string();
    save_features(path, fx);
    FeatureExtraction back = load_features(path);
    EXPECT_TRUE(back.untrained_warning);
    EXPECT_EQ(back.sequences.size(), 2u);
    EXPECT_EQ(back.sequences[0].size(), 2u);
    EXPECT_NEAR(back.sequences[1][0][1], -0.6, 1e-6);
    EXPECT_NEAR(back.scaling.max_v[1], 1.0, 1e-6);
}

TEST(Features, BadMagicNamesFile) {
    TempDir tmp("tooluse_features_bad");
    const std::string path = (tmp.path / "bogus.bin").string();
    {
        std::ofstream os(path, std::ios::binary);
        os << "WHATwhat";
    }
    try {
        load_features(path);
        FAIL() << "expected io_error";
    } catch (const io_error& e) {
        EXPECT_NE(std::string(e.what()).find("bogus.bin"), std::string::npos);
    }
}

TEST(Pipeline, GenDataIsByteDeterministic) {
    PipelineConfig cfg = mini_config();
    TempDir a("tooluse_gen_a"), b("tooluse_gen_b");
    cmd_gen_data(cfg, a.path.string());
    cmd_gen_data(cfg, b.path.string());
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(a.path)) {
        if (!entry.is_regular_file()) continue;
        files++;
        EXPECT_TRUE(same_file_bytes(entry.path(), b.path / entry.path().filename()))
            << entry.path();
    }
    EXPECT_EQ(files, 37u);  // 36 sequences + manifest
}

TEST(Pipeline, EndToEndMiniRunIsDeterministicAcrossThreadCounts) {
    PipelineConfig cfg = mini_config();
    TempDir root("tooluse_e2e");
    const std::string data = (root.path / "data").string();
    cmd_gen_data(cfg, data);

    auto run_all = [&](const std::string& tag, std::size_t threads) {
        PipelineConfig c = cfg;
        c.threads = threads;
        const std::string out = (root.path / tag).string();
        cmd_train_cae(c, data, out);
        cmd_extract_features(c, data, out + "/cae.model", out);
        cmd_train_mtrnn(c, data, out + "/features.bin", out);
        return out;
    };
    const std::string r1 = run_all("run1", 1);
    const std::string r2 = run_all("run2", 1);
    const std::string r4 = run_all("run4", 4);
    for (const char* f : {"/cae.model", "/cae_loss.csv", "/features.bin", "/mtrnn.model",
                          "/mtrnn_loss.csv"}) {
        EXPECT_TRUE(same_file_bytes(r1 + f, r2 + f)) << f;
        EXPECT_TRUE(same_file_bytes(r1 + f, r4 + f)) << f;
    }

    TrainedModels models =
        load_trained_models(data, r1 + "/cae.model", r1 + "/mtrnn.model", r1 + "/features.bin");
    EXPECT_EQ(models.tasks.size(), 36u);
    EXPECT_EQ(models.mtrnn.params.cs0_bank.size(), 36u);
    EXPECT_EQ(models.initial_joints.size(), 6u);

    ExperimentSpec spec;
    spec.experiment = Experiment::B;
    spec.tool = unknown_rake();
    spec.object = unknown_box_x();
    spec.recognition_iterations = cfg.recognition_iterations;
    spec.recognition_alpha = cfg.recognition_alpha;
    ExperimentResult result = run_experiment_ab(models, spec, cfg.sim);
    EXPECT_EQ(result.cs0_hat.size(), cfg.mtrnn.cs_count);
    EXPECT_EQ(result.generated.frames.size(), cfg.mtrnn.seq_len);
    EXPECT_EQ(result.decoded_last.shape,
              (std::vector<std::size_t>{3, cfg.sim.height, cfg.sim.width}));

    const std::string exp_out = (root.path / "exp").string();
    write_experiment_outputs(exp_out, result, models, {});
    EXPECT_TRUE(fs::exists(exp_out + "/verdict.json"));
    EXPECT_TRUE(fs::exists(exp_out + "/trajectory.csv"));
    EXPECT_TRUE(fs::exists(exp_out + "/predicted_frames.png"));
}

TEST(Pipeline, ModelFilesUntouchedByRecognition) {
    PipelineConfig cfg = mini_config();
    TempDir root("tooluse_frozen");
    const std::string data = (root.path / "data").string();
    cmd_gen_data(cfg, data);
    const std::string out = (root.path / "models").string();
    cmd_train_cae(cfg, data, out);
    cmd_extract_features(cfg, data, out + "/cae.model", out);
    cmd_train_mtrnn(cfg, data, out + "/features.bin", out);
    const std::vector<unsigned char> cae_before = read_file_bytes(out + "/cae.model");
    const std::vector<unsigned char> mtrnn_before = read_file_bytes(out + "/mtrnn.model");
    TrainedModels models =
        load_trained_models(data, out + "/cae.model", out + "/mtrnn.model", out + "/features.bin");
    ExperimentSpec spec;
    spec.recognition_iterations = 20;
    run_experiment_ab(models, spec, cfg.sim);
    EXPECT_EQ(read_file_bytes(out + "/cae.model"), cae_before);
    EXPECT_EQ(read_file_bytes(out + "/mtrnn.model"), mtrnn_before);
}
