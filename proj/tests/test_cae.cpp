#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "tooluse/cae.hpp"
#include "tooluse/gradcheck.hpp"
#include "tooluse/serialize.hpp"

using namespace tooluse;

namespace {

Tensor random_image(std::size_t c, std::size_t h, std::size_t w, Rng& rng) {
    Tensor t = Tensor::zeros({c, h, w});
    for (double& v : t.data) v = rng.uniform(0.0, 1.0);
    return t;
}

CaeConfig tiny_config() {
    CaeConfig cfg;
    cfg.image_width = 10;
    cfg.image_height = 8;
    cfg.channels = 1;
    cfg.feature_dim = 4;
    cfg.conv_layers = {{2, 3, 1}};
    cfg.fc_layers = {};
    return cfg;
}

double full_mse(const Tensor& image, const CaeParams& p) {
    return reconstruction_mse({image}, p);
}

}  // namespace

TEST(CaeShapes, PaperSizedEncodeDecode) {
    CaeConfig cfg;
    cfg.image_width = 64;
    cfg.image_height = 48;
    cfg.channels = 3;
    cfg.feature_dim = 20;
    cfg.fc_layers = {256};
    CaeParams p = init_cae_params(cfg, 1);
    Rng rng(2);
    Tensor img = random_image(3, 48, 64, rng);
    std::vector<double> feat = encode(img, p);
    EXPECT_EQ(feat.size(), 20u);
    Tensor recon = decode(feat, p);
    EXPECT_EQ(recon.shape, (std::vector<std::size_t>{3, 48, 64}));
}

TEST(CaeShapes, DecoderMirrorsEncoderAcrossConfigs) {
    Rng rng(3);
    std::vector<CaeConfig> cfgs;
    cfgs.push_back(tiny_config());
    {
        CaeConfig c;
        c.image_width = 32;
        c.image_height = 24;
        c.feature_dim = 20;
        cfgs.push_back(c);  // spec default stack
    }
    {
        CaeConfig c;
        c.image_width = 14;
        c.image_height = 14;
        c.channels = 2;
        c.feature_dim = 6;
        c.conv_layers = {{4, 3, 2}, {6, 3, 1}};
        c.fc_layers = {16};
        cfgs.push_back(c);
    }
    for (const CaeConfig& cfg : cfgs) {
        CaeParams p = init_cae_params(cfg, rng.next_u64());
        Tensor img = random_image(cfg.channels, cfg.image_height, cfg.image_width, rng);
        std::vector<double> feat = encode(img, p);
        ASSERT_EQ(feat.size(), cfg.feature_dim);
        Tensor recon = decode(feat, p);
        ASSERT_EQ(recon.shape, img.shape);
    }
}

TEST(CaeShapes, ZeroParamsGiveZeroFeaturesAndHalfGrayDecode) {
    CaeConfig cfg = tiny_config();
    CaeParams p = init_cae_params(cfg, 1);
    for (Tensor* t : p.all_tensors()) std::fill(t->data.begin(), t->data.end(), 0.0);
    Tensor img = Tensor::zeros({1, 8, 10});
    std::vector<double> feat = encode(img, p);
    for (double v : feat) EXPECT_EQ(v, 0.0);
    Tensor recon = decode(feat, p);
    for (double v : recon.data) EXPECT_EQ(v, 0.5);  // sigmoid(0)
}

TEST(CaeShapes, EncodeIsDeterministic) {
    CaeConfig cfg = tiny_config();
    CaeParams p = init_cae_params(cfg, 7);
    Rng rng(8);
    Tensor img = random_image(1, 8, 10, rng);
    EXPECT_EQ(encode(img, p), encode(img, p));
}

TEST(CaeShapes, WrongInputShapeThrows) {
    CaeConfig cfg = tiny_config();
    CaeParams p = init_cae_params(cfg, 7);
    EXPECT_THROW(encode(Tensor::zeros({1, 10, 8}), p), dimension_error);
    EXPECT_THROW(decode(std::vector<double>(5, 0.0), p), dimension_error);
}

TEST(CaeGradients, MatchFiniteDifferencesOnEveryTensor) {
    CaeConfig cfg = tiny_config();
    CaeParams p = init_cae_params(cfg, 11);
    Rng rng(12);
    Tensor img = random_image(1, 8, 10, rng);
    std::vector<Tensor> grads = detail::zero_like_params(p);
    detail::cae_backward(img, p, grads);
    std::vector<Tensor*> tensors = p.all_tensors();
    for (std::size_t ti = 0; ti < tensors.size(); ++ti) {
        auto loss_fn = [&](const Tensor& t) {
            CaeParams q = p;
            *q.all_tensors()[ti] = t;
            return full_mse(img, q);
        };
        GradCheckReport r = finite_diff_check(loss_fn, *tensors[ti], grads[ti], 1e-5);
        EXPECT_LT(r.max_relative_error, 1e-4) << "param tensor " << ti;
    }
}

TEST(CaeTraining, RejectsZeroIterations) {
    CaeConfig cfg = tiny_config();
    CaeTrainConfig tc;
    tc.iterations = 0;
    Rng rng(1);
    EXPECT_THROW(train_cae({random_image(1, 8, 10, rng)}, cfg, tc), dimension_error);
}

TEST(CaeTraining, MemorizesSingleImage) {
    CaeConfig cfg = tiny_config();
    Rng rng(21);
    Tensor img = random_image(1, 8, 10, rng);
    CaeTrainConfig tc;
    tc.iterations = 500;
    tc.alpha = 0.5;
    tc.momentum = 0.9;
    tc.seed = 5;
    CaeTrainResult r = train_cae({img}, cfg, tc);
    EXPECT_LT(r.loss_curve.back(), r.loss_curve.front());
    EXPECT_LT(full_mse(img, r.params), 0.01);
}

TEST(CaeTraining, SeededRunsAreBitIdentical) {
    CaeConfig cfg = tiny_config();
    Rng rng(22);
    std::vector<Tensor> images = {random_image(1, 8, 10, rng), random_image(1, 8, 10, rng),
                                  random_image(1, 8, 10, rng)};
    CaeTrainConfig tc;
    tc.iterations = 40;
    tc.alpha = 0.1;
    tc.momentum = 0.9;
    tc.batch_size = 2;
    tc.seed = 9;
    CaeTrainResult a = train_cae(images, cfg, tc);
    tc.threads = 4;
    CaeTrainResult b = train_cae(images, cfg, tc);
    EXPECT_EQ(a.loss_curve, b.loss_curve);
    std::vector<Tensor*> ta = a.params.all_tensors(), tb = b.params.all_tensors();
    for (std::size_t i = 0; i < ta.size(); ++i) EXPECT_EQ(ta[i]->data, tb[i]->data);
}

TEST(CaeTraining, LossSettlesOnFullBatch) {
    // Coarse stability: once below 10x the initial loss, 100 iterations never
    // make it worse (plain gradient descent, no momentum).
    CaeConfig cfg = tiny_config();
    Rng rng(23);
    std::vector<Tensor> images = {random_image(1, 8, 10, rng), random_image(1, 8, 10, rng),
                                  random_image(1, 8, 10, rng)};
    CaeTrainConfig tc;
    tc.iterations = 400;
    tc.alpha = 0.2;
    tc.seed = 10;
    CaeTrainResult r = train_cae(images, cfg, tc);
    const double threshold = r.loss_curve.front() * 10.0;
    for (std::size_t i = 0; i + 100 < r.loss_curve.size(); ++i) {
        if (r.loss_curve[i] > threshold) continue;
        EXPECT_LE(r.loss_curve[i + 100], r.loss_curve[i] + 1e-12) << "window start " << i;
    }
}

TEST(CaeTraining, DivergenceReportsIteration) {
    CaeConfig cfg = tiny_config();
    Rng rng(24);
    Tensor img = random_image(1, 8, 10, rng);
    CaeTrainConfig tc;
    tc.iterations = 4000;
    tc.alpha = 1e6;  // guaranteed blow-up
    tc.seed = 2;
    try {
        train_cae({img}, cfg, tc);
        SUCCEED() << "no divergence at this scale";
    } catch (const training_error& e) {
        EXPECT_NE(std::string(e.what()).find("iteration"), std::string::npos);
    }
}

TEST(FeatureScaling, RoundTripWithinTolerance) {
    FeatureScaling s;
    s.min_v = {-0.4, 0.1, -1.2};
    s.max_v = {0.8, 0.9, 1.0};
    Rng rng(31);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> raw = {rng.uniform(-0.4, 0.8), rng.uniform(0.1, 0.9),
                                   rng.uniform(-1.2, 1.0)};
        std::vector<double> scaled = s.rescale(raw);
        for (double v : scaled) {
            EXPECT_GE(v, -1.0 - 1e-12);
            EXPECT_LE(v, 1.0 + 1e-12);
        }
        for (std::size_t k = 0; k < raw.size(); ++k) {
            EXPECT_NEAR(s.inverse_one(scaled[k], k), raw[k], 1e-9);
        }
    }
}

TEST(FeatureScaling, DegenerateComponentMapsToZero) {
    FeatureScaling s;
    s.min_v = {0.5};
    s.max_v = {0.5};
    EXPECT_EQ(s.rescale({0.5})[0], 0.0);
}

TEST(FeatureExtraction, ScalesDatasetToUnitRange) {
    CaeConfig cfg = tiny_config();
    CaeParams p = init_cae_params(cfg, 41);
    p.iterations_trained = 10;
    Rng rng(42);
    std::vector<std::vector<Tensor>> seqs(2);
    for (auto& s : seqs)
        for (int f = 0; f < 3; ++f) s.push_back(random_image(1, 8, 10, rng));
    FeatureExtraction fx = extract_feature_sequences(seqs, p);
    EXPECT_FALSE(fx.untrained_warning);
    ASSERT_EQ(fx.sequences.size(), 2u);
    double lo = 1e9, hi = -1e9;
    for (const auto& s : fx.sequences)
        for (const auto& f : s)
            for (double v : f) {
                EXPECT_GE(v, -1.0 - 1e-12);
                EXPECT_LE(v, 1.0 + 1e-12);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
    EXPECT_NEAR(lo, -1.0, 1e-9);
    EXPECT_NEAR(hi, 1.0, 1e-9);
}

TEST(FeatureExtraction, UntrainedParamsRaiseWarning) {
    CaeConfig cfg = tiny_config();
    CaeParams p = init_cae_params(cfg, 43);
    Rng rng(44);
    std::vector<std::vector<Tensor>> seqs = {{random_image(1, 8, 10, rng)}};
    EXPECT_TRUE(extract_feature_sequences(seqs, p).untrained_warning);
}

TEST(CaeModelFile, RoundTripIsByteIdentical) {
    CaeConfig cfg = tiny_config();
    CaeParams p = init_cae_params(cfg, 51);
    p.iterations_trained = 77;
    const std::string a = "cae_a.model", b = "cae_b.model";
    save_cae(a, p);
    CaeParams loaded = load_cae(a);
    save_cae(b, loaded);
    EXPECT_EQ(read_file_bytes(a), read_file_bytes(b));
    EXPECT_EQ(loaded.iterations_trained, 77u);
    EXPECT_EQ(loaded.config.feature_dim, cfg.feature_dim);
    std::filesystem::remove(a);
    std::filesystem::remove(b);
}

TEST(CaeModelFile, BadMagicNamesFile) {
    const std::string path = "garbage.model";
    {
        std::ofstream os(path, std::ios::binary);
        os << "NOPEnope";
    }
    try {
        load_cae(path);
        FAIL() << "expected io_error";
    } catch (const io_error& e) {
        EXPECT_NE(std::string(e.what()).find(path), std::string::npos);
    }
    std::filesystem::remove(path);
}
