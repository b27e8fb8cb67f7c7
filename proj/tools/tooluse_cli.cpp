// Command-line front end for the tool-use learning pipeline:
// gen-data -> train-cae -> extract-features -> train-mtrnn -> recognize /
// generate / analyze. Exit codes: 0 ok, 1 usage, 2 I/O, 3 divergence.

#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "tooluse/analysis.hpp"
#include "tooluse/pipeline.hpp"

using namespace tooluse;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string preset = "desk";
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out = "out";
    std::size_t threads = 0;
};

PipelineConfig resolve_config(const CommonOpts& opts) {
    PipelineConfig cfg = opts.config_path.empty() ? PipelineConfig::from_preset(opts.preset)
                                                  : load_pipeline_config(opts.config_path);
    if (opts.config_path.empty()) cfg.preset = opts.preset;
    if (opts.seed_set) cfg.seed = opts.seed;
    if (opts.threads > 0) cfg.threads = opts.threads;
    return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "JSON pipeline config");
    cmd->add_option("--preset", opts.preset, "Config preset: desk or paper")
        ->check(CLI::IsMember({"desk", "paper"}));
    cmd->add_option("--seed", opts.seed, "Root seed")->each([&](const std::string&) {
        opts.seed_set = true;
    });
    cmd->add_option("--out", opts.out, "Output directory");
    cmd->add_option("--threads", opts.threads, "Worker threads (0 = config value)");
}

ExperimentSpec make_experiment_spec(const PipelineConfig& cfg, const std::string& experiment,
                                    const std::string& variant) {
    ExperimentSpec spec;
    spec.experiment = experiment == "B" ? Experiment::B : Experiment::A;
    spec.tool = unknown_rake();
    spec.object = variant == "y" ? unknown_box_y() : unknown_box_x();
    spec.recognition_iterations = cfg.recognition_iterations;
    spec.recognition_alpha = cfg.recognition_alpha;
    spec.recognition_momentum = cfg.recognition_momentum;
    return spec;
}

std::vector<std::vector<double>> pull_low_target_joints(const TrainedModels& models,
                                                        const std::string& dataset_dir) {
    Dataset ds = load_dataset(dataset_dir);
    for (const SensorimotorSequence& seq : ds.sequences) {
        if (seq.task.tool.kind == ToolKind::Rake && seq.task.action.direction == Direction::Pull &&
            seq.task.action.height == Height::Low &&
            seq.task.object.kind == ObjectKind::ShortBox) {
            return seq.joints;
        }
    }
    return {};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tool-use learning pipeline (simulator, CAE, MTRNN, recognition)"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string dataset_dir = "out/dataset";
    std::string cae_model = "out/cae/cae.model";
    std::string mtrnn_model = "out/mtrnn/mtrnn.model";
    std::string features_path = "out/features/features.bin";
    std::string experiment = "A";
    std::string variant = "x";
    std::string cs0_path;
    std::string analyze_what = "pca";
    bool dump_png = false;

    CLI::App* gen = app.add_subcommand("gen-data", "Generate the 36-task dataset");
    add_common(gen, opts);
    gen->add_flag("--dump-png", dump_png, "Also write PNG strips per task");

    CLI::App* tcae = app.add_subcommand("train-cae", "Train the image autoencoder");
    add_common(tcae, opts);
    tcae->add_option("--dataset", dataset_dir, "Dataset directory");

    CLI::App* xf = app.add_subcommand("extract-features", "Encode dataset images to features");
    add_common(xf, opts);
    xf->add_option("--dataset", dataset_dir, "Dataset directory");
    xf->add_option("--cae", cae_model, "Trained CAE model file");

    CLI::App* tm = app.add_subcommand("train-mtrnn", "Train the sequence model");
    add_common(tm, opts);
    tm->add_option("--dataset", dataset_dir, "Dataset directory");
    tm->add_option("--features", features_path, "Extracted features file");

    CLI::App* rec = app.add_subcommand("recognize", "Infer Cs(0) for an unknown scene");
    add_common(rec, opts);
    rec->add_option("--dataset", dataset_dir, "Dataset directory");
    rec->add_option("--cae", cae_model, "Trained CAE model file");
    rec->add_option("--mtrnn", mtrnn_model, "Trained MTRNN model file");
    rec->add_option("--features", features_path, "Extracted features file");
    rec->add_option("--experiment", experiment, "Experiment A or B")
        ->check(CLI::IsMember({"A", "B"}));
    rec->add_option("--variant", variant, "Unknown box variant: x or y")
        ->check(CLI::IsMember({"x", "y"}));

    CLI::App* genr = app.add_subcommand("generate", "Roll out a recognized Cs(0)");
    add_common(genr, opts);
    genr->add_option("--dataset", dataset_dir, "Dataset directory");
    genr->add_option("--cae", cae_model, "Trained CAE model file");
    genr->add_option("--mtrnn", mtrnn_model, "Trained MTRNN model file");
    genr->add_option("--features", features_path, "Extracted features file");
    genr->add_option("--cs0", cs0_path, "recognized_cs0.json from `recognize`")->required();

    CLI::App* an = app.add_subcommand("analyze", "PCA / experiment analyses");
    add_common(an, opts);
    an->add_option("what", analyze_what, "pca or ab")->check(CLI::IsMember({"pca", "ab"}));
    an->add_option("--dataset", dataset_dir, "Dataset directory");
    an->add_option("--cae", cae_model, "Trained CAE model file");
    an->add_option("--mtrnn", mtrnn_model, "Trained MTRNN model file");
    an->add_option("--features", features_path, "Extracted features file");
    an->add_option("--experiment", experiment, "Experiment A or B")
        ->check(CLI::IsMember({"A", "B"}));
    an->add_option("--variant", variant, "Unknown box variant: x or y")
        ->check(CLI::IsMember({"x", "y"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        const PipelineConfig cfg = resolve_config(opts);
        if (gen->parsed()) {
            cmd_gen_data(cfg, opts.out, dump_png);
            std::cout << "dataset written to " << opts.out << "\n";
        } else if (tcae->parsed()) {
            cmd_train_cae(cfg, dataset_dir, opts.out);
            std::cout << "cae model written to " << opts.out << "/cae.model\n";
        } else if (xf->parsed()) {
            cmd_extract_features(cfg, dataset_dir, cae_model, opts.out);
            std::cout << "features written to " << opts.out << "/features.bin\n";
        } else if (tm->parsed()) {
            cmd_train_mtrnn(cfg, dataset_dir, features_path, opts.out);
            std::cout << "mtrnn model written to " << opts.out << "/mtrnn.model\n";
        } else if (rec->parsed()) {
            TrainedModels models =
                load_trained_models(dataset_dir, cae_model, mtrnn_model, features_path);
            ExperimentSpec spec = make_experiment_spec(cfg, experiment, variant);
            ExperimentResult result = run_experiment_ab(models, spec, cfg.sim);
            std::filesystem::create_directories(opts.out);
            nlohmann::json out;
            out["experiment"] = experiment;
            out["variant"] = variant;
            out["cs0_hat"] = result.cs0_hat;
            out["io0"] = result.generated.frames.at(0);
            out["verdict"] = verdict_to_json(result.verdict);
            {
                std::ofstream os = open_output(opts.out + "/recognized_cs0.json", false);
                os << out.dump(2) << "\n";
            }
            write_loss_csv(opts.out + "/recognition_trace.csv", result.recognition_trace, "E");
            std::cout << "experiment " << experiment << " variant " << variant
                      << ": matched_expectation="
                      << (result.verdict.matched_expectation ? "true" : "false") << " detected=("
                      << to_string(result.verdict.tool) << ", "
                      << to_string(result.verdict.object_height) << ", "
                      << to_string(result.verdict.action.height) << " "
                      << to_string(result.verdict.action.direction) << ", "
                      << to_string(result.verdict.effect) << ") nearest_task="
                      << result.verdict.nearest_task_id << "\n";
        } else if (genr->parsed()) {
            TrainedModels models =
                load_trained_models(dataset_dir, cae_model, mtrnn_model, features_path);
            std::ifstream is = open_input(cs0_path, false);
            nlohmann::json j;
            is >> j;
            const std::vector<double> cs0 = j.at("cs0_hat").get<std::vector<double>>();
            const Frame io0 = j.at("io0").get<Frame>();
            GeneratedSequence genseq = generate_from_recognition(
                cs0, io0, models.mtrnn.params, models.mtrnn.config, models.cae.config.feature_dim);
            ExperimentResult result;
            result.generated = genseq;
            result.cs0_hat = cs0;
            const std::size_t fd = models.cae.config.feature_dim;
            auto decode_frame = [&](const Frame& frame) {
                std::vector<double> raw(fd);
                for (std::size_t k = 0; k < fd; ++k) {
                    raw[k] = models.scaling.inverse_one(frame[k], k);
                }
                return decode(raw, models.cae);
            };
            result.decoded_first = decode_frame(genseq.frames.front());
            result.decoded_last = decode_frame(genseq.frames.back());
            result.verdict = classify_recognized(cs0, models.mtrnn.params.cs0_bank, models.tasks,
                                                 HeightClass::Short, EffectLabel::NoMovement);
            write_experiment_outputs(opts.out, result, models,
                                     pull_low_target_joints(models, dataset_dir));
            std::cout << "generated sequence written to " << opts.out << "\n";
        } else if (an->parsed()) {
            TrainedModels models =
                load_trained_models(dataset_dir, cae_model, mtrnn_model, features_path);
            std::filesystem::create_directories(opts.out);
            if (analyze_what == "pca") {
                PcaModel pca = fit_pca(models.mtrnn.params.cs0_bank);
                write_pca_projection(opts.out + "/pca_projection.csv", pca,
                                     models.mtrnn.params.cs0_bank, models.tasks);
                std::vector<std::vector<double>> pull_cs0;
                std::vector<int> tool_labels, height_labels;
                for (std::size_t i = 0; i < models.tasks.size(); ++i) {
                    if (models.tasks[i].action.direction != Direction::Pull) continue;
                    pull_cs0.push_back(models.mtrnn.params.cs0_bank[i]);
                    tool_labels.push_back(models.tasks[i].tool.kind == ToolKind::Rake ? 1 : 0);
                    height_labels.push_back(models.tasks[i].action.height == Height::High ? 1 : 0);
                }
                SeparationReport tool_rep = cluster_separation(pull_cs0, tool_labels);
                SeparationReport height_rep = cluster_separation(pull_cs0, height_labels);
                nlohmann::json rep;
                rep["components"] = pca.variances.size();
                rep["explained_variance"] = pca.variances;
                rep["pull_tasks"] = pull_cs0.size();
                rep["tool_accuracy"] = tool_rep.nearest_centroid_accuracy;
                rep["height_accuracy"] = height_rep.nearest_centroid_accuracy;
                if (tool_rep.silhouette) rep["tool_silhouette"] = *tool_rep.silhouette;
                if (height_rep.silhouette) rep["height_silhouette"] = *height_rep.silhouette;
                {
                    std::ofstream os = open_output(opts.out + "/pca_report.json", false);
                    os << rep.dump(2) << "\n";
                }
                std::cout << "pca: " << pca.variances.size() << " components, tool accuracy "
                          << tool_rep.nearest_centroid_accuracy << ", height accuracy "
                          << height_rep.nearest_centroid_accuracy << "\n";
            } else {
                ExperimentSpec spec = make_experiment_spec(cfg, experiment, variant);
                ExperimentResult result = run_experiment_ab(models, spec, cfg.sim);
                write_experiment_outputs(opts.out, result, models,
                                         pull_low_target_joints(models, dataset_dir));
                std::cout << "experiment " << experiment << " variant " << variant
                          << ": matched_expectation="
                          << (result.verdict.matched_expectation ? "true" : "false") << "\n";
            }
        }
    } catch (const io_error& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return 2;
    } catch (const training_error& e) {
        std::cerr << "training diverged: " << e.what() << "\n";
        return 3;
    } catch (const dimension_error& e) {
        std::cerr << "invalid configuration: " << e.what() << "\n";
        return 1;
    } catch (const std::domain_error& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
