// edgegs command-line driver: synth, train, extract, eval and pipeline.

#include "edgegs/extract.hpp"
#include "edgegs/io.hpp"
#include "edgegs/metrics.hpp"
#include "edgegs/parallel.hpp"
#include "edgegs/synth.hpp"
#include "edgegs/trainer.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <iostream>
#include <optional>

namespace {

using namespace edgegs;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct SynthArgs {
    std::string kind = "cube";
    int views = 50;
    std::string out;
    std::uint64_t seed = 0;
    int size = 256;
    double thickness = 2.0;
    bool soft = false;
};

struct TrainArgs {
    std::string data;
    std::string out;
    std::string preset = "object";
    std::optional<std::uint64_t> seed;
    std::optional<int> epochs;
    std::string config;
};

struct ExtractArgs {
    std::string checkpoint;
    std::string out;
    double theta = ExtractConfig{}.theta;
    double delta = ExtractConfig{}.delta;
    double merge = ExtractConfig{}.merge_spacing_factor;
};

struct EvalArgs {
    std::string pred;
    std::string gt;
    std::string out;
};

void run_synth(const SynthArgs& a) {
    const auto start = Clock::now();
    SceneOptions opt;
    opt.kind = parse_scene_kind(a.kind);
    opt.seed = a.seed;
    opt.views = a.views;
    opt.width = a.size;
    opt.height = a.size;
    opt.thickness_px = a.thickness;
    opt.soft = a.soft;
    const SyntheticScene scene = make_synthetic_scene(opt);
    save_dataset(a.out, scene.cameras, scene.bbox_min, scene.bbox_max, &scene.gt_edges);
    json log = {{"stage", "synth"},
                {"scene", scene.name},
                {"views", scene.cameras.size()},
                {"gt_edges", scene.gt_edges.size()},
                {"seconds", seconds_since(start)}};
    write_text_file(fs::path(a.out) / "synth_log.json", log.dump(2) + "\n");
    spdlog::info("wrote {} views of '{}' to {}", scene.cameras.size(), scene.name, a.out);
}

TrainConfig make_train_config(const TrainArgs& a) {
    TrainConfig cfg = TrainConfig::preset(a.preset);
    if (!a.config.empty()) {
        cfg = read_train_config(a.config, cfg);
    }
    if (a.seed) {
        cfg.seed = *a.seed;
    }
    if (a.epochs) {
        cfg.epochs = *a.epochs;
    }
    cfg.validate();
    return cfg;
}

void run_train(const TrainArgs& a) {
    const auto start = Clock::now();
    const fs::path out(a.out);
    fs::create_directories(out);
    Dataset data = load_dataset(a.data);
    const TrainConfig cfg = make_train_config(a);
    write_text_file(out / "train_config.txt", format_train_config(cfg));

    InitMode init = RandomInit{RandomInit{}.count, data.bbox_min, data.bbox_max};
    if (data.init_points) {
        init = PointInit{*data.init_points};
    }
    GaussianCloud cloud = init_cloud(init, cfg.seed);
    spdlog::info("training {} Gaussians on {} views for {} epochs ({} threads)", cloud.size(),
                 data.views.size(), cfg.epochs, thread_count());

    Trainer trainer(std::move(data.views), std::move(cloud), cfg);
    TrainReport report;
    try {
        report = trainer.run([](const TrainState& s, const EpochStats& e) {
            if (s.epoch % 25 == 0) {
                spdlog::info("epoch {:4d}  L_proj {:.5f}  gaussians {}  {:.1f}s", s.epoch,
                             e.l_proj, e.gaussians, e.seconds);
            }
        });
    } catch (const NumericError&) {
        write_checkpoint(out / "failure_checkpoint.bin", trainer.state());
        throw;
    }
    write_checkpoint(out / "checkpoint.bin", trainer.state());
    write_train_report_json(out / "train_log.json", report, cfg);
    spdlog::info("training finished in {:.1f}s with {} Gaussians", seconds_since(start),
                 trainer.state().cloud.size());
}

std::vector<ParametricEdge> run_extract(const ExtractArgs& a) {
    const auto start = Clock::now();
    const fs::path out(a.out);
    fs::create_directories(out);
    ExtractConfig cfg;
    cfg.theta = a.theta;
    cfg.delta = a.delta;
    cfg.merge_spacing_factor = a.merge;
    cfg.validate();
    const TrainState state = read_checkpoint(a.checkpoint);
    const ExtractResult result = extract(state.cloud, cfg);
    write_edges_json(out / "edges.json", result.edges);
    write_oriented_ply(out / "points.ply", result.points);

    std::size_t curves = 0;
    for (const auto& e : result.edges) {
        curves += std::holds_alternative<CubicBezier>(e) ? 1 : 0;
    }
    json log = {{"stage", "extract"},
                {"theta", cfg.theta},
                {"delta", cfg.delta},
                {"opacity_filter", cfg.opacity_filter},
                {"merge_spacing_factor", cfg.merge_spacing_factor},
                {"points", result.points.size()},
                {"merged_points", result.merged.size()},
                {"clusters", result.clusters.size()},
                {"edges", result.edges.size()},
                {"lines", result.edges.size() - curves},
                {"curves", curves},
                {"seconds", seconds_since(start)}};
    write_text_file(out / "extract_log.json", log.dump(2) + "\n");
    spdlog::info("extracted {} edges ({} curves) from {} points", result.edges.size(), curves,
                 result.points.size());
    return result.edges;
}

void run_eval(const EvalArgs& a) {
    const auto start = Clock::now();
    const fs::path out(a.out);
    fs::create_directories(out);
    const MetricReport report = evaluate(read_edges_json(a.pred), read_edges_json(a.gt));
    write_metrics_json(out / "metrics.json", report);
    json log = {{"stage", "eval"},
                {"pred", a.pred},
                {"gt", a.gt},
                {"seconds", seconds_since(start)}};
    write_text_file(out / "eval_log.json", log.dump(2) + "\n");
    print_metric_table(std::cout, report);
}

void run_pipeline(const TrainArgs& train, const ExtractArgs& ex_in) {
    const auto start = Clock::now();
    const fs::path out(train.out);
    run_train(train);
    ExtractArgs ex = ex_in;
    ex.checkpoint = (out / "checkpoint.bin").string();
    ex.out = out.string();
    run_extract(ex);
    const fs::path gt = fs::path(train.data) / "gt_edges.json";
    if (fs::exists(gt)) {
        run_eval({(out / "edges.json").string(), gt.string(), out.string()});
    } else {
        spdlog::warn("{} not found; skipping evaluation", gt.string());
    }
    json log = {{"stage", "pipeline"}, {"seconds", seconds_since(start)}};
    write_text_file(out / "pipeline_log.json", log.dump(2) + "\n");
}

void add_train_options(CLI::App* cmd, TrainArgs& a, bool with_config) {
    cmd->add_option("--data", a.data, "dataset directory")->required()->check(CLI::ExistingDirectory);
    cmd->add_option("--out", a.out, "output directory")->required();
    cmd->add_option("--preset", a.preset, "hyperparameter preset")
        ->check(CLI::IsMember({"object", "scene"}));
    cmd->add_option("--seed", a.seed, "random seed");
    cmd->add_option("--epochs", a.epochs, "number of epochs")->check(CLI::PositiveNumber);
    if (with_config) {
        cmd->add_option("--config", a.config, "key = value config file")
            ->check(CLI::ExistingFile);
    }
}

void add_extract_params(CLI::App* cmd, ExtractArgs& a) {
    cmd->add_option("--theta", a.theta, "orientation threshold (|cos|)")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--delta", a.delta, "curve/line residual ratio")->check(CLI::PositiveNumber);
    cmd->add_option("--merge", a.merge, "merge spacing as a fraction of the point extent")
        ->check(CLI::NonNegativeNumber);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Edge Gaussians: 3D edge reconstruction from multi-view edge maps"};
    app.require_subcommand(1);
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "only log warnings and errors");

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "write a synthetic dataset");
    synth_cmd->add_option("--kind", synth.kind, "scene kind")
        ->check(CLI::IsMember({"cube", "mixed", "helix", "helix_curves"}));
    synth_cmd->add_option("--views", synth.views, "number of views")->check(CLI::Range(2, 100000));
    synth_cmd->add_option("--out", synth.out, "output directory")->required();
    synth_cmd->add_option("--seed", synth.seed, "random seed");
    synth_cmd->add_option("--size", synth.size, "image width and height")
        ->check(CLI::Range(8, 8192));
    synth_cmd->add_option("--thickness", synth.thickness, "edge thickness in pixels")
        ->check(CLI::PositiveNumber);
    synth_cmd->add_flag("--soft", synth.soft, "add a 1-pixel linear falloff");

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "optimize edge Gaussians on a dataset");
    add_train_options(train_cmd, train, true);

    ExtractArgs ex;
    auto* extract_cmd = app.add_subcommand("extract", "fit parametric edges to a checkpoint");
    extract_cmd->add_option("--checkpoint", ex.checkpoint, "checkpoint file")
        ->required()
        ->check(CLI::ExistingFile);
    extract_cmd->add_option("--out", ex.out, "output directory")->required();
    add_extract_params(extract_cmd, ex);

    EvalArgs ev;
    auto* eval_cmd = app.add_subcommand("eval", "score predicted edges against ground truth");
    eval_cmd->add_option("--pred", ev.pred, "predicted edges.json")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--gt", ev.gt, "ground-truth edges.json")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--out", ev.out, "output directory")->required();

    TrainArgs pipe;
    ExtractArgs pipe_ex;
    auto* pipe_cmd = app.add_subcommand("pipeline", "train, extract and evaluate");
    add_train_options(pipe_cmd, pipe, true);
    add_extract_params(pipe_cmd, pipe_ex);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }
    spdlog::set_level(quiet ? spdlog::level::warn : spdlog::level::info);

    try {
        if (*synth_cmd) {
            run_synth(synth);
        } else if (*train_cmd) {
            run_train(train);
        } else if (*extract_cmd) {
            run_extract(ex);
        } else if (*eval_cmd) {
            run_eval(ev);
        } else if (*pipe_cmd) {
            run_pipeline(pipe, pipe_ex);
        }
    } catch (const NumericError& e) {
        spdlog::error("numeric failure: {}", e.what());
        return kNumeric;
    } catch (const ContractError& e) {
        spdlog::error("internal error: {}", e.what());
        return kNumeric;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kData;
    }
    return kOk;
}
