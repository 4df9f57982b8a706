#include "sbmc/attention.hpp"
#include "sbmc/config.hpp"
#include "sbmc/eval.hpp"
#include "sbmc/io.hpp"
#include "sbmc/pipeline.hpp"
#include "sbmc/ray_engine.hpp"
#include "sbmc/sampling.hpp"
#include "sbmc/scene.hpp"
#include "sbmc/weights.hpp"

#include "sbmc/rng.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

struct CommonOpts {
    std::string config_path;
    std::string weights_path;
    std::string out_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_weights) {
    cmd->add_option("--config", opts.config_path, "key=value config file");
    auto* seed = cmd->add_option("--seed", opts.seed, "rng seed override");
    seed->each([&opts](const std::string&) { opts.seed_given = true; });
    if (with_weights) {
        cmd->add_option("--weights", opts.weights_path, "weight bundle file");
    }
    cmd->add_option("--out", opts.out_path, "output path");
}

sbmc::PipelineConfig resolve_config(const CommonOpts& opts) {
    sbmc::PipelineConfig cfg;
    if (!opts.config_path.empty()) {
        cfg = sbmc::load_config(opts.config_path);
    }
    if (opts.seed_given) {
        cfg.seed = opts.seed;
    }
    return cfg;
}

/// Without an explicit config the pipeline adapts its counts to the scene, so
/// `run` works on any generated file out of the box.
void fit_config_to_scene(sbmc::PipelineConfig& cfg, const sbmc::PointCloud& cloud) {
    cfg.n_input_points = cloud.size();
    cfg.n_input_channels = cloud.channels();
    cfg.n_seeds = std::max(1, cloud.size() / 2);
    cfg.upsampled_seeds = cloud.size();
    cfg.n_clusters = std::min(256, std::max(1, cfg.n_seeds / 4));
    cfg.kappa = -1;
    cfg.m_fore = -1;
}

sbmc::SyntheticScene load_scene_file(const std::string& path, std::uint64_t seed) {
    sbmc::SyntheticScene scene;
    auto [cloud, boxes] = sbmc::load_scene(path);
    scene.cloud = std::move(cloud);
    scene.boxes = std::move(boxes);
    scene.seed = seed;
    return scene;
}

std::vector<sbmc::AABox> load_ground_truth(const std::string& path) {
    if (path.size() >= 6 && path.substr(path.size() - 6) == ".boxes") {
        return sbmc::load_boxes(path);
    }
    return sbmc::load_scene(path).second;
}

void write_text(const std::string& path, const std::string& body) {
    if (path.empty()) {
        std::cout << body;
        return;
    }
    std::ofstream os(path);
    if (!os) {
        throw sbmc::IoError("cannot open output file: " + path);
    }
    os << body;
    if (!os) {
        throw sbmc::IoError("failed writing output file: " + path);
    }
}

int cmd_gen(const CommonOpts& opts, int n_objects, double extent, bool binary) {
    if (opts.out_path.empty()) {
        throw std::invalid_argument("gen requires --out");
    }
    sbmc::PipelineConfig cfg = resolve_config(opts);
    const sbmc::SyntheticScene scene =
        sbmc::gen_scene(cfg.seed, n_objects, extent, cfg.n_input_points, cfg.n_input_channels);
    if (binary) {
        sbmc::save_scene_binary(opts.out_path, scene.cloud, scene.boxes);
    } else {
        sbmc::save_scene(opts.out_path, scene.cloud, scene.boxes);
    }
    std::cout << "scene: " << scene.cloud.size() << " points, " << scene.boxes.size()
              << " boxes -> " << opts.out_path << "\n";
    return 0;
}

sbmc::WeightBundle resolve_weights(const CommonOpts& opts, const sbmc::PipelineConfig& cfg) {
    if (!opts.weights_path.empty()) {
        sbmc::WeightBundle bundle = sbmc::load_weights(opts.weights_path);
        bundle.validate_against(cfg);
        return bundle;
    }
    return sbmc::default_weights(cfg);
}

int cmd_ablate(const CommonOpts& opts, const std::string& scene_path) {
    sbmc::PipelineConfig cfg = resolve_config(opts);
    sbmc::SyntheticScene scene = load_scene_file(scene_path, cfg.seed);
    if (opts.config_path.empty()) {
        fit_config_to_scene(cfg, scene.cloud);
    }
    cfg.validate();
    const sbmc::WeightBundle weights = resolve_weights(opts, cfg);
    const auto rows = sbmc::ablate(scene, cfg, weights);
    std::ostringstream table;
    sbmc::write_ablation_table(table, rows);
    write_text(opts.out_path, table.str());
    return 0;
}

int cmd_eval(const CommonOpts& opts, const std::string& dets_path, const std::string& gt_path,
             double iou) {
    const auto dets = sbmc::load_detections(dets_path);
    const auto gts = load_ground_truth(gt_path);
    const sbmc::EvalReport report = sbmc::map_at(dets, gts, iou);
    std::ostringstream table;
    sbmc::write_report(table, report);
    write_text(opts.out_path, table.str());
    return 0;
}

int cmd_rays(const CommonOpts& opts, int p_polar, int multiplier) {
    const sbmc::RayFan fan = sbmc::generate_rays(p_polar, multiplier);
    std::ostringstream table;
    sbmc::write_ray_table(table, fan);
    write_text(opts.out_path, table.str());
    return 0;
}

int cmd_check() {
    int failures = 0;
    const auto check = [&](const char* name, auto&& body) {
        try {
            body();
            std::cout << "PASS " << name << "\n";
        } catch (const std::exception& e) {
            std::cout << "FAIL " << name << ": " << e.what() << "\n";
            ++failures;
        }
    };
    const auto expect = [](bool ok, const std::string& detail) {
        if (!ok) {
            throw std::runtime_error(detail);
        }
    };

    check("ray fan geometry", [&] {
        const sbmc::RayFan fan = sbmc::generate_rays(5);
        expect(fan.size() == 18, "expected 18 rays");
        const auto counts = sbmc::ray_distribution(5);
        expect(counts == std::vector<int>({1, 4, 8, 4, 1}), "wrong ring distribution");
        for (const sbmc::Point3& d : fan.directions) {
            expect(std::abs(d.norm() - 1.0) < 1e-12, "ray not unit norm");
        }
        expect(fan.directions.front() == sbmc::Point3{0, 0, 1}, "first ray must be +z");
        expect(fan.directions.back() == sbmc::Point3{0, 0, -1}, "last ray must be -z");
    });

    check("cgnl residual identity", [&] {
        const sbmc::CgnlWeights zero = sbmc::CgnlWeights::zeros(8, 4);
        const sbmc::FeatureMatrix input = sbmc::init_weights(5, 8, 7);
        expect((sbmc::cgnl(input, zero) - input).cwiseAbs().maxCoeff() == 0.0,
               "zero-weight cgnl must be the identity");
    });

    check("fps brute-force agreement", [&] {
        sbmc::PointCloud cloud;
        sbmc::CounterRng rng(11);
        for (int i = 0; i < 10; ++i) {
            cloud.positions.push_back(
                {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
        }
        cloud.features.resize(10, 0);
        const auto picked = sbmc::fps(cloud, 4);
        std::vector<int> oracle{0};
        while (oracle.size() < 4) {
            int best = -1;
            double best_d = -1.0;
            for (int i = 0; i < 10; ++i) {
                double d = std::numeric_limits<double>::infinity();
                for (int j : oracle) {
                    d = std::min(d, sbmc::squared_distance(cloud.positions[i],
                                                           cloud.positions[j]));
                }
                if (d > best_d) {
                    best_d = d;
                    best = i;
                }
            }
            oracle.push_back(best);
        }
        expect(picked == oracle, "fps disagrees with the brute-force oracle");
    });

    check("average precision trace", [&] {
        expect(sbmc::average_precision({0, 1}, 1) == 0.5, "AP of (FP, TP) must be 0.5");
        expect(sbmc::average_precision({1, 0}, 1) == 1.0, "AP of (TP, FP) must be 1.0");
    });

    check("scene ascii round trip", [&] {
        const sbmc::SyntheticScene scene = sbmc::gen_scene(3, 2, 4.0, 256, 1);
        const auto dir = std::filesystem::temp_directory_path();
        const std::string path = (dir / "sbmc_check_scene.txt").string();
        sbmc::save_scene(path, scene.cloud, scene.boxes);
        const auto [cloud, boxes] = sbmc::load_scene(path);
        expect(cloud.size() == scene.cloud.size(), "point count changed");
        for (int i = 0; i < cloud.size(); ++i) {
            expect(cloud.positions[i] == scene.cloud.positions[i], "position changed");
        }
        expect(boxes.size() == scene.boxes.size(), "box count changed");
        std::filesystem::remove(path);
        std::filesystem::remove(path + ".boxes");
    });

    check("loss spot values", [&] {
        expect(sbmc::smooth_l1(0.5, 1.0) == 0.125, "smooth_l1(0.5) must be 0.125");
        expect(sbmc::smooth_l1(2.0, 1.0) == 1.5, "smooth_l1(2) must be 1.5");
        const double ce = sbmc::cross_entropy({0.5}, {1});
        expect(std::abs(ce - std::log(2.0)) < 1e-15, "ce(0.5, 1) must be ln 2");
    });

    std::cout << (failures == 0 ? "all checks passed" : "some checks FAILED") << "\n";
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"surface-biased multi-level-context 3d detection toolkit"};
    app.require_subcommand(1);

    CommonOpts gen_opts;
    int gen_objects = 5;
    double gen_extent = 6.0;
    bool gen_binary = false;
    CLI::App* gen = app.add_subcommand("gen", "generate a synthetic scene");
    add_common(gen, gen_opts, false);
    gen->add_option("--objects", gen_objects, "number of boxes");
    gen->add_option("--extent", gen_extent, "scene side length in meters");
    gen->add_flag("--binary", gen_binary, "write the binary columnar format");

    CommonOpts run_opts;
    std::string run_scene;
    bool run_ppc = true, run_ooc = true, run_gsc = true;
    CLI::App* run = app.add_subcommand("run", "run the detection pipeline on one scene");
    add_common(run, run_opts, true);
    run->add_option("--scene", run_scene, "scene file")->required();
    CLI::Option* ppc_flag = run->add_flag("--ppc,!--no-ppc", run_ppc, "toggle patch context");
    CLI::Option* ooc_flag = run->add_flag("--ooc,!--no-ooc", run_ooc, "toggle object context");
    CLI::Option* gsc_flag = run->add_flag("--gsc,!--no-gsc", run_gsc, "toggle scene context");

    CommonOpts ablate_opts;
    std::string ablate_scene;
    CLI::App* ablate_cmd = app.add_subcommand("ablate", "run the four context configurations");
    add_common(ablate_cmd, ablate_opts, true);
    ablate_cmd->add_option("--scene", ablate_scene, "scene file")->required();

    CommonOpts eval_opts;
    std::string eval_dets, eval_gt;
    double eval_iou = 0.25;
    CLI::App* eval_cmd = app.add_subcommand("eval", "score detections against ground truth");
    add_common(eval_cmd, eval_opts, false);
    eval_cmd->add_option("--dets", eval_dets, "detection file")->required();
    eval_cmd->add_option("--gt", eval_gt, "scene file or .boxes file")->required();
    eval_cmd->add_option("--iou", eval_iou, "IoU threshold");

    CommonOpts rays_opts;
    int rays_p = 5;
    int rays_mult = 4;
    CLI::App* rays_cmd = app.add_subcommand("rays", "export the ray fan table");
    add_common(rays_cmd, rays_opts, false);
    rays_cmd->add_option("--p", rays_p, "polar ring count");
    rays_cmd->add_option("--multiplier", rays_mult, "azimuth multiplier");

    CLI::App* check_cmd = app.add_subcommand("check", "run the built-in invariant suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (gen->parsed()) {
            return cmd_gen(gen_opts, gen_objects, gen_extent, gen_binary);
        }
        if (run->parsed()) {
            sbmc::PipelineConfig cfg = resolve_config(run_opts);
            sbmc::SyntheticScene scene = load_scene_file(run_scene, cfg.seed);
            if (run_opts.config_path.empty()) {
                fit_config_to_scene(cfg, scene.cloud);
            }
            if (ppc_flag->count() > 0) {
                cfg.use_ppc = run_ppc;
            }
            if (ooc_flag->count() > 0) {
                cfg.use_ooc = run_ooc;
            }
            if (gsc_flag->count() > 0) {
                cfg.use_gsc = run_gsc;
            }
            cfg.validate();
            const sbmc::WeightBundle weights = resolve_weights(run_opts, cfg);
            const sbmc::PipelineResult result = sbmc::run_pipeline(scene, cfg, weights);
            if (!run_opts.out_path.empty()) {
                sbmc::save_detections(run_opts.out_path, result.detections);
            }
            sbmc::write_diagnostics(std::cout, result.diagnostics);
            return 0;
        }
        if (ablate_cmd->parsed()) {
            return cmd_ablate(ablate_opts, ablate_scene);
        }
        if (eval_cmd->parsed()) {
            return cmd_eval(eval_opts, eval_dets, eval_gt, eval_iou);
        }
        if (rays_cmd->parsed()) {
            return cmd_rays(rays_opts, rays_p, rays_mult);
        }
        if (check_cmd->parsed()) {
            return cmd_check();
        }
    } catch (const sbmc::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const sbmc::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return 0;
}
