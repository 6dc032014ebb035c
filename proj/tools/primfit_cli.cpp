// Command-line driver: synthesize targets, fit primitives, evaluate, export
// meshes, and run the numerical self-checks.
//
// Exit codes: 0 success, 1 check failure, 2 usage or I/O error.

#include "primfit/primfit.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace primfit;

namespace {

// Write via a temp file then rename, so partial output never lands under the
// final name.
template <typename WriteFn>
void atomic_write(const fs::path& path, WriteFn&& fn) {
    fs::path tmp = path;
    tmp += ".tmp";
    fn(tmp.string());
    fs::rename(tmp, path);
}

void write_xyz(const std::vector<Vector3d>& pts, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out.precision(12);
    for (const auto& p : pts) out << p.x() << " " << p.y() << " " << p.z() << "\n";
}

struct FitFlags {
    std::string target, out_dir = ".", config_path;
    FittingConfig cfg;
    std::size_t target_samples = 2000;
    int threads = 1;
    std::vector<int> stage_iters;
};

void apply_config_file(CLI::App* cmd, FitFlags& ff) {
    if (ff.config_path.empty()) return;
    std::ifstream in(ff.config_path);
    if (!in) throw IoError("cannot open config " + ff.config_path);
    json doc;
    in >> doc;
    auto set_if = [&](const char* key, auto& slot, const char* flag) {
        if (doc.contains(key) && cmd->count(flag) == 0)
            slot = doc[key].get<std::decay_t<decltype(slot)>>();
    };
    set_if("target", ff.target, "--target");
    set_if("primitives", ff.cfg.num_primitives, "--primitives");
    set_if("seed", ff.cfg.seed, "--seed");
    set_if("step", ff.cfg.step, "--step");
    set_if("gamma", ff.cfg.gamma, "--gamma");
    set_if("lambda_ext", ff.cfg.lambda_ext, "--lambda-ext");
    set_if("lambda_gen", ff.cfg.lambda_gen, "--lambda-gen");
    set_if("tol", ff.cfg.tol, "--tol");
    set_if("max_iters", ff.cfg.max_iters, "--max-iters");
    set_if("target_samples", ff.target_samples, "--target-samples");
    set_if("svf_resolution", ff.cfg.svf_resolution, "--svf-resolution");
    if (doc.contains("stage_iters") && cmd->count("--stage-iters") == 0)
        ff.stage_iters = doc["stage_iters"].get<std::vector<int>>();
}

json config_echo(const FitFlags& ff) {
    const auto& c = ff.cfg;
    return {{"target", ff.target},
            {"primitives", c.num_primitives},
            {"seed", c.seed},
            {"step", c.step},
            {"stage_iters", {c.stage_iters[0], c.stage_iters[1], c.stage_iters[2]}},
            {"max_iters", c.max_iters},
            {"gamma", c.gamma},
            {"lambda_ext", c.lambda_ext},
            {"lambda_gen", c.lambda_gen},
            {"tol", c.tol},
            {"target_samples", ff.target_samples},
            {"samples_u", c.samples_u},
            {"samples_v", c.samples_v},
            {"svf_resolution", c.svf_resolution},
            {"svf_sigma", c.svf_sigma},
            {"ss_steps", c.ss_steps},
            {"step_halving", c.step_halving},
            {"threads", ff.threads}};
}

int run_synth(const std::string& shape, const std::string& out_dir, std::uint64_t seed,
              std::size_t samples, const GlobalParams& g, int box_count) {
    fs::create_directories(out_dir);
    SynthResult res;
    if (shape == "superquadric") res = synth_superquadric(g);
    else if (shape == "chair-like" || shape == "chair") res = synth_chair(seed);
    else if (shape == "boxes" || shape == "union-of-boxes") res = synth_union_of_boxes(box_count, seed);
    else if (shape == "l-bracket") res = synth_l_bracket();
    else throw UnknownGenerator("unknown shape generator '" + shape + "'");

    fs::path dir(out_dir);
    atomic_write(dir / "target.obj", [&](const std::string& p) { write_obj(res.mesh, p); });
    Rng rng(seed);
    auto pts = sample_mesh_surface(res.mesh, samples, rng);
    atomic_write(dir / "target.xyz", [&](const std::string& p) { write_xyz(pts, p); });
    atomic_write(dir / "parts.json", [&](const std::string& p) {
        std::ofstream out(p);
        out << parts_to_json(res.parts).dump(2) << "\n";
    });
    if (!res.ground_truth.empty()) {
        atomic_write(dir / "gt_params.json",
                     [&](const std::string& p) { save_params(res.ground_truth, p); });
    }
    std::cout << "wrote " << shape << " target to " << out_dir << " (" << pts.size()
              << " samples)\n";
    return 0;
}

int run_fit(FitFlags& ff) {
    if (!fs::exists(ff.target)) {
        std::cerr << "error: target path does not exist: " << ff.target << "\n";
        return 2;
    }
    if (!ff.stage_iters.empty()) {
        if (ff.stage_iters.size() != 3) throw IoError("--stage-iters needs 3 values");
        for (int s = 0; s < 3; ++s) ff.cfg.stage_iters[s] = ff.stage_iters[s];
    }
    fs::create_directories(ff.out_dir);
    fs::path dir(ff.out_dir);
    atomic_write(dir / "config.json", [&](const std::string& p) {
        std::ofstream out(p);
        out << config_echo(ff).dump(2) << "\n";
    });

    TargetCloud target = load_target(ff.target, ff.target_samples, ff.cfg.seed);
    FitResult result = fit(target, ff.cfg);

    json summary;
    if (!result.history.empty()) {
        const auto& last = result.history.back();
        summary = {{"l_ext", last.l_ext}, {"chamfer", last.chamfer},
                   {"iterations", result.history.size()}, {"converged", result.converged}};
    }
    atomic_write(dir / "params.json", [&](const std::string& p) {
        save_params(result.primitives, p,
                    {{"config", config_echo(ff)}, {"loss_summary", summary}});
    });
    atomic_write(dir / "loss.csv",
                 [&](const std::string& p) { write_loss_csv(result.history, p); });
    atomic_write(dir / "final.obj",
                 [&](const std::string& p) { export_mesh(result.primitives, p); });
    std::cout << "fit finished: " << result.history.size() << " iterations";
    if (!result.history.empty())
        std::cout << ", L_ext " << result.history.back().l_ext << ", chamfer "
                  << result.history.back().chamfer;
    std::cout << "\n";
    return 0;
}

int run_eval(const std::string& params_path, const std::string& target_path,
             const std::string& out_path, int resolution, std::size_t samples,
             std::uint64_t seed) {
    std::vector<Primitive> prims = load_params(params_path);
    ShapeFile shape = load_shape(target_path);
    if (!shape.mesh.has_faces())
        throw IoError("eval needs a mesh target for volumetric IoU: " + target_path);

    Rng rng(seed);
    auto target_pts = sample_mesh_surface(shape.mesh, samples, rng);
    std::vector<Vector3d> pred_pts;
    for (const auto& p : prims) {
        auto w = p.world_samples();
        pred_pts.insert(pred_pts.end(), w.begin(), w.end());
    }
    const double cd = chamfer_l1(pred_pts, target_pts);

    Vector3d lo, hi;
    shape.mesh.bounding_box(lo, hi);
    for (const auto& p : pred_pts) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    VoxelGrid target_occ = voxelize_mesh(shape.mesh, lo, hi, resolution);
    VoxelGrid pred_occ = voxelize_primitives(prims, target_occ);
    const double iou_value = iou(pred_occ, target_occ);

    json per_prim = json::array();
    for (const auto& p : prims) {
        KdTree tt(target_pts);
        double sum = 0.0;
        for (const auto& w : p.world_samples()) sum += tt.nearest(w).distance;
        std::vector<Primitive> one;
        one.push_back(p);
        VoxelGrid occ = voxelize_primitives(one, target_occ);
        per_prim.push_back({{"chamfer_to_target", sum / p.sample_count()},
                            {"volume_voxels", occ.count()}});
    }
    json metrics = {{"chamfer_l1", cd}, {"iou", iou_value}, {"per_primitive", per_prim}};
    if (!out_path.empty()) {
        atomic_write(out_path, [&](const std::string& p) {
            std::ofstream out(p);
            out << metrics.dump(2) << "\n";
        });
    }
    std::cout << "chamfer_l1 " << cd << "  iou " << iou_value << "\n";
    return 0;
}

int run_check_jacobians(std::uint64_t seed, int trials) {
    JacobianCheckReport report = check_jacobians(seed, trials);
    std::cout << "jacobian check: " << trials << " trials\n";
    const char* blocks[4] = {"trans", "rot", "global", "local"};
    for (const char* b : blocks) {
        double worst = 0.0;
        for (const auto& [label, err] : report.worst_error)
            if (label.rfind(b, 0) == 0) worst = std::max(worst, err);
        std::cout << "  " << b << " worst relative error " << worst << "\n";
    }
    if (!report.pass) {
        std::cerr << "FAIL: " << report.first_failure << "\n";
        return 1;
    }
    std::cout << "all blocks within tolerance\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deformable superquadric primitive fitting"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic target");
    std::string shape = "superquadric", synth_out = ".";
    std::uint64_t synth_seed = 0;
    std::size_t synth_samples = 2000;
    int box_count = 3;
    GlobalParams g;
    synth->add_option("--shape", shape, "superquadric|chair-like|boxes|l-bracket");
    synth->add_option("--out", synth_out, "output directory");
    synth->add_option("--seed", synth_seed);
    synth->add_option("--samples", synth_samples);
    synth->add_option("--count", box_count, "box count for --shape boxes");
    synth->add_option("--a0", g.a0);
    synth->add_option("--a1", g.a1);
    synth->add_option("--a2", g.a2);
    synth->add_option("--a3", g.a3);
    synth->add_option("--eps1", g.eps1);
    synth->add_option("--eps2", g.eps2);
    synth->add_option("--t1", g.t1);
    synth->add_option("--t2", g.t2);
    synth->add_option("--b1", g.b1);
    synth->add_option("--b2", g.b2);
    synth->add_option("--b3", g.b3);

    // fit
    auto* fitc = app.add_subcommand("fit", "fit primitives to a target");
    FitFlags ff;
    fitc->add_option("--target", ff.target, "target shape file (obj/ply/xyz)");
    fitc->add_option("--config", ff.config_path, "JSON config; flags override");
    fitc->add_option("--out", ff.out_dir);
    fitc->add_option("-P,--primitives", ff.cfg.num_primitives);
    fitc->add_option("--seed", ff.cfg.seed);
    fitc->add_option("--step", ff.cfg.step);
    fitc->add_option("--stage-iters", ff.stage_iters)->expected(3);
    fitc->add_option("--max-iters", ff.cfg.max_iters);
    fitc->add_option("--gamma", ff.cfg.gamma);
    fitc->add_option("--lambda-ext", ff.cfg.lambda_ext);
    fitc->add_option("--lambda-gen", ff.cfg.lambda_gen);
    fitc->add_option("--tol", ff.cfg.tol);
    fitc->add_option("--target-samples", ff.target_samples);
    fitc->add_option("--svf-resolution", ff.cfg.svf_resolution);
    fitc->add_option("--threads", ff.threads, "worker count (results independent of value)");

    // eval
    auto* evalc = app.add_subcommand("eval", "metrics for fitted params vs target");
    std::string eval_params, eval_target, eval_out;
    int eval_res = 64;
    std::size_t eval_samples = 2000;
    std::uint64_t eval_seed = 0;
    evalc->add_option("--params", eval_params)->required();
    evalc->add_option("--target", eval_target)->required();
    evalc->add_option("--out", eval_out, "metrics JSON path");
    evalc->add_option("--resolution", eval_res);
    evalc->add_option("--samples", eval_samples);
    evalc->add_option("--seed", eval_seed);

    // export-mesh
    auto* exportc = app.add_subcommand("export-mesh", "write fitted primitives as OBJ");
    std::string export_params, export_out = "mesh.obj";
    std::vector<int> grid = {32, 32};
    exportc->add_option("--params", export_params)->required();
    exportc->add_option("--out", export_out);
    exportc->add_option("--grid", grid, "nu nv")->expected(2);

    // check-jacobians
    auto* checkc = app.add_subcommand("check-jacobians", "finite-difference Jacobian suite");
    std::uint64_t check_seed = 0;
    int check_trials = 1000;
    checkc->add_option("--seed", check_seed);
    checkc->add_option("--trials", check_trials);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed()) return run_synth(shape, synth_out, synth_seed, synth_samples, g, box_count);
        if (fitc->parsed()) {
            apply_config_file(fitc, ff);
            return run_fit(ff);
        }
        if (evalc->parsed())
            return run_eval(eval_params, eval_target, eval_out, eval_res, eval_samples, eval_seed);
        if (exportc->parsed()) {
            std::vector<Primitive> prims = load_params(export_params);
            atomic_write(export_out,
                         [&](const std::string& p) { export_mesh(prims, p, grid[0], grid[1]); });
            std::cout << "wrote " << export_out << "\n";
            return 0;
        }
        if (checkc->parsed()) return run_check_jacobians(check_seed, check_trials);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
