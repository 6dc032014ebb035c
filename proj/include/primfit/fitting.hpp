#pragma once

#include "primfit/forces.hpp"

#include <array>
#include <set>

namespace primfit {

struct FittingConfig {
    int num_primitives = 1;
    double step = 1e-3;              // normalized rate; actual h = step / (gamma * N)
    std::array<int, 3> stage_iters = {500, 1000, 1000};  // rigid / +global / +local
    int max_iters = -1;              // <0 = sum of stage_iters
    double gamma = 1.0;
    double lambda_ext = 1.0;
    double lambda_gen = 1.0;
    double tol = 0.0;                // convergence tolerance on L_ext (0 = run all iters)
    std::uint64_t seed = 0;
    int samples_u = 32, samples_v = 32;
    int svf_resolution = 16;
    double svf_sigma = 1.0;
    int ss_steps = 7;
    bool step_halving = true;
    int max_halvings = 30;
    ForceOptions force_options{};

    int total_iters() const {
        int stages = stage_iters[0] + stage_iters[1] + stage_iters[2];
        return max_iters >= 0 ? std::min(max_iters, stages) : stages;
    }
};

struct StepRecord {
    int iter = 0;
    int stage = 1;
    double l_ext_pre = 0.0;   // before the parameter update, this iteration's assignment
    double l_ext = 0.0;       // after the accepted update, same assignment
    double l_trans = 0.0, l_rot = 0.0, l_glob = 0.0, l_loc = 0.0;
    double chamfer = 0.0;
    double h_used = 0.0;
    bool accepted = false;
};

struct FitResult {
    std::vector<Primitive> primitives;
    std::vector<StepRecord> history;
    bool converged = false;
};

namespace detail {

struct KMeansResult {
    std::vector<Vector3d> centers;
    std::vector<int> labels;
    double distortion = 0.0;
    double cover_radius = 0.0;  // max point-to-own-center distance
};

inline KMeansResult kmeans_once(const std::vector<Vector3d>& pts, int k, Rng& rng,
                                int lloyd_iters = 25) {
    KMeansResult res;
    res.centers.reserve(k);
    // k-means++ seeding by squared-distance sampling.
    std::vector<double> d2(pts.size(), std::numeric_limits<double>::max());
    res.centers.push_back(pts[rng.index(pts.size())]);
    while (static_cast<int>(res.centers.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            d2[i] = std::min(d2[i], (pts[i] - res.centers.back()).squaredNorm());
            total += d2[i];
        }
        double pick = rng.uniform() * total;
        std::size_t chosen = 0;
        double acc = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            acc += d2[i];
            if (acc >= pick) { chosen = i; break; }
        }
        res.centers.push_back(pts[chosen]);
    }

    res.labels.assign(pts.size(), 0);
    for (int it = 0; it < lloyd_iters; ++it) {
        for (std::size_t i = 0; i < pts.size(); ++i) {
            double best = std::numeric_limits<double>::max();
            for (int c = 0; c < k; ++c) {
                double d = (pts[i] - res.centers[c]).squaredNorm();
                if (d < best) { best = d; res.labels[i] = c; }
            }
        }
        std::vector<Vector3d> sums(k, Vector3d::Zero());
        std::vector<int> counts(k, 0);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            sums[res.labels[i]] += pts[i];
            ++counts[res.labels[i]];
        }
        for (int c = 0; c < k; ++c)
            if (counts[c] > 0) res.centers[c] = sums[c] / counts[c];
    }
    res.distortion = 0.0;
    res.cover_radius = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double d2 = (pts[i] - res.centers[res.labels[i]]).squaredNorm();
        res.distortion += d2;
        res.cover_radius = std::max(res.cover_radius, std::sqrt(d2));
    }
    return res;
}

inline KMeansResult kmeans(const std::vector<Vector3d>& pts, int k, Rng& rng,
                           int restarts = 8) {
    KMeansResult best;
    best.distortion = std::numeric_limits<double>::max();
    for (int r = 0; r < restarts; ++r) {
        KMeansResult cand = kmeans_once(pts, k, rng);
        if (cand.distortion < best.distortion) best = cand;
    }
    return best;
}

}  // namespace detail

// k-means++ clustering of the target; each cluster seeds a small sphere
// (half the cluster RMS radius) at its center.
inline std::vector<Primitive> initialize(const TargetCloud& target, const FittingConfig& cfg,
                                         Rng& rng) {
    const int P = cfg.num_primitives;
    {
        std::set<std::array<double, 3>> distinct;
        for (const auto& p : target.points) {
            distinct.insert({p.x(), p.y(), p.z()});
            if (static_cast<int>(distinct.size()) >= P) break;
        }
        if (static_cast<int>(distinct.size()) < P)
            throw DegenerateTarget("target has fewer distinct points than primitives");
    }
    auto km = detail::kmeans(target.points, P, rng);
    std::vector<Primitive> prims;
    prims.reserve(P);
    for (int c = 0; c < P; ++c) {
        double sum2 = 0.0;
        int count = 0;
        for (std::size_t i = 0; i < target.points.size(); ++i)
            if (km.labels[i] == c) {
                sum2 += (target.points[i] - km.centers[c]).squaredNorm();
                ++count;
            }
        double rms = count > 0 ? std::sqrt(sum2 / count) : 0.0;
        Primitive prim(cfg.samples_u, cfg.samples_v);
        prim.pose.c = km.centers[c];
        prim.globals.a0 = std::max(0.5 * rms, 1e-3);
        prim.ss_steps = cfg.ss_steps;
        prim.fit_field_extent(cfg.svf_resolution, cfg.svf_sigma);
        prim.resample();
        prims.push_back(std::move(prim));
    }
    return prims;
}

struct Assignment {
    std::vector<int> owner;        // per target point
    std::vector<double> distance;  // to the nearest surface sample overall
};

// Each target point goes to the primitive owning its globally nearest surface
// sample. Primitives that end up with nothing are re-seeded at the
// largest-residual target point.
inline Assignment assign(const TargetCloud& target, std::vector<Primitive>& prims) {
    const int P = static_cast<int>(prims.size());
    for (int pass = 0; pass <= P; ++pass) {
        std::vector<Vector3d> all;
        std::vector<int> owner_of_sample;
        for (int p = 0; p < P; ++p)
            for (const auto& sp : prims[p].samples()) {
                all.push_back(sp.world);
                owner_of_sample.push_back(p);
            }
        KdTree tree(all);
        Assignment a;
        a.owner.resize(target.points.size());
        a.distance.resize(target.points.size());
        std::vector<int> counts(P, 0);
        for (std::size_t i = 0; i < target.points.size(); ++i) {
            auto nn = tree.nearest(target.points[i]);
            a.owner[i] = owner_of_sample[nn.index];
            a.distance[i] = nn.distance;
            ++counts[a.owner[i]];
        }
        int empty = -1;
        for (int p = 0; p < P; ++p)
            if (counts[p] == 0) { empty = p; break; }
        if (empty < 0 || pass == P) return a;
        // Relocate the dead primitive to the worst-covered target point.
        std::size_t worst = 0;
        for (std::size_t i = 1; i < target.points.size(); ++i)
            if (a.distance[i] > a.distance[worst]) worst = i;
        prims[empty].pose.c = target.points[worst];
        prims[empty].resample();
    }
    return {};
}

namespace detail {

struct PrimitiveState {
    Pose pose;
    GlobalParams globals;
    VectorGrid field_raw;
};

inline PrimitiveState snapshot(const Primitive& p) {
    return {p.pose, p.globals, p.field.raw};
}

inline void restore(Primitive& p, const PrimitiveState& s) {
    p.pose = s.pose;
    p.globals = s.globals;
    p.field.raw = s.field_raw;
    p.resample();
}

inline double chamfer_to_target(const std::vector<Primitive>& prims, const TargetCloud& target) {
    std::vector<Vector3d> all;
    for (const auto& p : prims)
        for (const auto& sp : p.samples()) all.push_back(sp.world);
    KdTree tree(all);
    double sum_ab = 0.0;
    for (const auto& x : all) sum_ab += target.tree.nearest(x).distance;
    double sum_ba = 0.0;
    for (const auto& t : target.points) sum_ba += tree.nearest(t).distance;
    return 0.5 * (sum_ab / all.size() + sum_ba / target.points.size());
}

}  // namespace detail

// One explicit Euler step of q' = f_q for all primitives jointly, with stage
// locking and L_ext-based step halving. `stage` is 1 (rigid), 2 (+global) or
// 3 (+local).
inline StepRecord step(std::vector<Primitive>& prims, const TargetCloud& target,
                       const FittingConfig& cfg, int stage) {
    StepRecord rec;
    rec.stage = stage;

    Assignment asg = assign(target, prims);
    const int P = static_cast<int>(prims.size());
    std::vector<std::vector<Vector3d>> assigned(P);
    for (std::size_t i = 0; i < target.points.size(); ++i)
        assigned[asg.owner[i]].push_back(target.points[i]);

    ForceOptions fopt = cfg.force_options;
    fopt.gamma = cfg.gamma;

    std::vector<ForceField> forces(P);
    std::vector<ForceMatches> matches(P);
    std::vector<GeneralizedForce> gen(P);
    double l_ext_pre = 0.0;
    LossComponents totals;
    for (int p = 0; p < P; ++p) {
        forces[p] = external_forces(prims[p], assigned[p], fopt, &matches[p]);
        gen[p] = generalized_forces(prims[p], forces[p]);
        LossComponents lc = loss_components(gen[p], forces[p]);
        totals.l_ext += lc.l_ext;
        totals.l_trans += lc.l_trans;
        totals.l_rot += lc.l_rot;
        totals.l_glob += lc.l_glob;
        totals.l_loc += lc.l_loc;
        l_ext_pre += lc.l_ext;
    }
    rec.l_ext_pre = l_ext_pre;
    rec.l_trans = totals.l_trans;
    rec.l_rot = totals.l_rot;
    rec.l_glob = totals.l_glob;
    rec.l_loc = totals.l_loc;

    std::vector<detail::PrimitiveState> saved;
    saved.reserve(P);
    for (const auto& p : prims) saved.push_back(detail::snapshot(p));

    auto apply_update = [&](double eta) {
        for (int p = 0; p < P; ++p) {
            const double h = eta / (cfg.gamma * static_cast<double>(prims[p].sample_count()));
            prims[p].pose.c += h * gen[p].f_c;
            prims[p].pose.theta += h * gen[p].f_theta;
            prims[p].pose.renormalize();
            if (stage >= 2) {
                auto q = prims[p].globals.as_vector();
                q += h * gen[p].f_s;
                prims[p].globals = GlobalParams::from_vector(q);
                prims[p].globals.project();
            }
            if (stage >= 3) {
                auto& raw = prims[p].field.raw.data();
                const auto& fd = gen[p].f_d.data();
                for (std::size_t n = 0; n < raw.size(); ++n) raw[n] += h * fd[n];
            }
            prims[p].resample();
        }
    };

    // Acceptance is judged with this iteration's correspondences frozen, so
    // the comparison against l_ext_pre is continuous in the step size.
    auto eval_l_ext = [&]() {
        double l = 0.0;
        for (int p = 0; p < P; ++p)
            l += frozen_external_loss(prims[p], assigned[p], matches[p], fopt);
        return l;
    };

    double eta = cfg.step;
    const int tries = cfg.step_halving ? cfg.max_halvings : 1;
    for (int attempt = 0; attempt < tries; ++attempt) {
        // Below ~1e-6 of the nominal step the update is numerically inert;
        // accepting it would report progress that is not there.
        if (cfg.step_halving && eta < 1e-6 * cfg.step) break;
        apply_update(eta);
        double l_new = eval_l_ext();
        if (!cfg.step_halving || l_new <= l_ext_pre * (1.0 + 1e-12)) {
            rec.accepted = true;
            rec.l_ext = l_new;
            rec.h_used = eta;
            break;
        }
        for (int p = 0; p < P; ++p) detail::restore(prims[p], saved[p]);
        eta *= 0.5;
    }
    if (!rec.accepted) {
        rec.l_ext = l_ext_pre;  // state unchanged
        rec.h_used = 0.0;
    }
    rec.chamfer = detail::chamfer_to_target(prims, target);
    return rec;
}

// Staged dynamic fitting: rigid, then +global, then +local. Deterministic
// given (target, cfg). Returns the best-L_ext state seen.
inline FitResult fit(const TargetCloud& target, const FittingConfig& cfg,
                     std::vector<Primitive> initial = {}) {
    Rng rng(cfg.seed);
    FitResult result;
    result.primitives = initial.empty() ? initialize(target, cfg, rng) : std::move(initial);

    std::vector<detail::PrimitiveState> best;
    double best_l_ext = std::numeric_limits<double>::max();
    auto remember_best = [&](double l_ext) {
        if (l_ext < best_l_ext) {
            best_l_ext = l_ext;
            best.clear();
            for (const auto& p : result.primitives) best.push_back(detail::snapshot(p));
        }
    };

    const int total = cfg.total_iters();
    int iter = 0;
    for (int stage = 1; stage <= 3 && iter < total; ++stage) {
        if (stage == 3) {
            // The SVF box is frozen once it becomes optimizer state; fit it to
            // the surface the global stages produced.
            for (auto& p : result.primitives) {
                p.fit_field_extent(cfg.svf_resolution, cfg.svf_sigma);
                p.resample();
            }
        }
        for (int s = 0; s < cfg.stage_iters[stage - 1] && iter < total; ++s, ++iter) {
            StepRecord rec = step(result.primitives, target, cfg, stage);
            rec.iter = iter;
            result.history.push_back(rec);
            remember_best(rec.l_ext);
            if (cfg.tol > 0.0 && rec.l_ext < cfg.tol) {
                result.converged = true;
                break;
            }
            if (!rec.accepted) {
                // No acceptable step exists along f_q and the dynamics are
                // deterministic, so this stage is finished; the next stage
                // unlocks new parameter blocks and a new descent direction.
                break;
            }
        }
        if (result.converged) break;
    }
    if (!best.empty() && best_l_ext < std::numeric_limits<double>::max()) {
        for (std::size_t p = 0; p < result.primitives.size(); ++p)
            detail::restore(result.primitives[p], best[p]);
    }
    return result;
}

}  // namespace primfit
