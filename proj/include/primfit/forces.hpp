#pragma once

#include "primfit/jacobians.hpp"
#include "primfit/kdtree.hpp"
#include "primfit/primitive.hpp"

#include <vector>

namespace primfit {

struct TargetCloud {
    std::vector<Vector3d> points;
    KdTree tree;

    explicit TargetCloud(std::vector<Vector3d> pts) : points(std::move(pts)) {
        if (points.empty()) throw EmptyShape("target cloud has no points");
        tree = KdTree(points);
    }
};

struct ForceOptions {
    double gamma = 1.0;
    bool attract = true;          // model -> target pull
    bool coverage = true;         // target -> model pull, accumulated on samples
    double coverage_weight = 1.0;
    double clip_median_factor = 10.0;  // 0 disables clipping
};

// Per-surface-sample external forces, world frame.
struct ForceField {
    std::vector<Vector3d> f;
    double gamma = 1.0;

    // External loss: sum of per-sample force magnitudes.
    double external_loss() const {
        double sum = 0.0;
        for (const auto& v : f) sum += v.norm();
        return sum;
    }
};

// The correspondences behind one force evaluation. Re-evaluating the loss
// with these frozen (only positions updated) makes L_ext continuous in q,
// which the step-halving acceptance rule needs: fresh nearest-neighbor
// matches make L_ext jump when a coverage pull switches samples.
struct ForceMatches {
    std::vector<int> attract_target;   // per sample; -1 when attraction is off
    std::vector<int> coverage_sample;  // per assigned target; empty when off
    std::vector<double> clip_scale;    // per sample; 1 when unclipped
};

// f_r = gamma * (nn(x_r) - x_r) over the targets assigned to this primitive,
// plus (by default) a symmetric coverage pull: each assigned target adds
// gamma * (t - x_nn) to its nearest primitive sample. One-directional forces
// permit primitive collapse; the pair does not.
inline ForceField external_forces(const Primitive& prim,
                                  const std::vector<Vector3d>& assigned_targets,
                                  const ForceOptions& opt = {},
                                  ForceMatches* matches = nullptr) {
    if (assigned_targets.empty())
        throw EmptyAssignment("primitive has no assigned target points");
    const auto& samples = prim.samples();
    ForceField out;
    out.gamma = opt.gamma;
    out.f.assign(samples.size(), Vector3d::Zero());

    if (matches) {
        matches->attract_target.assign(samples.size(), -1);
        matches->coverage_sample.clear();
        matches->clip_scale.assign(samples.size(), 1.0);
    }

    if (opt.attract) {
        KdTree target_tree(assigned_targets);
        for (std::size_t r = 0; r < samples.size(); ++r) {
            auto nn = target_tree.nearest(samples[r].world);
            out.f[r] += opt.gamma * (assigned_targets[nn.index] - samples[r].world);
            if (matches) matches->attract_target[r] = static_cast<int>(nn.index);
        }
    }
    if (opt.coverage) {
        std::vector<Vector3d> world = prim.world_samples();
        KdTree sample_tree(world);
        for (const auto& t : assigned_targets) {
            auto nn = sample_tree.nearest(t);
            out.f[nn.index] += opt.gamma * opt.coverage_weight * (t - world[nn.index]);
            if (matches) matches->coverage_sample.push_back(static_cast<int>(nn.index));
        }
    }
    if (opt.clip_median_factor > 0.0) {
        std::vector<double> norms;
        norms.reserve(out.f.size());
        for (const auto& v : out.f) norms.push_back(v.norm());
        std::vector<double> sorted = norms;
        std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
        double median = sorted[sorted.size() / 2];
        double cap = opt.clip_median_factor * median;
        if (median > 0.0) {
            for (std::size_t r = 0; r < out.f.size(); ++r)
                if (norms[r] > cap) {
                    out.f[r] *= cap / norms[r];
                    if (matches) matches->clip_scale[r] = cap / norms[r];
                }
        }
    }
    return out;
}

// L_ext re-evaluated at the current surface with the matches (and clip
// scales) from a previous evaluation held fixed. Continuous in the
// primitive's parameters, and equal to the original L_ext at the matched
// state, which makes it the right quantity for step-halving acceptance.
inline double frozen_external_loss(const Primitive& prim,
                                   const std::vector<Vector3d>& assigned_targets,
                                   const ForceMatches& matches, const ForceOptions& opt) {
    const auto& samples = prim.samples();
    std::vector<Vector3d> f(samples.size(), Vector3d::Zero());
    for (std::size_t r = 0; r < samples.size(); ++r)
        if (matches.attract_target[r] >= 0)
            f[r] += opt.gamma * (assigned_targets[matches.attract_target[r]] - samples[r].world);
    for (std::size_t t = 0; t < matches.coverage_sample.size(); ++t) {
        int r = matches.coverage_sample[t];
        f[r] += opt.gamma * opt.coverage_weight * (assigned_targets[t] - samples[r].world);
    }
    double sum = 0.0;
    for (std::size_t r = 0; r < f.size(); ++r) sum += matches.clip_scale[r] * f[r].norm();
    return sum;
}

// Block-partitioned generalized force mirroring L's column order.
struct GeneralizedForce {
    Vector3d f_c = Vector3d::Zero();
    Vector4d f_theta = Vector4d::Zero();
    Vector11d f_s = Vector11d::Zero();
    VectorGrid f_d;  // on the SVF grid, trilinear-adjoint splat then smoothed
};

// Projects external forces into parameter space: f_q = f^T L per sample,
// summed. The local block is the exact adjoint of the sample-at-s /
// smooth chain that produces the local displacement from the raw grid.
inline GeneralizedForce generalized_forces(const Primitive& prim, const ForceField& forces) {
    const auto& samples = prim.samples();
    GeneralizedForce gf;
    gf.f_d = VectorGrid(prim.field.raw.nx(), prim.field.raw.ny(), prim.field.raw.nz(),
                        prim.field.raw.extent());
    const Matrix3d R = prim.pose.rotation();
    const Matrix3d Rt = R.transpose();
    for (std::size_t r = 0; r < samples.size(); ++r) {
        const Vector3d& fr = forces.f[r];
        if (fr.isZero()) continue;
        gf.f_c += fr;
        gf.f_theta += jacobian_rotation(prim.pose.theta, samples[r].p).transpose() * fr;
        const Vector3d g_model = Rt * fr;
        gf.f_s += jacobian_global(samples[r].uv, prim.globals).transpose() * g_model;
        gf.f_d.splat(samples[r].s, g_model);
    }
    gf.f_d = gaussian_smooth(gf.f_d, prim.field.sigma);
    return gf;
}

struct LossComponents {
    double l_ext = 0.0;
    double l_trans = 0.0;
    double l_rot = 0.0;
    double l_glob = 0.0;
    double l_loc = 0.0;

    double generalized() const { return l_trans + l_rot + l_glob + l_loc; }
    double combined(double lambda_ext, double lambda_gen) const {
        return lambda_ext * l_ext + lambda_gen * generalized();
    }
};

// Squared Euclidean norms of each generalized-force block; the local block
// sums over grid nodes.
inline LossComponents loss_components(const GeneralizedForce& gf, const ForceField& forces) {
    LossComponents lc;
    lc.l_ext = forces.external_loss();
    lc.l_trans = gf.f_c.squaredNorm();
    lc.l_rot = gf.f_theta.squaredNorm();
    lc.l_glob = gf.f_s.squaredNorm();
    for (const auto& v : gf.f_d.data()) lc.l_loc += v.squaredNorm();
    return lc;
}

}  // namespace primfit
