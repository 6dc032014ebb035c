#pragma once

#include "primfit/flow.hpp"
#include "primfit/pose.hpp"
#include "primfit/superquadric.hpp"

#include <vector>

namespace primfit {

struct SurfacePoint {
    Uv uv;
    Vector3d e = Vector3d::Zero();      // base superquadric position, model frame
    Vector3d s = Vector3d::Zero();      // after global taper/bend, model frame
    Vector3d p = Vector3d::Zero();      // after local flow, model frame
    Vector3d world = Vector3d::Zero();  // c + R p
};

// One deformable primitive: pose + global parameters + SVF local deformation,
// with a cached (u, v) sample grid kept consistent by resample().
class Primitive {
  public:
    Pose pose;
    GlobalParams globals;
    VelocityField field;
    int ss_steps = 7;

    Primitive() { init_samples(32, 32); }
    Primitive(int nu, int nv) { init_samples(nu, nv); }

    const std::vector<SurfacePoint>& samples() const { return samples_; }
    std::size_t sample_count() const { return samples_.size(); }
    const FlowField& flow() const { return flow_; }

    // Uniform (u, v) grid over cell centers; avoids duplicated pole samples.
    void init_samples(int nu, int nv) {
        nu_ = nu;
        nv_ = nv;
        samples_.clear();
        samples_.reserve(static_cast<std::size_t>(nu) * nv);
        for (int i = 0; i < nu; ++i)
            for (int j = 0; j < nv; ++j) {
                SurfacePoint sp;
                sp.uv.u = -M_PI / 2 + M_PI * (i + 0.5) / nu;
                sp.uv.v = -M_PI + 2 * M_PI * (j + 0.5) / nv;
                samples_.push_back(sp);
            }
    }

    // Fit the SVF grid box around the globally deformed surface, padded 20%.
    // Only meaningful while the field is still zero (the raw grid is optimizer
    // state once the local stage starts).
    void fit_field_extent(int resolution = 16, double sigma = 1.0) {
        Vector3d lo = Vector3d::Constant(std::numeric_limits<double>::max());
        Vector3d hi = Vector3d::Constant(std::numeric_limits<double>::lowest());
        for (const auto& sp : samples_) {
            Vector3d s = taper_bend(superquadric_surface(sp.uv, globals), globals);
            lo = lo.cwiseMin(s);
            hi = hi.cwiseMax(s);
        }
        Vector3d pad = 0.2 * (hi - lo).cwiseMax(Vector3d::Constant(1e-6));
        field = VelocityField::make(resolution, Extent{lo - pad, hi + pad}, sigma);
    }

    void resample() {
        if (field.raw.size() == 0) fit_field_extent();
        if (field.is_zero()) {
            flow_ = FlowField::identity(field.raw.nx(), field.raw.extent());
        } else {
            flow_ = integrate_ss(field, ss_steps);
        }
        for (auto& sp : samples_) {
            sp.e = superquadric_surface(sp.uv, globals);
            sp.s = taper_bend(sp.e, globals);
            sp.p = flow_.apply(sp.s);
            sp.world = pose.to_world(sp.p);
        }
    }

    std::vector<Vector3d> world_samples() const {
        std::vector<Vector3d> out;
        out.reserve(samples_.size());
        for (const auto& sp : samples_) out.push_back(sp.world);
        return out;
    }

    int nu() const { return nu_; }
    int nv() const { return nv_; }

  private:
    int nu_ = 32, nv_ = 32;
    std::vector<SurfacePoint> samples_;
    FlowField flow_;
};

}  // namespace primfit
