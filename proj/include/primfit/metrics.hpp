#pragma once

#include "primfit/forces.hpp"
#include "primfit/mesh.hpp"

#include <algorithm>
#include <vector>

namespace primfit {

// Symmetric mean nearest-neighbor Euclidean distance.
inline double chamfer_l1(const std::vector<Vector3d>& a, const std::vector<Vector3d>& b) {
    if (a.empty() || b.empty()) throw EmptySet("chamfer_l1 on empty point set");
    KdTree ta(a), tb(b);
    double sum_ab = 0.0;
    for (const auto& p : a) sum_ab += tb.nearest(p).distance;
    double sum_ba = 0.0;
    for (const auto& p : b) sum_ba += ta.nearest(p).distance;
    return 0.5 * (sum_ab / a.size() + sum_ba / b.size());
}

// Inside test for one primitive: undo the pose, then the local flow, then the
// global taper/bend, and evaluate the superquadric implicit. The inverse flow
// is integrated once and reused across queries.
class OccupancyTester {
  public:
    explicit OccupancyTester(const Primitive& prim)
        : pose_(prim.pose), globals_(prim.globals) {
        if (prim.field.raw.size() > 0 && !prim.field.is_zero()) {
            inv_ = inverse_flow(prim.field, prim.ss_steps);
            has_flow_ = true;
        }
    }

    bool inside(const Vector3d& x_world) const {
        Vector3d p = pose_.to_model(x_world);
        Vector3d s = has_flow_ ? inv_.apply(p) : p;
        Vector3d e = inverse_taper_bend(s, globals_);
        return inside_outside(e, globals_) <= 1.0;
    }

  private:
    Pose pose_;
    GlobalParams globals_;
    FlowField inv_;
    bool has_flow_ = false;
};

inline bool primitive_occupancy(const Vector3d& x_world, const Primitive& prim) {
    return OccupancyTester(prim).inside(x_world);
}

// Regular occupancy grid over a padded bounding box; voxel centers are the
// evaluation points.
struct VoxelGrid {
    int resolution = 64;
    Vector3d lo = Vector3d::Zero(), hi = Vector3d::Ones();
    std::vector<std::uint8_t> occupancy;  // resolution^3, x fastest

    static VoxelGrid make(const Vector3d& lo, const Vector3d& hi, int resolution = 64,
                          double pad_fraction = 0.05) {
        VoxelGrid g;
        g.resolution = resolution;
        Vector3d pad = pad_fraction * (hi - lo).cwiseMax(Vector3d::Constant(1e-9));
        g.lo = lo - pad;
        g.hi = hi + pad;
        g.occupancy.assign(static_cast<std::size_t>(resolution) * resolution * resolution, 0);
        return g;
    }

    Vector3d center(int i, int j, int k) const {
        Vector3d cell = (hi - lo) / resolution;
        return lo + Vector3d((i + 0.5) * cell.x(), (j + 0.5) * cell.y(), (k + 0.5) * cell.z());
    }

    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * resolution + j) * resolution + i;
    }

    std::size_t count() const {
        std::size_t n = 0;
        for (auto o : occupancy) n += o;
        return n;
    }
};

// Watertight-mesh voxelization by x-ray parity counting. Ray origins are
// jittered off voxel-center lattice alignment so edge-exact hits do not flip
// parity.
inline VoxelGrid voxelize_mesh(const Mesh& mesh, const Vector3d& lo, const Vector3d& hi,
                               int resolution = 64, double pad_fraction = 0.05) {
    VoxelGrid g = VoxelGrid::make(lo, hi, resolution, pad_fraction);
    const Vector3d cell = (g.hi - g.lo) / resolution;
    const double jy = 1.3e-7 * cell.y(), jz = 2.7e-7 * cell.z();
    std::vector<double> crossings;
    for (int k = 0; k < resolution; ++k)
        for (int j = 0; j < resolution; ++j) {
            const double y = g.lo.y() + (j + 0.5) * cell.y() + jy;
            const double z = g.lo.z() + (k + 0.5) * cell.z() + jz;
            crossings.clear();
            for (const auto& f : mesh.faces) {
                const Vector3d& a = mesh.vertices[f[0]];
                const Vector3d& b = mesh.vertices[f[1]];
                const Vector3d& c = mesh.vertices[f[2]];
                // 2D barycentric test in the (y, z) projection.
                const double d00 = (b.y() - a.y()) * (c.z() - a.z()) -
                                   (c.y() - a.y()) * (b.z() - a.z());
                if (std::abs(d00) < 1e-14) continue;  // ray parallel to plane
                const double w1 = ((y - a.y()) * (c.z() - a.z()) -
                                   (c.y() - a.y()) * (z - a.z())) / d00;
                const double w2 = ((b.y() - a.y()) * (z - a.z()) -
                                   (y - a.y()) * (b.z() - a.z())) / d00;
                if (w1 < 0.0 || w2 < 0.0 || w1 + w2 > 1.0) continue;
                crossings.push_back(a.x() + w1 * (b.x() - a.x()) + w2 * (c.x() - a.x()));
            }
            std::sort(crossings.begin(), crossings.end());
            for (int i = 0; i < resolution; ++i) {
                const double x = g.lo.x() + (i + 0.5) * cell.x();
                std::size_t below =
                    std::lower_bound(crossings.begin(), crossings.end(), x) - crossings.begin();
                if (below % 2 == 1) g.occupancy[g.index(i, j, k)] = 1;
            }
        }
    return g;
}

// Union-of-primitives occupancy on the same lattice as `like`.
inline VoxelGrid voxelize_primitives(const std::vector<Primitive>& prims, const VoxelGrid& like) {
    VoxelGrid g = like;
    std::fill(g.occupancy.begin(), g.occupancy.end(), 0);
    std::vector<OccupancyTester> testers;
    testers.reserve(prims.size());
    for (const auto& p : prims) testers.emplace_back(p);
    for (int k = 0; k < g.resolution; ++k)
        for (int j = 0; j < g.resolution; ++j)
            for (int i = 0; i < g.resolution; ++i) {
                const Vector3d x = g.center(i, j, k);
                for (const auto& t : testers)
                    if (t.inside(x)) {
                        g.occupancy[g.index(i, j, k)] = 1;
                        break;
                    }
            }
    return g;
}

inline double iou(const VoxelGrid& a, const VoxelGrid& b) {
    std::size_t inter = 0, uni = 0;
    for (std::size_t n = 0; n < a.occupancy.size(); ++n) {
        inter += a.occupancy[n] & b.occupancy[n];
        uni += a.occupancy[n] | b.occupancy[n];
    }
    if (uni == 0) throw EmptyUnion("both occupancy grids are empty");
    return static_cast<double>(inter) / static_cast<double>(uni);
}

inline double iou(const std::vector<Primitive>& pred, const VoxelGrid& target_occupancy) {
    return iou(voxelize_primitives(pred, target_occupancy), target_occupancy);
}

}  // namespace primfit
