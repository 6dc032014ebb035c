#include "primfit/io.hpp"
#include "primfit/metrics.hpp"
#include "primfit/synth.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace primfit;
using Catch::Approx;

namespace {

double brute_chamfer(const std::vector<Vector3d>& a, const std::vector<Vector3d>& b) {
    auto one_way = [](const std::vector<Vector3d>& from, const std::vector<Vector3d>& to) {
        double sum = 0.0;
        for (const auto& p : from) {
            double best = std::numeric_limits<double>::max();
            for (const auto& q : to) best = std::min(best, (p - q).norm());
            sum += best;
        }
        return sum / from.size();
    };
    return 0.5 * (one_way(a, b) + one_way(b, a));
}

}  // namespace

TEST_CASE("chamfer trivial values") {
    std::vector<Vector3d> a = {{0, 0, 0}};
    std::vector<Vector3d> b = {{1, 0, 0}};
    CHECK(chamfer_l1(a, a) == 0.0);
    CHECK(chamfer_l1(a, b) == Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(chamfer_l1({}, b), EmptySet);
}

TEST_CASE("chamfer equals brute force") {
    Rng rng(1);
    std::vector<Vector3d> a, b;
    for (int i = 0; i < 100; ++i) a.push_back(rng.vec3(-1, 1));
    for (int i = 0; i < 120; ++i) b.push_back(rng.vec3(-1, 1));
    CHECK(std::abs(chamfer_l1(a, b) - brute_chamfer(a, b)) < 1e-12);
    // symmetry
    CHECK(chamfer_l1(a, b) == Approx(chamfer_l1(b, a)).epsilon(1e-15));
}

TEST_CASE("occupancy: inside at center, outside far away") {
    Primitive p;
    p.globals.eps1 = 0.6;
    p.globals.t1 = 0.3;
    p.pose.c = Vector3d(0.5, 0, 0);
    p.resample();
    CHECK(primitive_occupancy(p.pose.c, p));
    CHECK_FALSE(primitive_occupancy(p.pose.c + Vector3d(10, 0, 0), p));
}

TEST_CASE("occupancy brackets the surface") {
    Rng rng(2);
    Primitive p;
    p.globals.a1 = 1.2;
    p.globals.eps1 = 0.7;
    p.globals.eps2 = 1.3;
    p.resample();
    OccupancyTester tester(p);
    for (int i = 0; i < 200; ++i) {
        Uv uv = {rng.uniform(-1.2, 1.2), rng.uniform(-2.8, 2.8)};
        Vector3d s = taper_bend(superquadric_surface(uv, p.globals), p.globals);
        CHECK(tester.inside(p.pose.to_world(0.99 * s)));
        CHECK_FALSE(tester.inside(p.pose.to_world(1.01 * s)));
    }
}

TEST_CASE("occupancy agrees with mesh ray casting on a deformed primitive") {
    Primitive p;
    p.globals.eps1 = 0.5;
    p.globals.eps2 = 1.2;
    p.globals.t1 = 0.3;
    p.globals.b1 = 0.2;
    p.globals.b3 = 1.0;
    p.resample();
    Mesh mesh = primitive_mesh(p, 64, 64);
    Vector3d lo, hi;
    mesh.bounding_box(lo, hi);
    VoxelGrid mesh_occ = voxelize_mesh(mesh, lo, hi, 48);
    OccupancyTester tester(p);
    std::size_t agree = 0, total = 0;
    for (int k = 0; k < 48; ++k)
        for (int j = 0; j < 48; ++j)
            for (int i = 0; i < 48; ++i) {
                bool a = mesh_occ.occupancy[mesh_occ.index(i, j, k)] != 0;
                bool b = tester.inside(mesh_occ.center(i, j, k));
                agree += (a == b);
                ++total;
            }
    CHECK(static_cast<double>(agree) / total >= 0.99);
}

TEST_CASE("iou trivial values") {
    Primitive sphere;
    sphere.resample();
    std::vector<Primitive> pred = {sphere};
    VoxelGrid bounds = VoxelGrid::make(Vector3d::Constant(-2.2), Vector3d::Constant(2.2), 48);
    VoxelGrid occ = voxelize_primitives(pred, bounds);
    CHECK(iou(occ, occ) == 1.0);

    Primitive off = sphere;
    off.globals.a0 = 0.2;
    off.pose.c = Vector3d(1.8, 1.8, 1.8);
    off.resample();
    VoxelGrid occ_off = voxelize_primitives({off}, bounds);
    CHECK(iou(occ, occ_off) == 0.0);
}

TEST_CASE("sphere against twice-scaled sphere has IoU 1/8") {
    Primitive small;
    small.resample();
    Primitive big;
    big.globals.a0 = 2.0;
    big.resample();
    VoxelGrid bounds = VoxelGrid::make(Vector3d::Constant(-2.0), Vector3d::Constant(2.0), 64);
    VoxelGrid occ_small = voxelize_primitives({small}, bounds);
    VoxelGrid occ_big = voxelize_primitives({big}, bounds);
    CHECK(iou(occ_small, occ_big) == Approx(0.125).margin(0.02));
}

TEST_CASE("iou invariant under a shared rigid transform") {
    Primitive a;
    a.globals.a1 = 1.3;
    a.globals.eps1 = 0.6;
    a.resample();
    Primitive b;
    b.globals.a0 = 1.1;
    b.pose.c = Vector3d(0.4, 0, 0);
    b.resample();
    VoxelGrid bounds = VoxelGrid::make(Vector3d::Constant(-3.0), Vector3d::Constant(3.0), 64);
    double before = iou(voxelize_primitives({a}, bounds), voxelize_primitives({b}, bounds));

    const double h = std::sqrt(0.5);
    Vector4d rot(h, 0, h, 0);
    Vector3d shift(0.3, -0.2, 0.1);
    for (Primitive* p : {&a, &b}) {
        Matrix3d R = rotation_from_quaternion(rot);
        p->pose.c = R * p->pose.c + shift;
        // quaternion composition: rot * theta
        Vector4d t = p->pose.theta;
        Vector4d q;
        q[0] = rot[0] * t[0] - rot.tail<3>().dot(t.tail<3>());
        q.tail<3>() = rot[0] * t.tail<3>() + t[0] * rot.tail<3>() +
                      rot.tail<3>().cross(Vector3d(t.tail<3>()));
        p->pose.theta = q.normalized();
        p->resample();
    }
    double after = iou(voxelize_primitives({a}, bounds), voxelize_primitives({b}, bounds));
    CHECK(after == Approx(before).margin(0.02));
}

TEST_CASE("empty union is an error") {
    VoxelGrid g = VoxelGrid::make(Vector3d::Zero(), Vector3d::Ones(), 8);
    CHECK_THROWS_AS(iou(g, g), EmptyUnion);
}
