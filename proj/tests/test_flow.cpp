#include "primfit/checks.hpp"
#include "primfit/flow.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace primfit;
using Catch::Approx;

namespace {

Extent unit_box() { return {Vector3d::Constant(-1.0), Vector3d::Constant(1.0)}; }

// Smooth random field, capped so SS integration stays in its stable regime.
VectorGrid random_capped_field(int n, Rng& rng, double amplitude) {
    VectorGrid g = VectorGrid::cube(n, unit_box());
    for (auto& v : g.data()) v = rng.vec3(-1.0, 1.0);
    g = gaussian_smooth(g, 1.5);
    double m = g.max_norm();
    if (m > 0) g.scale(amplitude / m);
    return g;
}

// Fixed-step Euler integration of dx/dtau = v(x); the independent oracle for
// scaling and squaring.
Vector3d euler_flow(const VectorGrid& v, const Vector3d& start, int steps) {
    Vector3d x = start;
    const double dt = 1.0 / steps;
    for (int s = 0; s < steps; ++s) x += dt * v.sample(x);
    return x;
}

bool interior_node(const VectorGrid& g, int i, int j, int k, int margin) {
    return i >= margin && i < g.nx() - margin && j >= margin && j < g.ny() - margin &&
           k >= margin && k < g.nz() - margin;
}

}  // namespace

TEST_CASE("gaussian smoothing basics") {
    VectorGrid zero = VectorGrid::cube(8, unit_box());
    VectorGrid sz = gaussian_smooth(zero, 1.0);
    CHECK(sz.max_norm() == 0.0);

    // single-node impulse: weight mass preserved (interior node, 3 sigma
    // kernel stays inside the grid)
    VectorGrid impulse = VectorGrid::cube(9, unit_box());
    impulse.at(4, 4, 4) = Vector3d(1, 0, 0);
    VectorGrid si = gaussian_smooth(impulse, 1.0);
    Vector3d total = Vector3d::Zero();
    for (const auto& v : si.data()) total += v;
    CHECK(total.x() == Approx(1.0).epsilon(1e-9));
    CHECK(si.at(4, 4, 4).x() > si.at(4, 4, 5).x());

    // constant field stays constant in the interior
    VectorGrid constant = VectorGrid::cube(11, unit_box());
    for (auto& v : constant.data()) v = Vector3d(0.2, -0.1, 0.05);
    VectorGrid sc = gaussian_smooth(constant, 1.0);
    CHECK(sc.at(5, 5, 5).isApprox(Vector3d(0.2, -0.1, 0.05), 1e-9));
}

TEST_CASE("smoothing is linear") {
    Rng rng(2);
    VectorGrid a = random_capped_field(8, rng, 0.3);
    VectorGrid b = random_capped_field(8, rng, 0.3);
    VectorGrid sum = a;
    for (std::size_t n = 0; n < sum.size(); ++n) sum.data()[n] += b.data()[n];
    VectorGrid s1 = gaussian_smooth(sum, 1.0);
    VectorGrid sa = gaussian_smooth(a, 1.0);
    VectorGrid sb = gaussian_smooth(b, 1.0);
    double worst = 0.0;
    for (std::size_t n = 0; n < s1.size(); ++n)
        worst = std::max(worst, (s1.data()[n] - sa.data()[n] - sb.data()[n]).norm());
    CHECK(worst < 1e-12);
}

TEST_CASE("zero velocity integrates to exact identity") {
    VectorGrid zero = VectorGrid::cube(16, unit_box());
    FlowField f = integrate_ss(zero, 7);
    for (const auto& d : f.displacement.data()) CHECK(d.norm() == 0.0);
    CHECK(f.apply(Vector3d(0.3, 0.2, -0.4)) == Vector3d(0.3, 0.2, -0.4));
}

TEST_CASE("constant field flows as a translation in the deep interior") {
    const int n = 16;
    VectorGrid v = VectorGrid::cube(n, unit_box());
    const Vector3d c(0.04, 0.0, 0.0);
    for (auto& d : v.data()) d = c;
    FlowField f = integrate_ss(v, 7);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                if (!interior_node(f.displacement, i, j, k, 4)) continue;
                CHECK((f.displacement.at(i, j, k) - c).norm() < 1e-6);
            }
}

TEST_CASE("scaling and squaring matches dense Euler integration") {
    Rng rng(21);
    VectorGrid v = random_capped_field(16, rng, 0.12);
    FlowField f = integrate_ss(v, 7);
    const double extent = 2.0;
    double sum = 0.0;
    int count = 0;
    for (int k = 0; k < 16; ++k)
        for (int j = 0; j < 16; ++j)
            for (int i = 0; i < 16; ++i) {
                if (!interior_node(v, i, j, k, 3)) continue;
                Vector3d x = v.node_position(i, j, k);
                Vector3d ss = f.apply(x);
                Vector3d euler = euler_flow(v, x, 1024);
                sum += (ss - euler).norm();
                ++count;
            }
    CHECK(sum / count < 1e-3 * extent);
}

TEST_CASE("apply_flow trilinear sampling") {
    VectorGrid d = VectorGrid::cube(4, unit_box());
    d.at(1, 1, 1) = Vector3d(0.1, 0, 0);
    d.at(2, 1, 1) = Vector3d(0.3, 0, 0);
    FlowField f{d, false};

    // node-exact query reproduces the stored displacement
    Vector3d node = d.node_position(1, 1, 1);
    CHECK((f.apply(node) - node).isApprox(Vector3d(0.1, 0, 0), 1e-12));

    // halfway along x between the two nodes: equal-weight blend
    Vector3d mid = 0.5 * (d.node_position(1, 1, 1) + d.node_position(2, 1, 1));
    CHECK((f.apply(mid) - mid).isApprox(Vector3d(0.2, 0, 0), 1e-12));

    // outside the extent: untouched
    Vector3d outside(5, 5, 5);
    CHECK(f.apply(outside) == outside);
}

TEST_CASE("forward-inverse composition is near identity") {
    Rng rng(31);
    VectorGrid v = random_capped_field(16, rng, 0.06);
    FlowField fwd = integrate_ss(v, 7);
    FlowField inv = inverse_flow(v, 7);
    const double cell = v.min_spacing();
    double sum = 0.0;
    int count = 0;
    for (int k = 0; k < 16; ++k)
        for (int j = 0; j < 16; ++j)
            for (int i = 0; i < 16; ++i) {
                if (!interior_node(v, i, j, k, 3)) continue;
                Vector3d x = v.node_position(i, j, k);
                sum += (inv.apply(fwd.apply(x)) - x).norm();
                ++count;
            }
    CHECK(sum / count < 1e-2 * cell);
}

TEST_CASE("semigroup: tau=1 equals half-field composed with itself") {
    Rng rng(41);
    VectorGrid v = random_capped_field(16, rng, 0.12);
    VectorGrid half = v;
    half.scale(0.5);
    FlowField full = integrate_ss(v, 7);
    FlowField h = integrate_ss(half, 7);
    const double extent = 2.0;
    double sum = 0.0;
    int count = 0;
    for (int k = 0; k < 16; ++k)
        for (int j = 0; j < 16; ++j)
            for (int i = 0; i < 16; ++i) {
                if (!interior_node(v, i, j, k, 3)) continue;
                Vector3d x = v.node_position(i, j, k);
                sum += (h.apply(h.apply(x)) - full.apply(x)).norm();
                ++count;
            }
    CHECK(sum / count < 1e-3 * extent);
}

TEST_CASE("positive jacobian determinant for capped fields") {
    Rng rng(51);
    for (int rep = 0; rep < 5; ++rep) {
        VectorGrid v = random_capped_field(16, rng, 0.15);
        CHECK(min_jacobian_determinant(integrate_ss(v, 7)) > 0.0);
    }
}

TEST_CASE("unstable field is rejected") {
    VectorGrid v = VectorGrid::cube(8, unit_box());
    for (auto& d : v.data()) d = Vector3d(500.0, 0, 0);
    CHECK_THROWS_AS(integrate_ss(v, 3), UnstableField);
}

TEST_CASE("velocity field cap rescales while preserving direction") {
    VelocityField f = VelocityField::make(8, unit_box(), 1.0);
    for (auto& v : f.raw.data()) v = Vector3d(10.0, 5.0, 0.0);
    VectorGrid eff = f.effective();
    CHECK(eff.max_norm() <= f.cap() * (1 + 1e-12));
    Vector3d dir = eff.at(4, 4, 4).normalized();
    CHECK(dir.isApprox(Vector3d(10, 5, 0).normalized(), 1e-9));
}
