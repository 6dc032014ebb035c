#include "primfit/io.hpp"
#include "primfit/metrics.hpp"
#include "primfit/synth.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

using namespace primfit;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("primfit_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

Mesh unit_cube() {
    Mesh m;
    detail::append_box(m, Vector3d::Constant(0.5), Vector3d::Constant(0.5));
    return m;
}

}  // namespace

TEST_CASE("obj round trip and area-weighted sampling") {
    TempDir dir;
    Mesh cube = unit_cube();
    write_obj(cube, dir.file("cube.obj"));
    ShapeFile loaded = load_shape(dir.file("cube.obj"));
    REQUIRE(loaded.mesh.vertices.size() == 8);
    REQUIRE(loaded.mesh.faces.size() == 12);

    // 6 equal faces: with 6000 samples each should get ~1000 (within 3 sigma
    // of the multinomial, sigma = sqrt(n p (1-p)) ~ 28.9)
    Rng rng(0);
    auto pts = sample_mesh_surface(loaded.mesh, 6000, rng);
    int face_counts[6] = {0, 0, 0, 0, 0, 0};
    for (const auto& p : pts) {
        if (p.x() < 1e-9) ++face_counts[0];
        else if (p.x() > 1 - 1e-9) ++face_counts[1];
        else if (p.y() < 1e-9) ++face_counts[2];
        else if (p.y() > 1 - 1e-9) ++face_counts[3];
        else if (p.z() < 1e-9) ++face_counts[4];
        else ++face_counts[5];
    }
    for (int c : face_counts) CHECK(std::abs(c - 1000) < 3 * 29);
}

TEST_CASE("xyz point clouds are never upsampled") {
    TempDir dir;
    {
        std::ofstream out(dir.file("points.xyz"));
        Rng rng(1);
        for (int i = 0; i < 500; ++i) {
            Vector3d p = rng.vec3(-1, 1);
            out << p.x() << " " << p.y() << " " << p.z() << "\n";
        }
    }
    TargetCloud cloud = load_target(dir.file("points.xyz"), 2000, 0);
    CHECK(cloud.points.size() == 500);
    TargetCloud sub = load_target(dir.file("points.xyz"), 100, 0);
    CHECK(sub.points.size() == 100);
}

TEST_CASE("malformed face reports the line") {
    TempDir dir;
    {
        std::ofstream out(dir.file("bad.obj"));
        out << "v 0 0 0\nv 1 0 0\nv 0 1 0\n";
        out << "f 1 2 9\n";  // line 4: out-of-range index
    }
    try {
        load_shape(dir.file("bad.obj"));
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line_number == 4);
    }
}

TEST_CASE("ascii ply with extra properties") {
    TempDir dir;
    {
        std::ofstream out(dir.file("cloud.ply"));
        out << "ply\nformat ascii 1.0\nelement vertex 3\n"
               "property float x\nproperty float y\nproperty float z\n"
               "property uchar red\nend_header\n"
               "0 0 0 255\n1 0 0 128\n0 1 0 0\n";
    }
    ShapeFile shape = load_shape(dir.file("cloud.ply"));
    REQUIRE(shape.mesh.vertices.size() == 3);
    CHECK(shape.mesh.vertices[1].isApprox(Vector3d(1, 0, 0), 1e-12));
}

TEST_CASE("binary little-endian ply") {
    TempDir dir;
    {
        std::ofstream out(dir.file("bin.ply"), std::ios::binary);
        out << "ply\nformat binary_little_endian 1.0\nelement vertex 2\n"
               "property float x\nproperty float y\nproperty float z\nend_header\n";
        float coords[6] = {0.5f, 1.5f, -2.0f, 3.0f, 0.0f, 1.0f};
        out.write(reinterpret_cast<const char*>(coords), sizeof(coords));
    }
    ShapeFile shape = load_shape(dir.file("bin.ply"));
    REQUIRE(shape.mesh.vertices.size() == 2);
    CHECK(shape.mesh.vertices[0].isApprox(Vector3d(0.5, 1.5, -2.0), 1e-6));
    CHECK(shape.mesh.vertices[1].isApprox(Vector3d(3.0, 0.0, 1.0), 1e-6));
}

TEST_CASE("params round trip is field-exact") {
    TempDir dir;
    Rng rng(5);
    std::vector<Primitive> prims;
    for (int i = 0; i < 2; ++i) {
        Primitive p(8, 8);
        p.pose.c = rng.vec3(-1, 1);
        p.pose.theta = Vector4d(rng.normal(), rng.normal(), rng.normal(), rng.normal()).normalized();
        p.globals.a1 = rng.uniform(0.5, 1.5);
        p.globals.eps1 = rng.uniform(0.3, 1.8);
        p.globals.t1 = rng.uniform(-0.5, 0.5);
        p.fit_field_extent(8);
        for (auto& v : p.field.raw.data()) v = rng.vec3(-0.01, 0.01);
        p.resample();
        prims.push_back(std::move(p));
    }
    save_params(prims, dir.file("params.json"));
    auto loaded = load_params(dir.file("params.json"));
    REQUIRE(loaded.size() == prims.size());
    for (std::size_t i = 0; i < prims.size(); ++i) {
        CHECK(loaded[i].pose.c == prims[i].pose.c);
        CHECK(loaded[i].pose.theta == prims[i].pose.theta);
        CHECK(loaded[i].globals.as_vector() == prims[i].globals.as_vector());
        for (std::size_t n = 0; n < prims[i].field.raw.size(); ++n)
            CHECK(loaded[i].field.raw.data()[n] == prims[i].field.raw.data()[n]);
        // world samples agree to round-trip precision
        auto wa = prims[i].world_samples();
        auto wb = loaded[i].world_samples();
        for (std::size_t r = 0; r < wa.size(); ++r)
            CHECK((wa[r] - wb[r]).norm() < 1e-9);
    }
}

TEST_CASE("missing svf block is rejected with a field path") {
    json doc = params_to_json({Primitive(4, 4)});
    doc["primitives"][0].erase("svf");
    try {
        params_from_json(doc);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("primitives[0].svf") != std::string::npos);
    }
}

TEST_CASE("schema version mismatch is explicit") {
    json doc = params_to_json({Primitive(4, 4)});
    doc["schema_version"] = 2;
    CHECK_THROWS_AS(params_from_json(doc), SchemaVersionMismatch);
}

TEST_CASE("exported sphere mesh has unit radii") {
    TempDir dir;
    Primitive sphere;
    sphere.resample();
    export_mesh({sphere}, dir.file("sphere.obj"), 32, 32);
    ShapeFile loaded = load_shape(dir.file("sphere.obj"));
    for (const auto& v : loaded.mesh.vertices) CHECK(v.norm() == Approx(1.0).margin(1e-6));
}

TEST_CASE("one obj group per primitive") {
    TempDir dir;
    std::vector<Primitive> prims(3);
    for (auto& p : prims) p.resample();
    export_mesh(prims, dir.file("multi.obj"), 8, 8);
    std::ifstream in(dir.file("multi.obj"));
    int groups = 0;
    std::string line;
    while (std::getline(in, line))
        if (line.rfind("g ", 0) == 0) ++groups;
    CHECK(groups == 3);
}

TEST_CASE("exported mesh resamples close to the analytic surface") {
    Primitive p;
    p.globals.eps1 = 0.8;
    p.globals.t1 = 0.2;
    p.resample();
    Mesh mesh = primitive_mesh(p, 48, 48);
    Rng rng(9);
    auto mesh_pts = sample_mesh_surface(mesh, 2000, rng);
    // dense analytic sampling
    Primitive dense(64, 64);
    dense.globals = p.globals;
    dense.resample();
    double cd = chamfer_l1(mesh_pts, dense.world_samples());
    CHECK(cd < 0.05);  // well under the grid discretization scale
}

TEST_CASE("loss csv layout") {
    TempDir dir;
    std::vector<StepRecord> hist(2);
    hist[0].iter = 0;
    hist[0].l_ext = 1.5;
    hist[1].iter = 1;
    hist[1].l_ext = 1.0;
    write_loss_csv(hist, dir.file("loss.csv"));
    std::ifstream in(dir.file("loss.csv"));
    std::string header;
    std::getline(in, header);
    CHECK(header == "iter,l_ext,l_trans,l_rot,l_glob,l_loc,chamfer");
    int rows = 0;
    std::string line;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 2);
}
