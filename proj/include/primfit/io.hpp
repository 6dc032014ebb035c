#pragma once

#include "primfit/fitting.hpp"
#include "primfit/mesh.hpp"

#include <nlohmann/json.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace primfit {

using nlohmann::json;

enum class ShapeFormat { Obj, Ply, Xyz };

struct ShapeFile {
    ShapeFormat format = ShapeFormat::Obj;
    Mesh mesh;  // faces empty for point-only inputs
};

namespace detail {

inline ShapeFile load_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    ShapeFile shape;
    shape.format = ShapeFormat::Obj;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag)) continue;
        if (tag == "v") {
            double x, y, z;
            if (!(ss >> x >> y >> z)) throw ParseError("malformed vertex", lineno);
            shape.mesh.vertices.emplace_back(x, y, z);
        } else if (tag == "f") {
            std::vector<int> ids;
            std::string tok;
            while (ss >> tok) {
                // accept v, v/vt, v//vn, v/vt/vn
                std::size_t slash = tok.find('/');
                std::string head = slash == std::string::npos ? tok : tok.substr(0, slash);
                long v;
                try {
                    v = std::stol(head);
                } catch (const std::exception&) {
                    throw ParseError("malformed face index '" + tok + "'", lineno);
                }
                if (v < 0) v = static_cast<long>(shape.mesh.vertices.size()) + v + 1;
                if (v < 1 || v > static_cast<long>(shape.mesh.vertices.size()))
                    throw ParseError("face index out of range", lineno);
                ids.push_back(static_cast<int>(v - 1));
            }
            if (ids.size() < 3) throw ParseError("face with fewer than 3 vertices", lineno);
            for (std::size_t t = 1; t + 1 < ids.size(); ++t)
                shape.mesh.faces.push_back({ids[0], ids[t], ids[t + 1]});
        }
    }
    if (shape.mesh.vertices.empty()) throw EmptyShape(path + " has no vertices");
    return shape;
}

inline ShapeFile load_xyz(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    ShapeFile shape;
    shape.format = ShapeFormat::Xyz;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        double x, y, z;
        if (ss >> x >> y >> z) {
            shape.mesh.vertices.emplace_back(x, y, z);
        } else {
            std::string rest;
            ss.clear();
            if (ss >> rest) throw ParseError("malformed coordinate triple", lineno);
        }
    }
    if (shape.mesh.vertices.empty()) throw EmptyShape(path + " has no points");
    return shape;
}

inline ShapeFile load_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    long lineno = 0;
    auto next_line = [&]() {
        if (!std::getline(in, line)) throw ParseError("unexpected end of PLY header", lineno);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++lineno;
    };
    next_line();
    if (line != "ply") throw ParseError("not a PLY file", lineno);

    bool binary = false;
    long vertex_count = -1, face_count = 0;
    struct Prop { std::string type, name; };
    std::vector<Prop> vertex_props;
    std::string current_element;
    while (true) {
        next_line();
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "comment") continue;
        if (tag == "format") {
            std::string fmt;
            ss >> fmt;
            if (fmt == "ascii") binary = false;
            else if (fmt == "binary_little_endian") binary = true;
            else throw ParseError("unsupported PLY format " + fmt, lineno);
        } else if (tag == "element") {
            ss >> current_element;
            long n;
            ss >> n;
            if (current_element == "vertex") vertex_count = n;
            else if (current_element == "face") face_count = n;
        } else if (tag == "property") {
            std::string type, name;
            ss >> type;
            if (type == "list") { ss >> type >> type >> name; type = "list"; }
            else ss >> name;
            if (current_element == "vertex") vertex_props.push_back({type, name});
        } else if (tag == "end_header") {
            break;
        }
    }
    if (vertex_count <= 0) throw ParseError("PLY has no vertex element", lineno);

    auto scalar_size = [](const std::string& t) -> int {
        if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
        if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
        if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" ||
            t == "float32")
            return 4;
        if (t == "double" || t == "float64") return 8;
        return -1;
    };

    ShapeFile shape;
    shape.format = ShapeFormat::Ply;
    shape.mesh.vertices.reserve(vertex_count);
    if (!binary) {
        for (long i = 0; i < vertex_count; ++i) {
            next_line();
            std::istringstream ss(line);
            double x = 0, y = 0, z = 0, val;
            for (const auto& p : vertex_props) {
                if (!(ss >> val)) throw ParseError("short vertex row", lineno);
                if (p.name == "x") x = val;
                else if (p.name == "y") y = val;
                else if (p.name == "z") z = val;
            }
            shape.mesh.vertices.emplace_back(x, y, z);
        }
        for (long f = 0; f < face_count; ++f) {
            next_line();
            std::istringstream ss(line);
            int n;
            if (!(ss >> n) || n < 3) throw ParseError("malformed face row", lineno);
            std::vector<int> ids(n);
            for (int t = 0; t < n; ++t)
                if (!(ss >> ids[t])) throw ParseError("short face row", lineno);
            for (int t = 1; t + 1 < n; ++t)
                shape.mesh.faces.push_back({ids[0], ids[t], ids[t + 1]});
        }
    } else {
        for (long i = 0; i < vertex_count; ++i) {
            double x = 0, y = 0, z = 0;
            for (const auto& p : vertex_props) {
                int sz = scalar_size(p.type);
                if (sz < 0) throw ParseError("unsupported binary PLY property " + p.type);
                char buf[8];
                if (!in.read(buf, sz)) throw ParseError("truncated binary PLY vertex data");
                double val = 0;
                if (p.type == "float" || p.type == "float32") {
                    float f;
                    std::memcpy(&f, buf, 4);
                    val = f;
                } else if (p.type == "double" || p.type == "float64") {
                    std::memcpy(&val, buf, 8);
                }
                if (p.name == "x") x = val;
                else if (p.name == "y") y = val;
                else if (p.name == "z") z = val;
            }
            shape.mesh.vertices.emplace_back(x, y, z);
        }
        // Binary faces are not needed by any current input; ignore the rest.
    }
    if (shape.mesh.vertices.empty()) throw EmptyShape(path + " has no vertices");
    return shape;
}

}  // namespace detail

inline ShapeFile load_shape(const std::string& path) {
    std::string ext = std::filesystem::path(path).extension().string();
    for (auto& c : ext) c = static_cast<char>(std::tolower(c));
    if (ext == ".obj") return detail::load_obj(path);
    if (ext == ".ply") return detail::load_ply(path);
    if (ext == ".xyz" || ext == ".txt" || ext == ".pts") return detail::load_xyz(path);
    throw IoError("unknown shape file extension '" + ext + "'");
}

// Deterministic area-weighted surface sampling of a triangle mesh.
inline std::vector<Vector3d> sample_mesh_surface(const Mesh& mesh, std::size_t samples,
                                                 Rng& rng) {
    std::vector<double> cum(mesh.faces.size());
    double total = 0.0;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        total += mesh.face_area(f);
        cum[f] = total;
    }
    if (total <= 0.0) throw EmptyShape("mesh has zero surface area");
    std::vector<Vector3d> out;
    out.reserve(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        double pick = rng.uniform() * total;
        std::size_t f = std::lower_bound(cum.begin(), cum.end(), pick) - cum.begin();
        if (f >= mesh.faces.size()) f = mesh.faces.size() - 1;
        double r1 = std::sqrt(rng.uniform());
        double r2 = rng.uniform();
        const auto& t = mesh.faces[f];
        out.push_back((1 - r1) * mesh.vertices[t[0]] + r1 * (1 - r2) * mesh.vertices[t[1]] +
                      r1 * r2 * mesh.vertices[t[2]]);
    }
    return out;
}

// Meshes get area-weighted surface sampling; point-only inputs are used as-is
// (subsampled without replacement if larger than requested, never upsampled).
inline TargetCloud load_target(const std::string& path, std::size_t samples, std::uint64_t seed) {
    ShapeFile shape = load_shape(path);
    Rng rng(seed);
    if (shape.mesh.has_faces()) {
        return TargetCloud(sample_mesh_surface(shape.mesh, samples, rng));
    }
    std::vector<Vector3d> pts = shape.mesh.vertices;
    if (pts.size() > samples) {
        for (std::size_t i = 0; i < samples; ++i) {
            std::size_t j = i + rng.index(pts.size() - i);
            std::swap(pts[i], pts[j]);
        }
        pts.resize(samples);
    }
    return TargetCloud(std::move(pts));
}

// Closed (u, v)-grid triangulation of one primitive: nu-1 latitude rings of nv
// vertices plus two pole vertices, pole fans closing the surface.
inline Mesh primitive_mesh(const Primitive& prim, int nu = 32, int nv = 32) {
    Mesh mesh;
    FlowField flow = (prim.field.raw.size() > 0 && !prim.field.is_zero())
                         ? integrate_ss(prim.field, prim.ss_steps)
                         : FlowField::identity(2, Extent{});
    auto world = [&](double u, double v) {
        Vector3d e = superquadric_surface({u, v}, prim.globals);
        Vector3d s = taper_bend(e, prim.globals);
        return prim.pose.to_world(flow.apply(s));
    };
    const int bottom = 0;
    mesh.vertices.push_back(world(-M_PI / 2, 0.0));
    for (int i = 1; i < nu; ++i) {
        double u = -M_PI / 2 + M_PI * i / nu;
        for (int j = 0; j < nv; ++j) {
            double v = -M_PI + 2 * M_PI * j / nv;
            mesh.vertices.push_back(world(u, v));
        }
    }
    const int top = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(world(M_PI / 2, 0.0));

    auto ring = [&](int i, int j) { return 1 + (i - 1) * nv + (j % nv); };
    for (int j = 0; j < nv; ++j)
        mesh.faces.push_back({bottom, ring(1, j + 1), ring(1, j)});
    for (int i = 1; i + 1 < nu; ++i)
        for (int j = 0; j < nv; ++j) {
            mesh.faces.push_back({ring(i, j), ring(i, j + 1), ring(i + 1, j)});
            mesh.faces.push_back({ring(i, j + 1), ring(i + 1, j + 1), ring(i + 1, j)});
        }
    for (int j = 0; j < nv; ++j)
        mesh.faces.push_back({top, ring(nu - 1, j), ring(nu - 1, j + 1)});
    return mesh;
}

inline void write_obj(const Mesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out.precision(12);
    int last_group = -1;
    std::vector<std::size_t> face_order(mesh.faces.size());
    std::iota(face_order.begin(), face_order.end(), 0);
    for (const auto& v : mesh.vertices)
        out << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        if (!mesh.face_group.empty() && mesh.face_group[f] != last_group) {
            last_group = mesh.face_group[f];
            std::string name = last_group < static_cast<int>(mesh.group_names.size())
                                   ? mesh.group_names[last_group]
                                   : "group" + std::to_string(last_group);
            out << "g " << name << "\n";
        }
        out << "f " << mesh.faces[f][0] + 1 << " " << mesh.faces[f][1] + 1 << " "
            << mesh.faces[f][2] + 1 << "\n";
    }
    if (!out) throw IoError("write failed for " + path);
}

// One OBJ group per primitive, deterministic vertex order.
inline void export_mesh(const std::vector<Primitive>& prims, const std::string& path,
                        int nu = 32, int nv = 32) {
    Mesh all;
    for (std::size_t p = 0; p < prims.size(); ++p) {
        Mesh m = primitive_mesh(prims[p], nu, nv);
        int base = static_cast<int>(all.vertices.size());
        all.vertices.insert(all.vertices.end(), m.vertices.begin(), m.vertices.end());
        for (auto& f : m.faces)
            all.faces.push_back({f[0] + base, f[1] + base, f[2] + base});
        all.face_group.insert(all.face_group.end(), m.faces.size(), static_cast<int>(p));
        all.group_names.push_back("primitive" + std::to_string(p));
    }
    write_obj(all, path);
}

inline constexpr int kParamsSchemaVersion = 1;

inline json params_to_json(const std::vector<Primitive>& prims) {
    json doc;
    doc["schema_version"] = kParamsSchemaVersion;
    doc["primitives"] = json::array();
    for (const auto& p : prims) {
        json jp;
        jp["q_c"] = {p.pose.c.x(), p.pose.c.y(), p.pose.c.z()};
        jp["q_theta"] = {p.pose.theta[0], p.pose.theta[1], p.pose.theta[2], p.pose.theta[3]};
        const auto& g = p.globals;
        jp["q_s"] = {{"a0", g.a0}, {"a1", g.a1}, {"a2", g.a2}, {"a3", g.a3},
                     {"eps1", g.eps1}, {"eps2", g.eps2}, {"t1", g.t1}, {"t2", g.t2},
                     {"b1", g.b1}, {"b2", g.b2}, {"b3", g.b3}};
        json svf;
        const auto& grid = p.field.raw;
        svf["resolution"] = {grid.nx(), grid.ny(), grid.nz()};
        svf["extent_lo"] = {grid.extent().lo.x(), grid.extent().lo.y(), grid.extent().lo.z()};
        svf["extent_hi"] = {grid.extent().hi.x(), grid.extent().hi.y(), grid.extent().hi.z()};
        svf["sigma"] = p.field.sigma;
        svf["cap_fraction"] = p.field.cap_fraction;
        std::vector<double> flat;
        flat.reserve(grid.size() * 3);
        for (const auto& v : grid.data()) {
            flat.push_back(v.x());
            flat.push_back(v.y());
            flat.push_back(v.z());
        }
        svf["grid"] = flat;
        jp["svf"] = svf;
        jp["ss_steps"] = p.ss_steps;
        jp["samples"] = {p.nu(), p.nv()};
        doc["primitives"].push_back(jp);
    }
    return doc;
}

inline std::vector<Primitive> params_from_json(const json& doc) {
    if (!doc.contains("schema_version"))
        throw ParseError("missing field 'schema_version'");
    if (doc["schema_version"].get<int>() != kParamsSchemaVersion)
        throw SchemaVersionMismatch("expected schema_version " +
                                    std::to_string(kParamsSchemaVersion) + ", got " +
                                    doc["schema_version"].dump());
    if (!doc.contains("primitives")) throw ParseError("missing field 'primitives'");
    std::vector<Primitive> prims;
    int pi = 0;
    for (const auto& jp : doc["primitives"]) {
        const std::string where = "primitives[" + std::to_string(pi++) + "]";
        for (const char* field : {"q_c", "q_theta", "q_s", "svf"})
            if (!jp.contains(field)) throw ParseError("missing field '" + where + "." + field + "'");
        int nu = 32, nv = 32;
        if (jp.contains("samples")) {
            nu = jp["samples"][0].get<int>();
            nv = jp["samples"][1].get<int>();
        }
        Primitive p(nu, nv);
        for (int d = 0; d < 3; ++d) p.pose.c[d] = jp["q_c"][d].get<double>();
        for (int d = 0; d < 4; ++d) p.pose.theta[d] = jp["q_theta"][d].get<double>();
        const auto& qs = jp["q_s"];
        for (const char* field : {"a0", "a1", "a2", "a3", "eps1", "eps2", "t1", "t2",
                                  "b1", "b2", "b3"})
            if (!qs.contains(field))
                throw ParseError("missing field '" + where + ".q_s." + field + "'");
        p.globals.a0 = qs["a0"]; p.globals.a1 = qs["a1"];
        p.globals.a2 = qs["a2"]; p.globals.a3 = qs["a3"];
        p.globals.eps1 = qs["eps1"]; p.globals.eps2 = qs["eps2"];
        p.globals.t1 = qs["t1"]; p.globals.t2 = qs["t2"];
        p.globals.b1 = qs["b1"]; p.globals.b2 = qs["b2"]; p.globals.b3 = qs["b3"];
        const auto& svf = jp["svf"];
        for (const char* field : {"resolution", "extent_lo", "extent_hi", "sigma", "grid"})
            if (!svf.contains(field))
                throw ParseError("missing field '" + where + ".svf." + field + "'");
        Extent ext;
        for (int d = 0; d < 3; ++d) {
            ext.lo[d] = svf["extent_lo"][d].get<double>();
            ext.hi[d] = svf["extent_hi"][d].get<double>();
        }
        p.field.raw = VectorGrid(svf["resolution"][0].get<int>(), svf["resolution"][1].get<int>(),
                                 svf["resolution"][2].get<int>(), ext);
        p.field.sigma = svf["sigma"].get<double>();
        if (svf.contains("cap_fraction")) p.field.cap_fraction = svf["cap_fraction"].get<double>();
        const auto& flat = svf["grid"];
        if (flat.size() != p.field.raw.size() * 3)
            throw ParseError("field '" + where + ".svf.grid' has wrong length");
        for (std::size_t n = 0; n < p.field.raw.size(); ++n)
            p.field.raw.data()[n] = Vector3d(flat[3 * n].get<double>(),
                                             flat[3 * n + 1].get<double>(),
                                             flat[3 * n + 2].get<double>());
        if (jp.contains("ss_steps")) p.ss_steps = jp["ss_steps"].get<int>();
        p.resample();
        prims.push_back(std::move(p));
    }
    return prims;
}

inline void save_params(const std::vector<Primitive>& prims, const std::string& path,
                        const json& extra = json::object()) {
    json doc = params_to_json(prims);
    for (auto it = extra.begin(); it != extra.end(); ++it) doc[it.key()] = it.value();
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << doc.dump(2) << "\n";
}

inline std::vector<Primitive> load_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    return params_from_json(doc);
}

inline void write_loss_csv(const std::vector<StepRecord>& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out.precision(12);
    out << "iter,l_ext,l_trans,l_rot,l_glob,l_loc,chamfer\n";
    for (const auto& r : history)
        out << r.iter << "," << r.l_ext << "," << r.l_trans << "," << r.l_rot << ","
            << r.l_glob << "," << r.l_loc << "," << r.chamfer << "\n";
}

}  // namespace primfit
