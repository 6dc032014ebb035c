#pragma once

#include "primfit/io.hpp"

namespace primfit {

// Synthetic desk-scale targets for fitting and evaluation experiments.

struct SynthPart {
    std::string name;
    Vector3d centroid;
    double diameter = 0.0;  // bounding-box diagonal of the part
};

struct SynthResult {
    Mesh mesh;
    std::vector<SynthPart> parts;
    std::vector<Primitive> ground_truth;  // analytic generators only
};

namespace detail {

inline void append_box(Mesh& mesh, const Vector3d& center, const Vector3d& half,
                       std::vector<SynthPart>* parts = nullptr, const std::string& name = "") {
    const int base = static_cast<int>(mesh.vertices.size());
    for (int corner = 0; corner < 8; ++corner) {
        Vector3d offset(corner & 1 ? half.x() : -half.x(),
                        corner & 2 ? half.y() : -half.y(),
                        corner & 4 ? half.z() : -half.z());
        mesh.vertices.push_back(center + offset);
    }
    static const int quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4},
                                    {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
    for (const auto& q : quads) {
        mesh.faces.push_back({base + q[0], base + q[1], base + q[2]});
        mesh.faces.push_back({base + q[0], base + q[2], base + q[3]});
    }
    if (parts) parts->push_back({name, center, 2.0 * half.norm()});
}

}  // namespace detail

inline SynthResult synth_superquadric(const GlobalParams& g, int nu = 48, int nv = 48) {
    SynthResult res;
    Primitive prim;
    prim.globals = g;
    res.mesh = primitive_mesh(prim, nu, nv);
    Vector3d lo, hi;
    res.mesh.bounding_box(lo, hi);
    res.parts.push_back({"superquadric", 0.5 * (lo + hi), (hi - lo).norm()});
    res.ground_truth.push_back(std::move(prim));
    return res;
}

// Seat + back + four legs. Dimensions jitter a little with the seed so
// different seeds give different chairs, deterministically.
inline SynthResult synth_chair(std::uint64_t seed = 0) {
    Rng rng(seed);
    auto jitter = [&](double v) { return v * rng.uniform(0.95, 1.05); };
    const double seat_w = jitter(0.5), seat_d = jitter(0.5), seat_t = jitter(0.1);
    const double seat_z = jitter(0.7);
    const double leg_r = jitter(0.16), leg_h = 0.5 * (seat_z - seat_t);
    const double back_t = jitter(0.08), back_h = jitter(0.4);

    SynthResult res;
    detail::append_box(res.mesh, {0, 0, seat_z}, {seat_w, seat_d, seat_t}, &res.parts, "seat");
    detail::append_box(res.mesh, {-(seat_w - back_t), 0, seat_z + seat_t + back_h},
                       {back_t, seat_d, back_h}, &res.parts, "back");
    const double lx = seat_w - leg_r, ly = seat_d - leg_r;
    int leg = 0;
    for (double sx : {-1.0, 1.0})
        for (double sy : {-1.0, 1.0})
            detail::append_box(res.mesh, {sx * lx, sy * ly, leg_h}, {leg_r, leg_r, leg_h},
                               &res.parts, "leg" + std::to_string(leg++));
    return res;
}

inline SynthResult synth_union_of_boxes(int count = 3, std::uint64_t seed = 0) {
    Rng rng(seed);
    SynthResult res;
    for (int b = 0; b < count; ++b) {
        Vector3d center = rng.vec3(-0.6, 0.6);
        Vector3d half(rng.uniform(0.15, 0.45), rng.uniform(0.15, 0.45), rng.uniform(0.15, 0.45));
        detail::append_box(res.mesh, center, half, &res.parts, "box" + std::to_string(b));
    }
    return res;
}

inline SynthResult synth_l_bracket() {
    SynthResult res;
    detail::append_box(res.mesh, {0.5, 0.25, 0.1}, {0.5, 0.25, 0.1}, &res.parts, "base");
    detail::append_box(res.mesh, {0.1, 0.25, 0.5}, {0.1, 0.25, 0.3}, &res.parts, "upright");
    return res;
}

inline json parts_to_json(const std::vector<SynthPart>& parts) {
    json arr = json::array();
    for (const auto& p : parts)
        arr.push_back({{"name", p.name},
                       {"centroid", {p.centroid.x(), p.centroid.y(), p.centroid.z()}},
                       {"diameter", p.diameter}});
    return arr;
}

inline std::vector<SynthPart> parts_from_json(const json& arr) {
    std::vector<SynthPart> parts;
    for (const auto& jp : arr) {
        SynthPart p;
        p.name = jp["name"].get<std::string>();
        for (int d = 0; d < 3; ++d) p.centroid[d] = jp["centroid"][d].get<double>();
        p.diameter = jp["diameter"].get<double>();
        parts.push_back(p);
    }
    return parts;
}

}  // namespace primfit
