#pragma once

#include "primfit/mathutil.hpp"

#include <array>
#include <string>
#include <vector>

namespace primfit {

// Triangle mesh with optional per-face group labels (one group per primitive
// on export). Faces index into vertices.
struct Mesh {
    std::vector<Vector3d> vertices;
    std::vector<std::array<int, 3>> faces;
    std::vector<int> face_group;  // empty or one entry per face
    std::vector<std::string> group_names;

    bool has_faces() const { return !faces.empty(); }

    double face_area(std::size_t f) const {
        const auto& t = faces[f];
        return 0.5 * (vertices[t[1]] - vertices[t[0]])
                         .cross(vertices[t[2]] - vertices[t[0]])
                         .norm();
    }

    void bounding_box(Vector3d& lo, Vector3d& hi) const {
        lo = Vector3d::Constant(std::numeric_limits<double>::max());
        hi = Vector3d::Constant(std::numeric_limits<double>::lowest());
        for (const auto& v : vertices) {
            lo = lo.cwiseMin(v);
            hi = hi.cwiseMax(v);
        }
    }
};

}  // namespace primfit
