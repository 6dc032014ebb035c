#pragma once

#include "primfit/mathutil.hpp"

#include <vector>

namespace primfit {

// Axis-aligned box.
struct Extent {
    Vector3d lo = Vector3d::Constant(-1.0);
    Vector3d hi = Vector3d::Constant(1.0);

    Vector3d size() const { return hi - lo; }
    bool contains(const Vector3d& p) const {
        return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
    }
};

// A regular lattice of 3-vectors over an extent box, with trilinear sampling
// and its exact adjoint (splatting). Queries outside the box sample zero and
// splat nowhere.
class VectorGrid {
  public:
    VectorGrid() = default;
    VectorGrid(int nx, int ny, int nz, const Extent& extent)
        : nx_(nx), ny_(ny), nz_(nz), extent_(extent),
          data_(static_cast<std::size_t>(nx) * ny * nz, Vector3d::Zero()) {}

    static VectorGrid cube(int n, const Extent& extent) { return {n, n, n, extent}; }

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int nz() const { return nz_; }
    std::size_t size() const { return data_.size(); }
    const Extent& extent() const { return extent_; }

    Vector3d& at(int i, int j, int k) { return data_[idx(i, j, k)]; }
    const Vector3d& at(int i, int j, int k) const { return data_[idx(i, j, k)]; }
    std::vector<Vector3d>& data() { return data_; }
    const std::vector<Vector3d>& data() const { return data_; }

    Vector3d node_position(int i, int j, int k) const {
        return extent_.lo + Vector3d(i * spacing(0), j * spacing(1), k * spacing(2));
    }
    double spacing(int axis) const {
        int n = axis == 0 ? nx_ : (axis == 1 ? ny_ : nz_);
        return extent_.size()[axis] / (n - 1);
    }
    double min_spacing() const { return std::min({spacing(0), spacing(1), spacing(2)}); }

    Vector3d sample(const Vector3d& p) const {
        Cell c;
        if (!locate(p, c)) return Vector3d::Zero();
        Vector3d out = Vector3d::Zero();
        for (int d = 0; d < 8; ++d)
            out += c.w[d] * data_[c.node[d]];
        return out;
    }

    void splat(const Vector3d& p, const Vector3d& value) {
        Cell c;
        if (!locate(p, c)) return;
        for (int d = 0; d < 8; ++d)
            data_[c.node[d]] += c.w[d] * value;
    }

    double max_norm() const {
        double m = 0.0;
        for (const auto& v : data_) m = std::max(m, v.norm());
        return m;
    }

    void scale(double s) {
        for (auto& v : data_) v *= s;
    }

    void set_zero() {
        for (auto& v : data_) v.setZero();
    }

  private:
    struct Cell {
        std::size_t node[8];
        double w[8];
    };

    std::size_t idx(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * ny_ + j) * nx_ + i;
    }

    bool locate(const Vector3d& p, Cell& c) const {
        if (!extent_.contains(p)) return false;
        double fx = (p.x() - extent_.lo.x()) / spacing(0);
        double fy = (p.y() - extent_.lo.y()) / spacing(1);
        double fz = (p.z() - extent_.lo.z()) / spacing(2);
        int i = std::min(static_cast<int>(fx), nx_ - 2);
        int j = std::min(static_cast<int>(fy), ny_ - 2);
        int k = std::min(static_cast<int>(fz), nz_ - 2);
        double ax = fx - i, ay = fy - j, az = fz - k;
        int d = 0;
        for (int dk = 0; dk < 2; ++dk)
            for (int dj = 0; dj < 2; ++dj)
                for (int di = 0; di < 2; ++di, ++d) {
                    c.node[d] = idx(i + di, j + dj, k + dk);
                    c.w[d] = (di ? ax : 1 - ax) * (dj ? ay : 1 - ay) * (dk ? az : 1 - az);
                }
        return true;
    }

    int nx_ = 0, ny_ = 0, nz_ = 0;
    Extent extent_;
    std::vector<Vector3d> data_;
};

// Separable Gaussian smoothing, kernel truncated at 3 sigma, zero-padded
// boundary. Symmetric kernel + zero padding makes this its own adjoint, which
// the virtual-work identity for the local block relies on.
inline VectorGrid gaussian_smooth(const VectorGrid& in, double sigma) {
    if (sigma <= 0.0) return in;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int r = -radius; r <= radius; ++r) {
        kernel[r + radius] = std::exp(-0.5 * r * r / (sigma * sigma));
        sum += kernel[r + radius];
    }
    for (auto& k : kernel) k /= sum;

    const int n[3] = {in.nx(), in.ny(), in.nz()};
    VectorGrid a = in;
    VectorGrid b(in.nx(), in.ny(), in.nz(), in.extent());
    for (int axis = 0; axis < 3; ++axis) {
        b.set_zero();
        for (int k = 0; k < n[2]; ++k)
            for (int j = 0; j < n[1]; ++j)
                for (int i = 0; i < n[0]; ++i) {
                    Vector3d acc = Vector3d::Zero();
                    for (int r = -radius; r <= radius; ++r) {
                        int c[3] = {i, j, k};
                        c[axis] += r;
                        if (c[axis] < 0 || c[axis] >= n[axis]) continue;  // zero pad
                        acc += kernel[r + radius] * a.at(c[0], c[1], c[2]);
                    }
                    b.at(i, j, k) = acc;
                }
        std::swap(a, b);
    }
    return a;
}

// Raw SVF parameters plus the smoothing/capping pipeline that produces the
// effective velocity field fed to the integrator.
struct VelocityField {
    VectorGrid raw;       // optimizer state; smoothing is part of the model
    double sigma = 1.0;   // in grid units
    double cap_fraction = 0.5;  // max |v| as a fraction of the extent edge

    static VelocityField make(int resolution, const Extent& extent, double sigma = 1.0) {
        VelocityField f;
        f.raw = VectorGrid::cube(resolution, extent);
        f.sigma = sigma;
        return f;
    }

    double cap() const { return cap_fraction * raw.extent().size().minCoeff(); }

    // smooth(raw), then a global rescale if the max magnitude exceeds the cap;
    // rescaling preserves field direction.
    VectorGrid effective() const {
        VectorGrid v = gaussian_smooth(raw, sigma);
        double m = v.max_norm();
        double c = cap();
        if (m > c) v.scale(c / m);
        return v;
    }

    bool is_zero() const {
        for (const auto& v : raw.data())
            if (!v.isZero()) return false;
        return true;
    }
};

}  // namespace primfit
