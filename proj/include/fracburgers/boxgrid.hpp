// boxgrid.hpp: dense node-centered lattice on an axis-aligned box, 1 to 3
// dimensions. Used by the finite-difference barrier solves and the
// isoperimetric measurement (both live on non-periodic boxes).

#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fracburgers {

struct BoxGrid {
    int dims = 2;
    std::array<int, 3> npts = {2, 2, 1};       // nodes per axis; unused axes = 1
    std::array<double, 3> lo = {0.0, 0.0, 0.0};
    std::array<double, 3> hi = {1.0, 1.0, 1.0};

    std::size_t total() const {
        return static_cast<std::size_t>(npts[0]) * npts[1] * npts[2];
    }
    double spacing(int axis) const {
        return (hi[axis] - lo[axis]) / (npts[axis] - 1);
    }
    double coord(int axis, int i) const { return lo[axis] + i * spacing(axis); }
    std::size_t flat(int i, int j, int k = 0) const {
        return (static_cast<std::size_t>(i) * npts[1] + j) * npts[2] + k;
    }
    void unflat(std::size_t f, int& i, int& j, int& k) const {
        k = static_cast<int>(f % npts[2]);
        f /= npts[2];
        j = static_cast<int>(f % npts[1]);
        i = static_cast<int>(f / npts[1]);
    }
    bool on_boundary(int i, int j, int k) const {
        const std::array<int, 3> idx = {i, j, k};
        for (int a = 0; a < dims; ++a)
            if (idx[a] == 0 || idx[a] == npts[a] - 1) return true;
        return false;
    }
};

inline BoxGrid make_box_grid(int dims, const std::array<double, 3>& lo,
                             const std::array<double, 3>& hi,
                             const std::array<int, 3>& npts) {
    if (dims < 1 || dims > 3) throw std::invalid_argument("box grid: dims in 1..3");
    BoxGrid g;
    g.dims = dims;
    g.lo = lo;
    g.hi = hi;
    g.npts = npts;
    for (int a = dims; a < 3; ++a) g.npts[a] = 1;
    for (int a = 0; a < dims; ++a) {
        if (g.npts[a] < 2) throw std::invalid_argument("box grid: need >= 2 nodes");
        if (!(hi[a] > lo[a])) throw std::invalid_argument("box grid: empty extent");
    }
    return g;
}

struct BoxField {
    BoxGrid grid;
    std::vector<double> values;

    BoxField() = default;
    explicit BoxField(const BoxGrid& g, double fill = 0.0)
        : grid(g), values(g.total(), fill) {}
    double& at(int i, int j, int k = 0) { return values[grid.flat(i, j, k)]; }
    double at(int i, int j, int k = 0) const { return values[grid.flat(i, j, k)]; }
};

}  // namespace fracburgers
