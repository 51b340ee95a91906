#pragma once

// Uniform grid with one fictitious node beyond each end and the second-order
// finite-difference stencils used throughout the scheme.

#include <cstddef>
#include <vector>

#include "mmbeam/errors.hpp"

namespace mmbeam {

/// Uniform mesh x_i = i*dx, i = 0..n, with dx = L/n so that x_n = L exactly.
/// Ghost slots sit at -dx and L+dx.
struct Grid {
    int n = 0;          // index of the last physical node (x_n = L)
    double dx = 0.0;
    double length = 0.0;
    std::vector<double> nodes;  // x_0 .. x_n

    double node(int i) const { return static_cast<double>(i) * dx; }
};

inline Grid build_grid(int n, double length) {
    if (n < 8) throw ResolutionTooSmall(n);
    if (!(length > 0.0)) throw NonPositiveCoefficient("L <= 0");
    Grid g;
    g.n = n;
    g.length = length;
    g.dx = length / static_cast<double>(n);
    g.nodes.resize(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) g.nodes[static_cast<std::size_t>(i)] = g.dx * i;
    g.nodes.back() = length;  // exact right endpoint
    return g;
}

/// A grid function together with its two ghost values: slot 0 holds the value
/// at x_{-1}, slot i+1 holds the value at x_i, the last slot holds x_{n+1}.
struct GhostedField {
    std::vector<double> v;  // size n + 3

    explicit GhostedField(int n) : v(static_cast<std::size_t>(n) + 3, 0.0) {}
    double& at(int i) { return v[static_cast<std::size_t>(i + 1)]; }
    double at(int i) const { return v[static_cast<std::size_t>(i + 1)]; }
    int max_index() const { return static_cast<int>(v.size()) - 2; }
};

enum class Stencil { d1_central, d1_backward3, d2, d3, d4 };

/// Second-order stencil evaluation at node i. All referenced neighbors
/// (including ghosts) must exist in the field.
inline double apply_stencil(Stencil kind, const GhostedField& z, int i, double dx) {
    const int lo = -1, hi = z.max_index();
    auto check = [&](int jmin, int jmax) {
        if (i + jmin < lo || i + jmax > hi)
            throw IndexOutOfRange("stencil at node " + std::to_string(i) +
                                  " references nodes outside [-1, " + std::to_string(hi) + "]");
    };
    switch (kind) {
        case Stencil::d1_central:
            check(-1, 1);
            return (z.at(i + 1) - z.at(i - 1)) / (2.0 * dx);
        case Stencil::d1_backward3:
            check(-2, 0);
            return (3.0 * z.at(i) - 4.0 * z.at(i - 1) + z.at(i - 2)) / (2.0 * dx);
        case Stencil::d2:
            check(-1, 1);
            return (z.at(i + 1) - 2.0 * z.at(i) + z.at(i - 1)) / (dx * dx);
        case Stencil::d3:
            check(-2, 2);
            return (z.at(i + 2) - 2.0 * z.at(i + 1) + 2.0 * z.at(i - 1) - z.at(i - 2)) /
                   (2.0 * dx * dx * dx);
        case Stencil::d4:
            check(-2, 2);
            return (z.at(i + 2) - 4.0 * z.at(i + 1) + 6.0 * z.at(i) - 4.0 * z.at(i - 1) +
                    z.at(i - 2)) / (dx * dx * dx * dx);
    }
    throw IndexOutOfRange("unknown stencil");
}

} // namespace mmbeam
