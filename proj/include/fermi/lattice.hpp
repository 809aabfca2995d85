#ifndef FERMI_LATTICE_HPP
#define FERMI_LATTICE_HPP

#include <vector>

#include "fermi/types.hpp"

namespace fermi {

// A rank-2 lattice together with its dual and the derived geometric
// constants used throughout the analysis:
//   lambda    = half the length of the shortest nonzero dual vector,
//   alpha     = circumradius of the Voronoi cell of the dual lattice at 0,
//   cell_area = area of a fundamental cell of the direct lattice.
struct Lattice {
    Vec2 gamma1, gamma2; // generators of the direct lattice
    Vec2 dual1, dual2;   // generators of the dual lattice, dual_i . gamma_j = 2 pi delta_ij
    double lambda = 0.0;
    double alpha = 0.0;
    double cell_area = 0.0;

    // Cartesian position of a dual point given by integer coordinates.
    Vec2 cart(const DualPoint& b) const {
        return dual1 * static_cast<double>(b.m) + dual2 * static_cast<double>(b.n);
    }
    double length(const DualPoint& b) const { return cart(b).norm(); }
};

// Build the lattice and all derived constants.
// Throws DegenerateLattice when the generators are (numerically) collinear.
Lattice build_lattice(const Vec2& gamma1, const Vec2& gamma2);

// All dual points with |b| <= radius, ordered lexicographically on the
// integer coordinates. radius <= 0 yields just the origin.
std::vector<DualPoint> enumerate_dual(const Lattice& lattice, double radius);

} // namespace fermi

#endif // FERMI_LATTICE_HPP
