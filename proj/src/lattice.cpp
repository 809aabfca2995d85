#include "fermi/lattice.hpp"

#include <algorithm> // std::max, std::sort
#include <cmath>     // std::ceil, std::abs
#include <numbers>   // std::numbers::pi

#include "fermi/errors.hpp"

namespace fermi {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

// Integer bounding box for |m*dual1 + n*dual2| <= radius. Since
// m = b . gamma1 / (2 pi) and n = b . gamma2 / (2 pi), the box
// |m| <= radius*|gamma1|/(2 pi), |n| <= radius*|gamma2|/(2 pi) is exact.
struct IntBox {
    std::int64_t m_max;
    std::int64_t n_max;
};

IntBox bounding_box(const Lattice& lat, double radius) {
    const double mb = radius * lat.gamma1.norm() / two_pi;
    const double nb = radius * lat.gamma2.norm() / two_pi;
    return {static_cast<std::int64_t>(std::ceil(mb + 1e-9)),
            static_cast<std::int64_t>(std::ceil(nb + 1e-9))};
}

// Half the length of the shortest nonzero dual vector, by exhaustive search
// over a box guaranteed to contain a shortest vector (any single generator
// already has length min(|dual1|, |dual2|)).
double half_shortest_dual(const Lattice& lat) {
    const double cap = std::min(lat.dual1.norm(), lat.dual2.norm());
    const IntBox box = bounding_box(lat, cap);
    double best = cap;
    for (std::int64_t m = -box.m_max; m <= box.m_max; ++m)
        for (std::int64_t n = -box.n_max; n <= box.n_max; ++n) {
            if (m == 0 && n == 0) continue;
            best = std::min(best, lat.cart({m, n}).norm());
        }
    return 0.5 * best;
}

// Circumradius of the Voronoi cell of the dual lattice at the origin.
// The cell is the intersection of half-planes x.b <= |b|^2/2 over nonzero
// neighbors b; its vertices are intersections of pairs of boundary lines
// that satisfy all remaining constraints.
double voronoi_circumradius(const Lattice& lat) {
    const double search = 4.0 * (4.0 * lat.lambda); // generous neighbor shell
    const IntBox box = bounding_box(lat, search);
    std::vector<Vec2> nbrs;
    for (std::int64_t m = -box.m_max; m <= box.m_max; ++m)
        for (std::int64_t n = -box.n_max; n <= box.n_max; ++n) {
            if (m == 0 && n == 0) continue;
            Vec2 b = lat.cart({m, n});
            if (b.norm() <= search) nbrs.push_back(b);
        }

    double rad = 0.0;
    const std::size_t count = nbrs.size();
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t j = i + 1; j < count; ++j) {
            const Vec2& a = nbrs[i];
            const Vec2& b = nbrs[j];
            // solve x.a = |a|^2/2, x.b = |b|^2/2
            const double det = a.x * b.y - a.y * b.x;
            if (std::abs(det) < 1e-12 * a.norm() * b.norm()) continue;
            const double ra = 0.5 * a.dot(a);
            const double rb = 0.5 * b.dot(b);
            Vec2 x{(ra * b.y - rb * a.y) / det, (a.x * rb - b.x * ra) / det};
            bool inside = true;
            for (const Vec2& c : nbrs) {
                if (x.dot(c) > 0.5 * c.dot(c) + 1e-9) { inside = false; break; }
            }
            if (inside) rad = std::max(rad, x.norm());
        }
    }
    return rad;
}

} // namespace

Lattice build_lattice(const Vec2& gamma1, const Vec2& gamma2) {
    const double det = gamma1.x * gamma2.y - gamma1.y * gamma2.x;
    if (std::abs(det) < 1e-12 * gamma1.norm() * gamma2.norm())
        throw DegenerateLattice("generators are collinear");

    Lattice lat;
    lat.gamma1 = gamma1;
    lat.gamma2 = gamma2;
    // dual basis: rows of 2*pi * [gamma1 gamma2]^{-T}
    lat.dual1 = Vec2{gamma2.y, -gamma2.x} * (two_pi / det);
    lat.dual2 = Vec2{-gamma1.y, gamma1.x} * (two_pi / det);
    lat.cell_area = std::abs(det);
    lat.lambda = half_shortest_dual(lat);
    lat.alpha = voronoi_circumradius(lat);
    return lat;
}

std::vector<DualPoint> enumerate_dual(const Lattice& lattice, double radius) {
    std::vector<DualPoint> out;
    if (radius < 0.0) radius = 0.0;
    const IntBox box = bounding_box(lattice, radius);
    for (std::int64_t m = -box.m_max; m <= box.m_max; ++m)
        for (std::int64_t n = -box.n_max; n <= box.n_max; ++n) {
            DualPoint b{m, n};
            if (lattice.length(b) <= radius) out.push_back(b);
        }
    // the loop order is already lexicographic, but keep the contract explicit
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace fermi
