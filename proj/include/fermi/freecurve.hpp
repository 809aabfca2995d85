#ifndef FERMI_FREECURVE_HPP
#define FERMI_FREECURVE_HPP

#include <optional>
#include <vector>

#include "fermi/lattice.hpp"
#include "fermi/types.hpp"

namespace fermi {

// A point of complex momentum space, with the real/imaginary split
// k = u + i v cached (u, v real 2-vectors).
struct KPoint {
    cplx k1{0.0, 0.0};
    cplx k2{0.0, 0.0};
    Vec2 u, v;

    KPoint() = default;
    KPoint(cplx k1_, cplx k2_)
        : k1(k1_), k2(k2_), u(k1_.real(), k2_.real()), v(k1_.imag(), k2_.imag()) {}
};

// Label (b, nu) of one line/tube of the free curve.
struct TubeIndex {
    DualPoint b;
    int nu = 1; // 1 or 2
};

// sign (-1)^nu
inline double nu_sign(int nu) { return nu == 1 ? -1.0 : 1.0; }
// complementary index nu' (1 <-> 2)
inline int nu_comp(int nu) { return nu == 1 ? 2 : 1; }

// N_{b,nu}(k) = (k1 + b1) + i(-1)^nu (k2 + b2), with b in Cartesian form.
cplx n_line(const Vec2& b, int nu, const KPoint& k);
inline cplx n_line(const Lattice& lat, const DualPoint& b, int nu, const KPoint& k) {
    return n_line(lat.cart(b), nu, k);
}

// N_b(k) = N_{b,1}(k) N_{b,2}(k).
cplx n_full(const Vec2& b, const KPoint& k);
inline cplx n_full(const Lattice& lat, const DualPoint& b, const KPoint& k) {
    return n_full(lat.cart(b), k);
}

// theta_nu(b) = ((-1)^nu b2 + i b1) / 2.
cplx theta(int nu, const Vec2& b);
inline cplx theta(const Lattice& lat, int nu, const DualPoint& b) {
    return theta(nu, lat.cart(b));
}

// Open-tube membership |N_{b,nu}(k)| < epsilon (strict).
bool in_tube(const Vec2& b, int nu, const KPoint& k, double epsilon);
inline bool in_tube(const Lattice& lat, const DualPoint& b, int nu, const KPoint& k,
                    double epsilon) {
    return in_tube(lat.cart(b), nu, k, epsilon);
}

// The unique intersection point of the transversal lines N_1(b) and N_2(c):
//   ( i theta_1(c) + i theta_2(b), theta_1(c) - theta_2(b) ).
KPoint line_intersection(const Vec2& b, const Vec2& c);
inline KPoint line_intersection(const Lattice& lat, const DualPoint& b,
                                const DualPoint& c) {
    return line_intersection(lat.cart(b), lat.cart(c));
}

// Intersection of N_nu(0) and N_nu'(d): ( i theta_nu(d), (-1)^nu' theta_nu(d) ).
KPoint zero_d_intersection(const Lattice& lat, int nu, const DualPoint& d);

// All tubes containing k with |b| <= scan_radius. At most two distinct b may
// appear; a third throws TripleTube. The scan is purely geometric (no
// matrices), so a radius ~ 2|v| + 4 lambda is cheap.
std::vector<TubeIndex> active_tubes(const KPoint& k, const Lattice& lattice,
                                    double epsilon, double scan_radius);

// The at-most-one exceptional index b~ != 0 with
// |N_b(k)| < (lambda/2)(|v| + |u+b|), searched over
// |b| <= |u| + |v| + lambda + alpha (sufficient by the localization of b~).
// Requires |v| > 2 lambda and k in T_0. When found, the localization
// |b~| > |v| and ||u+b~| - |v|| < lambda is asserted.
std::optional<DualPoint> exceptional_b(const KPoint& k, const Lattice& lattice,
                                       double epsilon);

// Measured ratio checks of the order relations between |v|, |z_{nu,0}|, |k2|
// and (optionally) |d|, |z_{nu',d}|. Throws RelationViolated when a ratio
// falls outside its certified bracket.
struct OrderReport {
    int nu = 1;              // tube index inferred from k
    double v_mag = 0.0;      // |v|
    double z0_mag = 0.0;     // |z_{nu,0}(k)|
    double k2_mag = 0.0;     // |k2|
    double d_mag = 0.0;      // |d| (0 when d absent)
    double zd_mag = 0.0;     // |z_{nu',d}(k)| (0 when d absent)
    bool pass = false;
};
OrderReport order_relations(const KPoint& k, const Lattice& lattice,
                            std::optional<DualPoint> d = std::nullopt);

} // namespace fermi

#endif // FERMI_FREECURVE_HPP
