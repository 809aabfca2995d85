#include "fermi/freecurve.hpp"

#include <cmath>

#include "fermi/errors.hpp"

namespace fermi {

namespace {
const cplx I{0.0, 1.0};
} // namespace

cplx n_line(const Vec2& b, int nu, const KPoint& k) {
    return (k.k1 + b.x) + I * nu_sign(nu) * (k.k2 + b.y);
}

cplx n_full(const Vec2& b, const KPoint& k) {
    return n_line(b, 1, k) * n_line(b, 2, k);
}

cplx theta(int nu, const Vec2& b) {
    return 0.5 * cplx{nu_sign(nu) * b.y, b.x};
}

bool in_tube(const Vec2& b, int nu, const KPoint& k, double epsilon) {
    return std::abs(n_line(b, nu, k)) < epsilon;
}

KPoint line_intersection(const Vec2& b, const Vec2& c) {
    const cplx t1c = theta(1, c);
    const cplx t2b = theta(2, b);
    return KPoint{I * (t1c + t2b), t1c - t2b};
}

KPoint zero_d_intersection(const Lattice& lat, int nu, const DualPoint& d) {
    const cplx t = theta(lat, nu, d);
    return KPoint{I * t, nu_sign(nu_comp(nu)) * t};
}

std::vector<TubeIndex> active_tubes(const KPoint& k, const Lattice& lattice,
                                    double epsilon, double scan_radius) {
    std::vector<TubeIndex> found;
    std::vector<DualPoint> distinct;
    for (const DualPoint& b : enumerate_dual(lattice, scan_radius)) {
        for (int nu = 1; nu <= 2; ++nu) {
            if (!in_tube(lattice, b, nu, k, epsilon)) continue;
            found.push_back(TubeIndex{b, nu});
            bool seen = false;
            for (const DualPoint& p : distinct) seen = seen || p == b;
            if (!seen) distinct.push_back(b);
        }
    }
    if (distinct.size() > 2)
        throw TripleTube("three distinct tube centers contain k; "
                         "epsilon or window misconfigured");
    return found;
}

std::optional<DualPoint> exceptional_b(const KPoint& k, const Lattice& lattice,
                                       double epsilon) {
    const double lambda = lattice.lambda;
    const double vmag = k.v.norm();
    if (vmag <= 2.0 * lambda)
        throw RegionViolation("exceptional_b requires |v| > 2 lambda");
    const bool in_t0 =
        in_tube(lattice, DualPoint{0, 0}, 1, k, epsilon) ||
        in_tube(lattice, DualPoint{0, 0}, 2, k, epsilon);
    if (!in_t0) throw RegionViolation("exceptional_b requires k in T_0");

    // localization |b~| > |v|, |u + b~| < |v| + lambda forces
    // |b~| <= |u| + |v| + lambda; add alpha as slack for unreduced u
    const double scan = k.u.norm() + vmag + lambda + lattice.alpha;
    std::optional<DualPoint> candidate;
    for (const DualPoint& b : enumerate_dual(lattice, scan)) {
        if (b.is_zero()) continue;
        const Vec2 bc = lattice.cart(b);
        const double floor_ab = 0.5 * lambda * (vmag + (k.u + bc).norm());
        if (std::abs(n_full(bc, k)) < floor_ab) {
            if (candidate)
                throw MultipleExceptional("two indices below the part-(a) floor");
            candidate = b;
        }
    }
    if (candidate) {
        const Vec2 bc = lattice.cart(*candidate);
        if (!(bc.norm() > vmag) || !(std::abs((k.u + bc).norm() - vmag) < lambda))
            throw RelationViolated("exceptional index outside its certified localization");
    }
    return candidate;
}

OrderReport order_relations(const KPoint& k, const Lattice& lattice,
                            std::optional<DualPoint> d) {
    OrderReport rep;
    // infer the tube index from the smaller line value at b = 0
    const double n1 = std::abs(n_line(Vec2{0, 0}, 1, k));
    const double n2 = std::abs(n_line(Vec2{0, 0}, 2, k));
    rep.nu = n1 <= n2 ? 1 : 2;
    rep.v_mag = k.v.norm();
    // z_{nu,0} = N_{0,nu'}
    rep.z0_mag = std::abs(n_line(Vec2{0, 0}, nu_comp(rep.nu), k));
    rep.k2_mag = std::abs(k.k2);

    bool ok = rep.v_mag <= rep.z0_mag && rep.z0_mag <= 3.0 * rep.v_mag;
    ok = ok && rep.v_mag / 8.0 <= rep.k2_mag && rep.k2_mag <= 4.0 * rep.v_mag;
    if (d) {
        const Vec2 dc = lattice.cart(*d);
        rep.d_mag = dc.norm();
        rep.zd_mag = std::abs(n_line(dc, rep.nu, k)); // z_{nu',d} = N_{d,nu}
        ok = ok && 0.5 * rep.zd_mag <= rep.d_mag && rep.d_mag <= 2.0 * rep.zd_mag;
    }
    rep.pass = ok;
    if (!ok) throw RelationViolated("order relations failed; k outside the region");
    return rep;
}

} // namespace fermi
