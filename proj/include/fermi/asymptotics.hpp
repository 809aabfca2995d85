#ifndef FERMI_ASYMPTOTICS_HPP
#define FERMI_ASYMPTOTICS_HPP

#include <functional>

#include "fermi/defining.hpp"

namespace fermi {

// theta_mu applied to a complex 2-vector: ((-1)^mu a2 + i a1) / 2.
inline cplx theta_c(int mu, const CVec2& a) {
    return 0.5 * (nu_sign(mu) * a.y + cplx{0.0, 1.0} * a.x);
}

// scalar field of one Cartesian component of a vector field (i in {1,2})
FourierField component_field(const FourierField& A, int i);

// scalar field b -> -2i theta_mu(A(b)); appears as f and g in the leading
// coefficient of the z^2 term of the diagonal defining equation
FourierField theta_field(const Lattice& lattice, const FourierField& A, int mu);

// Near/far splits of G' around d': g1 (<R/4), g3 (<R/2) and complements.
struct SplitWindows {
    DualPoint dprime;
    double radius_R = 0.0;
    std::vector<DualPoint> g1, g2, g3, g4;
    std::vector<std::size_t> g3_in_gprime; // index of g3[i] within window.gprime
    std::vector<std::size_t> g1_in_g3;     // index of g1[i] within g3
};
SplitWindows split_windows(const EvalContext& ctx, const DualPoint& dprime,
                           double radius_R);

// The generic double sum: sum_{b,c in G'} f(d'-b)/N_b (R^-1)_{b,c} g(c-d'').
cplx phi_sum(const EvalContext& ctx, const FourierField& f, const FourierField& g,
             const DualPoint& dprime, const DualPoint& dprimeprime);

// Split of the contraction T = I - R on G'_3 x G'_3 in the rotated frame
// (mu, d'): T = X + Y entrywise, with Y carrying the part proportional to z.
struct XYPair {
    TruncatedOperator X33, Y33;
    cplx w, z; // frame values at ctx.k
};
XYPair xy_matrices(const EvalContext& ctx, const SplitWindows& splits, int mu);

// Resolvent split (I - X - Y)^{-1} = S + W + Z with S = (I-Y)^{-1},
// W the single-X series, Z the rest. Throws NotContracting if the norm
// preconditions fail; `tail` reports the norm of the last W term kept.
struct SWZ {
    CMatrix S, W, Z;
    double tail = 0.0;
    int terms = 0;
};
SWZ swz_series(const XYPair& xy, double tol);

// The pieces of the diagonal double sum in the frame (mu, d'):
//   Phi_{d',d'} = a1 + a2 + a3,  a3 = r1 + r2 + r3 + r4,
//   z * a1 = a10 + a11 + a12 + a13  (a10 a k-independent constant).
struct AlphaPieces {
    cplx a1, a2, a3;
    cplx a10, a11, a12, a13;
    cplx r1, r2, r3, r4;
};
AlphaPieces alpha_split(const EvalContext& ctx, const FourierField& f,
                        const FourierField& g, int mu, const DualPoint& dprime,
                        double radius_R, double tol);

// The k-independent constant in the leading coefficient at d' = 0:
//   2i sum_{b,c in G'_1} [theta_nu'(A(-b))/theta_nu'(b)]
//     [delta_{b,c} + theta_nu'(A(b-c))/theta_nu'(c)] theta_nu'(A(c)),
// with G'_1 = {0 < |b| < R/4}.
cplx beta2_10(const Lattice& lattice, const FourierField& A, double radius_R,
              int nu);

// One rotated coordinate of the defining equation:
//   (N_{d'} + D_{d',d'}) / z = w + beta_leading * z + g =: x,
// where beta_leading is the leading (S-series) piece of the z^2 coefficient
// and g collects all remaining terms.
struct CoordExpansion {
    int mu = 1;
    DualPoint dprime;
    cplx w, z;
    cplx beta_leading; // the (1)-piece of the z^2 coefficient
    cplx g;            // remainder of the divided equation
    cplx x;            // w + beta_leading z + g
    JKLMSet coeffs;    // the full quadratic coefficients at (d', d')
    AlphaPieces pieces;
};
CoordExpansion coord_expansion(const EvalContext& ctx, int mu,
                               const DualPoint& dprime, double radius_R,
                               double tol);

// Both handle coordinates: x1 in the frame (nu, 0), x2 in (nu', d).
std::pair<CoordExpansion, CoordExpansion> x_coords(const EvalContext& ctx,
                                                   const DualPoint& d, int nu,
                                                   double radius_R, double tol);

// The cross term of the 2x2 determinant divided by z1 z2:
//   r = -(c1 + p1)(c2 + p2)/(z1 z2), with the constant/leading split of the
//   off-diagonal entries.
struct HandleRTerm {
    cplx c1, c2; // q(-d) - 2d.A(-d) and q(d) + 2d.A(d)
    cplx p1, p2; // D_{0,d} - c1 and D_{d,0} - c2
    cplx z1, z2;
    cplx r;
};
HandleRTerm handle_r_term(const EvalContext& ctx, const DualPoint& d, int nu);

// Central finite-difference derivative d^{n+m} f / dk1^n dk2^m with a
// Richardson error estimate (h vs h/2). Throws StepTooLarge when the
// estimated error exceeds 10% of the value.
struct DerivativeReport {
    cplx value;
    double error = 0.0;
};
DerivativeReport fd_derivative(const std::function<cplx(const KPoint&)>& fn,
                               const KPoint& k, int n, int m, double step);

} // namespace fermi

#endif // FERMI_ASYMPTOTICS_HPP
