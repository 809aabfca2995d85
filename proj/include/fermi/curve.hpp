#ifndef FERMI_CURVE_HPP
#define FERMI_CURVE_HPP

#include <functional>
#include <string>
#include <vector>

#include "fermi/asymptotics.hpp"

namespace fermi {

// Dense bivariate polynomial truncated at a total degree:
// p(z1, z2) = sum_{i+j <= deg} coef(i, j) z1^i z2^j.
struct Poly2 {
    int deg = 0;
    CMatrix coef; // (deg+1) x (deg+1), entries with i+j > deg kept at zero

    Poly2() : coef(CMatrix::Zero(1, 1)) {}
    explicit Poly2(int d) : deg(d), coef(CMatrix::Zero(d + 1, d + 1)) {}

    cplx eval(cplx z1, cplx z2) const;
    cplx d1(cplx z1, cplx z2) const; // partial derivative in z1
    cplx d2(cplx z1, cplx z2) const; // partial derivative in z2
};

// Product truncated at total degree `deg`.
Poly2 poly_mul(const Poly2& a, const Poly2& b, int deg);
// Composition g(u1(z), u2(z)) truncated at total degree `deg`.
Poly2 poly_compose(const Poly2& g, const Poly2& u1, const Poly2& u2, int deg);

// Quantitative Morse normal form of a holomorphic f near a nondegenerate
// saddle of x1 x2 + r type: a critical point xi, the critical value c, and a
// polynomial map Phi with f(Phi(z)) = z1 z2 + c certified by sampling.
struct MorseResult {
    cplx xi1{0.0, 0.0}, xi2{0.0, 0.0}; // critical point
    cplx c{0.0, 0.0};                  // critical value f(xi)
    double s = 0.0;                    // max(|xi1|, |xi2|)
    double grad_residual = 0.0;        // |grad f(xi)|
    double dphi_deviation = 0.0;       // max sampled ||DPhi - I||
    double comp_residual = 0.0;        // max sampled |f(Phi(z)) - z1z2 - c|
    double map_radius = 0.0;           // (delta - s)(1 - 19 b): certified bidisc
    int degree = 0;                    // total degree of the returned map
    Poly2 phi1, phi2;                  // the map Phi (constant term = xi)
};

// Computes the normal form on the closed bidisc |x_i| <= delta.
//   a_bound: bound for |dr/dx_i| on the bidisc (must be < delta),
//   b_bound: bound for the Hessian norm of r     (must be < 1/55).
// The critical point is found by Newton on the gradient seeded at
// (seed1, seed2) (default 0) and polished against a Taylor model extracted by
// discrete Cauchy integrals; the map is built order by order from quadratic-
// normalizing coordinate changes and certified on the boundary of the bidisc
// of radius map_radius against the supplied callable.
// Throws HypothesisFail when the bounds are out of range, NewtonDiverged when
// the critical-point search stalls, NormalFormStall when the composition
// residual stays above res_tol at the maximal retry degree.
MorseResult morse_solve(const std::function<cplx(cplx, cplx)>& f, double delta,
                        double a_bound, double b_bound, int degree = 8,
                        double grad_tol = 1e-11, double res_tol = 1e-9,
                        cplx seed1 = cplx{0.0, 0.0}, cplx seed2 = cplx{0.0, 0.0});

// One solved (or skipped) sample of the regular sheet over the line
// k2 = y: eta solves F(eta, y) = 0 with F the divided defining equation
// (N_0 + D_00)/z in the frame (nu, 0).
struct SheetPoint {
    cplx y{0.0, 0.0};
    cplx eta{0.0, 0.0};
    int nu = 1;
    double residual = 0.0;     // |F(eta, y)|
    int newton_iters = 0;
    bool admissible = false;   // passed the pre-trace admissibility test
    bool solved = false;
    bool diverged = false;     // Newton failed to converge (last iterate kept)
    bool region_exit = false;  // an iterate left the tube around N_nu(0)
    std::string skip_reason;   // set when not admissible / not solved
    double containment = 0.0;       // |eta + i(-1)^nu y|
    double deriv_deviation = 0.0;   // |dF/dk1 - 1| at the solution
    std::vector<double> residual_history; // per-iteration |F|
};

// A traced sheet plus the cutoff actually used: rho is raised by factors of 2
// until every solved sample above it has derivative deviation < 0.1.
struct SheetTrace {
    std::vector<SheetPoint> points;
    int nu = 1;
    double epsilon = 0.0;
    double radius_R = 0.0;
    double rho_used = 0.0;
    cplx beta_constant{0.0, 0.0}; // the k-independent seed offset
};

// Newton-traces the sheet at the given k2 samples. A sample is admissible
// when 8|y| > rho and |y + (-1)^nu theta_nu(b)| > epsilon for every dual
// b != 0 within reach; others are skipped with the violated condition named.
// The seed is k1 = -beta_constant - i(-1)^nu y.
SheetTrace trace_sheet(const Lattice& lattice, const FourierField& A,
                       const FourierField& V, const std::vector<cplx>& y_samples,
                       int nu, const ModelParams& params, double tol = 1e-12,
                       int max_iters = 30);

// Pairwise-distinctness and derivative scan over the solved points.
struct InjectivityReport {
    bool pairwise_distinct = false;
    double min_pair_distance = 0.0; // over solved points, in k-space
    double max_deriv_deviation = 0.0;
    std::size_t solved_count = 0;
};
InjectivityReport injectivity_probe(const SheetTrace& sheet, double tol = 1e-10);

// One analyzed double tube: the normal constant t_d with the product-fit
// cross-check, the two chart centers, and map diagnostics.
struct HandleRecord {
    DualPoint d;
    int nu = 1;
    cplx t_d{0.0, 0.0};        // critical value of x1 x2 + r
    cplx t_fit{0.0, 0.0};      // product-fit estimate of the same constant
    double oracle_gap = 0.0;   // |t_d - t_fit|
    KPoint center1, center2;   // chart images of z = 0
    KPoint base1, base2;       // free line intersections the centers approach
    double jac_deviation = 0.0;      // residual of the Jacobian factorization
    double symmetry_residual = 0.0;  // sampled |phi_1(z1,z2) - phi_2(z2,z1) + d|
    double a_bound = 0.0, b_bound = 0.0; // measured derivative bounds for r
    MorseResult morse;   // chart 1: frames (nu, 0) and (nu', d)
    MorseResult morse2;  // chart 2: frames (nu', 0) and (nu, -d), based at +d
    ModelParams params;  // parameters the record was built with
};

// Builds f(x) = x1 x2 + r(x) on the bidisc |x_i| <= epsilon/2 through the
// inverse coordinate map, runs the Morse normal form, cross-validates t_d by
// a direct product fit of the divided determinant, and measures the center,
// Jacobian, and swap-symmetry diagnostics.
// Throws RegionViolation when 2|d| <= rho, HypothesisFail / NormalFormStall
// from the Morse step, OracleMismatch when the two t_d routes disagree beyond
// 1e-6 relative + 1e-12 absolute.
HandleRecord analyze_handle(const Lattice& lattice, const FourierField& A,
                            const FourierField& V, const DualPoint& d, int nu,
                            const ModelParams& params, double grad_tol = 1e-9);

// Evaluates one chart of the record: which = 1 maps into the tubes around
// N_nu(0) and N_nu'(d); which = 2 is the translated swapped chart satisfying
// phi_1(z1, z2) = phi_2(z2, z1) - d.
KPoint handle_phi(const Lattice& lattice, const FourierField& A,
                  const FourierField& V, const HandleRecord& record, int which,
                  cplx z1, cplx z2);

// Samples the curve inside chart 1 (the zero set of z1 z2 + t_d in normal
// coordinates) and maps the samples to k-space.
std::vector<KPoint> handle_curve_points(const Lattice& lattice,
                                        const FourierField& A,
                                        const FourierField& V,
                                        const HandleRecord& record, int samples);

} // namespace fermi

#endif // FERMI_CURVE_HPP
