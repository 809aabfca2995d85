#ifndef FERMI_DEFINING_HPP
#define FERMI_DEFINING_HPP

#include "fermi/operator.hpp"

namespace fermi {

// Evaluation context at a fixed (k, window): caches R^{-1} on G' x G' and the
// diagonal N_b over G', since every reduced coefficient at this k shares them.
struct EvalContext {
    Lattice lattice;
    IndexWindow window;
    KPoint k;
    FourierField A;
    FourierField q;
    double epsilon = 0.0;
    TruncatedOperator rinv;      // R^{-1} on G' x G'
    Eigen::VectorXcd n_gprime;   // N_b(k) for b in G'
    InverseCertificate certificate;
};

// Builds the context (dense inverse + certificate). Throws CertificateFail /
// NumericallySingular / SingularDenominator like invert_rgg.
EvalContext make_context(const Lattice& lattice, const IndexWindow& window,
                         const KPoint& k, const FourierField& A,
                         const FourierField& q, double epsilon, bool force = false);

// Reduced matrix entry
//   D_{d',d''} = w_{d',d''} - sum_{b,c in G'} (w_{d',b}/N_b) (R^{-1})_{b,c} w_{c,d''}.
cplx d_entry(const EvalContext& ctx, const DualPoint& dprime,
             const DualPoint& dprimeprime);

// Scalar defining equation on the regular piece (G = {0}):
//   N_0(k) + D_{0,0}(k).
// Throws RegionViolation unless every active tube is centered at 0.
cplx f_regular(const EvalContext& ctx);

// 2x2 determinant at a double tube (G = {0, d}):
//   (N_0 + D_{0,0})(N_d + D_{d,d}) - D_{0,d} D_{d,0}.
// Throws RegionViolation unless the active tube centers are exactly {0, d}.
cplx f_handle(const EvalContext& ctx, const DualPoint& d);

// Coefficients of D_{d',d''} as a quadratic polynomial in (k1, k2) with the
// chain matrix R^{-1} frozen at the evaluation point:
//   D = B11 k1^2 + B22 k2^2 + (B12+B21) k1 k2 + C1 k1 + C2 k2 + C0.
struct CoefficientSet {
    cplx B11, B22, B12plus21, C1, C2, C0;
};
CoefficientSet bc_coefficients(const EvalContext& ctx, const DualPoint& dprime,
                               const DualPoint& dprimeprime);

// Rotated coordinates centered at d':
//   w = (k1+d'_1) + i(-1)^nu (k2+d'_2),  z = (k1+d'_1) - i(-1)^nu (k2+d'_2),
// so that w z = N_{d'}(k).
struct WZFrame {
    int nu = 1;
    DualPoint dprime;
    cplx w, z;
};
WZFrame wz_frame(const Lattice& lattice, int nu, const DualPoint& dprime,
                 const KPoint& k);

// The same quadratic re-expressed in the (w, z) frame:
//   D = J_nuprime w^2 + J_nu z^2 + K w z + L_nuprime w + L_nu z + M.
struct JKLMSet {
    cplx J_nu, J_nuprime, K, L_nu, L_nuprime, M;
};
JKLMSet jklm(const EvalContext& ctx, const DualPoint& dprime,
             const DualPoint& dprimeprime, int nu);

// Independent oracle: the |G| x |G| Schur complement of the dense truncated
// H_k with respect to its G' block, computed by direct block elimination
// (no R matrix). Equals [N_{d'} delta + D] on the same window.
CMatrix schur_oracle(const Lattice& lattice, const IndexWindow& window,
                     const KPoint& k, const FourierField& A,
                     const FourierField& V);

} // namespace fermi

#endif // FERMI_DEFINING_HPP
