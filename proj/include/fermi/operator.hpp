#ifndef FERMI_OPERATOR_HPP
#define FERMI_OPERATOR_HPP

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "fermi/fourier.hpp"
#include "fermi/freecurve.hpp"
#include "fermi/lattice.hpp"

namespace fermi {

using CMatrix = Eigen::MatrixXcd;

// Finite truncation of the dual lattice split into the singular set G
// (empty, {0}, or {0,d}) and its complement G'. The point set is a union of
// balls of radius `ball_radius` around 0 and around each element of G, so
// that the local couplings w_{b,c} (b - c in the field support) and the
// geometrically decaying resolvent chains are captured; the dropped tail is
// reported by callers as a budget.
struct IndexWindow {
    std::vector<DualPoint> all_points; // deterministic (lexicographic) order
    std::vector<DualPoint> g_set;
    std::vector<DualPoint> gprime;     // all_points \ g_set, same order
    double ball_radius = 0.0;

    bool contains(const DualPoint& b) const;
};

// Build the window from the singular set and the per-center ball radius.
IndexWindow make_window(const Lattice& lattice, const std::vector<DualPoint>& g_set,
                        double ball_radius);

// Bind-time check of the G' invariant: |N_b(k)| >= epsilon |v| for every
// b in G'. Throws RegionViolation when it fails.
void check_gprime(const IndexWindow& window, const Lattice& lattice, const KPoint& k,
                  double epsilon);

// Dense complex matrix indexed by dual points.
struct TruncatedOperator {
    std::vector<DualPoint> rows;
    std::vector<DualPoint> cols;
    CMatrix entries;
};

// Diagonal operator with (b,b) -> N_b(k) over the given points.
TruncatedOperator delta_matrix(const Lattice& lattice,
                               const std::vector<DualPoint>& points, const KPoint& k);

// w_{b,c} = -2(c+k).A(b-c) + q(b-c) over rows B, columns C.
TruncatedOperator w_matrix(const Lattice& lattice, const std::vector<DualPoint>& B,
                           const std::vector<DualPoint>& C, const KPoint& k,
                           const FourierField& A, const FourierField& q);

// (R_{BC})_{b,c} = delta_{b,c} + w_{b,c}/N_c(k).
// Throws SingularDenominator if some |N_c(k)| < 1e-12.
TruncatedOperator r_matrix(const Lattice& lattice, const std::vector<DualPoint>& B,
                           const std::vector<DualPoint>& C, const KPoint& k,
                           const FourierField& A, const FourierField& q);

// H_k = Delta_k + h + q over the full window point set.
TruncatedOperator hk_matrix(const Lattice& lattice, const IndexWindow& window,
                            const KPoint& k, const FourierField& A,
                            const FourierField& V);

// max(sup-row, sup-col absolute sums): an upper bound for the operator norm.
double schur_norm(const TruncatedOperator& op);

// Certified bound ||q||_l1/(eps |v|) + (14/eps) ||A||_l1 for ||R_{SS} - pi_S||.
// Requires |u| <= 2|v| and |v| > 2 lambda (throws RegionViolation otherwise).
double rss_bound(const Lattice& lattice, const KPoint& k, const FourierField& A,
                 const FourierField& q, double epsilon);

// Dense inverse of R_{G'G'} with the contraction certificate.
struct InverseCertificate {
    double bound = 0.0;        // rss_bound at k
    double measured_rmi = 0.0; // measured ||R - I||  (Schur norm)
    double measured_inv = 0.0; // measured ||R^-1 - I||
    bool lemma_holds = false;  // measured_inv < 18 * measured_rmi (or both ~ 0)
};
struct InverseResult {
    TruncatedOperator inverse; // on G' x G'
    InverseCertificate certificate;
};
// Throws CertificateFail when rss_bound >= 17/18 and force == false;
// NumericallySingular if the dense solve fails.
InverseResult invert_rgg(const Lattice& lattice, const IndexWindow& window,
                         const KPoint& k, const FourierField& A,
                         const FourierField& q, double epsilon, bool force = false);

// Smallest singular value (dense SVD).
double sigma_min(const TruncatedOperator& op);

// Weighted Schur norm with sigma(t) = (1+t)^beta:
// max over rows/cols of sum |T_{b,c}| sigma(|b-c|).
double sigma_norm(const Lattice& lattice, const TruncatedOperator& op, double beta);

// Certified factor (1 + (2 lambda)^{beta - ceil(beta)} ceil(beta) m^{ceil(beta)-1})
// * (17/18)^m for the off-diagonal decay of T^m; at beta = 0 the factor is
// just (17/18)^m.
double decay_certificate(int m, double beta, const Lattice& lattice);

} // namespace fermi

#endif // FERMI_OPERATOR_HPP
