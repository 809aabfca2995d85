#include "fermi/operator.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fermi/errors.hpp"

namespace fermi {

bool IndexWindow::contains(const DualPoint& b) const {
    return std::binary_search(all_points.begin(), all_points.end(), b);
}

IndexWindow make_window(const Lattice& lattice, const std::vector<DualPoint>& g_set,
                        double ball_radius) {
    IndexWindow win;
    win.g_set = g_set;
    win.ball_radius = ball_radius;

    std::set<DualPoint> pts;
    std::vector<DualPoint> centers = g_set;
    centers.push_back(DualPoint{0, 0});
    const auto ball = enumerate_dual(lattice, ball_radius);
    for (const DualPoint& center : centers)
        for (const DualPoint& b : ball) pts.insert(center + b);

    win.all_points.assign(pts.begin(), pts.end());
    for (const DualPoint& b : win.all_points) {
        bool in_g = false;
        for (const DualPoint& g : g_set) in_g = in_g || g == b;
        if (!in_g) win.gprime.push_back(b);
    }
    return win;
}

void check_gprime(const IndexWindow& window, const Lattice& lattice, const KPoint& k,
                  double epsilon) {
    const double floor = epsilon * k.v.norm();
    for (const DualPoint& b : window.gprime)
        if (std::abs(n_full(lattice, b, k)) < floor)
            throw RegionViolation("G' point with |N_b(k)| < eps |v|; "
                                  "singular set G incomplete at this k");
}

TruncatedOperator delta_matrix(const Lattice& lattice,
                               const std::vector<DualPoint>& points, const KPoint& k) {
    TruncatedOperator op;
    op.rows = points;
    op.cols = points;
    op.entries = CMatrix::Zero(points.size(), points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        op.entries(i, i) = n_full(lattice, points[i], k);
    return op;
}

namespace {

// single matrix element w_{b,c} = -2(c+k).A(b-c) + q(b-c)
cplx w_entry(const Lattice& lattice, const DualPoint& b, const DualPoint& c,
             const KPoint& k, const FourierField& A, const FourierField& q) {
    const DualPoint diff = b - c;
    cplx val = q.scalar(diff);
    auto it = A.coeffs.find(diff);
    if (it != A.coeffs.end()) {
        const Vec2 cc = lattice.cart(c);
        val -= 2.0 * ((cc.x + k.k1) * it->second.x + (cc.y + k.k2) * it->second.y);
    }
    return val;
}

} // namespace

TruncatedOperator w_matrix(const Lattice& lattice, const std::vector<DualPoint>& B,
                           const std::vector<DualPoint>& C, const KPoint& k,
                           const FourierField& A, const FourierField& q) {
    TruncatedOperator op;
    op.rows = B;
    op.cols = C;
    op.entries = CMatrix::Zero(B.size(), C.size());
    for (std::size_t j = 0; j < C.size(); ++j)
        for (std::size_t i = 0; i < B.size(); ++i)
            op.entries(i, j) = w_entry(lattice, B[i], C[j], k, A, q);
    return op;
}

TruncatedOperator r_matrix(const Lattice& lattice, const std::vector<DualPoint>& B,
                           const std::vector<DualPoint>& C, const KPoint& k,
                           const FourierField& A, const FourierField& q) {
    TruncatedOperator op = w_matrix(lattice, B, C, k, A, q);
    for (std::size_t j = 0; j < C.size(); ++j) {
        const cplx nc = n_full(lattice, C[j], k);
        if (std::abs(nc) < 1e-12)
            throw SingularDenominator("N_c(k) vanishes for a column of R");
        for (std::size_t i = 0; i < B.size(); ++i) {
            op.entries(i, j) /= nc;
            if (B[i] == C[j]) op.entries(i, j) += 1.0;
        }
    }
    return op;
}

TruncatedOperator hk_matrix(const Lattice& lattice, const IndexWindow& window,
                            const KPoint& k, const FourierField& A,
                            const FourierField& V) {
    const FourierField q = q_field(lattice, A, V);
    TruncatedOperator op = w_matrix(lattice, window.all_points, window.all_points, k, A, q);
    for (std::size_t i = 0; i < window.all_points.size(); ++i)
        op.entries(i, i) += n_full(lattice, window.all_points[i], k);
    return op;
}

double schur_norm(const TruncatedOperator& op) {
    double row_max = 0.0, col_max = 0.0;
    const auto abs_entries = op.entries.cwiseAbs();
    if (op.entries.rows() > 0 && op.entries.cols() > 0) {
        row_max = abs_entries.rowwise().sum().maxCoeff();
        col_max = abs_entries.colwise().sum().maxCoeff();
    }
    return std::max(row_max, col_max);
}

double rss_bound(const Lattice& lattice, const KPoint& k, const FourierField& A,
                 const FourierField& q, double epsilon) {
    const double vmag = k.v.norm();
    if (!(k.u.norm() <= 2.0 * vmag) || !(vmag > 2.0 * lattice.lambda))
        throw RegionViolation("rss_bound requires |u| <= 2|v| and |v| > 2 lambda");
    const double q_norm = weighted_l1(lattice, q, 0.0);
    const double a_norm = weighted_l1(lattice, A, 0.0);
    return q_norm / (epsilon * vmag) + (14.0 / epsilon) * a_norm;
}

InverseResult invert_rgg(const Lattice& lattice, const IndexWindow& window,
                         const KPoint& k, const FourierField& A,
                         const FourierField& q, double epsilon, bool force) {
    InverseResult result;
    result.certificate.bound = rss_bound(lattice, k, A, q, epsilon);
    if (result.certificate.bound >= 17.0 / 18.0 && !force)
        throw CertificateFail("rss_bound >= 17/18: outside the proven inversion region");

    TruncatedOperator R = r_matrix(lattice, window.gprime, window.gprime, k, A, q);
    const Eigen::Index n = R.entries.rows();

    Eigen::PartialPivLU<CMatrix> lu(R.entries);
    CMatrix inv = lu.solve(CMatrix::Identity(n, n));
    const double residual = (R.entries * inv - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
    if (!std::isfinite(residual) || residual > 1e-8)
        throw NumericallySingular("dense solve for R^{-1} failed");

    result.inverse.rows = window.gprime;
    result.inverse.cols = window.gprime;
    result.inverse.entries = std::move(inv);

    TruncatedOperator rmi = R;
    rmi.entries -= CMatrix::Identity(n, n);
    result.certificate.measured_rmi = schur_norm(rmi);
    TruncatedOperator imi = result.inverse;
    imi.entries -= CMatrix::Identity(n, n);
    result.certificate.measured_inv = schur_norm(imi);
    result.certificate.lemma_holds =
        result.certificate.measured_inv < 18.0 * result.certificate.measured_rmi ||
        (result.certificate.measured_inv < 1e-14 && result.certificate.measured_rmi < 1e-14);
    return result;
}

double sigma_min(const TruncatedOperator& op) {
    if (op.entries.rows() == 0) return 0.0;
    Eigen::JacobiSVD<CMatrix> svd(op.entries);
    return svd.singularValues().minCoeff();
}

double sigma_norm(const Lattice& lattice, const TruncatedOperator& op, double beta) {
    const std::size_t nr = op.rows.size(), nc = op.cols.size();
    std::vector<double> row_sum(nr, 0.0), col_sum(nc, 0.0);
    for (std::size_t j = 0; j < nc; ++j)
        for (std::size_t i = 0; i < nr; ++i) {
            const double dist = lattice.length(op.rows[i] - op.cols[j]);
            const double weighted =
                std::abs(op.entries(i, j)) * std::pow(1.0 + dist, beta);
            row_sum[i] += weighted;
            col_sum[j] += weighted;
        }
    double best = 0.0;
    for (double s : row_sum) best = std::max(best, s);
    for (double s : col_sum) best = std::max(best, s);
    return best;
}

double decay_certificate(int m, double beta, const Lattice& lattice) {
    const double contraction = std::pow(17.0 / 18.0, m);
    if (beta == 0.0) return contraction;
    const double ceil_b = std::ceil(beta);
    const double factor = 1.0 + std::pow(2.0 * lattice.lambda, beta - ceil_b) * ceil_b *
                                    std::pow(static_cast<double>(m), ceil_b - 1.0);
    return factor * contraction;
}

} // namespace fermi
