#include "fermi/defining.hpp"

#include <algorithm>
#include <cmath>

#include "fermi/errors.hpp"

namespace fermi {

namespace {
const cplx I{0.0, 1.0};

// chain(u, v) = u^T R^{-1} v over G'
cplx chain(const EvalContext& ctx, const Eigen::VectorXcd& left,
           const Eigen::VectorXcd& right) {
    return left.transpose() * (ctx.rinv.entries * right);
}

// require the active tube centers to be exactly `centers`
void require_tube_centers(const EvalContext& ctx,
                          const std::vector<DualPoint>& centers) {
    const double scan = 2.0 * ctx.k.v.norm() + 4.0 * ctx.lattice.lambda;
    std::vector<DualPoint> seen;
    for (const TubeIndex& t : active_tubes(ctx.k, ctx.lattice, ctx.epsilon, scan)) {
        bool dup = false;
        for (const DualPoint& p : seen) dup = dup || p == t.b;
        if (!dup) seen.push_back(t.b);
    }
    auto sorted = [](std::vector<DualPoint> v) {
        std::sort(v.begin(), v.end());
        return v;
    };
    if (sorted(seen) != sorted(centers))
        throw RegionViolation("active tube centers do not match the singular set G");
}

} // namespace

EvalContext make_context(const Lattice& lattice, const IndexWindow& window,
                         const KPoint& k, const FourierField& A,
                         const FourierField& q, double epsilon, bool force) {
    EvalContext ctx;
    ctx.lattice = lattice;
    ctx.window = window;
    ctx.k = k;
    ctx.A = A;
    ctx.q = q;
    ctx.epsilon = epsilon;
    InverseResult inv = invert_rgg(lattice, window, k, A, q, epsilon, force);
    ctx.rinv = std::move(inv.inverse);
    ctx.certificate = inv.certificate;
    ctx.n_gprime.resize(window.gprime.size());
    for (std::size_t i = 0; i < window.gprime.size(); ++i)
        ctx.n_gprime(i) = n_full(lattice, window.gprime[i], k);
    return ctx;
}

cplx d_entry(const EvalContext& ctx, const DualPoint& dprime,
             const DualPoint& dprimeprime) {
    const auto& gp = ctx.window.gprime;
    const Eigen::Index n = static_cast<Eigen::Index>(gp.size());
    TruncatedOperator row = w_matrix(ctx.lattice, {dprime}, gp, ctx.k, ctx.A, ctx.q);
    TruncatedOperator col = w_matrix(ctx.lattice, gp, {dprimeprime}, ctx.k, ctx.A, ctx.q);
    TruncatedOperator diag =
        w_matrix(ctx.lattice, {dprime}, {dprimeprime}, ctx.k, ctx.A, ctx.q);

    Eigen::VectorXcd left(n), right(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        left(i) = row.entries(0, i) / ctx.n_gprime(i);
        right(i) = col.entries(i, 0);
    }
    return diag.entries(0, 0) - chain(ctx, left, right);
}

cplx f_regular(const EvalContext& ctx) {
    const DualPoint zero{0, 0};
    if (ctx.window.g_set.size() != 1 || !(ctx.window.g_set[0] == zero))
        throw RegionViolation("f_regular requires the singular set G = {0}");
    require_tube_centers(ctx, {zero});
    return n_full(ctx.lattice, zero, ctx.k) + d_entry(ctx, zero, zero);
}

cplx f_handle(const EvalContext& ctx, const DualPoint& d) {
    const DualPoint zero{0, 0};
    std::vector<DualPoint> g = ctx.window.g_set;
    std::sort(g.begin(), g.end());
    std::vector<DualPoint> expect = {zero, d};
    std::sort(expect.begin(), expect.end());
    if (g != expect)
        throw RegionViolation("f_handle requires the singular set G = {0, d}");
    require_tube_centers(ctx, expect);
    const cplx a = n_full(ctx.lattice, zero, ctx.k) + d_entry(ctx, zero, zero);
    const cplx b = n_full(ctx.lattice, d, ctx.k) + d_entry(ctx, d, d);
    return a * b - d_entry(ctx, zero, d) * d_entry(ctx, d, zero);
}

CoefficientSet bc_coefficients(const EvalContext& ctx, const DualPoint& dprime,
                               const DualPoint& dprimeprime) {
    const auto& gp = ctx.window.gprime;
    const Eigen::Index n = static_cast<Eigen::Index>(gp.size());
    const Lattice& lat = ctx.lattice;
    const Vec2 dpp_c = lat.cart(dprimeprime);

    // left vectors carry 1/N_b; split the k-independent parts of w:
    //   w_{d',b}/N_b  = qL(b) - 2 k1 aL1(b) - 2 k2 aL2(b)
    //   w_{c,d''}     = qR(c) - 2 k1 aR1(c) - 2 k2 aR2(c)
    Eigen::VectorXcd aL1(n), aL2(n), qL(n), aR1(n), aR2(n), qR(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const DualPoint bl = dprime - gp[i];
        const CVec2 al = ctx.A.vector(bl);
        const Vec2 bc = lat.cart(gp[i]);
        aL1(i) = al.x / ctx.n_gprime(i);
        aL2(i) = al.y / ctx.n_gprime(i);
        qL(i) = (ctx.q.scalar(bl) - 2.0 * (bc.x * al.x + bc.y * al.y)) / ctx.n_gprime(i);

        const DualPoint br = gp[i] - dprimeprime;
        const CVec2 ar = ctx.A.vector(br);
        aR1(i) = ar.x;
        aR2(i) = ar.y;
        qR(i) = ctx.q.scalar(br) - 2.0 * (dpp_c.x * ar.x + dpp_c.y * ar.y);
    }

    const DualPoint diff = dprime - dprimeprime;
    const CVec2 a0 = ctx.A.vector(diff);
    CoefficientSet out;
    out.B11 = -4.0 * chain(ctx, aL1, aR1);
    out.B22 = -4.0 * chain(ctx, aL2, aR2);
    out.B12plus21 = -4.0 * (chain(ctx, aL1, aR2) + chain(ctx, aL2, aR1));
    out.C1 = -2.0 * a0.x + 2.0 * chain(ctx, qL, aR1) + 2.0 * chain(ctx, aL1, qR);
    out.C2 = -2.0 * a0.y + 2.0 * chain(ctx, qL, aR2) + 2.0 * chain(ctx, aL2, qR);
    out.C0 = ctx.q.scalar(diff) - 2.0 * (dpp_c.x * a0.x + dpp_c.y * a0.y) -
             chain(ctx, qL, qR);
    return out;
}

WZFrame wz_frame(const Lattice& lattice, int nu, const DualPoint& dprime,
                 const KPoint& k) {
    WZFrame frame;
    frame.nu = nu;
    frame.dprime = dprime;
    frame.w = n_line(lattice, dprime, nu, k);
    frame.z = n_line(lattice, dprime, nu_comp(nu), k);
    return frame;
}

JKLMSet jklm(const EvalContext& ctx, const DualPoint& dprime,
             const DualPoint& dprimeprime, int nu) {
    const CoefficientSet c = bc_coefficients(ctx, dprime, dprimeprime);
    const Vec2 d = ctx.lattice.cart(dprime);

    auto jj = [&](int mu) {
        return 0.25 * (c.B11 - c.B22 + I * nu_sign(mu) * c.B12plus21);
    };
    auto ll = [&](int mu) {
        return -d.x * c.B11 - I * nu_sign(mu) * d.y * c.B22 -
               0.5 * (d.y + I * nu_sign(mu) * d.x) * c.B12plus21 +
               0.5 * (c.C1 + I * nu_sign(mu) * c.C2);
    };

    JKLMSet out;
    out.J_nu = jj(nu);
    out.J_nuprime = jj(nu_comp(nu));
    out.K = 0.5 * (c.B11 + c.B22);
    out.L_nu = ll(nu);
    out.L_nuprime = ll(nu_comp(nu));
    out.M = d.x * d.x * c.B11 + d.y * d.y * c.B22 + d.x * d.y * c.B12plus21 -
            d.x * c.C1 - d.y * c.C2 + c.C0;
    return out;
}

CMatrix schur_oracle(const Lattice& lattice, const IndexWindow& window,
                     const KPoint& k, const FourierField& A,
                     const FourierField& V) {
    TruncatedOperator H = hk_matrix(lattice, window, k, A, V);
    const auto& pts = window.all_points;
    std::vector<Eigen::Index> gi, pi;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        bool in_g = false;
        for (const DualPoint& g : window.g_set) in_g = in_g || g == pts[i];
        (in_g ? gi : pi).push_back(static_cast<Eigen::Index>(i));
    }
    // order the G block like window.g_set
    std::vector<Eigen::Index> gsel;
    for (const DualPoint& g : window.g_set)
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (pts[i] == g) gsel.push_back(static_cast<Eigen::Index>(i));

    const Eigen::Index ng = static_cast<Eigen::Index>(gsel.size());
    const Eigen::Index np = static_cast<Eigen::Index>(pi.size());
    CMatrix Hgg(ng, ng), Hgp(ng, np), Hpg(np, ng), Hpp(np, np);
    for (Eigen::Index i = 0; i < ng; ++i)
        for (Eigen::Index j = 0; j < ng; ++j) Hgg(i, j) = H.entries(gsel[i], gsel[j]);
    for (Eigen::Index i = 0; i < ng; ++i)
        for (Eigen::Index j = 0; j < np; ++j) Hgp(i, j) = H.entries(gsel[i], pi[j]);
    for (Eigen::Index i = 0; i < np; ++i)
        for (Eigen::Index j = 0; j < ng; ++j) Hpg(i, j) = H.entries(pi[i], gsel[j]);
    for (Eigen::Index i = 0; i < np; ++i)
        for (Eigen::Index j = 0; j < np; ++j) Hpp(i, j) = H.entries(pi[i], pi[j]);

    Eigen::PartialPivLU<CMatrix> lu(Hpp);
    CMatrix solved = lu.solve(Hpg);
    if (!solved.allFinite())
        throw NumericallySingular("G' block of H_k is numerically singular");
    return Hgg - Hgp * solved;
}

} // namespace fermi
