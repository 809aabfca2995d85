#include "fermi/asymptotics.hpp"

#include <algorithm>
#include <cmath>

#include "fermi/errors.hpp"

namespace fermi {

namespace {
const cplx I{0.0, 1.0};

double mat_norm(const std::vector<DualPoint>& rows,
                const std::vector<DualPoint>& cols, const CMatrix& m) {
    return schur_norm(TruncatedOperator{rows, cols, m});
}

long long binom(int n, int j) {
    long long out = 1;
    for (int i = 1; i <= j; ++i) out = out * (n - j + i) / i;
    return out;
}

// n-th order central difference in one complex direction
cplx central_diff(const std::function<cplx(double)>& fn, int n, double h) {
    cplx acc{0.0, 0.0};
    for (int j = 0; j <= n; ++j) {
        const double off = (0.5 * n - j) * h;
        const double sign = (j % 2 == 0) ? 1.0 : -1.0;
        acc += sign * static_cast<double>(binom(n, j)) * fn(off);
    }
    return acc / std::pow(h, n);
}

cplx fd_value(const std::function<cplx(const KPoint&)>& fn, const KPoint& k,
              int n, int m, double h) {
    auto inner = [&](double t1) {
        if (m == 0) return fn(KPoint{k.k1 + t1, k.k2});
        auto slice = [&](double t2) { return fn(KPoint{k.k1 + t1, k.k2 + t2}); };
        return central_diff(slice, m, h);
    };
    if (n == 0) {
        auto slice = [&](double t2) { return fn(KPoint{k.k1, k.k2 + t2}); };
        return central_diff(slice, m, h);
    }
    return central_diff(inner, n, h);
}

} // namespace

FourierField component_field(const FourierField& A, int i) {
    FourierField out = FourierField::scalar_field();
    for (const auto& [b, a] : A.coeffs) out.set(b, i == 1 ? a.x : a.y);
    return out;
}

FourierField theta_field(const Lattice& lattice, const FourierField& A, int mu) {
    (void)lattice;
    FourierField out = FourierField::scalar_field();
    for (const auto& [b, a] : A.coeffs) out.set(b, -2.0 * I * theta_c(mu, a));
    return out;
}

SplitWindows split_windows(const EvalContext& ctx, const DualPoint& dprime,
                           double radius_R) {
    SplitWindows out;
    out.dprime = dprime;
    out.radius_R = radius_R;
    const auto& gp = ctx.window.gprime;
    for (std::size_t i = 0; i < gp.size(); ++i) {
        const double dist = ctx.lattice.length(gp[i] - dprime);
        if (dist < radius_R / 2.0) {
            if (dist < radius_R / 4.0) {
                out.g1.push_back(gp[i]);
                out.g1_in_g3.push_back(out.g3.size());
            }
            out.g3.push_back(gp[i]);
            out.g3_in_gprime.push_back(i);
        } else {
            out.g4.push_back(gp[i]);
        }
        if (dist >= radius_R / 4.0) out.g2.push_back(gp[i]);
    }
    return out;
}

cplx phi_sum(const EvalContext& ctx, const FourierField& f, const FourierField& g,
             const DualPoint& dprime, const DualPoint& dprimeprime) {
    const auto& gp = ctx.window.gprime;
    const Eigen::Index n = static_cast<Eigen::Index>(gp.size());
    Eigen::VectorXcd left(n), right(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        left(i) = f.scalar(dprime - gp[i]) / ctx.n_gprime(i);
        right(i) = g.scalar(gp[i] - dprimeprime);
    }
    return left.transpose() * (ctx.rinv.entries * right);
}

XYPair xy_matrices(const EvalContext& ctx, const SplitWindows& splits, int mu) {
    const int mup = nu_comp(mu);
    const Lattice& lat = ctx.lattice;
    const DualPoint dp = splits.dprime;
    XYPair out;
    out.w = n_line(lat, dp, mu, ctx.k);
    out.z = n_line(lat, dp, mup, ctx.k);

    const Eigen::Index n3 = static_cast<Eigen::Index>(splits.g3.size());
    CMatrix X(n3, n3), Y(n3, n3);
    for (Eigen::Index j = 0; j < n3; ++j) {
        const DualPoint cm = splits.g3[j] - dp;
        const cplx denom = (out.w - 2.0 * I * theta(lat, mup, cm)) *
                           (out.z - 2.0 * I * theta(lat, mu, cm));
        if (std::abs(denom) < 1e-12)
            throw SingularDenominator("X/Y column denominator vanishes");
        const Vec2 cmc = lat.cart(cm);
        for (Eigen::Index i = 0; i < n3; ++i) {
            const DualPoint diff = splits.g3[i] - splits.g3[j];
            const CVec2 a = ctx.A.vector(diff);
            const cplx qd = ctx.q.scalar(diff);
            X(i, j) = (2.0 * (cmc.x * a.x + cmc.y * a.y) - qd -
                       2.0 * I * theta_c(mu, a) * out.w) /
                      denom;
            Y(i, j) = (-2.0 * I * theta_c(mup, a) * out.z) / denom;
        }
    }
    out.X33 = TruncatedOperator{splits.g3, splits.g3, std::move(X)};
    out.Y33 = TruncatedOperator{splits.g3, splits.g3, std::move(Y)};
    return out;
}

SWZ swz_series(const XYPair& xy, double tol) {
    const Eigen::Index n = xy.X33.entries.rows();
    SWZ out;
    if (n == 0) {
        out.S = out.W = out.Z = CMatrix::Zero(0, 0);
        return out;
    }
    const CMatrix& X = xy.X33.entries;
    const CMatrix& Y = xy.Y33.entries;
    const CMatrix T = X + Y;
    const double ny = mat_norm(xy.Y33.rows, xy.Y33.cols, Y);
    const double nt = mat_norm(xy.X33.rows, xy.X33.cols, T);
    if (ny >= 1.0 || nt >= 1.0)
        throw NotContracting("near-window contraction norm >= 1");

    const CMatrix id = CMatrix::Identity(n, n);
    out.S = (id - Y).partialPivLu().solve(id);
    const CMatrix total = (id - T).partialPivLu().solve(id);

    // W = sum_j W_j, W_1 = X, W_{j+1} = Y W_j + X Y^j
    CMatrix W = CMatrix::Zero(n, n);
    CMatrix Wj = X;
    CMatrix Yj = Y;
    int j = 1;
    double term = Wj.norm();
    while (term > tol && j < 400) {
        W += Wj;
        Wj = Y * Wj + X * Yj;
        Yj = Yj * Y;
        term = Wj.norm();
        ++j;
    }
    W += Wj;
    out.tail = term;
    out.terms = j;
    out.W = W;
    out.Z = total - out.S - W;
    return out;
}

AlphaPieces alpha_split(const EvalContext& ctx, const FourierField& f,
                        const FourierField& g, int mu, const DualPoint& dprime,
                        double radius_R, double tol) {
    const Lattice& lat = ctx.lattice;
    const int mup = nu_comp(mu);
    const SplitWindows sw = split_windows(ctx, dprime, radius_R);
    const XYPair xy = xy_matrices(ctx, sw, mu);
    const SWZ swz = swz_series(xy, tol);

    const Eigen::Index n3 = static_cast<Eigen::Index>(sw.g3.size());
    const Eigen::Index n1 = static_cast<Eigen::Index>(sw.g1.size());

    // f/N_b rows and g columns over G'_1, indexed inside G'_3
    Eigen::VectorXcd lf = Eigen::VectorXcd::Zero(n3);
    Eigen::VectorXcd lf_nodiv = Eigen::VectorXcd::Zero(n3);
    Eigen::VectorXcd rg = Eigen::VectorXcd::Zero(n3);
    for (Eigen::Index i = 0; i < n1; ++i) {
        const Eigen::Index j = static_cast<Eigen::Index>(sw.g1_in_g3[i]);
        const cplx nb = ctx.n_gprime(static_cast<Eigen::Index>(sw.g3_in_gprime[sw.g1_in_g3[i]]));
        lf_nodiv(j) = f.scalar(dprime - sw.g1[i]);
        lf(j) = lf_nodiv(j) / nb;
        rg(j) = g.scalar(sw.g1[i] - dprime);
    }

    AlphaPieces out;
    out.a1 = lf.transpose() * (swz.S * rg);
    out.a2 = lf.transpose() * (swz.W * rg);
    out.r4 = lf.transpose() * (swz.Z * rg);

    // r3: the G'_1 block of R^{-1} minus the pure near-window series
    const CMatrix total = swz.S + swz.W + swz.Z;
    Eigen::VectorXcd lf_gp = Eigen::VectorXcd::Zero(ctx.rinv.entries.rows());
    Eigen::VectorXcd rg_gp = Eigen::VectorXcd::Zero(ctx.rinv.entries.cols());
    for (Eigen::Index i = 0; i < n1; ++i) {
        const Eigen::Index gi = static_cast<Eigen::Index>(sw.g3_in_gprime[sw.g1_in_g3[i]]);
        lf_gp(gi) = lf(static_cast<Eigen::Index>(sw.g1_in_g3[i]));
        rg_gp(gi) = rg(static_cast<Eigen::Index>(sw.g1_in_g3[i]));
    }
    const cplx block_rinv = lf_gp.transpose() * (ctx.rinv.entries * rg_gp);
    const cplx block_series = lf.transpose() * (total * rg);
    out.r3 = block_rinv - block_series;

    // r1: b in G'_1, c in G'_2;  r2: b in G'_2, c in G'
    const auto& gp = ctx.window.gprime;
    const Eigen::Index ngp = static_cast<Eigen::Index>(gp.size());
    Eigen::VectorXcd in_g1 = Eigen::VectorXcd::Zero(ngp);
    for (std::size_t i = 0; i < sw.g1.size(); ++i)
        in_g1(static_cast<Eigen::Index>(sw.g3_in_gprime[sw.g1_in_g3[i]])) = 1.0;
    Eigen::VectorXcd lf_full(ngp), rg_full(ngp);
    for (Eigen::Index i = 0; i < ngp; ++i) {
        lf_full(i) = f.scalar(dprime - gp[i]) / ctx.n_gprime(i);
        rg_full(i) = g.scalar(gp[i] - dprime);
    }
    Eigen::VectorXcd rg_g2 = rg_full;
    Eigen::VectorXcd lf_g2 = lf_full;
    for (Eigen::Index i = 0; i < ngp; ++i) {
        if (std::abs(in_g1(i)) > 0.5) {
            rg_g2(i) = 0.0;
            lf_g2(i) = 0.0;
        }
    }
    out.r1 = lf_gp.transpose() * (ctx.rinv.entries * rg_g2);
    out.r2 = lf_g2.transpose() * (ctx.rinv.entries * rg_full);
    out.a3 = out.r1 + out.r2 + out.r3 + out.r4;

    // split of z * a1 into constant / w-order / quadratic / z-directed parts
    Eigen::VectorXcd eta0(n3), etaw(n3), etaz(n3);
    for (Eigen::Index j = 0; j < n3; ++j) {
        const DualPoint cm = sw.g3[j] - dprime;
        const cplx tp = 2.0 * I * theta(lat, mup, cm);
        const cplx tm = 2.0 * I * theta(lat, mu, cm);
        eta0(j) = -1.0 / tp;
        etaw(j) = xy.w / (tp * (xy.w - tp));
        etaz(j) = (tm / (xy.w - tp)) / (xy.z - tm);
    }
    CMatrix Y0(n3, n3), Yw(n3, n3), Yz(n3, n3);
    for (Eigen::Index j = 0; j < n3; ++j) {
        for (Eigen::Index i = 0; i < n3; ++i) {
            const cplx pref = -2.0 * I * theta_c(mup, ctx.A.vector(sw.g3[i] - sw.g3[j]));
            Y0(i, j) = pref * eta0(j);
            Yw(i, j) = pref * etaw(j);
            Yz(i, j) = pref * etaz(j);
        }
    }
    const CMatrix id = CMatrix::Identity(n3, n3);
    const CMatrix& Y = xy.Y33.entries;
    const CMatrix SY2 = swz.S * Y * Y;
    const CMatrix K0 = eta0.asDiagonal() * (id + Y0);
    const CMatrix K1 = eta0.asDiagonal() * Yw + etaw.asDiagonal() * (id + Y0 + Yw);
    const Eigen::VectorXcd eta0w = eta0 + etaw;
    const CMatrix K2 = eta0w.asDiagonal() * SY2;
    const CMatrix K3 = eta0w.asDiagonal() * Yz + etaz.asDiagonal() * swz.S;
    out.a10 = lf_nodiv.transpose() * (K0 * rg);
    out.a11 = lf_nodiv.transpose() * (K1 * rg);
    out.a12 = lf_nodiv.transpose() * (K2 * rg);
    out.a13 = lf_nodiv.transpose() * (K3 * rg);
    return out;
}

cplx beta2_10(const Lattice& lattice, const FourierField& A, double radius_R,
              int nu) {
    const int nup = nu_comp(nu);
    std::vector<DualPoint> g1;
    for (const DualPoint& b : enumerate_dual(lattice, radius_R / 4.0)) {
        if (b == DualPoint{0, 0}) continue;
        if (lattice.length(b) < radius_R / 4.0) g1.push_back(b);
    }
    cplx acc{0.0, 0.0};
    for (const DualPoint& b : g1) {
        const cplx fb = theta_c(nup, A.vector(DualPoint{0, 0} - b)) / theta(lattice, nup, b);
        for (const DualPoint& c : g1) {
            cplx mid = (b == c) ? cplx{1.0, 0.0} : cplx{0.0, 0.0};
            mid += theta_c(nup, A.vector(b - c)) / theta(lattice, nup, c);
            acc += fb * mid * theta_c(nup, A.vector(c));
        }
    }
    return 2.0 * I * acc;
}

CoordExpansion coord_expansion(const EvalContext& ctx, int mu,
                               const DualPoint& dprime, double radius_R,
                               double tol) {
    CoordExpansion out;
    out.mu = mu;
    out.dprime = dprime;
    out.w = n_line(ctx.lattice, dprime, mu, ctx.k);
    out.z = n_line(ctx.lattice, dprime, nu_comp(mu), ctx.k);
    out.coeffs = jklm(ctx, dprime, dprime, mu);

    const FourierField F = theta_field(ctx.lattice, ctx.A, nu_comp(mu));
    out.pieces = alpha_split(ctx, F, F, mu, dprime, radius_R, tol);
    out.beta_leading = -out.pieces.a1;

    const JKLMSet& c = out.coeffs;
    out.g = c.J_nuprime * out.w * out.w / out.z +
            (c.J_nu - out.beta_leading) * out.z + c.K * out.w +
            c.L_nuprime * out.w / out.z + c.L_nu + c.M / out.z;
    out.x = out.w + out.beta_leading * out.z + out.g;
    return out;
}

std::pair<CoordExpansion, CoordExpansion> x_coords(const EvalContext& ctx,
                                                   const DualPoint& d, int nu,
                                                   double radius_R, double tol) {
    return {coord_expansion(ctx, nu, DualPoint{0, 0}, radius_R, tol),
            coord_expansion(ctx, nu_comp(nu), d, radius_R, tol)};
}

HandleRTerm handle_r_term(const EvalContext& ctx, const DualPoint& d, int nu) {
    const Lattice& lat = ctx.lattice;
    const DualPoint zero{0, 0};
    const Vec2 dc = lat.cart(d);
    const CVec2 am = ctx.A.vector(zero - d);
    const CVec2 ap = ctx.A.vector(d);
    HandleRTerm out;
    out.c1 = ctx.q.scalar(zero - d) - 2.0 * (dc.x * am.x + dc.y * am.y);
    out.c2 = ctx.q.scalar(d) + 2.0 * (dc.x * ap.x + dc.y * ap.y);
    out.p1 = d_entry(ctx, zero, d) - out.c1;
    out.p2 = d_entry(ctx, d, zero) - out.c2;
    out.z1 = n_line(lat, zero, nu_comp(nu), ctx.k);
    out.z2 = n_line(lat, d, nu, ctx.k);
    out.r = -(out.c1 + out.p1) * (out.c2 + out.p2) / (out.z1 * out.z2);
    return out;
}

DerivativeReport fd_derivative(const std::function<cplx(const KPoint&)>& fn,
                               const KPoint& k, int n, int m, double step) {
    const cplx coarse = fd_value(fn, k, n, m, step);
    const cplx fine = fd_value(fn, k, n, m, step / 2.0);
    DerivativeReport out;
    out.value = fine + (fine - coarse) / 3.0; // central differences are O(h^2)
    out.error = std::abs(fine - coarse) / 3.0;
    if (out.error > 0.1 * std::abs(out.value) && out.error > 1e-10)
        throw StepTooLarge("finite-difference step too large for target accuracy");
    return out;
}

} // namespace fermi
