#include "fermi/curve.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fermi/errors.hpp"

namespace fermi {

namespace {

const cplx kI{0.0, 1.0};

std::string dual_str(const DualPoint& b) {
    std::ostringstream os;
    os << "(" << b.m << "," << b.n << ")";
    return os.str();
}

} // namespace

// ---------------------------------------------------------------------------
// Poly2
// ---------------------------------------------------------------------------

cplx Poly2::eval(cplx z1, cplx z2) const {
    cplx acc{0.0, 0.0};
    for (int i = deg; i >= 0; --i) {
        cplx row{0.0, 0.0};
        for (int j = deg - i; j >= 0; --j) row = row * z2 + coef(i, j);
        acc = acc * z1 + row;
    }
    return acc;
}

cplx Poly2::d1(cplx z1, cplx z2) const {
    cplx acc{0.0, 0.0};
    for (int i = deg; i >= 1; --i) {
        cplx row{0.0, 0.0};
        for (int j = deg - i; j >= 0; --j) row = row * z2 + coef(i, j);
        acc = acc * z1 + static_cast<double>(i) * row;
    }
    return acc;
}

cplx Poly2::d2(cplx z1, cplx z2) const {
    cplx acc{0.0, 0.0};
    for (int i = deg; i >= 0; --i) {
        cplx row{0.0, 0.0};
        for (int j = deg - i; j >= 1; --j) row = row * z2 + static_cast<double>(j) * coef(i, j);
        acc = acc * z1 + row;
    }
    return acc;
}

Poly2 poly_mul(const Poly2& a, const Poly2& b, int deg) {
    Poly2 out(deg);
    for (int i = 0; i <= a.deg; ++i)
        for (int j = 0; i + j <= a.deg; ++j) {
            const cplx av = a.coef(i, j);
            if (av == cplx{0.0, 0.0}) continue;
            const int pmax = std::min(b.deg, deg - i - j);
            for (int p = 0; p <= pmax; ++p)
                for (int q = 0; p + q <= pmax; ++q)
                    out.coef(i + p, j + q) += av * b.coef(p, q);
        }
    return out;
}

Poly2 poly_compose(const Poly2& g, const Poly2& u1, const Poly2& u2, int deg) {
    // powers of the two inner maps, truncated at total degree deg
    std::vector<Poly2> pw1(g.deg + 1, Poly2(deg)), pw2(g.deg + 1, Poly2(deg));
    pw1[0].coef(0, 0) = 1.0;
    pw2[0].coef(0, 0) = 1.0;
    for (int i = 1; i <= g.deg; ++i) {
        pw1[i] = poly_mul(pw1[i - 1], u1, deg);
        pw2[i] = poly_mul(pw2[i - 1], u2, deg);
    }
    Poly2 out(deg);
    for (int i = 0; i <= g.deg; ++i)
        for (int j = 0; i + j <= g.deg; ++j) {
            const cplx gv = g.coef(i, j);
            if (gv == cplx{0.0, 0.0}) continue;
            Poly2 term = poly_mul(pw1[i], pw2[j], deg);
            out.coef += gv * term.coef;
        }
    return out;
}

namespace {

Poly2 poly_dz1(const Poly2& p) {
    Poly2 out(p.deg);
    for (int i = 1; i <= p.deg; ++i)
        for (int j = 0; i + j <= p.deg; ++j)
            out.coef(i - 1, j) = static_cast<double>(i) * p.coef(i, j);
    return out;
}

Poly2 poly_dz2(const Poly2& p) {
    Poly2 out(p.deg);
    for (int i = 0; i <= p.deg; ++i)
        for (int j = 1; i + j <= p.deg; ++j)
            out.coef(i, j - 1) = static_cast<double>(j) * p.coef(i, j);
    return out;
}

// Taylor coefficients of f around (c1, c2) up to total degree N by discrete
// Cauchy integrals on the product circle of radius r0 with M nodes per factor.
Poly2 taylor_model(const std::function<cplx(cplx, cplx)>& f, cplx c1, cplx c2,
                   double r0, int M, int N) {
    std::vector<std::vector<cplx>> samples(M, std::vector<cplx>(M));
    std::vector<cplx> ring(M);
    for (int a = 0; a < M; ++a) {
        const double ph = 2.0 * M_PI * a / M;
        ring[a] = cplx{std::cos(ph), std::sin(ph)};
    }
    for (int a = 0; a < M; ++a)
        for (int b = 0; b < M; ++b)
            samples[a][b] = f(c1 + r0 * ring[a], c2 + r0 * ring[b]);
    Poly2 out(N);
    for (int j = 0; j <= N; ++j)
        for (int k = 0; j + k <= N; ++k) {
            cplx acc{0.0, 0.0};
            for (int a = 0; a < M; ++a) {
                const cplx wa = std::conj(ring[(a * j) % M]);
                for (int b = 0; b < M; ++b)
                    acc += samples[a][b] * wa * std::conj(ring[(b * k) % M]);
            }
            out.coef(j, k) = acc / (static_cast<double>(M) * M * std::pow(r0, j + k));
        }
    return out;
}

struct Grad2 {
    cplx g1, g2;
    double norm() const { return std::max(std::abs(g1), std::abs(g2)); }
};

// One 2x2 complex Newton step: solve H dx = -g.
bool newton_step(cplx h11, cplx h12, cplx h21, cplx h22, const Grad2& g, cplx& dx1,
                 cplx& dx2) {
    const cplx det = h11 * h22 - h12 * h21;
    if (std::abs(det) < 1e-300) return false;
    dx1 = -(h22 * g.g1 - h12 * g.g2) / det;
    dx2 = -(h11 * g.g2 - h21 * g.g1) / det;
    return true;
}

} // namespace

// ---------------------------------------------------------------------------
// morse_solve
// ---------------------------------------------------------------------------

MorseResult morse_solve(const std::function<cplx(cplx, cplx)>& f, double delta,
                        double a_bound, double b_bound, int degree, double grad_tol,
                        double res_tol, cplx seed1, cplx seed2) {
    if (!(a_bound < delta))
        throw HypothesisFail("first-derivative bound a = " + std::to_string(a_bound) +
                             " is not below delta = " + std::to_string(delta));
    if (!(b_bound < 1.0 / 55.0))
        throw HypothesisFail("Hessian bound b = " + std::to_string(b_bound) +
                             " is not below 1/55");

    // Stage 1: Newton on a finite-difference gradient from the seed.
    cplx x1 = seed1, x2 = seed2;
    const double h = 1e-2 * delta;
    auto fd_grad = [&](cplx u1, cplx u2) -> Grad2 {
        return {(f(u1 + h, u2) - f(u1 - h, u2)) / (2.0 * h),
                (f(u1, u2 + h) - f(u1, u2 - h)) / (2.0 * h)};
    };
    double best = 1e300;
    int stale = 0;
    bool coarse_ok = false;
    for (int it = 0; it < 60; ++it) {
        const Grad2 g = fd_grad(x1, x2);
        const double gn = g.norm();
        if (gn < best * 0.9) {
            best = gn;
            stale = 0;
        } else if (++stale >= 3) {
            coarse_ok = true;
            break;
        }
        if (gn < std::max(grad_tol, 1e-8 * delta)) {
            coarse_ok = true;
            break;
        }
        const cplx f0 = f(x1, x2);
        const cplx h11 = (f(x1 + h, x2) - 2.0 * f0 + f(x1 - h, x2)) / (h * h);
        const cplx h22 = (f(x1, x2 + h) - 2.0 * f0 + f(x1, x2 - h)) / (h * h);
        const cplx h12 = (f(x1 + h, x2 + h) - f(x1 + h, x2 - h) - f(x1 - h, x2 + h) +
                          f(x1 - h, x2 - h)) /
                         (4.0 * h * h);
        cplx d1, d2;
        if (!newton_step(h11, h12, h12, h22, g, d1, d2))
            throw NewtonDiverged("singular Hessian in the critical-point search");
        x1 += d1;
        x2 += d2;
        if (std::abs(x1) > 2.0 * delta || std::abs(x2) > 2.0 * delta)
            throw NewtonDiverged("critical-point iterates left the bidisc");
    }
    if (!coarse_ok) throw NewtonDiverged("critical-point search did not settle");

    MorseResult bestres;
    double best_comp = 1e300;
    bool have = false;

    for (int N = degree; N <= degree + 4; N += 2) {
        const int M = N + 4;

        // Stage 2: Taylor model around the coarse critical point, then polish
        // the critical point on the model (analytic derivatives).
        cplx c1 = x1, c2 = x2;
        Poly2 T;
        cplx u1{0.0, 0.0}, u2{0.0, 0.0};
        double r0 = 0.0;
        for (int attempt = 0; attempt < 4; ++attempt) {
            const double s0 = std::max(std::abs(c1), std::abs(c2));
            r0 = 0.75 * (delta - s0);
            if (r0 <= 0.0)
                throw NewtonDiverged("critical point escaped to the bidisc boundary");
            T = taylor_model(f, c1, c2, r0, M, N);
            const Poly2 T1 = poly_dz1(T), T2p = poly_dz2(T);
            const Poly2 T11 = poly_dz1(T1), T12 = poly_dz2(T1), T22 = poly_dz2(T2p);
            u1 = u2 = cplx{0.0, 0.0};
            for (int it = 0; it < 60; ++it) {
                const Grad2 g{T1.eval(u1, u2), T2p.eval(u1, u2)};
                if (g.norm() < 1e-16 * std::max(1.0, std::abs(T.coef(1, 1)) * r0)) break;
                cplx d1, d2;
                if (!newton_step(T11.eval(u1, u2), T12.eval(u1, u2), T12.eval(u1, u2),
                                 T22.eval(u1, u2), g, d1, d2))
                    throw NewtonDiverged("singular Hessian in the model polish");
                u1 += d1;
                u2 += d2;
            }
            if (std::max(std::abs(u1), std::abs(u2)) < 0.1 * r0) break;
            c1 += u1;
            c2 += u2;
        }
        const cplx xi1 = c1 + u1, xi2 = c2 + u2;

        // Recenter the model at the critical point.
        Poly2 sh1(N), sh2(N);
        sh1.coef(0, 0) = u1;
        sh1.coef(1, 0) = 1.0;
        sh2.coef(0, 0) = u2;
        sh2.coef(0, 1) = 1.0;
        Poly2 g = poly_compose(T, sh1, sh2, N);
        const double grad_residual =
            std::max(std::abs(g.coef(1, 0)), std::abs(g.coef(0, 1)));
        g.coef(0, 0) = g.coef(1, 0) = g.coef(0, 1) = cplx{0.0, 0.0};

        // Stage 3: quadratic normalization. With Q = g20 u1^2 + g11 u1 u2 +
        // g02 u2^2, factor Q = lam (u1 + s u2)(t u1 + u2) and substitute
        // v_i = z_i / sqrt(lam) symmetrically so a swap of the two variables
        // swaps the construction.
        const cplx g20 = g.coef(2, 0), g11 = g.coef(1, 1), g02 = g.coef(0, 2);
        cplx disc = std::sqrt(g11 * g11 - 4.0 * g20 * g02);
        if (std::real(disc * std::conj(g11)) < 0.0) disc = -disc;
        const cplx lam = 0.5 * (g11 + disc);
        if (std::abs(lam) < 1e-14)
            throw HypothesisFail("degenerate quadratic part in the normal form");
        const cplx sc = g02 / lam, tc = g20 / lam;
        const cplx den = (1.0 - sc * tc) * std::sqrt(lam);
        Poly2 psi1(N), psi2(N);
        psi1.coef(1, 0) = 1.0 / den;
        psi1.coef(0, 1) = -sc / den;
        psi2.coef(0, 1) = 1.0 / den;
        psi2.coef(1, 0) = -tc / den;

        // Stage 4: kill orders 3..N one by one with corrections C solving
        // z2 C1 + z1 C2 = -h_m, split evenly on mixed monomials so the
        // construction commutes with swapping the variables.
        for (int m = 3; m <= N; ++m) {
            const Poly2 G = poly_compose(g, psi1, psi2, N);
            Poly2 cor1(N), cor2(N);
            bool any = false;
            for (int j = 0; j <= m; ++j) {
                const int k = m - j;
                const cplx a = G.coef(j, k);
                if (std::abs(a) == 0.0) continue;
                any = true;
                if (j >= 1 && k >= 1) {
                    cor1.coef(j, k - 1) -= 0.5 * a;
                    cor2.coef(j - 1, k) -= 0.5 * a;
                } else if (k == 0) {
                    cor2.coef(j - 1, 0) -= a;
                } else {
                    cor1.coef(0, k - 1) -= a;
                }
            }
            if (!any) continue;
            Poly2 in1 = cor1, in2 = cor2;
            in1.coef(1, 0) += 1.0;
            in2.coef(0, 1) += 1.0;
            psi1 = poly_compose(psi1, in1, in2, N);
            psi2 = poly_compose(psi2, in1, in2, N);
        }

        MorseResult res;
        res.xi1 = xi1;
        res.xi2 = xi2;
        res.c = f(xi1, xi2);
        res.s = std::max(std::abs(xi1), std::abs(xi2));
        res.grad_residual = grad_residual;
        res.degree = N;
        res.phi1 = psi1;
        res.phi2 = psi2;
        res.phi1.coef(0, 0) += xi1;
        res.phi2.coef(0, 0) += xi2;
        res.map_radius = (delta - res.s) * (1.0 - 19.0 * b_bound);

        // Stage 5: certification against the callable on the boundary of the
        // certified bidisc, plus the derivative deviation on samples.
        const Poly2 p11 = poly_dz1(res.phi1), p12 = poly_dz2(res.phi1);
        const Poly2 p21 = poly_dz1(res.phi2), p22 = poly_dz2(res.phi2);
        double comp = 0.0, dphi = 0.0;
        const int nb = 12;
        for (int a = 0; a < nb; ++a) {
            for (double scale : {1.0, 0.55}) {
                const double rb = res.map_radius * scale;
                const double pa = 2.0 * M_PI * a / nb + 0.41;
                const double pb = 2.0 * M_PI * ((a * 7) % nb) / nb + 1.13;
                const cplx z1 = rb * cplx{std::cos(pa), std::sin(pa)};
                const cplx z2 = rb * cplx{std::cos(pb), std::sin(pb)};
                const cplx w1 = res.phi1.eval(z1, z2), w2 = res.phi2.eval(z1, z2);
                comp = std::max(comp, std::abs(f(w1, w2) - z1 * z2 - res.c));
                const double row1 =
                    std::abs(p11.eval(z1, z2) - 1.0) + std::abs(p12.eval(z1, z2));
                const double row2 =
                    std::abs(p21.eval(z1, z2)) + std::abs(p22.eval(z1, z2) - 1.0);
                dphi = std::max(dphi, std::max(row1, row2));
            }
        }
        res.comp_residual = comp;
        res.dphi_deviation = dphi;
        if (comp < best_comp) {
            best_comp = comp;
            bestres = res;
            have = true;
        }
        if (comp < res_tol) return res;
    }
    if (!have || best_comp >= res_tol) {
        std::ostringstream os;
        os << "composition residual " << best_comp << " stayed above " << res_tol;
        throw NormalFormStall(os.str());
    }
    return bestres;
}

// ---------------------------------------------------------------------------
// trace_sheet
// ---------------------------------------------------------------------------

namespace {

// Dual points whose Cartesian position is within `radius` of `center`.
std::vector<DualPoint> near_cart(const Lattice& lat, const Vec2& center,
                                 double radius) {
    const double det = lat.dual1.x * lat.dual2.y - lat.dual1.y * lat.dual2.x;
    const double m0 = (center.x * lat.dual2.y - center.y * lat.dual2.x) / det;
    const double n0 = (lat.dual1.x * center.y - lat.dual1.y * center.x) / det;
    const auto span = static_cast<std::int64_t>(
        std::ceil(radius / std::max(1e-12, 2.0 * lat.lambda)) + 2);
    const auto mc = static_cast<std::int64_t>(std::llround(m0));
    const auto nc = static_cast<std::int64_t>(std::llround(n0));
    std::vector<DualPoint> out;
    for (std::int64_t m = mc - span; m <= mc + span; ++m)
        for (std::int64_t n = nc - span; n <= nc + span; ++n) {
            const DualPoint b{m, n};
            if ((lat.cart(b) - center).norm() <= radius) out.push_back(b);
        }
    return out;
}

} // namespace

SheetTrace trace_sheet(const Lattice& lattice, const FourierField& A,
                       const FourierField& V, const std::vector<cplx>& y_samples,
                       int nu, const ModelParams& params, double tol, int max_iters) {
    const FourierField q = q_field(lattice, A, V);
    const ModelParams p = resolve_params(lattice, A, q, params);
    const IndexWindow window = make_window(lattice, {DualPoint{0, 0}}, p.window_radius);
    const double sgn = nu_sign(nu);

    SheetTrace trace;
    trace.nu = nu;
    trace.epsilon = p.epsilon;
    trace.radius_R = p.radius_R;
    trace.beta_constant = beta2_10(lattice, A, p.radius_R, nu);

    auto F = [&](cplx k1, cplx y) -> cplx {
        const KPoint k(k1, y);
        const EvalContext ctx = make_context(lattice, window, k, A, q, p.epsilon);
        const WZFrame fr = wz_frame(lattice, nu, DualPoint{0, 0}, k);
        return f_regular(ctx) / fr.z;
    };

    for (const cplx& y : y_samples) {
        SheetPoint pt;
        pt.y = y;
        pt.nu = nu;

        if (8.0 * std::abs(y) <= p.rho) {
            pt.skip_reason = "8|y| <= rho";
            trace.points.push_back(pt);
            continue;
        }
        // The tube condition |y + (-1)^nu theta_nu(b)| > eps can only fail for
        // b near one Cartesian position; scan a small box around it.
        // (-1)^nu theta_nu(b) = b_y/2 + (-1)^nu i b_x/2.
        const Vec2 target{-sgn * 2.0 * std::imag(y), -2.0 * std::real(y)};
        bool blocked = false;
        for (const DualPoint& b : near_cart(lattice, target, 2.0 * p.epsilon + 0.25)) {
            if (b.is_zero()) continue;
            const cplx dist = y + sgn * theta(lattice, nu, b);
            if (std::abs(dist) <= p.epsilon) {
                pt.skip_reason =
                    "violates |z + (-1)^nu theta_nu(b)| > (eps - eps^2/(40*Lambda))/2 "
                    "near b=" +
                    dual_str(b);
                blocked = true;
                break;
            }
        }
        if (blocked) {
            trace.points.push_back(pt);
            continue;
        }
        pt.admissible = true;

        cplx k1 = -trace.beta_constant - kI * sgn * y;
        const double hstep = 1e-6;
        cplx deriv{1.0, 0.0};
        try {
            for (int it = 0; it < max_iters; ++it) {
                if (std::abs(n_line(lattice, DualPoint{0, 0}, nu, KPoint(k1, y))) >=
                    p.epsilon) {
                    pt.region_exit = true;
                    pt.skip_reason = "iterate left the tube around N_nu(0)";
                    break;
                }
                const cplx Fv = F(k1, y);
                pt.newton_iters = it + 1;
                pt.residual = std::abs(Fv);
                pt.residual_history.push_back(pt.residual);
                deriv = (F(k1 + hstep, y) - F(k1 - hstep, y)) / (2.0 * hstep);
                pt.deriv_deviation = std::abs(deriv - 1.0);
                if (pt.residual < tol) {
                    pt.solved = true;
                    break;
                }
                k1 -= Fv / deriv;
            }
        } catch (const RegionViolation&) {
            pt.region_exit = true;
            pt.skip_reason = "iterate left the tube around N_nu(0)";
        }
        if (!pt.solved && !pt.region_exit) {
            pt.diverged = true;
            pt.skip_reason = "Newton did not converge";
        }
        pt.eta = k1;
        pt.containment = std::abs(k1 + kI * sgn * y);
        trace.points.push_back(pt);
    }

    // rho auto-tuning: raise the cutoff until every solved point above it has
    // derivative deviation < 0.1.
    double rho_used = p.rho;
    for (int j = 0; j < 60; ++j) {
        bool ok = true;
        for (const SheetPoint& pt : trace.points)
            if (pt.solved && 8.0 * std::abs(pt.y) > rho_used &&
                pt.deriv_deviation >= 0.1)
                ok = false;
        if (ok) break;
        rho_used *= 2.0;
    }
    trace.rho_used = rho_used;
    return trace;
}

InjectivityReport injectivity_probe(const SheetTrace& sheet, double tol) {
    InjectivityReport rep;
    std::vector<const SheetPoint*> solved;
    for (const SheetPoint& pt : sheet.points)
        if (pt.solved) solved.push_back(&pt);
    rep.solved_count = solved.size();
    double mind = 1e300, maxdev = 0.0;
    for (std::size_t i = 0; i < solved.size(); ++i) {
        maxdev = std::max(maxdev, solved[i]->deriv_deviation);
        for (std::size_t j = i + 1; j < solved.size(); ++j) {
            const double d = std::abs(solved[i]->eta - solved[j]->eta) +
                             std::abs(solved[i]->y - solved[j]->y);
            mind = std::min(mind, d);
        }
    }
    rep.min_pair_distance = solved.size() < 2 ? 0.0 : mind;
    rep.max_deriv_deviation = maxdev;
    rep.pairwise_distinct = solved.size() < 2 || mind > tol;
    return rep;
}

// ---------------------------------------------------------------------------
// handles
// ---------------------------------------------------------------------------

namespace {

// Chart machinery for one double tube: the coordinates x1 (frame (nu, 0)) and
// x2 (frame (nu', d)) as functions of k, their numerical inverse, and the
// assembled f(x) = x1 x2 + r(x).
class HandleMap {
  public:
    HandleMap(const Lattice& lat, const FourierField& A, const FourierField& V,
              const DualPoint& d, int nu, const ModelParams& p)
        : lat_(lat), A_(A), q_(q_field(lat, A, V)), d_(d), nu_(nu), p_(p),
          window_(make_window(lat, {DualPoint{0, 0}, d}, p.window_radius)),
          base_(zero_d_intersection(lat, nu, d)) {
        const double h = 1e-5;
        const auto xp = [&](double dk1r, double dk2r, bool imag) {
            const cplx step1 = imag ? cplx{0.0, dk1r} : cplx{dk1r, 0.0};
            const cplx step2 = imag ? cplx{0.0, dk2r} : cplx{dk2r, 0.0};
            return eval_x(KPoint(base_.k1 + step1, base_.k2 + step2));
        };
        const auto a = xp(h, 0.0, false), b = xp(-h, 0.0, false);
        const auto c = xp(0.0, h, false), e = xp(0.0, -h, false);
        j11_ = (a.first - b.first) / (2.0 * h);
        j21_ = (a.second - b.second) / (2.0 * h);
        j12_ = (c.first - e.first) / (2.0 * h);
        j22_ = (c.second - e.second) / (2.0 * h);
        jdet_ = j11_ * j22_ - j12_ * j21_;
        if (std::abs(jdet_) < 1e-12)
            throw NumericallySingular("chart Jacobian is singular at the base point");
    }

    const KPoint& base() const { return base_; }
    const DualPoint& gap() const { return d_; }
    int frame_nu() const { return nu_; }

    // dk/dx at the base point.
    Eigen::Matrix2cd k_by_x() const {
        Eigen::Matrix2cd out;
        out << j22_ / jdet_, -j12_ / jdet_, -j21_ / jdet_, j11_ / jdet_;
        return out;
    }

    std::pair<cplx, cplx> x_from_ctx(const EvalContext& ctx) const {
        const DualPoint zero{0, 0};
        const WZFrame f1 = wz_frame(lat_, nu_, zero, ctx.k);
        const WZFrame f2 = wz_frame(lat_, nu_comp(nu_), d_, ctx.k);
        const cplx x1 = (f1.w * f1.z + d_entry(ctx, zero, zero)) / f1.z;
        const cplx x2 = (f2.w * f2.z + d_entry(ctx, d_, d_)) / f2.z;
        return {x1, x2};
    }

    std::pair<cplx, cplx> eval_x(const KPoint& k) const {
        const EvalContext ctx = make_context(lat_, window_, k, A_, q_, p_.epsilon);
        return x_from_ctx(ctx);
    }

    struct Probe {
        KPoint k;
        cplx x1, x2;
        cplx r;
        cplx z1, z2;
    };

    // Inverts x(k) = (x1, x2) with a fixed-Jacobian iteration; the last
    // context also yields the cross term r at the solution.
    Probe solve(cplx x1, cplx x2, double ktol = 1e-13) const {
        cplx k1, k2;
        if (warm_ && std::abs(x1 - wx1_) + std::abs(x2 - wx2_) < 0.2) {
            const cplx r1 = x1 - wx1_, r2 = x2 - wx2_;
            k1 = wk_.k1 + (j22_ * r1 - j12_ * r2) / jdet_;
            k2 = wk_.k2 + (j11_ * r2 - j21_ * r1) / jdet_;
        } else {
            const cplx th = theta(lat_, nu_, d_);
            const double sgn = nu_sign(nu_);
            k1 = kI * th + 0.5 * (x1 + x2);
            k2 = -sgn * th + sgn / (2.0 * kI) * (x1 - x2);
        }
        for (int it = 0; it < 200; ++it) {
            const KPoint k(k1, k2);
            const EvalContext ctx = make_context(lat_, window_, k, A_, q_, p_.epsilon);
            const auto [u1, u2] = x_from_ctx(ctx);
            const cplx r1 = u1 - x1, r2 = u2 - x2;
            if (std::max(std::abs(r1), std::abs(r2)) < ktol) {
                warm_ = true;
                wk_ = k;
                wx1_ = x1;
                wx2_ = x2;
                const HandleRTerm rt = handle_r_term(ctx, d_, nu_);
                return Probe{k, u1, u2, rt.r, rt.z1, rt.z2};
            }
            k1 -= (j22_ * r1 - j12_ * r2) / jdet_;
            k2 -= (j11_ * r2 - j21_ * r1) / jdet_;
        }
        throw NewtonDiverged("chart inversion stalled");
    }

    cplx f(cplx x1, cplx x2) const {
        const Probe pr = solve(x1, x2);
        return pr.x1 * pr.x2 + pr.r;
    }

  private:
    Lattice lat_;
    FourierField A_, q_;
    DualPoint d_;
    int nu_;
    ModelParams p_;
    IndexWindow window_;
    KPoint base_;
    cplx j11_, j12_, j21_, j22_, jdet_;
    mutable bool warm_ = false;
    mutable KPoint wk_;
    mutable cplx wx1_, wx2_;
};

// Measured first/second derivative bounds for r = f - x1 x2 near the origin.
void measure_r_bounds(const HandleMap& map, double delta, double& a_bound,
                      double& b_bound) {
    const double h = 0.2 * delta;
    auto rf = [&](cplx u1, cplx u2) { return map.f(u1, u2) - u1 * u2; };
    double amax = 0.0, bmax = 0.0;
    const cplx centers[][2] = {{cplx{0.0, 0.0}, cplx{0.0, 0.0}},
                               {cplx{0.45 * delta, 0.0}, cplx{0.0, 0.45 * delta}}};
    for (const auto& c : centers) {
        const cplx c1 = c[0], c2 = c[1];
        const cplx f0 = rf(c1, c2);
        const cplx fp1 = rf(c1 + h, c2), fm1 = rf(c1 - h, c2);
        const cplx fp2 = rf(c1, c2 + h), fm2 = rf(c1, c2 - h);
        const cplx g1 = (fp1 - fm1) / (2.0 * h), g2 = (fp2 - fm2) / (2.0 * h);
        const cplx h11 = (fp1 - 2.0 * f0 + fm1) / (h * h);
        const cplx h22 = (fp2 - 2.0 * f0 + fm2) / (h * h);
        const cplx h12 = (rf(c1 + h, c2 + h) - rf(c1 + h, c2 - h) -
                          rf(c1 - h, c2 + h) + rf(c1 - h, c2 - h)) /
                         (4.0 * h * h);
        amax = std::max({amax, std::abs(g1), std::abs(g2)});
        bmax = std::max({bmax, std::abs(h11) + std::abs(h12),
                         std::abs(h22) + std::abs(h12)});
    }
    a_bound = 3.0 * amax + 1e-13;
    b_bound = 3.0 * bmax + 1e-13;
}

KPoint translate(const KPoint& k, const Vec2& d) {
    return KPoint(k.k1 - d.x, k.k2 - d.y);
}

} // namespace

HandleRecord analyze_handle(const Lattice& lattice, const FourierField& A,
                            const FourierField& V, const DualPoint& d, int nu,
                            const ModelParams& params, double grad_tol) {
    const FourierField q = q_field(lattice, A, V);
    const ModelParams p = resolve_params(lattice, A, q, params);
    if (2.0 * lattice.length(d) <= p.rho)
        throw RegionViolation("2|d| <= rho at the requested gap d=" + dual_str(d));

    HandleRecord rec;
    rec.d = d;
    rec.nu = nu;
    rec.params = p;

    // Chart 1 sees the frames (nu, 0) and (nu', d); chart 2 is the same
    // construction translated by d, i.e. the frames (nu', 0) and (nu, -d).
    const HandleMap map1(lattice, A, V, d, nu, p);
    const HandleMap map2(lattice, A, V, DualPoint{} - d, nu_comp(nu), p);
    rec.base1 = map1.base();
    rec.base2 = map2.base();

    const double delta = 0.5 * p.epsilon;
    measure_r_bounds(map1, delta, rec.a_bound, rec.b_bound);

    auto f1 = [&](cplx u1, cplx u2) { return map1.f(u1, u2); };
    auto f2 = [&](cplx u1, cplx u2) { return map2.f(u1, u2); };
    rec.morse = morse_solve(f1, delta, rec.a_bound, rec.b_bound, 8, grad_tol);
    rec.morse2 = morse_solve(f2, delta, rec.a_bound, rec.b_bound, 8, grad_tol);
    rec.t_d = rec.morse.c;

    // Product-fit oracle: fit f = (x1 - s1)(x2 - s2) + t from axis samples,
    // Richardson-extrapolated in the step.
    auto fit_st = [&](double hf) {
        const cplx s2 = (map1.f(-hf, 0.0) - map1.f(hf, 0.0)) / (2.0 * hf);
        const cplx s1 = (map1.f(0.0, -hf) - map1.f(0.0, hf)) / (2.0 * hf);
        return std::pair<cplx, cplx>{s1, s2};
    };
    const cplx f00 = map1.f(0.0, 0.0);
    const auto coarse = fit_st(0.25 * delta);
    const auto fine = fit_st(0.125 * delta);
    const cplx s1 = (4.0 * fine.first - coarse.first) / 3.0;
    const cplx s2 = (4.0 * fine.second - coarse.second) / 3.0;
    rec.t_fit = f00 - s1 * s2;
    rec.oracle_gap = std::abs(rec.t_d - rec.t_fit);
    if (rec.oracle_gap > 1e-6 * std::abs(rec.t_d) + 1e-12) {
        std::ostringstream os;
        os << "normal constant " << rec.t_d << " vs product fit " << rec.t_fit
           << " differ by " << rec.oracle_gap;
        throw OracleMismatch(os.str());
    }

    rec.center1 = map1.solve(rec.morse.xi1, rec.morse.xi2).k;
    rec.center2 = map2.solve(rec.morse2.xi1, rec.morse2.xi2).k;

    // Jacobian factorization: dphi/dz at 0 = (dk/dx) DPhi(0) should equal
    // (1/2) [[1, 1], [-i(-1)^nu, i(-1)^nu]] up to O(1/|d|^2).
    const double sgn = nu_sign(nu);
    Eigen::Matrix2cd Pk;
    Pk << 0.5, 0.5, -0.5 * kI * sgn, 0.5 * kI * sgn;
    Eigen::Matrix2cd dphi0;
    dphi0 << poly_dz1(rec.morse.phi1).eval(0.0, 0.0),
        poly_dz2(rec.morse.phi1).eval(0.0, 0.0),
        poly_dz1(rec.morse.phi2).eval(0.0, 0.0),
        poly_dz2(rec.morse.phi2).eval(0.0, 0.0);
    const Eigen::Matrix2cd M = Pk.inverse() * (map1.k_by_x() * dphi0) -
                               Eigen::Matrix2cd::Identity();
    rec.jac_deviation = std::max(std::abs(M(0, 0)) + std::abs(M(0, 1)),
                                 std::abs(M(1, 0)) + std::abs(M(1, 1)));

    // Swap symmetry: phi_1(z1, z2) = phi_2(z2, z1) - d on samples.
    const Vec2 dc = lattice.cart(d);
    const double rs = 0.35 * std::min(rec.morse.map_radius, rec.morse2.map_radius);
    double sym = 0.0;
    for (int a = 0; a < 6; ++a) {
        const double pa = 2.0 * M_PI * a / 6.0 + 0.31;
        const cplx z1 = rs * cplx{std::cos(pa), std::sin(pa)};
        const cplx z2 = rs * cplx{std::cos(2.3 * pa + 0.7), std::sin(2.3 * pa + 0.7)};
        const KPoint pa1 =
            map1.solve(rec.morse.phi1.eval(z1, z2), rec.morse.phi2.eval(z1, z2)).k;
        const KPoint pa2 =
            map2.solve(rec.morse2.phi1.eval(z2, z1), rec.morse2.phi2.eval(z2, z1)).k;
        const KPoint pa2t = translate(pa2, dc);
        sym = std::max(sym, std::max(std::abs(pa1.k1 - pa2t.k1),
                                     std::abs(pa1.k2 - pa2t.k2)));
    }
    rec.symmetry_residual = sym;
    return rec;
}

KPoint handle_phi(const Lattice& lattice, const FourierField& A,
                  const FourierField& V, const HandleRecord& record, int which,
                  cplx z1, cplx z2) {
    if (which == 1) {
        const HandleMap map(lattice, A, V, record.d, record.nu, record.params);
        return map.solve(record.morse.phi1.eval(z1, z2),
                         record.morse.phi2.eval(z1, z2))
            .k;
    }
    const HandleMap map(lattice, A, V, DualPoint{} - record.d, nu_comp(record.nu),
                        record.params);
    return map.solve(record.morse2.phi1.eval(z1, z2),
                     record.morse2.phi2.eval(z1, z2))
        .k;
}

std::vector<KPoint> handle_curve_points(const Lattice& lattice,
                                        const FourierField& A,
                                        const FourierField& V,
                                        const HandleRecord& record, int samples) {
    const HandleMap map(lattice, A, V, record.d, record.nu, record.params);
    const MorseResult& m = record.morse;
    const cplx tau = -record.t_d; // the curve is z1 z2 + t_d = 0
    const double rb = 0.8 * m.map_radius;

    std::vector<std::pair<cplx, cplx>> zs;
    if (std::abs(tau) < 1e-15) {
        // degenerate handle: the two coordinate axes
        for (int j = 0; j < samples; ++j) {
            const double s = rb * (j / 2 + 1) / (samples / 2 + 1);
            const double ph = 0.8 * j;
            const cplx z = s * cplx{std::cos(ph), std::sin(ph)};
            if (j % 2 == 0)
                zs.emplace_back(z, cplx{0.0, 0.0});
            else
                zs.emplace_back(cplx{0.0, 0.0}, z);
        }
    } else {
        const double lo = std::max(std::sqrt(std::abs(tau)) * 0.5,
                                   std::abs(tau) / rb);
        const double hi = rb;
        for (int j = 0; j < samples; ++j) {
            const double frac = samples == 1 ? 0.5 : static_cast<double>(j) / (samples - 1);
            const double mag = lo * std::pow(hi / lo, frac);
            const double ph = 2.399963 * j;
            const cplx z1 = mag * cplx{std::cos(ph), std::sin(ph)};
            zs.emplace_back(z1, tau / z1);
        }
    }

    std::vector<KPoint> out;
    out.reserve(zs.size());
    for (const auto& [z1, z2] : zs) {
        cplx x1 = m.phi1.eval(z1, z2), x2 = m.phi2.eval(z1, z2);
        // polish onto the zero set along the coordinate with the larger
        // partner (df/dx1 ~ x2, df/dx2 ~ x1)
        for (int it = 0; it < 3; ++it) {
            const cplx fv = map.f(x1, x2);
            if (std::abs(fv) < 1e-13) break;
            if (std::abs(x2) >= std::abs(x1) && std::abs(x2) > 1e-6)
                x1 -= fv / x2;
            else if (std::abs(x1) > 1e-6)
                x2 -= fv / x1;
            else
                break;
        }
        out.push_back(map.solve(x1, x2).k);
    }
    return out;
}

} // namespace fermi
