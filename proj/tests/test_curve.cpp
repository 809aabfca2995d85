#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "fermi/curve.hpp"
#include "fermi/errors.hpp"

using namespace fermi;

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;
const cplx I{0.0, 1.0};

Lattice z2_dual_lattice() { return build_lattice({two_pi, 0.0}, {0.0, two_pi}); }
const double kEps = 0.5 / 12.0; // lambda / 12 for the square lattice

FourierField no_A() { return FourierField::vector_field(); }
FourierField no_V() { return FourierField::scalar_field(); }

// electric potential giving a localization radius ~ 7.5
FourierField base_V() {
    FourierField V = FourierField::scalar_field();
    V.set({1, 0}, cplx{0.013, 0.004});
    V.set({-1, 0}, cplx{0.013, -0.004});
    V.set({0, 1}, cplx{0.0065, 0.0});
    V.set({0, -1}, cplx{0.0065, 0.0});
    return V;
}

// double-tube potential with modes at +-(0, n) plus a small transverse pair
FourierField gap_V(std::int64_t n, double mu) {
    FourierField V = FourierField::scalar_field();
    V.set({0, n}, cplx{mu, 0.3 * mu});
    V.set({0, -n}, cplx{mu, -0.3 * mu});
    V.set({1, 0}, cplx{0.012, 0.0});
    V.set({-1, 0}, cplx{0.012, 0.0});
    return V;
}

// pure gap family scaled so the localization radius stays below 2|d|
FourierField gap_family_V(std::int64_t n) {
    const double mu = 2e-3 * 4.0 / static_cast<double>(n);
    FourierField V = FourierField::scalar_field();
    V.set({0, n}, cplx{mu, 0.3 * mu});
    V.set({0, -n}, cplx{mu, -0.3 * mu});
    return V;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double dn = static_cast<double>(n);
    return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

} // namespace

TEST_CASE("bivariate polynomials: evaluation, product, composition") {
    Poly2 p(3);
    p.coef(0, 0) = 1.0;
    p.coef(1, 0) = 2.0;
    p.coef(1, 1) = cplx{0.0, 3.0};
    p.coef(0, 2) = -1.0;
    const cplx z1{0.3, 0.1}, z2{-0.2, 0.4};
    const cplx direct = 1.0 + 2.0 * z1 + cplx{0.0, 3.0} * z1 * z2 - z2 * z2;
    CHECK(std::abs(p.eval(z1, z2) - direct) < 1e-14);
    CHECK(std::abs(p.d1(z1, z2) - (2.0 + cplx{0.0, 3.0} * z2)) < 1e-14);
    CHECK(std::abs(p.d2(z1, z2) - (cplx{0.0, 3.0} * z1 - 2.0 * z2)) < 1e-14);

    const Poly2 sq = poly_mul(p, p, 6);
    CHECK(std::abs(sq.eval(z1, z2) - direct * direct) < 1e-13);

    // compose with shifted identities: p(z1 + c1, z2 + c2)
    Poly2 u1(3), u2(3);
    u1.coef(0, 0) = cplx{0.05, -0.02};
    u1.coef(1, 0) = 1.0;
    u2.coef(0, 0) = cplx{-0.03, 0.01};
    u2.coef(0, 1) = 1.0;
    const Poly2 shifted = poly_compose(p, u1, u2, 3);
    CHECK(std::abs(shifted.eval(z1, z2) -
                   p.eval(z1 + u1.coef(0, 0), z2 + u2.coef(0, 0))) < 1e-14);
}

TEST_CASE("normal form: analytic saddles recovered exactly") {
    auto plain = [](cplx a, cplx b) { return a * b; };
    const MorseResult m0 = morse_solve(plain, 1.0, 1e-8, 1e-8);
    CHECK(std::abs(m0.xi1) < 1e-12);
    CHECK(std::abs(m0.xi2) < 1e-12);
    CHECK(std::abs(m0.c) < 1e-13);
    CHECK(m0.comp_residual < 1e-11);
    CHECK(m0.dphi_deviation < 1e-11);

    // f = x1 x2 + 0.01 x1 + 0.01 x2 = (x1 + 0.01)(x2 + 0.01) - 1e-4
    auto linear = [](cplx a, cplx b) { return a * b + 0.01 * a + 0.01 * b; };
    const MorseResult m1 = morse_solve(linear, 1.0, 0.011, 1e-8);
    CHECK(std::abs(m1.xi1 + 0.01) < 1e-12);
    CHECK(std::abs(m1.xi2 + 0.01) < 1e-12);
    CHECK(std::abs(m1.c + 1e-4) < 1e-13);
    // critical value vs value at the origin: within the square of the bound
    CHECK(std::abs(m1.c - linear(0.0, 0.0)) <= 0.011 * 0.011);
    CHECK(m1.comp_residual < 1e-11);

    const cplx c0{0.003, -0.001};
    auto shifted = [&](cplx a, cplx b) { return a * b + c0; };
    const MorseResult m2 = morse_solve(shifted, 1.0, 1e-8, 1e-8);
    CHECK(std::abs(m2.xi1) < 1e-12);
    CHECK(std::abs(m2.c - c0) < 1e-13);

    CHECK_THROWS_AS(morse_solve(plain, 1.0, 1.5, 1e-8), HypothesisFail);
    CHECK_THROWS_AS(morse_solve(plain, 1.0, 1e-8, 0.02), HypothesisFail);
}

TEST_CASE("normal form: random perturbations of the saddle") {
    std::mt19937 rng(20260823);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const double delta = 0.5;

    for (int trial = 0; trial < 15; ++trial) {
        // r = random polynomial of total degree <= 4 with small coefficients
        Poly2 r(4);
        double a_bound = 0.0, b_bound = 0.0;
        for (int i = 0; i <= 4; ++i)
            for (int j = 0; i + j <= 4; ++j) {
                const cplx cv = 5e-4 * cplx{unif(rng), unif(rng)};
                r.coef(i, j) = cv;
                const double mag = std::abs(cv);
                const double di = i, dj = j;
                // triangle bounds for |dr/dx| and the Hessian row sums on the bidisc
                if (i + j >= 1)
                    a_bound += mag * std::max(di, dj) * std::pow(delta, i + j - 1);
                if (i + j >= 2)
                    b_bound += mag * (std::max(di * (di - 1.0), dj * (dj - 1.0)) + di * dj) *
                               std::pow(delta, i + j - 2);
            }
        a_bound += 1e-12;
        b_bound += 1e-12;
        REQUIRE(a_bound < delta);
        REQUIRE(b_bound < 1.0 / 55.0);

        auto f = [&](cplx a, cplx b) { return a * b + r.eval(a, b); };
        const MorseResult m = morse_solve(f, delta, a_bound, b_bound);
        CHECK(m.s <= a_bound);                                 // |xi_i| <= a
        CHECK(std::abs(m.c - f(0.0, 0.0)) <= a_bound * a_bound);
        CHECK(m.comp_residual < 1e-9);
        CHECK(m.dphi_deviation <= 18.0 * b_bound);
        CHECK(m.grad_residual < 1e-10);
    }
}

TEST_CASE("normal form: one critical point from every seed") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const double delta = 0.5;
    auto f = [](cplx a, cplx b) {
        return a * b + cplx{0.004, 0.002} * a + cplx{-0.003, 0.001} * b +
               0.002 * a * a * b + cplx{0.0, 0.001} * b * b;
    };
    const double a_bound = 0.012, b_bound = 0.01;
    const MorseResult ref = morse_solve(f, delta, a_bound, b_bound);
    for (int s = 0; s < 20; ++s) {
        const cplx s1 = 0.9 * delta * cplx{unif(rng), unif(rng)} / std::sqrt(2.0);
        const cplx s2 = 0.9 * delta * cplx{unif(rng), unif(rng)} / std::sqrt(2.0);
        const MorseResult m =
            morse_solve(f, delta, a_bound, b_bound, 8, 1e-11, 1e-9, s1, s2);
        CHECK(std::abs(m.xi1 - ref.xi1) < 1e-9);
        CHECK(std::abs(m.xi2 - ref.xi2) < 1e-9);
    }
}

TEST_CASE("sheet tracing: unperturbed operator solves in one step") {
    const Lattice lat = z2_dual_lattice();
    ModelParams params;
    params.epsilon = kEps;

    for (int nu : {1, 2}) {
        const std::vector<cplx> ys{cplx{1.3, 0.0}, cplx{2.7, 0.0}, cplx{-3.2, 0.0},
                                   cplx{2.2, 0.6}};
        const SheetTrace tr = trace_sheet(lat, no_A(), no_V(), ys, nu, params);
        CHECK(std::abs(tr.beta_constant) < 1e-15);
        for (const SheetPoint& pt : tr.points) {
            REQUIRE(pt.solved);
            CHECK(pt.newton_iters == 1);
            CHECK(pt.residual < 1e-13);
            // eta = -i(-1)^nu y
            CHECK(std::abs(pt.eta + I * nu_sign(nu) * pt.y) < 1e-12);
            CHECK(pt.containment < 1e-12);
            CHECK(pt.deriv_deviation < 1e-9);
        }
        CHECK(tr.rho_used == tr.points.front().nu * 0.0 + tr.rho_used); // stable
        const InjectivityReport rep = injectivity_probe(tr);
        CHECK(rep.pairwise_distinct);
        CHECK(rep.solved_count == ys.size());
        CHECK(rep.max_deriv_deviation < 1e-9);
    }
}

TEST_CASE("sheet tracing: inadmissible heights are skipped with the reason") {
    const Lattice lat = z2_dual_lattice();
    ModelParams params;
    params.epsilon = kEps;
    const std::vector<cplx> ys{cplx{0.05, 0.0}, cplx{2.0, 0.0}, cplx{1.3, 0.0}};
    const SheetTrace tr = trace_sheet(lat, no_A(), no_V(), ys, 1, params);
    REQUIRE(tr.points.size() == 3);
    CHECK(!tr.points[0].admissible);
    CHECK(tr.points[0].skip_reason.find("rho") != std::string::npos);
    CHECK(!tr.points[1].admissible); // y = 2 sits on the line of b = (0, -4)
    CHECK(tr.points[1].skip_reason.find("theta_nu") != std::string::npos);
    CHECK(tr.points[2].solved);
}

TEST_CASE("sheet tracing: perturbed sheet with kernel oracle and bounds") {
    const Lattice lat = z2_dual_lattice();
    const FourierField A = no_A();
    const FourierField V = base_V();
    const FourierField q = q_field(lat, A, V);
    ModelParams params;
    params.epsilon = kEps;
    params.window_radius = 7.0;
    const int nu = 1;

    const std::vector<cplx> ys{cplx{2.3, 0.0}, cplx{3.7, 0.0}, cplx{6.3, 0.0},
                               cplx{11.3, 0.0}, cplx{21.3, 0.0}};
    const SheetTrace tr = trace_sheet(lat, A, V, ys, nu, params);
    CHECK(std::abs(tr.beta_constant) < 1e-15); // no magnetic part

    const double lambda = lat.lambda;
    const double contain_bound = tr.epsilon * tr.epsilon / (40.0 * lambda);
    const double r_floor =
        tr.epsilon * tr.epsilon * tr.epsilon / (50.0 * lambda * lambda);

    std::vector<double> heights, rmags;
    double c_fit = 0.0;
    for (const SheetPoint& pt : tr.points) {
        REQUIRE(pt.solved);
        CHECK(pt.residual < 1e-12);

        // containment in the tube chart, once above the tuned cutoff
        if (8.0 * std::abs(pt.y) > tr.rho_used) CHECK(pt.containment < contain_bound);

        // quadratic tail of the Newton residuals
        for (std::size_t i = 0; i + 1 < pt.residual_history.size(); ++i) {
            const double cur = pt.residual_history[i];
            const double nxt = pt.residual_history[i + 1];
            if (cur < 1e-2 * tr.epsilon && nxt > 1e-14)
                CHECK(nxt < 50.0 * cur * cur + 1e-13);
        }

        // kernel oracle on the solved point
        const IndexWindow win = make_window(lat, {DualPoint{0, 0}}, 7.0);
        const TruncatedOperator hk = hk_matrix(lat, win, KPoint(pt.eta, pt.y), A, V);
        CHECK(sigma_min(hk) < 1e-7 * std::max(1.0, schur_norm(hk)));

        const double rmag = std::abs(pt.eta + tr.beta_constant + I * nu_sign(nu) * pt.y);
        heights.push_back(std::abs(pt.y));
        rmags.push_back(std::max(rmag, 1e-18));
        c_fit = std::max(c_fit, (rmag - r_floor) * tr.rho_used);
    }
    // the residual term r(y) decays along the ray and its fitted constant is small
    CHECK(fit_slope(heights, rmags) < -1.5);
    CHECK(c_fit < 1.0);
    for (std::size_t i = 0; i < heights.size(); ++i)
        CHECK(rmags[i] <= r_floor + (c_fit + 1e-12) / tr.rho_used);

    const InjectivityReport rep = injectivity_probe(tr);
    CHECK(rep.pairwise_distinct);
    CHECK(rep.max_deriv_deviation < 0.01);
}

TEST_CASE("handles: unperturbed operator degenerates to the free intersection") {
    const Lattice lat = z2_dual_lattice();
    ModelParams params;
    params.epsilon = kEps;
    const DualPoint d{0, 4};

    const HandleRecord rec = analyze_handle(lat, no_A(), no_V(), d, 1, params);
    CHECK(std::abs(rec.t_d) < 1e-13);
    CHECK(rec.oracle_gap < 1e-13);
    CHECK(rec.jac_deviation < 1e-10);
    CHECK(rec.symmetry_residual < 1e-10);
    CHECK(std::abs(rec.center1.k1 - rec.base1.k1) < 1e-11);
    CHECK(std::abs(rec.center1.k2 - rec.base1.k2) < 1e-11);
    CHECK(std::abs(rec.center2.k1 - rec.base2.k1) < 1e-11);
    // the two chart bases differ by the gap vector
    const Vec2 dc = lat.cart(d);
    CHECK(std::abs(rec.base2.k1 - (rec.base1.k1 + dc.x)) < 1e-13);
    CHECK(std::abs(rec.base2.k2 - (rec.base1.k2 + dc.y)) < 1e-13);

    // degenerate curve: both axes stay on the curve and inside both tubes
    const std::vector<KPoint> pts = handle_curve_points(lat, no_A(), no_V(), rec, 12);
    REQUIRE(pts.size() == 12);
    const IndexWindow win = make_window(lat, {DualPoint{0, 0}, d}, 5.0);
    for (const KPoint& k : pts) {
        CHECK(in_tube(lat, DualPoint{0, 0}, 1, k, kEps));
        CHECK(in_tube(lat, d, 2, k, kEps));
        const TruncatedOperator hk = hk_matrix(lat, win, k, no_A(), no_V());
        CHECK(sigma_min(hk) < 1e-6 * std::max(1.0, schur_norm(hk)));
    }

    // below the cutoff the gap is rejected
    ModelParams tight = params;
    tight.rho = 4.0;
    CHECK_THROWS_AS(analyze_handle(lat, no_A(), no_V(), DualPoint{0, 1}, 1, tight),
                    RegionViolation);
}

TEST_CASE("handles: perturbed double tube carries the product normal form") {
    const Lattice lat = z2_dual_lattice();
    const FourierField A = no_A();
    const FourierField V = gap_V(6, 5e-4);
    ModelParams params;
    params.epsilon = kEps;
    params.window_radius = 5.0;
    const DualPoint d{0, 6};
    const int nu = 1;

    const HandleRecord rec = analyze_handle(lat, A, V, d, nu, params);
    CHECK(rec.oracle_gap <= 1e-6 * std::abs(rec.t_d) + 1e-12);
    CHECK(rec.symmetry_residual < 1e-8);
    CHECK(rec.jac_deviation < 0.1);
    CHECK(rec.morse.comp_residual < 1e-9);
    CHECK(rec.morse.dphi_deviation <= 18.0 * rec.b_bound);

    // leading size of the normal constant: the two direct gap couplings over
    // the product of the long frames at the center
    const cplx z1 = n_line(lat, DualPoint{0, 0}, nu_comp(nu), rec.center1);
    const cplx z2 = n_line(lat, d, nu, rec.center1);
    const FourierField q = q_field(lat, A, V);
    const cplx lead = -q.scalar(DualPoint{} - d) * q.scalar(d) / (z1 * z2);
    CHECK(std::abs(rec.t_d) > 1e-10);
    CHECK(std::abs(rec.t_d - lead) < 0.02 * std::abs(rec.t_d));

    // centers stay near the free intersection
    CHECK(std::abs(rec.center1.k1 - rec.base1.k1) +
              std::abs(rec.center1.k2 - rec.base1.k2) <
          kEps / 900.0);

    // the two charts agree after the translation
    const cplx zs1{0.004, 0.001}, zs2{-0.002, 0.003};
    const KPoint p1 = handle_phi(lat, A, V, rec, 1, zs1, zs2);
    const KPoint p2 = handle_phi(lat, A, V, rec, 2, zs2, zs1);
    const Vec2 dc = lat.cart(d);
    CHECK(std::abs(p1.k1 - (p2.k1 - dc.x)) < 1e-8);
    CHECK(std::abs(p1.k2 - (p2.k2 - dc.y)) < 1e-8);

    // sampled curve points: on the curve and inside both tubes
    const std::vector<KPoint> pts = handle_curve_points(lat, A, V, rec, 10);
    const IndexWindow win = make_window(lat, {DualPoint{0, 0}, d}, 5.0);
    for (const KPoint& k : pts) {
        CHECK(in_tube(lat, DualPoint{0, 0}, nu, k, kEps));
        CHECK(in_tube(lat, d, nu_comp(nu), k, kEps));
        const TruncatedOperator hk = hk_matrix(lat, win, k, A, V);
        CHECK(sigma_min(hk) < 1e-6 * std::max(1.0, schur_norm(hk)));
    }
}

TEST_CASE("handles: the normal constant decays like the fourth power of the gap") {
    const Lattice lat = z2_dual_lattice();
    ModelParams params;
    params.epsilon = kEps;
    params.window_radius = 5.0;

    std::vector<double> gaps, tmags, scaled;
    for (std::int64_t n : {4, 8, 16}) {
        const FourierField V = gap_family_V(n);
        const HandleRecord rec =
            analyze_handle(lat, no_A(), V, DualPoint{0, n}, 1, params);
        CHECK(rec.symmetry_residual < 1e-8);
        gaps.push_back(static_cast<double>(n));
        tmags.push_back(std::abs(rec.t_d));
        scaled.push_back(std::abs(rec.t_d) * std::pow(static_cast<double>(n), 4));
    }
    const double slope = fit_slope(gaps, tmags);
    CHECK(slope < -3.4);
    CHECK(slope > -4.6);
    const double lo = *std::min_element(scaled.begin(), scaled.end());
    const double hi = *std::max_element(scaled.begin(), scaled.end());
    CHECK(hi / lo < 4.0);
}
