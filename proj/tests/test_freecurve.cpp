#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>
#include <random>

#include "fermi/errors.hpp"
#include "fermi/freecurve.hpp"

using namespace fermi;

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;
const cplx I{0.0, 1.0};

Lattice z2_dual_lattice() { return build_lattice({two_pi, 0.0}, {0.0, two_pi}); }
} // namespace

TEST_CASE("n_line: direct substitutions") {
    KPoint k0{cplx{0, 0}, cplx{0, 0}};
    CHECK(n_line(Vec2{1, 2}, 2, k0) == cplx{1, 2});

    KPoint k1{I, cplx{1, 0}};
    CHECK(std::abs(n_line(Vec2{0, 0}, 1, k1)) < 1e-15);

    KPoint k2{3.0 * I, cplx{5, 0}};
    CHECK(n_line(Vec2{0, 0}, 1, k2) == cplx{0, -2});
    // modulus identity |N| = |v + (-1)^nu (u+b)^perp|
    const Vec2 alt = k2.v + (-1.0) * (k2.u + Vec2{0, 0}).perp();
    CHECK(std::abs(n_line(Vec2{0, 0}, 1, k2)) == doctest::Approx(alt.norm()).epsilon(1e-14));
}

TEST_CASE("modulus identity at random points") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> dist(-5.0, 5.0);
    for (int trial = 0; trial < 200; ++trial) {
        KPoint k{cplx{dist(rng), dist(rng)}, cplx{dist(rng), dist(rng)}};
        Vec2 b{dist(rng), dist(rng)};
        for (int nu = 1; nu <= 2; ++nu) {
            const Vec2 alt = k.v + nu_sign(nu) * (k.u + b).perp();
            CHECK(std::abs(n_line(b, nu, k)) == doctest::Approx(alt.norm()).epsilon(1e-12));
        }
    }
}

TEST_CASE("n_full values") {
    KPoint k{3.0 * I, cplx{5, 0}};
    CHECK(std::abs(n_full(Vec2{0, 0}, k) - 16.0) < 1e-12);
    KPoint k0{cplx{0, 0}, cplx{0, 0}};
    CHECK(std::abs(n_full(Vec2{1, 0}, k0) - 1.0) < 1e-14);
    // any point on a line annihilates the product
    KPoint on{cplx{0, 2}, cplx{2, 0}};
    CHECK(std::abs(n_full(Vec2{0, 0}, on)) < 1e-14);
}

TEST_CASE("theta values and |2 i theta| = |b|") {
    CHECK(theta(1, Vec2{0, 1}) == cplx{-0.5, 0.0});
    CHECK(theta(2, Vec2{1, 0}) == cplx{0.0, 0.5});
    const Vec2 b{3, 4};
    CHECK(std::abs(2.0 * I * theta(1, b)) == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(std::abs(2.0 * I * theta(2, b)) == doctest::Approx(5.0).epsilon(1e-14));
}

TEST_CASE("in_tube: strict boundary") {
    const double eps = 0.08;
    // on the line itself
    KPoint on{cplx{0, 3}, cplx{3, 0}};
    CHECK(in_tube(Vec2{0, 0}, 1, on, eps));
    // far away
    KPoint far{3.0 * I, cplx{5, 0}};
    CHECK_FALSE(in_tube(Vec2{0, 0}, 1, far, eps));
    // exactly at distance eps: open tube excludes it
    KPoint boundary{cplx{eps, 3}, cplx{3, 0}};
    CHECK(std::abs(n_line(Vec2{0, 0}, 1, boundary)) == doctest::Approx(eps));
    CHECK_FALSE(in_tube(Vec2{0, 0}, 1, boundary, eps));
}

TEST_CASE("line_intersection lies on both lines") {
    KPoint p = line_intersection(Vec2{0, 0}, Vec2{0, 2});
    CHECK(std::abs(p.k1 - (-I)) < 1e-15);
    CHECK(std::abs(p.k2 - cplx{-1, 0}) < 1e-15);
    CHECK(std::abs(n_line(Vec2{0, 0}, 1, p)) < 1e-12);
    CHECK(std::abs(n_line(Vec2{0, 2}, 2, p)) < 1e-12);

    KPoint origin = line_intersection(Vec2{0, 0}, Vec2{0, 0});
    CHECK(std::abs(origin.k1) < 1e-15);
    CHECK(std::abs(origin.k2) < 1e-15);

    std::mt19937 rng(11);
    std::uniform_real_distribution<double> dist(-4.0, 4.0);
    for (int trial = 0; trial < 100; ++trial) {
        Vec2 b{dist(rng), dist(rng)}, c{dist(rng), dist(rng)};
        KPoint q = line_intersection(b, c);
        CHECK(std::abs(n_line(b, 1, q)) < 1e-12);
        CHECK(std::abs(n_line(c, 2, q)) < 1e-12);
    }
}

TEST_CASE("line_intersection translation covariance") {
    const Vec2 b{1, 3}, c{-2, 1}, d{1, 1};
    KPoint p = line_intersection(b, c);
    KPoint q = line_intersection(b - d, c - d);
    CHECK(std::abs((p.k1 + cplx{d.x, 0}) - q.k1) < 1e-14);
    CHECK(std::abs((p.k2 + cplx{d.y, 0}) - q.k2) < 1e-14);
}

TEST_CASE("zero_d_intersection agrees with line_intersection") {
    Lattice lat = z2_dual_lattice();
    const DualPoint d{0, 6};
    KPoint p1 = zero_d_intersection(lat, 1, d);
    KPoint p2 = line_intersection(lat, DualPoint{0, 0}, d); // N_1(0) cap N_2(d)
    CHECK(std::abs(p1.k1 - p2.k1) < 1e-14);
    CHECK(std::abs(p1.k2 - p2.k2) < 1e-14);
    CHECK(std::abs(n_line(lat, DualPoint{0, 0}, 1, p1)) < 1e-12);
    CHECK(std::abs(n_line(lat, d, 2, p1)) < 1e-12);

    KPoint p3 = zero_d_intersection(lat, 2, d);
    CHECK(std::abs(n_line(lat, DualPoint{0, 0}, 2, p3)) < 1e-12);
    CHECK(std::abs(n_line(lat, d, 1, p3)) < 1e-12);
}

TEST_CASE("translation covariance of n_line over the dual lattice") {
    Lattice lat = z2_dual_lattice();
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    const DualPoint d{2, -1};
    const Vec2 dc = lat.cart(d);
    for (int trial = 0; trial < 50; ++trial) {
        KPoint k{cplx{dist(rng), dist(rng)}, cplx{dist(rng), dist(rng)}};
        KPoint kd{k.k1 + dc.x, k.k2 + dc.y};
        const DualPoint b{1, 1};
        for (int nu = 1; nu <= 2; ++nu)
            CHECK(std::abs(n_line(lat, b, nu, kd) - n_line(lat, b + d, nu, k)) < 1e-12);
    }
}

TEST_CASE("tube dichotomy bd1/bd2") {
    Lattice lat = z2_dual_lattice();
    const double eps = lat.lambda / 12.0;
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> dist(-8.0, 8.0);
    for (int trial = 0; trial < 300; ++trial) {
        KPoint k{cplx{dist(rng), dist(rng)}, cplx{dist(rng), dist(rng)}};
        const double vmag = k.v.norm();
        DualPoint b{static_cast<std::int64_t>(trial % 5) - 2,
                    static_cast<std::int64_t>(trial % 7) - 3};
        const bool inside =
            in_tube(lat, b, 1, k, eps) || in_tube(lat, b, 2, k, eps);
        const double nb = std::abs(n_full(lat, b, k));
        if (!inside)
            CHECK(nb >= eps * vmag - 1e-12);
        else
            CHECK(nb <= eps * (2.0 * vmag + eps) + 1e-12);
    }
}

TEST_CASE("parallel-line distance |b-c|/sqrt(2)") {
    // distance from a point on N_nu(b) to the line N_nu(c) is
    // |N_{c,nu}(k)|/sqrt(2); on N_nu(b) that equals |b-c|/sqrt(2)
    const Vec2 b{1, 2}, c{4, -2};
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> dist(-5.0, 5.0);
    for (int nu = 1; nu <= 2; ++nu) {
        for (int trial = 0; trial < 20; ++trial) {
            cplx k2{dist(rng), dist(rng)};
            cplx k1 = -b.x - I * nu_sign(nu) * (k2 + b.y);
            KPoint k{k1, k2};
            REQUIRE(std::abs(n_line(b, nu, k)) < 1e-12);
            const double measured = std::abs(n_line(c, nu, k)) / std::sqrt(2.0);
            CHECK(measured == doctest::Approx((b - c).norm() / std::sqrt(2.0)).epsilon(1e-10));
        }
    }
}

TEST_CASE("active_tubes classification") {
    Lattice lat = z2_dual_lattice();
    const double eps = lat.lambda / 12.0;
    const double scan = 30.0;

    // on N_1(0) only, far from intersections
    KPoint k1{cplx{0.0, 7.31}, cplx{7.31, 0.0}};
    auto tubes1 = active_tubes(k1, lat, eps, scan);
    REQUIRE(tubes1.size() == 1);
    CHECK(tubes1[0].b.is_zero());
    CHECK(tubes1[0].nu == 1);

    // at a constructed 0-d intersection
    const DualPoint d{0, 6};
    KPoint k2 = zero_d_intersection(lat, 1, d);
    auto tubes2 = active_tubes(k2, lat, eps, scan);
    REQUIRE(tubes2.size() == 2);
    CHECK(tubes2[0].b.is_zero());
    CHECK(tubes2[0].nu == 1);
    CHECK(tubes2[1].b == d);
    CHECK(tubes2[1].nu == 2);

    // far from every tube
    KPoint k3{cplx{0.31, 7.0}, cplx{6.5, 0.22}};
    CHECK(active_tubes(k3, lat, eps, scan).empty());

    // oversized epsilon produces a third center
    KPoint k4 = zero_d_intersection(lat, 1, DualPoint{0, 2});
    CHECK_THROWS_AS(active_tubes(k4, lat, 1.1, scan), TripleTube);
}

TEST_CASE("exceptional_b") {
    Lattice lat = z2_dual_lattice();
    const double eps = lat.lambda / 12.0;

    // on the axis of T_1(0), generic height: no exceptional index
    KPoint k1{cplx{0.0, 7.31}, cplx{7.31, 0.0}};
    CHECK_FALSE(exceptional_b(k1, lat, eps).has_value());

    // near a 0-d intersection the exceptional index is d
    const DualPoint d{0, 6};
    KPoint k2 = zero_d_intersection(lat, 1, d);
    KPoint k2b{k2.k1 + cplx{0.01, 0.0}, k2.k2 + cplx{0.01, 0.0}};
    auto found = exceptional_b(k2b, lat, eps);
    REQUIRE(found.has_value());
    CHECK(*found == d);

    // every non-exceptional b in the scan obeys the part-(a) floor
    const double vmag = k2b.v.norm();
    for (const DualPoint& b : enumerate_dual(lat, vmag + lat.alpha + lat.lambda)) {
        if (b.is_zero() || b == d) continue;
        const Vec2 bc = lat.cart(b);
        CHECK(std::abs(n_full(bc, k2b)) >=
              0.5 * lat.lambda * (vmag + (k2b.u + bc).norm()));
    }

    // region preconditions enforced
    KPoint low{cplx{0.0, 0.3}, cplx{0.3, 0.0}};
    CHECK_THROWS_AS(exceptional_b(low, lat, eps), RegionViolation);
}

TEST_CASE("at most one b with |v + (u+b)^perp| < lambda") {
    Lattice lat = z2_dual_lattice();
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> dist(-6.0, 6.0);
    for (int trial = 0; trial < 100; ++trial) {
        KPoint k{cplx{dist(rng), dist(rng)}, cplx{dist(rng), dist(rng)}};
        for (int nu = 1; nu <= 2; ++nu) {
            int hits = 0;
            for (const DualPoint& b : enumerate_dual(lat, 20.0)) {
                const Vec2 w = k.v + nu_sign(nu) * (k.u + lat.cart(b)).perp();
                if (w.norm() < lat.lambda) ++hits;
            }
            CHECK(hits <= 1);
        }
    }
}

TEST_CASE("order_relations on the tube axis and at an intersection") {
    Lattice lat = z2_dual_lattice();
    const double t = 100.0;
    KPoint k{cplx{0.0, t}, cplx{t, 0.0}};
    OrderReport rep = order_relations(k, lat);
    CHECK(rep.pass);
    CHECK(rep.nu == 1);
    CHECK(rep.z0_mag == doctest::Approx(2.0 * t).epsilon(1e-12));
    CHECK(rep.k2_mag == doctest::Approx(t).epsilon(1e-12));

    const DualPoint d{0, 6};
    KPoint ki = zero_d_intersection(lat, 1, d);
    OrderReport rep2 = order_relations(ki, lat, d);
    CHECK(rep2.pass);
    CHECK(rep2.d_mag == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(0.5 * rep2.zd_mag <= rep2.d_mag);
    CHECK(rep2.d_mag <= 2.0 * rep2.zd_mag);

    // a point violating the brackets throws
    KPoint bad{cplx{1000.0, 0.001}, cplx{0.5, 0.0}};
    CHECK_THROWS_AS(order_relations(bad, lat), RelationViolated);
}
