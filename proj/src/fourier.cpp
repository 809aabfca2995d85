#include "fermi/fourier.hpp"

#include <algorithm> // std::max
#include <cmath>     // std::pow

#include "fermi/errors.hpp"

namespace fermi {

FourierField q_field(const Lattice& lattice, const FourierField& A, const FourierField& V) {
    FourierField q = FourierField::scalar_field();

    auto add = [&q](const DualPoint& b, cplx value) {
        if (value != cplx{0.0, 0.0}) q.coeffs[b].x += value;
    };

    // -b . A(b)
    for (const auto& [b, a] : A.coeffs) add(b, -dot(lattice.cart(b), a));
    // convolution sum_c A(c) . A(b - c)
    for (const auto& [c, ac] : A.coeffs)
        for (const auto& [cp, acp] : A.coeffs) add(c + cp, ac.dot(acp));
    // + V(b)
    for (const auto& [b, v] : V.coeffs) add(b, v.x);

    return q;
}

double weighted_l1(const Lattice& lattice, const FourierField& f, double beta,
                   bool exclude_zero) {
    double total = 0.0;
    for (const auto& [b, value] : f.coeffs) {
        if (exclude_zero && b.is_zero()) continue;
        const double mag = f.rank == 1 ? std::abs(value.x) : value.norm();
        // beta = 0 is the plain l1 norm (weight 1, not 1 + |b|^0 = 2)
        const double weight =
            beta == 0.0 ? 1.0 : 1.0 + std::pow(lattice.length(b), beta);
        total += weight * mag;
    }
    return total;
}

SmallnessReport check_smallness(const Lattice& lattice, const FourierField& A,
                                double epsilon) {
    SmallnessReport report;
    report.measured = weighted_l1(lattice, A, 2.0, /*exclude_zero=*/true);
    report.bound = 2.0 * epsilon / 63.0;
    report.margin = report.bound - report.measured;
    report.pass = report.measured < report.bound;
    return report;
}

double radius_R(const Lattice& lattice, const FourierField& A,
                const FourierField& q, double epsilon) {
    const double a_norm = weighted_l1(lattice, A, 0.0);
    const double q_norm = weighted_l1(lattice, q, 2.0);
    double r = 1.0;
    r = std::max(r, lattice.alpha);
    r = std::max(r, 2.0 * lattice.lambda);
    r = std::max(r, 140.0 * a_norm);
    r = std::max(r, (4.0 / epsilon) * q_norm);
    return r;
}

ModelParams resolve_params(const Lattice& lattice, const FourierField& A,
                           const FourierField& q, ModelParams overrides) {
    ModelParams p = overrides;
    if (p.epsilon <= 0.0) p.epsilon = lattice.lambda / 12.0;
    if (p.epsilon >= lattice.lambda / 6.0)
        throw ConfigError("epsilon must satisfy epsilon < lambda/6");
    if (p.radius_R <= 0.0) p.radius_R = radius_R(lattice, A, q, p.epsilon);
    if (p.rho <= 0.0) p.rho = p.radius_R;
    if (p.rho < p.radius_R)
        throw ConfigError("rho must satisfy rho >= R");
    if (p.window_radius <= 0.0) p.window_radius = p.radius_R + 4.0 * lattice.lambda;
    return p;
}

} // namespace fermi
