#ifndef FERMI_FOURIER_HPP
#define FERMI_FOURIER_HPP

#include <map>

#include "fermi/lattice.hpp"
#include "fermi/types.hpp"

namespace fermi {

// A finitely supported association of dual-lattice points to complex
// scalars (rank 1: potentials V, q) or complex 2-vectors (rank 2: the
// magnetic potential A). Absent points read as zero. Duplicate support
// points cannot occur by construction (map-backed).
struct FourierField {
    int rank = 1; // 1 = scalar, 2 = vector
    std::map<DualPoint, CVec2> coeffs; // rank-1 fields use only .x

    bool empty() const { return coeffs.empty(); }

    cplx scalar(const DualPoint& b) const {
        auto it = coeffs.find(b);
        return it == coeffs.end() ? cplx{0.0, 0.0} : it->second.x;
    }
    CVec2 vector(const DualPoint& b) const {
        auto it = coeffs.find(b);
        return it == coeffs.end() ? CVec2{} : it->second;
    }
    // Euclidean magnitude of the coefficient at b (both ranks).
    double magnitude(const DualPoint& b) const {
        auto it = coeffs.find(b);
        if (it == coeffs.end()) return 0.0;
        return rank == 1 ? std::abs(it->second.x) : it->second.norm();
    }

    void set(const DualPoint& b, cplx value) { coeffs[b] = CVec2{value, {}}; }
    void set(const DualPoint& b, const CVec2& value) { coeffs[b] = value; }

    static FourierField scalar_field() { return FourierField{1, {}}; }
    static FourierField vector_field() { return FourierField{2, {}}; }
};

// Model-wide analysis parameters.
//   epsilon       tube radius, must satisfy 0 < epsilon < lambda/6
//   rho           low-|Im k| cutoff, must satisfy rho >= radius_R
//   radius_R      the localization constant R (see radius_R below)
//   window_radius radius of the per-center operator window balls
struct ModelParams {
    double epsilon = 0.0;
    double rho = 0.0;
    double radius_R = 0.0;
    double window_radius = 0.0;
};

// The effective scalar potential derived from (A, V):
//   q(b) = -b . A(b) + sum_c A(c) . A(b - c) + V(b).
// Support is contained in (supp A + supp A) u supp A u supp V.
FourierField q_field(const Lattice& lattice, const FourierField& A, const FourierField& V);

// Weighted l1 norm: sum_b (1 + |b|^beta) |f(b)|, optionally excluding b = 0.
double weighted_l1(const Lattice& lattice, const FourierField& f, double beta,
                   bool exclude_zero = false);

// Smallness check for the magnetic potential:
// pass iff ||(1 + b^2) A(b)||_{l1, b != 0} < 2 epsilon / 63.
struct SmallnessReport {
    bool pass = false;
    double measured = 0.0; // the weighted norm
    double bound = 0.0;    // 2 epsilon / 63
    double margin = 0.0;   // bound - measured
};
SmallnessReport check_smallness(const Lattice& lattice, const FourierField& A,
                                double epsilon);

// The localization radius
//   R = max{ 1, alpha, 2 lambda, 140 ||A||_l1, (4/epsilon) ||(1+b^2) q||_l1 }.
double radius_R(const Lattice& lattice, const FourierField& A,
                const FourierField& q, double epsilon);

// Fill in defaulted ModelParams fields:
// epsilon -> lambda/12, radius_R -> from the formula, rho -> radius_R,
// window_radius -> radius_R + 4 lambda (per-center operator ball).
ModelParams resolve_params(const Lattice& lattice, const FourierField& A,
                           const FourierField& q, ModelParams overrides);

} // namespace fermi

#endif // FERMI_FOURIER_HPP
