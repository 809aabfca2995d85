#ifndef FERMI_TYPES_HPP
#define FERMI_TYPES_HPP

#include <complex> // cplx scalar type
#include <cstdint> // int64_t lattice coordinates
#include <cmath>   // std::hypot

namespace fermi {

using cplx = std::complex<double>;

// Plain 2-vector of reals with the handful of operations the library needs.
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator-() const { return {-x, -y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
    // clockwise rotation by pi/2, written b^perp in the analysis; this is the
    // orientation for which |N_{b,nu}(k)| = |v + (-1)^nu (u+b)^perp| holds
    Vec2 perp() const { return {y, -x}; }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

// A dual-lattice point stored by its integer coordinates in the dual basis.
// The Cartesian position is recovered through the Lattice that owns the basis.
struct DualPoint {
    std::int64_t m = 0;
    std::int64_t n = 0;

    bool operator==(const DualPoint& o) const { return m == o.m && n == o.n; }
    bool operator!=(const DualPoint& o) const { return !(*this == o); }
    // lexicographic order on integer coordinates; used for deterministic
    // enumeration and as the map key order
    bool operator<(const DualPoint& o) const {
        return m < o.m || (m == o.m && n < o.n);
    }
    DualPoint operator+(const DualPoint& o) const { return {m + o.m, n + o.n}; }
    DualPoint operator-(const DualPoint& o) const { return {m - o.m, n - o.n}; }
    DualPoint operator-() const { return {-m, -n}; }
    bool is_zero() const { return m == 0 && n == 0; }
};

// Complex 2-vector (value type of a rank-2 Fourier field).
struct CVec2 {
    cplx x{0.0, 0.0};
    cplx y{0.0, 0.0};

    CVec2() = default;
    CVec2(cplx x_, cplx y_) : x(x_), y(y_) {}

    CVec2 operator+(const CVec2& o) const { return {x + o.x, y + o.y}; }
    // bilinear (not sesquilinear) pairing: the analysis always pairs Fourier
    // coefficients without conjugation
    cplx dot(const CVec2& o) const { return x * o.x + y * o.y; }
    cplx dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::sqrt(std::norm(x) + std::norm(y)); }
};

inline cplx dot(const Vec2& a, const CVec2& b) { return a.x * b.x + a.y * b.y; }

} // namespace fermi

#endif // FERMI_TYPES_HPP
