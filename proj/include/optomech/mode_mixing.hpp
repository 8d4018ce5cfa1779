#pragma once

// Geometric mode-mixing coefficients for a 1-D cavity with one movable
// perfect mirror.  The instantaneous mode functions phi_j(x; q) =
// sqrt(2/q) sin(j pi x / q) depend on the mirror position q; moving the
// mirror mixes the modes through the overlaps
//
//     g_jk = q * Int_0^q dx  phi_k(x; q) * d phi_j(x; q) / dq ,
//
// whose closed form is (-1)^{k+j} 2kj/(k^2 - j^2) for k != j and 0 for
// k == j.  The first index j is the differentiated one; g is antisymmetric.
// Higher-order mixing matrices follow by iterating g, and a completeness
// sum rule ties sums over g to a quadrature over mode derivatives.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace optomech {

// Natural units used throughout the library.
inline constexpr double hbar = 1.0;

// ---------------------------------------------------------------------------
// Mode grid: equilibrium cavity length and retained field modes.
// ---------------------------------------------------------------------------

struct ModeGrid {
    double d = 0.0;  // equilibrium cavity length
    int K = 0;       // number of retained field modes (1-based labels 1..K)

    ModeGrid(double cavity_length, int mode_count)
        : d(cavity_length), K(mode_count) {
        if (!(d > 0.0)) throw std::domain_error("ModeGrid: cavity length must be positive");
        if (K < 1) throw std::domain_error("ModeGrid: need at least one field mode");
    }

    // Equilibrium eigenfrequency of mode k (c = 1): omega_k = k pi / d.
    double omega(int k) const {
        if (k < 1 || k > K) throw std::domain_error("ModeGrid: mode index out of range");
        return static_cast<double>(k) * pi() / d;
    }

    static constexpr double pi() { return 3.14159265358979323846; }
};

// ---------------------------------------------------------------------------
// Closed-form overlap coefficient and an exact-rational variant.
// ---------------------------------------------------------------------------

// g_jk with the differentiated index first.  Zero on the diagonal.
inline double overlap_coefficient(int j, int k) {
    if (j < 1 || k < 1) throw std::domain_error("overlap_coefficient: indices start at 1");
    if (j == k) return 0.0;
    const double sign = ((j + k) % 2 == 0) ? 1.0 : -1.0;
    return sign * 2.0 * static_cast<double>(k) * static_cast<double>(j) /
           (static_cast<double>(k) * k - static_cast<double>(j) * j);
}

// Minimal exact rational, sufficient for identity tests on small indices.
struct Rational {
    long long num = 0;
    long long den = 1;

    Rational() = default;
    Rational(long long n, long long d = 1) : num(n), den(d) { normalize(); }

    void normalize() {
        if (den == 0) throw std::domain_error("Rational: zero denominator");
        if (den < 0) { num = -num; den = -den; }
        const long long g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) { num /= g; den /= g; }
    }
    Rational operator+(const Rational& o) const { return {num * o.den + o.num * den, den * o.den}; }
    Rational operator-(const Rational& o) const { return {num * o.den - o.num * den, den * o.den}; }
    Rational operator*(const Rational& o) const { return {num * o.num, den * o.den}; }
    bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

inline Rational overlap_coefficient_exact(int j, int k) {
    if (j < 1 || k < 1) throw std::domain_error("overlap_coefficient_exact: indices start at 1");
    if (j == k) return Rational(0);
    const long long sign = ((j + k) % 2 == 0) ? 1 : -1;
    return Rational(sign * 2LL * k * j, static_cast<long long>(k) * k - static_cast<long long>(j) * j);
}

// ---------------------------------------------------------------------------
// Composite Simpson quadrature with a panel-doubling convergence check.
// ---------------------------------------------------------------------------

inline double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
    if (panels < 2 || panels % 2 != 0)
        throw std::domain_error("simpson: panel count must be even and >= 2");
    const double h = (b - a) / panels;
    double odd = 0.0, even = 0.0;
    for (int i = 1; i < panels; i += 2) odd += f(a + i * h);
    for (int i = 2; i < panels; i += 2) even += f(a + i * h);
    return h / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even);
}

// Integrate with `panels`, refine once at 2*panels; a change above `tol`
// signals non-convergence.  Returns the refined estimate.
inline double simpson_checked(const std::function<double(double)>& f, double a, double b,
                              int panels, double tol) {
    const double coarse = simpson(f, a, b, panels);
    const double fine = simpson(f, a, b, 2 * panels);
    if (std::abs(fine - coarse) > tol)
        throw std::runtime_error("simpson_checked: estimate changed by " +
                                 std::to_string(std::abs(fine - coarse)) +
                                 " on panel doubling (tol " + std::to_string(tol) + ")");
    return fine;
}

namespace detail {

// phi_j(x; q) and its derivative with respect to the mirror position q.
inline double mode_fn(int j, double x, double q) {
    return std::sqrt(2.0 / q) * std::sin(j * ModeGrid::pi() * x / q);
}

inline double mode_fn_dq(int j, double x, double q) {
    const double arg = j * ModeGrid::pi() * x / q;
    return -0.5 * std::sqrt(2.0) * std::pow(q, -1.5) * std::sin(arg) -
           std::sqrt(2.0 / q) * std::cos(arg) * (j * ModeGrid::pi() * x / (q * q));
}

}  // namespace detail

// Quadrature route to g_jk, independent of the closed form.  Evaluated at
// the equilibrium length q = d of `grid`; the result is q-independent.
inline double overlap_coefficient_quadrature(int j, int k, const ModeGrid& grid,
                                             int panels = 4096) {
    if (j < 1 || k < 1)
        throw std::domain_error("overlap_coefficient_quadrature: indices start at 1");
    const double q = grid.d;
    auto integrand = [&](double x) {
        return detail::mode_fn(k, x, q) * detail::mode_fn_dq(j, x, q);
    };
    return q * simpson_checked(integrand, 0.0, q, panels, 1e-8);
}

// ---------------------------------------------------------------------------
// Order-n mixing matrices.
// ---------------------------------------------------------------------------

// Entries M^(n)_{kj} with Q_k^(n) = sum_j M^(n)_{kj} Q_j.  Order 0 is the
// identity; order 1 is M^(1)_{kj} = g_jk; higher orders iterate
// M^(n+1)_{kl} = sum_j g_jk M^(n)_{jl}.
struct MixingMatrix {
    int order = 0;
    Eigen::MatrixXd entries;  // (K x K); mode k lives in row k-1

    double operator()(int k, int j) const { return entries(k - 1, j - 1); }
    int modes() const { return static_cast<int>(entries.rows()); }
};

inline MixingMatrix mixing_matrix(const ModeGrid& grid, int order) {
    if (order < 0) throw std::domain_error("mixing_matrix: order must be >= 0");
    const int K = grid.K;
    MixingMatrix out{order, Eigen::MatrixXd::Identity(K, K)};
    if (order == 0) return out;
    Eigen::MatrixXd g1(K, K);
    for (int k = 1; k <= K; ++k)
        for (int j = 1; j <= K; ++j) g1(k - 1, j - 1) = overlap_coefficient(j, k);
    Eigen::MatrixXd acc = g1;
    for (int n = 1; n < order; ++n) acc = g1 * acc;
    out.entries = acc;
    return out;
}

// Ladder-space analogue: A^(1)_{kj} = sqrt(k/j) g_jk, iterated the same way.
// Row/column weighting gives A^(n)_{js} = sqrt(j/s) M^(n)_{js}.
inline MixingMatrix ladder_mixing_matrix(const ModeGrid& grid, int order) {
    if (order < 0) throw std::domain_error("ladder_mixing_matrix: order must be >= 0");
    const int K = grid.K;
    MixingMatrix out{order, Eigen::MatrixXd::Identity(K, K)};
    if (order == 0) return out;
    Eigen::MatrixXd a1(K, K);
    for (int k = 1; k <= K; ++k)
        for (int j = 1; j <= K; ++j)
            a1(k - 1, j - 1) = std::sqrt(static_cast<double>(k) / j) * overlap_coefficient(j, k);
    Eigen::MatrixXd acc = a1;
    for (int n = 1; n < order; ++n) acc = a1 * acc;
    out.entries = acc;
    return out;
}

// ---------------------------------------------------------------------------
// Completeness sum rule.
// ---------------------------------------------------------------------------

// Partial sum  sum_{s<=S} g_ks g_js  against the quadrature
// q^2 Int dphi_k/dq dphi_j/dq dx; the sum converges slowly (1/S tail).
struct CompletenessResidual {
    double lhs = 0.0;       // truncated coefficient sum at cutoff S
    double rhs = 0.0;       // quadrature value (S-independent)
    double residual = 0.0;  // |lhs - rhs|
};

inline CompletenessResidual completeness_residual(int j, int k, const ModeGrid& grid, int S) {
    if (j < 1 || k < 1) throw std::domain_error("completeness_residual: indices start at 1");
    if (S < 1) throw std::domain_error("completeness_residual: cutoff must be >= 1");
    CompletenessResidual out;
    for (int s = 1; s <= S; ++s)
        out.lhs += overlap_coefficient(k, s) * overlap_coefficient(j, s);
    const double q = grid.d;
    auto integrand = [&](double x) {
        return detail::mode_fn_dq(k, x, q) * detail::mode_fn_dq(j, x, q);
    };
    out.rhs = q * q * simpson_checked(integrand, 0.0, q, 4096, 1e-10);
    out.residual = std::abs(out.lhs - out.rhs);
    return out;
}

// Extrapolate the truncated sum to S -> infinity from cutoffs {64,128,256}.
// The tail of sum_s g_ks g_js is even in 1/s, so in the variable
// u = 1/(S + 1/2) the residual expands in odd powers only; fitting
// r(S) = L + A u + C u^3 through the three cutoffs removes the tail to
// O(u^5) and L estimates the converged residual.
struct CompletenessExtrapolation {
    std::array<int, 3> cutoffs{64, 128, 256};
    std::array<double, 3> residuals{};  // |lhs - rhs| at each cutoff
    double extrapolated = 0.0;          // |L|
    bool monotone = false;              // residual strictly decreasing per doubling
};

inline CompletenessExtrapolation completeness_extrapolation(int j, int k, const ModeGrid& grid) {
    CompletenessExtrapolation out;
    std::array<double, 3> signed_res{};
    for (int i = 0; i < 3; ++i) {
        const auto r = completeness_residual(j, k, grid, out.cutoffs[i]);
        signed_res[i] = r.lhs - r.rhs;
        out.residuals[i] = r.residual;
    }
    Eigen::Matrix3d V;
    Eigen::Vector3d y;
    for (int i = 0; i < 3; ++i) {
        const double u = 1.0 / (out.cutoffs[i] + 0.5);
        V(i, 0) = 1.0;
        V(i, 1) = u;
        V(i, 2) = u * u * u;
        y(i) = signed_res[i];
    }
    const Eigen::Vector3d coef = V.fullPivLu().solve(y);
    out.extrapolated = std::abs(coef(0));
    out.monotone = out.residuals[0] > out.residuals[1] && out.residuals[1] > out.residuals[2];
    return out;
}

}  // namespace optomech
