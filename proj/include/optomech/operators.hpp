#pragma once

// Named operators and scalars of the mirror-field model: the non-adiabatic
// coupling Gamma_0, the radiation-pressure operators F_0 and F_1 (three
// independent construction routes each), their normal-ordered/vacuum splits,
// the renormalized mechanical frequency, the static Casimir energy, the
// linear force f = :F_0:/d and the dynamical frequency-shift operator
// DeltaOmega^2 = 2 :F_1:/(m d^2).
//
// Everything is built as exact crops (see fock_space.hpp), so identities
// that hold for the untruncated operators hold entry-by-entry here, and all
// raw asymmetries are at floating-point roundoff.

#include <utility>
#include <vector>

#include "fock_space.hpp"

namespace optomech {

// ---------------------------------------------------------------------------
// Quadratic-form engines.
// ---------------------------------------------------------------------------

// sum_{k,s} L(k-1,s-1) [ a_k a_s + a^dag_s a_k + a^dag_k a_s + a^dag_k a^dag_s
//                        (+ delta_ks) ],
// i.e. the exact crop of sum L_{ks} (a_k + a^dag_k)(a_s + a^dag_s) when
// include_delta is true, and of its normal-ordered part when false.  L holds
// every scalar prefactor.
inline FieldOperator quadratic_pair_operator(const BasisPtr& basis, const Eigen::MatrixXd& L,
                                             bool include_delta) {
    const int K = basis->field_modes();
    if (L.rows() != K || L.cols() != K)
        throw std::domain_error("quadratic_pair_operator: coefficient block must be K x K");
    MonomialSum s{basis};
    for (int k = 0; k < K; ++k) {
        for (int j = 0; j < K; ++j) {
            const double w = L(k, j);
            if (w == 0.0) continue;
            s.add(Complex(w, 0.0), {{}, {k, j}});        // a_k a_j
            s.add(Complex(w, 0.0), {{j}, {k}});          // a^dag_j a_k
            s.add(Complex(w, 0.0), {{k}, {j}});          // a^dag_k a_j
            s.add(Complex(w, 0.0), {{k, j}, {}});        // a^dag_k a^dag_j
        }
        if (include_delta) s.constant += Complex(L(k, k), 0.0);
    }
    return s.build(true);
}

// sum_{k,s} G(k-1,s-1) [ a^dag_k a_s + a^dag_k a^dag_s - a_k a_s - a^dag_s a_k
//                        (- delta_ks) ],
// the exact crop of sum G_{ks} (a^dag_k - a_k)(a_s + a^dag_s).
inline FieldOperator momentum_pair_operator(const BasisPtr& basis, const Eigen::MatrixXcd& G) {
    const int K = basis->field_modes();
    if (G.rows() != K || G.cols() != K)
        throw std::domain_error("momentum_pair_operator: coefficient block must be K x K");
    MonomialSum s{basis};
    for (int k = 0; k < K; ++k) {
        for (int j = 0; j < K; ++j) {
            const Complex w = G(k, j);
            if (w == Complex(0.0, 0.0)) continue;
            s.add(w, {{k}, {j}});          // a^dag_k a_j
            s.add(w, {{k, j}, {}});        // a^dag_k a^dag_j
            s.add(-w, {{}, {k, j}});       // -a_k a_j
            s.add(-w, {{j}, {k}});         // -a^dag_j a_k
        }
        s.constant -= G(k, k);
    }
    return s.build(false);
}

// ---------------------------------------------------------------------------
// Gamma_0: the non-adiabatic mirror-field coupling at equilibrium.
// ---------------------------------------------------------------------------

// Gamma_0 = -(1/d) sum_k P_k Q_k^(1).  Mode-diagonal products never appear
// (the order-1 mixing matrix has zero diagonal), so the classical product is
// already a Hermitian operator and the exact crop is exactly Hermitian.
inline FieldOperator build_Gamma0(const BasisPtr& basis, const ModeGrid& grid,
                                  const MixingMatrix& mixing) {
    if (mixing.order != 1) throw std::domain_error("build_Gamma0: mixing order must be 1");
    if (mixing.modes() < basis->field_modes())
        throw std::domain_error("build_Gamma0: mixing matrix too small for basis");
    const int K = basis->field_modes();
    Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(K, K);
    for (int k = 1; k <= K; ++k) {
        for (int s = 1; s <= K; ++s) {
            // P_k Q_s = i sqrt(hbar w_k/2) sqrt(hbar/(2 w_s)) (a^dag_k - a_k)(a_s + a^dag_s)
            G(k - 1, s - 1) = Complex(0.0, -mixing(k, s) / grid.d) *
                              (hbar / 2.0) * std::sqrt(grid.omega(k) / grid.omega(s));
        }
    }
    auto op = momentum_pair_operator(basis, G);
    op.hermitian_hint = true;
    return op;
}

// Same operator from the equilibrium ladder-operator form
// (i hbar / 2d) sum_{kj} g_kj sqrt(k/j) [a^dag_k a^dag_j - a_k a_j
//                                        + a^dag_k a_j - a^dag_j a_k].
inline FieldOperator build_Gamma0_ladder(const BasisPtr& basis, const ModeGrid& grid) {
    const int K = basis->field_modes();
    MonomialSum s{basis};
    for (int k = 1; k <= K; ++k) {
        for (int j = 1; j <= K; ++j) {
            const double g = overlap_coefficient(k, j);
            if (g == 0.0) continue;
            const Complex w(0.0, hbar / (2.0 * grid.d) * g *
                                     std::sqrt(static_cast<double>(k) / j));
            s.add(w, {{k - 1, j - 1}, {}});      // a^dag_k a^dag_j
            s.add(-w, {{}, {k - 1, j - 1}});     // -a_k a_j
            s.add(w, {{k - 1}, {j - 1}});        // a^dag_k a_j
            s.add(-w, {{j - 1}, {k - 1}});       // -a^dag_j a_k
        }
    }
    auto op = s.build(false);
    op.hermitian_hint = true;
    return op;
}

// ---------------------------------------------------------------------------
// F_n: generalized radiation-pressure operators (three routes).
// ---------------------------------------------------------------------------

namespace detail {

inline double mode_sign(int k, int j) { return ((k + j) % 2 == 0) ? 1.0 : -1.0; }

// Ladder-normalized pair weights of F_n:
//   F_n = sum_{k,s} L(k,s) (a_k + a^dag_k)(a_s + a^dag_s).
inline Eigen::MatrixXd F_pair_weights(int n, const ModeGrid& grid, const MixingMatrix& mixing,
                                      int K) {
    if (n != 0 && n != 1) throw std::domain_error("F_pair_weights: n must be 0 or 1");
    if (mixing.order != n) throw std::domain_error("F_pair_weights: mixing order mismatch");
    Eigen::MatrixXd L(K, K);
    for (int k = 1; k <= K; ++k) {
        for (int s = 1; s <= K; ++s) {
            double w = 0.0;
            for (int j = 1; j <= K; ++j)
                w += mode_sign(k, j) * grid.omega(k) * grid.omega(j) * mixing(j, s);
            // ladder normalization of Q_k Q_s
            L(k - 1, s - 1) = w * (hbar / 2.0) / std::sqrt(grid.omega(k) * grid.omega(s));
        }
    }
    return L;
}

}  // namespace detail

// F_n = sum_{k,j} (-1)^{k+j} w_k w_j Q_k Q_j^(n), truncated at K.  The
// monomial expansion of Q_k Q_s is symmetric under k <-> s, so the built
// matrix is the symmetrized operator with raw asymmetry at roundoff; the
// defect before the final symmetrization is reported through asymmetry_out.
inline FieldOperator build_F(int n, const BasisPtr& basis, const ModeGrid& grid,
                             const MixingMatrix& mixing, double* asymmetry_out = nullptr) {
    if (n != 0 && n != 1) throw std::domain_error("build_F: n must be 0 or 1");
    if (mixing.order != n) throw std::domain_error("build_F: mixing order mismatch");
    if (mixing.modes() < basis->field_modes())
        throw std::domain_error("build_F: mixing matrix too small for basis");
    const int K = basis->field_modes();
    const Eigen::MatrixXd L = detail::F_pair_weights(n, grid, mixing, K);
    auto op = quadratic_pair_operator(basis, L, true);
    if (asymmetry_out) *asymmetry_out = hermiticity_defect(op);
    return symmetrized(op);
}

// First-printed-line forms:
//   n=0:  sum_k w_k^2 Q_k (Q_k + Q_k^(1))
//   n=1:  sum_k (w_k^2/2) [ Q_k (Q_k^(1) + Q_k^(2)) + Q_k^(1)(Q_k + Q_k^(1)) ]
// Both agree with build_F(n) exactly at fixed K: the k != j part of the
// double sum maps onto these via the symmetrized frequency identity (pairwise
// exact) plus within-K matrix products, and the k = j diagonal supplies the
// remaining sum_k w_k^2 Q_k Q_k^(1) term.  Any measured deviation is roundoff.
inline FieldOperator build_F_alternative(int n, const BasisPtr& basis, const ModeGrid& grid,
                                         const MixingMatrix& m1, const MixingMatrix& m2) {
    if (n != 0 && n != 1) throw std::domain_error("build_F_alternative: n must be 0 or 1");
    if (m1.order != 1 || m2.order != 2)
        throw std::domain_error("build_F_alternative: need mixing orders 1 and 2");
    const int K = basis->field_modes();
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(K, K);  // weight of ordered pair Q_k Q_s
    for (int k = 1; k <= K; ++k) {
        const double wk2 = grid.omega(k) * grid.omega(k);
        if (n == 0) {
            W(k - 1, k - 1) += wk2;
            for (int s = 1; s <= K; ++s) W(k - 1, s - 1) += wk2 * m1(k, s);
        } else {
            for (int s = 1; s <= K; ++s) {
                W(k - 1, s - 1) += 0.5 * wk2 * (m1(k, s) + m2(k, s));  // Q_k (Q^(1) + Q^(2))
                W(s - 1, k - 1) += 0.5 * wk2 * m1(k, s);               // Q_k^(1) Q_k
                for (int l = 1; l <= K; ++l)
                    W(s - 1, l - 1) += 0.5 * wk2 * m1(k, s) * m1(k, l);  // Q_k^(1) Q_k^(1)
            }
        }
    }
    Eigen::MatrixXd L(K, K);
    for (int k = 1; k <= K; ++k)
        for (int s = 1; s <= K; ++s)
            L(k - 1, s - 1) =
                W(k - 1, s - 1) * (hbar / 2.0) / std::sqrt(grid.omega(k) * grid.omega(s));
    return symmetrized(quadratic_pair_operator(basis, L, true));
}

// Ladder-operator route: (hbar/2) sum_{kj} (-1)^{k+j} sqrt(w_k w_j)
// (a_k + a^dag_k)(a_j + a^dag_j)^(n), with the order-n superscript resolved
// through the ladder mixing matrix.
inline FieldOperator build_F_ladder(int n, const BasisPtr& basis, const ModeGrid& grid,
                                    const MixingMatrix& ladder_mixing) {
    if (n != 0 && n != 1) throw std::domain_error("build_F_ladder: n must be 0 or 1");
    if (ladder_mixing.order != n)
        throw std::domain_error("build_F_ladder: ladder mixing order mismatch");
    if (ladder_mixing.modes() < basis->field_modes())
        throw std::domain_error("build_F_ladder: mixing matrix too small for basis");
    const int K = basis->field_modes();
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(K, K);
    for (int k = 1; k <= K; ++k)
        for (int s = 1; s <= K; ++s) {
            double w = 0.0;
            for (int j = 1; j <= K; ++j)
                w += detail::mode_sign(k, j) * std::sqrt(grid.omega(k) * grid.omega(j)) *
                     ladder_mixing(j, s);
            L(k - 1, s - 1) = (hbar / 2.0) * w;
        }
    return symmetrized(quadratic_pair_operator(basis, L, true));
}

// ---------------------------------------------------------------------------
// Normal-ordered/vacuum splits and the scalar side.
// ---------------------------------------------------------------------------

struct NormalOrderSplit {
    FieldOperator normal;
    double vacuum = 0.0;
};

// For operators quadratic in the ladder operators the non-normal-ordered
// excess is the c-number <0|F|0>, so the split is F = :F: + vacuum * 1.
inline NormalOrderSplit normal_order_split(const FieldOperator& F) {
    const double vac = vacuum_expectation(F).real();
    FieldOperator normal = F - vac * identity_op(F.basis);
    normal.hermitian_hint = F.hermitian_hint;
    return {std::move(normal), vac};
}

// Closed-form vacuum sums at cutoff K (cutoff-tagged; no K -> infinity limit).
inline double vacuum_sum_F0(const ModeGrid& grid) {
    double s = 0.0;
    for (int k = 1; k <= grid.K; ++k) s += 0.5 * hbar * grid.omega(k);
    return s;
}

inline double vacuum_sum_F1(const ModeGrid& grid) {
    double s = 0.0;
    for (int k = 1; k <= grid.K; ++k)
        for (int j = 1; j <= grid.K; ++j) {
            if (j == k) continue;
            s += grid.omega(k) * grid.omega(j) / (grid.omega(k) + grid.omega(j));
        }
    return 0.5 * hbar * s;
}

// Omega_ren^2 = Omega^2 + (hbar/(m d^2)) sum'_{k != j <= K} w_k w_j/(w_k + w_j).
// The k != j restriction and the hbar factor keep this consistent with the
// F_1 vacuum sum at the same cutoff.
inline double renormalized_frequency_sq(const SystemParams& params) {
    params.validate();
    const ModeGrid grid = params.grid();
    return params.Omega * params.Omega +
           (2.0 / (params.m * params.d * params.d)) * vacuum_sum_F1(grid);
}

// Static one-dimensional Casimir energy -hbar pi / (24 q).
inline double casimir_energy(double q) {
    if (!(q > 0.0)) throw std::domain_error("casimir_energy: length must be positive");
    return -hbar * ModeGrid::pi() / (24.0 * q);
}

// ---------------------------------------------------------------------------
// Force and dynamical frequency shift (normal-ordered interaction pieces).
// ---------------------------------------------------------------------------

// f = :F_0:/d = (hbar/2d) sum_{kj} (-1)^{k+j} sqrt(w_k w_j)
//               (a_k a_j + a^dag_k a_j + a^dag_j a_k + a^dag_k a^dag_j).
inline FieldOperator build_force_f(const BasisPtr& basis, const ModeGrid& grid) {
    const int K = basis->field_modes();
    Eigen::MatrixXd L(K, K);
    for (int k = 1; k <= K; ++k)
        for (int j = 1; j <= K; ++j)
            L(k - 1, j - 1) = (hbar / (2.0 * grid.d)) * detail::mode_sign(k, j) *
                              std::sqrt(grid.omega(k) * grid.omega(j));
    return quadratic_pair_operator(basis, L, false);
}

// DeltaOmega^2 = 2 :F_1:/(m d^2), ladder form resolved through the order-1
// ladder mixing matrix.  Identically zero for K = 1.
inline FieldOperator build_delta_omega2(const BasisPtr& basis, const ModeGrid& grid,
                                        const MixingMatrix& ladder_mixing,
                                        const SystemParams& params) {
    if (ladder_mixing.order != 1)
        throw std::domain_error("build_delta_omega2: ladder mixing order must be 1");
    const int K = basis->field_modes();
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(K, K);
    for (int k = 1; k <= K; ++k)
        for (int s = 1; s <= K; ++s) {
            double w = 0.0;
            for (int j = 1; j <= K; ++j)
                w += detail::mode_sign(k, j) * std::sqrt(grid.omega(k) * grid.omega(j)) *
                     ladder_mixing(j, s);
            L(k - 1, s - 1) = hbar / (params.m * params.d * params.d) * w;
        }
    return symmetrized(quadratic_pair_operator(basis, L, false));
}

// ---------------------------------------------------------------------------
// Position-dependent ladder-operator expansion check.
// ---------------------------------------------------------------------------

// Expands a_k(q) = [2 hbar w_k(q)]^{-1/2} [w_k(q) Q_k + i P_k] around q = d
// with Q_k, P_k fixed, extracting the a_k0 / a^dag_k0 channel coefficients
// as matrix elements and fitting polynomials in x = q - d.  The exact
// channels are (r + 1/r)/2 and (r - 1/r)/2 with r = sqrt(d/(d+x)), so the
// reference coefficients are -1/(2d) (linear, dagger channel), +1/(4 d^2)
// (quadratic, dagger channel) and +1/(8 d^2) (quadratic, plain channel).
struct LadderExpansionReport {
    std::vector<double> x_values;
    double lin_a = 0.0;        // fitted linear coefficient, a channel (exact 0)
    double lin_adag = 0.0;     // fitted linear coefficient, a^dag channel
    double quad_a = 0.0;       // fitted quadratic coefficient, a channel
    double quad_adag = 0.0;    // fitted quadratic coefficient, a^dag channel
    double reference_lin_adag = 0.0;   // -1/(2d)
    double reference_quad_adag = 0.0;  // +1/(4d^2)
    double reference_quad_a = 0.0;     // +1/(8d^2)
    double fit_residual = 0.0;         // max least-squares residual over samples
    double mode_spread = 0.0;          // coefficient variation across modes (exact 0)
};

inline LadderExpansionReport ladder_expansion_check(const BasisPtr& basis, const ModeGrid& grid,
                                                    const std::vector<double>& x_values) {
    if (x_values.size() < 6)
        throw std::domain_error("ladder_expansion_check: need at least 6 sample offsets");
    for (double x : x_values)
        if (!(std::abs(x) < 0.2 * grid.d))
            throw std::domain_error("ladder_expansion_check: samples must satisfy |x| << d");
    if (basis->per_mode_max() < 1)
        throw std::domain_error("ladder_expansion_check: need occupation cap >= 1");

    const int K = basis->field_modes();
    const int S = static_cast<int>(x_values.size());
    constexpr int degree = 4;

    LadderExpansionReport rep;
    rep.x_values = x_values;
    rep.reference_lin_adag = -1.0 / (2.0 * grid.d);
    rep.reference_quad_adag = 1.0 / (4.0 * grid.d * grid.d);
    rep.reference_quad_a = 1.0 / (8.0 * grid.d * grid.d);

    Eigen::MatrixXd V(S, degree + 1);
    for (int i = 0; i < S; ++i)
        for (int p = 0; p <= degree; ++p) V(i, p) = std::pow(x_values[i], p);

    double spread_lin = 0.0, spread_quad = 0.0;
    for (int k = 1; k <= K; ++k) {
        Eigen::VectorXd ca(S), cd(S);
        std::vector<int> one(basis->slots(), 0);
        one[basis->slot_of_mode(k)] = 1;
        const std::vector<int> vac(basis->slots(), 0);
        for (int i = 0; i < S; ++i) {
            const double q = grid.d + x_values[i];
            const double wq = k * ModeGrid::pi() / q;
            const double norm = 1.0 / std::sqrt(2.0 * hbar * wq);
            const FieldOperator A =
                norm * (wq * quadrature_Q(basis, k, grid) +
                        Complex(0.0, 1.0) * momentum_P(basis, k, grid));
            ca(i) = matrix_element(A, vac, one).real();   // <0|A|1_k> -> a channel
            cd(i) = matrix_element(A, one, vac).real();   // <1_k|A|0> -> a^dag channel
        }
        const Eigen::VectorXd pa = V.colPivHouseholderQr().solve(ca);
        const Eigen::VectorXd pd = V.colPivHouseholderQr().solve(cd);
        rep.fit_residual = std::max(rep.fit_residual,
                                    std::max((V * pa - ca).cwiseAbs().maxCoeff(),
                                             (V * pd - cd).cwiseAbs().maxCoeff()));
        if (k == 1) {
            rep.lin_a = pa(1);
            rep.quad_a = pa(2);
            rep.lin_adag = pd(1);
            rep.quad_adag = pd(2);
        } else {
            spread_lin = std::max(spread_lin, std::abs(pd(1) - rep.lin_adag));
            spread_quad = std::max(spread_quad, std::abs(pd(2) - rep.quad_adag));
        }
    }
    rep.mode_spread = std::max(spread_lin, spread_quad);
    if (rep.fit_residual > 1e-9)
        throw std::runtime_error("ladder_expansion_check: fit residual " +
                                 std::to_string(rep.fit_residual) + " above tolerance");
    return rep;
}

// ---------------------------------------------------------------------------
// Assembled term bundle.
// ---------------------------------------------------------------------------

// All named pieces over the joint (field + mirror) basis of `params`.
struct HamiltonianTerms {
    BasisPtr basis;
    FieldOperator H_m;           // p^2/2m + (1/2) m Omega^2 x^2 (diagonal)
    FieldOperator H_f;           // sum_k hbar w_k (n_k + 1/2) (diagonal)
    FieldOperator F0;            // with vacuum constant
    FieldOperator F1;            // with vacuum constant
    FieldOperator Hint_normal;   // -x f + (x^2/d^2)((3/2):F0: + :F1:)
    FieldOperator force_f;       // :F0:/d
    FieldOperator delta_omega2;  // 2 :F1:/(m d^2)
    double vac_F0 = 0.0;
    double vac_F1 = 0.0;
    double omega_ren_sq = 0.0;
    double casimir = 0.0;
    double asymmetry_F1 = 0.0;   // raw (pre-symmetrization) defect of build_F(1)
};

inline HamiltonianTerms assemble_terms(const SystemParams& params) {
    params.validate();
    HamiltonianTerms t;
    t.basis = FockBasis::make(params);
    const ModeGrid grid = params.grid();
    const auto m0 = mixing_matrix(grid, 0);
    const auto m1 = mixing_matrix(grid, 1);
    const auto a1 = ladder_mixing_matrix(grid, 1);

    // Mirror free part via exact-crop monomials: the bb/b^dag b^dag pieces of
    // p^2 and x^2 cancel exactly, leaving hbar Omega (n_b + 1/2) diagonal.
    {
        const int mb = t.basis->mirror_slot();
        MonomialSum s{t.basis};
        // p^2/2m carries hbar m Omega/2 / (2m) and (1/2) m Omega^2 x^2 carries
        // (m Omega^2/2)(hbar/(2 m Omega)): both reduce to hbar Omega/4.
        // Computing them through one expression makes the bb / b^dag b^dag
        // cancellation bit-exact instead of 1-ulp-noisy.
        const double wp = 0.25 * hbar * params.Omega;
        const double wx = wp;
        // p^2/2m = wp (2 n + 1 - bb - b^dag b^dag)
        s.add(Complex(2.0 * wp, 0.0), {{mb}, {mb}});
        s.add(Complex(-wp, 0.0), {{}, {mb, mb}});
        s.add(Complex(-wp, 0.0), {{mb, mb}, {}});
        // (1/2) m Omega^2 x^2 = wx (2 n + 1 + bb + b^dag b^dag)
        s.add(Complex(2.0 * wx, 0.0), {{mb}, {mb}});
        s.add(Complex(wx, 0.0), {{}, {mb, mb}});
        s.add(Complex(wx, 0.0), {{mb, mb}, {}});
        s.constant = Complex(wp + wx, 0.0);
        t.H_m = s.build(true);
    }
    {
        MonomialSum s{t.basis};
        for (int k = 1; k <= params.K; ++k)
            s.add(Complex(hbar * grid.omega(k), 0.0),
                  {{t.basis->slot_of_mode(k)}, {t.basis->slot_of_mode(k)}});
        s.constant = Complex(vacuum_sum_F0(grid), 0.0);
        t.H_f = s.build(true);
    }

    t.F0 = build_F(0, t.basis, grid, m0);
    t.F1 = build_F(1, t.basis, grid, m1, &t.asymmetry_F1);
    t.force_f = build_force_f(t.basis, grid);
    t.delta_omega2 = build_delta_omega2(t.basis, grid, a1, params);
    t.vac_F0 = vacuum_expectation(t.F0).real();
    t.vac_F1 = vacuum_expectation(t.F1).real();
    t.omega_ren_sq = renormalized_frequency_sq(params);
    t.casimir = casimir_energy(params.d);

    // Normal-ordered interaction: -x f + (x^2/d^2)((3/2) :F0: + :F1:), all
    // as one exact crop (mirror and field factors live on disjoint slots).
    {
        const int mb = t.basis->mirror_slot();
        const double xz = params.x_zpf();
        const double d = params.d;
        const int K = params.K;
        Eigen::MatrixXd Lf(K, K), L1 = Eigen::MatrixXd::Zero(K, K);
        for (int k = 1; k <= K; ++k)
            for (int j = 1; j <= K; ++j) {
                Lf(k - 1, j - 1) = (hbar / 2.0) * detail::mode_sign(k, j) *
                                   std::sqrt(grid.omega(k) * grid.omega(j));
                double w = 0.0;
                for (int l = 1; l <= K; ++l)
                    w += detail::mode_sign(k, l) * std::sqrt(grid.omega(k) * grid.omega(l)) *
                         a1(l, j);
                L1(k - 1, j - 1) = (hbar / 2.0) * w;
            }
        // mirror monomials for x and x^2 (exact crops)
        const std::vector<std::tuple<std::vector<int>, std::vector<int>, double>> mir_x = {
            {{mb}, {}, xz}, {{}, {mb}, xz}};
        const std::vector<std::tuple<std::vector<int>, std::vector<int>, double>> mir_x2 = {
            {{mb, mb}, {}, xz * xz}, {{}, {mb, mb}, xz * xz}, {{mb}, {mb}, 2.0 * xz * xz},
            {{}, {}, xz * xz}};
        MonomialSum s{t.basis};
        auto add_pairs = [&](const Eigen::MatrixXd& L, const auto& mirror, double scale) {
            for (int k = 0; k < K; ++k)
                for (int j = 0; j < K; ++j) {
                    const double w = L(k, j);
                    if (w == 0.0) continue;
                    for (const auto& [mc, md, mw] : mirror) {
                        const Complex c(scale * w * mw, 0.0);
                        auto cat = [](std::vector<int> a, const std::vector<int>& b) {
                            a.insert(a.end(), b.begin(), b.end());
                            return a;
                        };
                        s.add(c, {mc, cat({k, j}, md)});
                        s.add(c, {cat({j}, mc), cat({k}, md)});
                        s.add(c, {cat({k}, mc), cat({j}, md)});
                        s.add(c, {cat({k, j}, mc), md});
                    }
                }
        };
        add_pairs(Lf, mir_x, -1.0 / d);                 // -x f
        add_pairs(Lf, mir_x2, 1.5 / (d * d));           // (3/2)(x^2/d^2) :F0:
        add_pairs(L1, mir_x2, 1.0 / (d * d));           // (x^2/d^2) :F1:
        t.Hint_normal = s.build(true);
    }
    return t;
}

}  // namespace optomech
