#pragma once

// Truncated multimode bosonic Fock space: K field modes with per-mode
// occupation cap N, optionally one mirror oscillator in the last slot with
// its own cap, optionally a global total-occupation cap C.  Basis states are
// occupation tuples in lexicographic order, so serialized operators are
// bit-reproducible across runs.
//
// Operators are sparse complex matrices over that basis.  Every elementary
// construction goes through normal-ordered ladder monomials applied
// annihilators-first: along that path intermediate occupations never exceed
// the caps whenever the initial and final states are retained, so the built
// matrix is the exact crop P O P of the infinite-dimensional operator
// (P = projector onto the basis).  Exact crops of Hermitian operators are
// exactly Hermitian, and operator identities that hold before truncation
// keep holding entry-by-entry after it.

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "mode_mixing.hpp"

namespace optomech {

using Complex = std::complex<double>;
using SparseC = Eigen::SparseMatrix<Complex>;

// ---------------------------------------------------------------------------
// System parameters shared by operator builders and the simulator.
// ---------------------------------------------------------------------------

struct SystemParams {
    double m = 1.0;        // mirror mass
    double Omega = 1.0;    // bare mechanical frequency
    double d = 0.0;        // equilibrium cavity length
    int K = 1;             // retained field modes
    int N = 1;             // per-mode occupation cap
    std::optional<int> total_cap;  // optional global cap C
    int mirror_max = -1;   // mirror-slot cap; negative means "same as N"
    double omega_pl = 0.0;          // UV cutoff frequency for the scaling ratios
    std::size_t dimension_guard = 200000;

    int mirror_cap() const { return mirror_max >= 0 ? mirror_max : N; }
    double x_zpf() const { return std::sqrt(hbar / (2.0 * m * Omega)); }
    ModeGrid grid() const { return ModeGrid(d, K); }

    void validate() const {
        if (!(m > 0.0)) throw std::domain_error("SystemParams: mass must be positive");
        if (!(Omega > 0.0)) throw std::domain_error("SystemParams: Omega must be positive");
        if (!(d > 0.0)) throw std::domain_error("SystemParams: cavity length must be positive");
        if (K < 1) throw std::domain_error("SystemParams: need at least one field mode");
        if (N < 0) throw std::domain_error("SystemParams: per-mode cap must be >= 0");
        if (total_cap && *total_cap < 0)
            throw std::domain_error("SystemParams: total cap must be >= 0");
        // omega_pl is consumed only by the scaling-ratio helpers; zero means
        // "unset" and is rejected there, not here.
        if (omega_pl < 0.0) throw std::domain_error("SystemParams: omega_pl must be >= 0");
    }
};

// ---------------------------------------------------------------------------
// Basis.
// ---------------------------------------------------------------------------

class FockBasis {
public:
    static std::shared_ptr<const FockBasis> make(int field_modes, int per_mode_max,
                                                 bool include_mirror = false,
                                                 int mirror_max = -1,
                                                 std::optional<int> total_cap = std::nullopt,
                                                 std::size_t dimension_guard = 200000) {
        return std::shared_ptr<const FockBasis>(new FockBasis(
            field_modes, per_mode_max, include_mirror,
            mirror_max >= 0 ? mirror_max : per_mode_max, total_cap, dimension_guard));
    }

    static std::shared_ptr<const FockBasis> make(const SystemParams& p) {
        return make(p.K, p.N, true, p.mirror_cap(), p.total_cap, p.dimension_guard);
    }

    int field_modes() const { return field_modes_; }
    int per_mode_max() const { return per_mode_max_; }
    bool include_mirror() const { return include_mirror_; }
    int mirror_max() const { return mirror_max_; }
    std::optional<int> total_cap() const { return total_cap_; }

    std::size_t dim() const { return tuples_.size(); }
    int slots() const { return field_modes_ + (include_mirror_ ? 1 : 0); }

    int mirror_slot() const {
        if (!include_mirror_) throw std::domain_error("FockBasis: no mirror slot");
        return field_modes_;
    }

    // Field mode k (1-based physics label) lives in slot k-1.
    int slot_of_mode(int k) const {
        if (k < 1 || k > field_modes_) throw std::domain_error("FockBasis: mode index out of range");
        return k - 1;
    }

    int slot_cap(int slot) const {
        check_slot(slot);
        return (include_mirror_ && slot == field_modes_) ? mirror_max_ : per_mode_max_;
    }

    const std::vector<int>& tuple(std::size_t ordinal) const {
        if (ordinal >= tuples_.size()) throw std::domain_error("FockBasis: ordinal out of range");
        return tuples_[ordinal];
    }

    // Ordinal of a tuple, or nullopt when it falls outside the retained set.
    std::optional<std::size_t> index_of(const std::vector<int>& t) const {
        const auto it = index_.find(t);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t ordinal_checked(const std::vector<int>& t) const {
        const auto i = index_of(t);
        if (!i) throw std::domain_error("FockBasis: tuple not in basis");
        return *i;
    }

    std::size_t vacuum() const { return vacuum_; }

    // Structural identity; operator algebra requires matching bases.
    bool same_structure(const FockBasis& o) const {
        return field_modes_ == o.field_modes_ && per_mode_max_ == o.per_mode_max_ &&
               include_mirror_ == o.include_mirror_ && mirror_max_ == o.mirror_max_ &&
               total_cap_ == o.total_cap_;
    }

private:
    FockBasis(int field_modes, int per_mode_max, bool include_mirror, int mirror_max,
              std::optional<int> total_cap, std::size_t guard)
        : field_modes_(field_modes),
          per_mode_max_(per_mode_max),
          include_mirror_(include_mirror),
          mirror_max_(mirror_max),
          total_cap_(total_cap) {
        if (field_modes_ < 1) throw std::domain_error("FockBasis: need at least one field mode");
        if (per_mode_max_ < 0) throw std::domain_error("FockBasis: per-mode cap must be >= 0");
        if (include_mirror_ && mirror_max_ < 0)
            throw std::domain_error("FockBasis: mirror cap must be >= 0");
        if (total_cap_ && *total_cap_ < 0)
            throw std::domain_error("FockBasis: total cap must be >= 0");

        // Overflow guard before enumerating.
        if (!total_cap_) {
            double dims = 1.0;
            for (int s = 0; s < slots(); ++s) dims *= static_cast<double>(cap_of(s) + 1);
            if (dims > static_cast<double>(guard))
                throw std::length_error("FockBasis: dimension " + std::to_string(dims) +
                                        " exceeds guard " + std::to_string(guard));
        }

        std::vector<int> t(slots(), 0);
        enumerate(t, 0, 0, guard);
        for (std::size_t i = 0; i < tuples_.size(); ++i) index_.emplace(tuples_[i], i);
        vacuum_ = index_.at(std::vector<int>(slots(), 0));
    }

    int cap_of(int slot) const {
        return (include_mirror_ && slot == field_modes_) ? mirror_max_ : per_mode_max_;
    }

    void check_slot(int slot) const {
        if (slot < 0 || slot >= slots()) throw std::domain_error("FockBasis: slot out of range");
    }

    // Depth-first odometer; emits tuples in lexicographic order.
    void enumerate(std::vector<int>& t, int slot, int used, std::size_t guard) {
        if (slot == slots()) {
            if (tuples_.size() >= guard)
                throw std::length_error("FockBasis: dimension exceeds guard " +
                                        std::to_string(guard));
            tuples_.push_back(t);
            return;
        }
        const int room = total_cap_ ? *total_cap_ - used : cap_of(slot);
        const int top = std::min(cap_of(slot), room < 0 ? 0 : room);
        for (int n = 0; n <= top; ++n) {
            t[slot] = n;
            enumerate(t, slot + 1, used + n, guard);
        }
        t[slot] = 0;
    }

    int field_modes_;
    int per_mode_max_;
    bool include_mirror_;
    int mirror_max_;
    std::optional<int> total_cap_;
    std::vector<std::vector<int>> tuples_;
    std::map<std::vector<int>, std::size_t> index_;
    std::size_t vacuum_ = 0;
};

using BasisPtr = std::shared_ptr<const FockBasis>;

// ---------------------------------------------------------------------------
// Operators.
// ---------------------------------------------------------------------------

struct FieldOperator {
    BasisPtr basis;
    SparseC mat;
    bool hermitian_hint = false;

    std::size_t dim() const { return basis ? basis->dim() : 0; }

    FieldOperator adjoint() const {
        FieldOperator out{basis, SparseC(mat.adjoint()), hermitian_hint};
        out.mat.makeCompressed();
        return out;
    }
};

namespace detail {

inline void require_same_basis(const FieldOperator& a, const FieldOperator& b) {
    if (!a.basis || !b.basis || !(a.basis == b.basis || a.basis->same_structure(*b.basis)))
        throw std::domain_error("FieldOperator: basis mismatch");
}

}  // namespace detail

inline FieldOperator operator+(const FieldOperator& a, const FieldOperator& b) {
    detail::require_same_basis(a, b);
    FieldOperator out{a.basis, a.mat + b.mat, a.hermitian_hint && b.hermitian_hint};
    out.mat.makeCompressed();
    return out;
}

inline FieldOperator operator-(const FieldOperator& a, const FieldOperator& b) {
    detail::require_same_basis(a, b);
    FieldOperator out{a.basis, a.mat - b.mat, a.hermitian_hint && b.hermitian_hint};
    out.mat.makeCompressed();
    return out;
}

inline FieldOperator operator*(Complex c, const FieldOperator& a) {
    FieldOperator out{a.basis, c * a.mat, a.hermitian_hint && c.imag() == 0.0};
    out.mat.makeCompressed();
    return out;
}

inline FieldOperator operator*(double c, const FieldOperator& a) {
    FieldOperator out{a.basis, Complex(c, 0.0) * a.mat, a.hermitian_hint};
    out.mat.makeCompressed();
    return out;
}

// Matrix product (operator composition; right factor acts first).
inline FieldOperator operator*(const FieldOperator& a, const FieldOperator& b) {
    detail::require_same_basis(a, b);
    FieldOperator out{a.basis, SparseC(a.mat * b.mat), false};
    out.mat.makeCompressed();
    return out;
}

inline double max_abs(const SparseC& m) {
    double v = 0.0;
    for (int k = 0; k < m.outerSize(); ++k)
        for (SparseC::InnerIterator it(m, k); it; ++it) v = std::max(v, std::abs(it.value()));
    return v;
}

inline double hermiticity_defect(const FieldOperator& a) {
    return max_abs(SparseC(a.mat - SparseC(a.mat.adjoint())));
}

inline FieldOperator symmetrized(const FieldOperator& a) {
    FieldOperator out{a.basis, SparseC(0.5 * (a.mat + SparseC(a.mat.adjoint()))), true};
    out.mat.makeCompressed();
    return out;
}

inline FieldOperator identity_op(const BasisPtr& basis) {
    SparseC m(static_cast<Eigen::Index>(basis->dim()), static_cast<Eigen::Index>(basis->dim()));
    m.setIdentity();
    return FieldOperator{basis, std::move(m), true};
}

inline FieldOperator zero_op(const BasisPtr& basis) {
    SparseC m(static_cast<Eigen::Index>(basis->dim()), static_cast<Eigen::Index>(basis->dim()));
    return FieldOperator{basis, std::move(m), true};
}

// ---------------------------------------------------------------------------
// Normal-ordered ladder monomials (the exact-crop primitive).
// ---------------------------------------------------------------------------

// coeff * prod_{s in create} a_s^dag * prod_{s in destroy} a_s, with the
// annihilators applied first.  Slot lists may repeat slots.
struct LadderMonomial {
    std::vector<int> create;
    std::vector<int> destroy;
};

inline FieldOperator ladder_monomial(const BasisPtr& basis, const LadderMonomial& mono,
                                     Complex coeff = Complex(1.0, 0.0)) {
    for (int s : mono.create)
        if (s < 0 || s >= basis->slots()) throw std::domain_error("ladder_monomial: bad slot");
    for (int s : mono.destroy)
        if (s < 0 || s >= basis->slots()) throw std::domain_error("ladder_monomial: bad slot");

    const auto dim = static_cast<Eigen::Index>(basis->dim());
    std::vector<Eigen::Triplet<Complex>> trips;
    std::vector<int> t;
    for (std::size_t i = 0; i < basis->dim(); ++i) {
        t = basis->tuple(i);
        // Accumulate the squared amplitude as an exact integer product and
        // take one square root at the end, so e.g. the a^dag a diagonal is
        // exactly n rather than sqrt(n)*sqrt(n).
        double amp_sq = 1.0;
        bool alive = true;
        for (int s : mono.destroy) {
            if (t[s] == 0) { alive = false; break; }
            amp_sq *= static_cast<double>(t[s]);
            --t[s];
        }
        if (!alive) continue;
        for (int s : mono.create) {
            amp_sq *= static_cast<double>(t[s] + 1);
            ++t[s];
        }
        const auto j = basis->index_of(t);
        if (!j) continue;  // image outside the retained set: cropped
        trips.emplace_back(static_cast<Eigen::Index>(*j), static_cast<Eigen::Index>(i),
                           coeff * std::sqrt(amp_sq));
    }
    SparseC m(dim, dim);
    m.setFromTriplets(trips.begin(), trips.end());
    m.makeCompressed();
    return FieldOperator{basis, std::move(m), false};
}

// A sum of monomials sharing one basis; convenience for quadratic forms.
struct MonomialSum {
    BasisPtr basis;
    std::vector<std::pair<Complex, LadderMonomial>> terms;
    Complex constant{0.0, 0.0};

    void add(Complex c, LadderMonomial m) { terms.push_back({c, std::move(m)}); }

    FieldOperator build(bool hermitian = false) const {
        FieldOperator acc = identity_op(basis);
        acc.mat = acc.mat * constant;
        for (const auto& [c, m] : terms) acc.mat += ladder_monomial(basis, m, c).mat;
        // Terms that cancel exactly (e.g. the bb pieces of p^2 + x^2) would
        // otherwise linger as explicit zeros and hide the true sparsity.
        acc.mat.prune([](Eigen::Index, Eigen::Index, const Complex& v) {
            return v != Complex(0.0, 0.0);
        });
        acc.mat.makeCompressed();
        acc.hermitian_hint = hermitian;
        return acc;
    }
};

// ---------------------------------------------------------------------------
// Elementary operators.
// ---------------------------------------------------------------------------

inline FieldOperator annihilation(const BasisPtr& basis, int slot) {
    if (slot < 0 || slot >= basis->slots())
        throw std::domain_error("annihilation: slot out of range");
    return ladder_monomial(basis, {{}, {slot}});
}

inline FieldOperator creation(const BasisPtr& basis, int slot) {
    if (slot < 0 || slot >= basis->slots())
        throw std::domain_error("creation: slot out of range");
    return ladder_monomial(basis, {{slot}, {}});
}

// a^dag a on one slot; diagonal with the occupation numbers.
inline FieldOperator number_operator(const BasisPtr& basis, int slot) {
    if (slot < 0 || slot >= basis->slots())
        throw std::domain_error("number_operator: slot out of range");
    auto op = ladder_monomial(basis, {{slot}, {slot}});
    op.hermitian_hint = true;
    return op;
}

// Q_k = sqrt(hbar / 2 omega_k) (a_k + a_k^dag).
inline FieldOperator quadrature_Q(const BasisPtr& basis, int k, const ModeGrid& grid) {
    const int slot = basis->slot_of_mode(k);
    const double c = std::sqrt(hbar / (2.0 * grid.omega(k)));
    MonomialSum s{basis};
    s.add(Complex(c, 0.0), {{}, {slot}});
    s.add(Complex(c, 0.0), {{slot}, {}});
    return s.build(true);
}

// P_k = i sqrt(hbar omega_k / 2) (a_k^dag - a_k).
inline FieldOperator momentum_P(const BasisPtr& basis, int k, const ModeGrid& grid) {
    const int slot = basis->slot_of_mode(k);
    const double c = std::sqrt(hbar * grid.omega(k) / 2.0);
    MonomialSum s{basis};
    s.add(Complex(0.0, c), {{slot}, {}});
    s.add(Complex(0.0, -c), {{}, {slot}});
    return s.build(true);
}

// Q_k^(n) = sum_j M^(n)_{kj} Q_j.
inline FieldOperator mixed_quadrature(const BasisPtr& basis, int k, int order,
                                      const MixingMatrix& mixing, const ModeGrid& grid) {
    if (mixing.order != order)
        throw std::domain_error("mixed_quadrature: mixing matrix order mismatch");
    if (mixing.modes() < basis->field_modes())
        throw std::domain_error("mixed_quadrature: mixing matrix too small for basis");
    basis->slot_of_mode(k);
    MonomialSum s{basis};
    for (int j = 1; j <= basis->field_modes(); ++j) {
        const double w = mixing(k, j) * std::sqrt(hbar / (2.0 * grid.omega(j)));
        if (w == 0.0) continue;
        const int slot = basis->slot_of_mode(j);
        s.add(Complex(w, 0.0), {{}, {slot}});
        s.add(Complex(w, 0.0), {{slot}, {}});
    }
    return s.build(true);
}

// P_k^(n) = sum_j M^(n)_{kj} P_j, the momentum analogue of mixed_quadrature
// (same mixing matrix, same recursion).
inline FieldOperator mixed_momentum(const BasisPtr& basis, int k, int order,
                                    const MixingMatrix& mixing, const ModeGrid& grid) {
    if (mixing.order != order)
        throw std::domain_error("mixed_momentum: mixing matrix order mismatch");
    if (mixing.modes() < basis->field_modes())
        throw std::domain_error("mixed_momentum: mixing matrix too small for basis");
    basis->slot_of_mode(k);
    MonomialSum s{basis};
    for (int j = 1; j <= basis->field_modes(); ++j) {
        const double w = mixing(k, j) * std::sqrt(hbar * grid.omega(j) / 2.0);
        if (w == 0.0) continue;
        const int slot = basis->slot_of_mode(j);
        s.add(Complex(0.0, w), {{slot}, {}});
        s.add(Complex(0.0, -w), {{}, {slot}});
    }
    return s.build(true);
}

// Mirror position x = x_zpf (b + b^dag) and momentum p = i sqrt(hbar m Omega / 2)(b^dag - b).
inline FieldOperator mirror_position(const BasisPtr& basis, const SystemParams& params) {
    const int slot = basis->mirror_slot();
    const double c = params.x_zpf();
    MonomialSum s{basis};
    s.add(Complex(c, 0.0), {{}, {slot}});
    s.add(Complex(c, 0.0), {{slot}, {}});
    return s.build(true);
}

inline FieldOperator mirror_momentum(const BasisPtr& basis, const SystemParams& params) {
    const int slot = basis->mirror_slot();
    const double c = std::sqrt(hbar * params.m * params.Omega / 2.0);
    MonomialSum s{basis};
    s.add(Complex(0.0, c), {{slot}, {}});
    s.add(Complex(0.0, -c), {{}, {slot}});
    return s.build(true);
}

inline Complex matrix_element(const FieldOperator& op, const std::vector<int>& bra,
                              const std::vector<int>& ket) {
    const auto i = op.basis->ordinal_checked(bra);
    const auto j = op.basis->ordinal_checked(ket);
    return op.mat.coeff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

inline Complex vacuum_expectation(const FieldOperator& op) {
    const auto v = static_cast<Eigen::Index>(op.basis->vacuum());
    return op.mat.coeff(v, v);
}

// Diagonal projector onto the "safe subspace": every occupation strictly
// below its slot cap and total strictly below C (if present).  Canonical
// commutators hold exactly there.
inline FieldOperator interior_projector(const BasisPtr& basis) {
    const auto dim = static_cast<Eigen::Index>(basis->dim());
    std::vector<Eigen::Triplet<Complex>> trips;
    for (std::size_t i = 0; i < basis->dim(); ++i) {
        const auto& t = basis->tuple(i);
        bool interior = true;
        int total = 0;
        for (int s = 0; s < basis->slots(); ++s) {
            total += t[s];
            if (t[s] >= basis->slot_cap(s)) { interior = false; break; }
        }
        if (interior && basis->total_cap() && total >= *basis->total_cap()) interior = false;
        if (interior)
            trips.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i),
                               Complex(1.0, 0.0));
    }
    SparseC m(dim, dim);
    m.setFromTriplets(trips.begin(), trips.end());
    m.makeCompressed();
    return FieldOperator{basis, std::move(m), true};
}

inline FieldOperator commutator(const FieldOperator& a, const FieldOperator& b) {
    return a * b - b * a;
}

}  // namespace optomech
