#pragma once

// Operators graded by powers of the mirror pair (x, p).  A GradedOperator is
// a finite sum  sum_{a,b} x^a p^b F_{ab}  with field-operator coefficients
// F_{ab} and mirror monomials kept in the canonical order x^a p^b.  The mirror
// variables are symbols here, not matrices: reordering uses [x, p] = i hbar
// exactly, and the mirror never needs a Fock slot.
//
// x is the expansion variable, so x-degrees above 2 are truncated by contract
// (silently, inside products).  p is not graded; a p-degree above 2 can only
// come from a malformed product and is a hard error, because silently
// dropping momentum terms would corrupt kinetic energies.

#include <map>

#include "fock_space.hpp"

namespace optomech {

struct GradeKey {
    int a = 0;  // x-degree
    int b = 0;  // p-degree

    friend bool operator<(const GradeKey& l, const GradeKey& r) {
        return l.a != r.a ? l.a < r.a : l.b < r.b;
    }
    friend bool operator==(const GradeKey& l, const GradeKey& r) {
        return l.a == r.a && l.b == r.b;
    }
};

class GradedOperator {
public:
    static constexpr int max_x_degree = 2;
    static constexpr int max_p_degree = 2;

    explicit GradedOperator(BasisPtr basis) : basis_(std::move(basis)) {
        if (!basis_) throw std::domain_error("GradedOperator: null basis");
    }

    const BasisPtr& basis() const { return basis_; }
    const std::map<GradeKey, FieldOperator>& terms() const { return terms_; }

    // Adds coeff * x^a p^b.  Inserting an out-of-range grade directly is a
    // caller error; silent x-truncation happens only inside graded_multiply.
    void add_term(int a, int b, const FieldOperator& coeff) {
        if (a < 0 || a > max_x_degree)
            throw std::domain_error("GradedOperator: x-degree out of range");
        if (b < 0 || b > max_p_degree)
            throw std::domain_error("GradedOperator: p-degree out of range");
        if (!coeff.basis || !(coeff.basis == basis_ || coeff.basis->same_structure(*basis_)))
            throw std::domain_error("GradedOperator: coefficient basis mismatch");
        auto it = terms_.find({a, b});
        if (it == terms_.end())
            terms_.emplace(GradeKey{a, b}, coeff);
        else
            it->second = it->second + coeff;
    }

    // Coefficient of x^a p^b; the zero operator when the term is absent.
    FieldOperator coefficient(int a, int b) const {
        auto it = terms_.find({a, b});
        return it != terms_.end() ? it->second : zero_op(basis_);
    }

    bool has_grade0_part(double tol = 0.0) const {
        for (const auto& [key, coeff] : terms_)
            if (key.a == 0 && max_abs(coeff.mat) > tol) return true;
        return false;
    }

    bool has_momentum_part(double tol = 0.0) const {
        for (const auto& [key, coeff] : terms_)
            if (key.b > 0 && max_abs(coeff.mat) > tol) return true;
        return false;
    }

private:
    BasisPtr basis_;
    std::map<GradeKey, FieldOperator> terms_;
};

namespace detail {

inline void require_same_basis(const GradedOperator& a, const GradedOperator& b) {
    if (!(a.basis() == b.basis() || a.basis()->same_structure(*b.basis())))
        throw std::domain_error("GradedOperator: basis mismatch");
}

}  // namespace detail

inline GradedOperator operator+(const GradedOperator& a, const GradedOperator& b) {
    detail::require_same_basis(a, b);
    GradedOperator out = a;
    for (const auto& [key, coeff] : b.terms()) out.add_term(key.a, key.b, coeff);
    return out;
}

inline GradedOperator operator*(Complex c, const GradedOperator& g) {
    GradedOperator out{g.basis()};
    for (const auto& [key, coeff] : g.terms()) out.add_term(key.a, key.b, c * coeff);
    return out;
}

inline GradedOperator operator*(double c, const GradedOperator& g) {
    return Complex(c, 0.0) * g;
}

inline GradedOperator operator-(const GradedOperator& a, const GradedOperator& b) {
    return a + (-1.0) * b;
}

// Largest coefficient entry across all grades.
inline double graded_max_abs(const GradedOperator& g) {
    double v = 0.0;
    for (const auto& [key, coeff] : g.terms()) v = std::max(v, max_abs(coeff.mat));
    return v;
}

namespace detail {

inline double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

inline double factorial(int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

// p^b x^c = sum_m C(b,m) C(c,m) m! (-i hbar)^m x^{c-m} p^{b-m}; this is the
// only place the canonical commutator enters the graded algebra.
inline Complex reorder_weight(int b, int c, int m) {
    Complex phase(1.0, 0.0);
    const Complex step(0.0, -hbar);
    for (int i = 0; i < m; ++i) phase *= step;
    return binomial(b, m) * binomial(c, m) * factorial(m) * phase;
}

}  // namespace detail

// Product with mirror monomials restored to canonical x^a p^b order.  Terms
// whose x-degree exceeds the cap are discarded.  The reordering reduction m
// never exceeds the right factor's x-degree, so a product never lowers the
// x-degree of its left factor, and multiplying by a p-free operator on either
// side never lowers the x-degree at all.  Two consequences fix the contract:
// dropped grades in a left factor can never resurface, and commutator chains
// with a p-free generator (the only way this library composes products) are
// exact on the retained grades.  Regrouping arbitrary p-carrying triples
// across a dropped grade is outside the contract: associativity is only
// guaranteed when no intermediate pair product truncates (e.g. factors of
// x-degree <= 1).  A p-degree above the cap is a hard error.
inline GradedOperator graded_multiply(const GradedOperator& A, const GradedOperator& B) {
    detail::require_same_basis(A, B);
    GradedOperator out{A.basis()};
    for (const auto& [ka, Fa] : A.terms()) {
        for (const auto& [kb, Fb] : B.terms()) {
            // x^{ka.a} p^{ka.b} x^{kb.a} p^{kb.b}
            const int mmax = std::min(ka.b, kb.a);
            FieldOperator prod = Fa * Fb;
            for (int m = 0; m <= mmax; ++m) {
                const int a = ka.a + kb.a - m;
                const int b = ka.b + kb.b - m;
                if (a > GradedOperator::max_x_degree) continue;
                if (b > GradedOperator::max_p_degree)
                    throw std::domain_error("graded_multiply: p-degree overflow");
                out.add_term(a, b, detail::reorder_weight(ka.b, kb.a, m) * prod);
            }
        }
    }
    return out;
}

inline GradedOperator graded_commutator(const GradedOperator& A, const GradedOperator& B) {
    return graded_multiply(A, B) - graded_multiply(B, A);
}

// (x^a p^b F)^dag = F^dag p^b x^a, reordered back to canonical form.
inline GradedOperator graded_adjoint(const GradedOperator& g) {
    GradedOperator out{g.basis()};
    for (const auto& [key, coeff] : g.terms()) {
        const FieldOperator fa = coeff.adjoint();
        for (int m = 0; m <= std::min(key.b, key.a); ++m)
            out.add_term(key.a - m, key.b - m, detail::reorder_weight(key.b, key.a, m) * fa);
    }
    return out;
}

inline double graded_hermiticity_defect(const GradedOperator& g) {
    return graded_max_abs(g - graded_adjoint(g));
}

}  // namespace optomech
