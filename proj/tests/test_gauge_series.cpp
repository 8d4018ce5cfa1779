#include <catch2/catch_amalgamated.hpp>

#include <optomech/gauge_series.hpp>

#include <random>

using namespace optomech;

namespace {

constexpr double kPi = 3.14159265358979323846;

// A small pool of non-commuting field operators for property tests.
std::vector<FieldOperator> operator_pool(const BasisPtr& basis, const ModeGrid& grid) {
    std::vector<FieldOperator> pool;
    for (int k = 1; k <= basis->field_modes(); ++k) {
        pool.push_back(quadrature_Q(basis, k, grid));
        pool.push_back(momentum_P(basis, k, grid));
        pool.push_back(number_operator(basis, basis->slot_of_mode(k)));
    }
    pool.push_back(identity_op(basis));
    return pool;
}

// Deterministic pseudo-random graded operator with x-degree <= max_a and
// p-degree <= max_b, built from the pool.
GradedOperator random_graded(const BasisPtr& basis, const std::vector<FieldOperator>& pool,
                             std::mt19937& rng, int max_a, int max_b) {
    std::uniform_real_distribution<double> coeff(-1.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    GradedOperator g{basis};
    for (int a = 0; a <= max_a; ++a)
        for (int b = 0; b <= max_b; ++b)
            g.add_term(a, b, Complex(coeff(rng), coeff(rng)) * pool[pick(rng)]);
    return g;
}

const AuditCheck& check_named(const AuditReport& rep, const std::string& name) {
    for (const auto& c : rep.checks)
        if (c.name == name) return c;
    FAIL("missing audit check: " << name);
    throw std::logic_error("unreachable");
}

const AuditFinding& finding_named(const AuditReport& rep, const std::string& name) {
    for (const auto& f : rep.findings)
        if (f.name == name) return f;
    FAIL("missing audit finding: " << name);
    throw std::logic_error("unreachable");
}

}  // namespace

TEST_CASE("graded products reproduce the mirror canonical algebra", "[gauge_series]") {
    auto basis = FockBasis::make(2, 2);
    ModeGrid grid{kPi, 2};

    GradedOperator X{basis}, P{basis};
    X.add_term(1, 0, identity_op(basis));
    P.add_term(0, 1, identity_op(basis));

    // [x, p] = i hbar: the reordering weight supplies the grade-(0,0) part.
    const auto C = graded_commutator(X, P);
    const auto c00 = C.coefficient(0, 0);
    CHECK(max_abs((c00 - Complex(0.0, hbar) * identity_op(basis)).mat) < 1e-15);
    CHECK(max_abs(C.coefficient(1, 1).mat) == 0.0);

    // Mixed mirror-field monomials: (x Q_1)(p Q_2) = x p Q_1 Q_2 while
    // (p Q_2)(x Q_1) picks up the -i hbar Q_2 Q_1 reordering term, so the
    // commutator is i hbar Q_1 Q_2 at grade (0,0).
    const auto Q1 = quadrature_Q(basis, 1, grid);
    const auto Q2 = quadrature_Q(basis, 2, grid);
    GradedOperator A{basis}, B{basis};
    A.add_term(1, 0, Q1);
    B.add_term(0, 1, Q2);
    const auto M = graded_commutator(A, B);
    CHECK(max_abs((M.coefficient(0, 0) - Complex(0.0, hbar) * (Q1 * Q2)).mat) < 1e-14);
    // Q_1 and Q_2 act on disjoint modes, so the grade-(1,1) parts cancel.
    CHECK(max_abs(M.coefficient(1, 1).mat) < 1e-15);
}

TEST_CASE("x-grades beyond the contract are dropped, p-grades are fatal", "[gauge_series]") {
    auto basis = FockBasis::make(1, 1);

    GradedOperator X{basis}, P{basis};
    X.add_term(1, 0, identity_op(basis));
    P.add_term(0, 1, identity_op(basis));

    // x^2 * x exceeds the truncation order and vanishes silently (the
    // expansion carries no grade-3 information by construction).
    const auto X3 = graded_multiply(graded_multiply(X, X), X);
    CHECK(X3.terms().empty());

    // p^3 would corrupt retained grades if dropped, so it throws instead.
    const auto P2 = graded_multiply(P, P);
    CHECK_THROWS_AS(graded_multiply(P2, P), std::domain_error);

    // Same contract at construction time.
    GradedOperator g{basis};
    CHECK_THROWS_AS(g.add_term(3, 0, identity_op(basis)), std::domain_error);
    CHECK_THROWS_AS(g.add_term(0, 3, identity_op(basis)), std::domain_error);
    CHECK_THROWS_AS(g.add_term(-1, 0, identity_op(basis)), std::domain_error);

    auto other = FockBasis::make(2, 1);
    GradedOperator h{basis};
    CHECK_THROWS_AS(h.add_term(0, 0, identity_op(other)), std::domain_error);
}

TEST_CASE("graded multiplication is associative on grade-1 triples", "[gauge_series]") {
    // With every factor of x-degree <= 1 no intermediate pair product
    // truncates, so both groupings agree with the exact algebra on the
    // retained grades and only the final grade-3 terms are dropped (equally).
    // The p-budget keeps the end-to-end degree within the hard cap.
    auto basis = FockBasis::make(2, 3);
    ModeGrid grid{kPi, 2};
    const auto pool = operator_pool(basis, grid);
    std::mt19937 rng(20260815);

    for (int trial = 0; trial < 6; ++trial) {
        const auto A = random_graded(basis, pool, rng, 1, 1);
        const auto B = random_graded(basis, pool, rng, 1, 1);
        const auto C = random_graded(basis, pool, rng, 1, 0);
        const auto left = graded_multiply(graded_multiply(A, B), C);
        const auto right = graded_multiply(A, graded_multiply(B, C));
        CHECK(graded_max_abs(left - right) < 1e-12);
    }
}

TEST_CASE("graded adjoint squares to the identity and detects Hermiticity", "[gauge_series]") {
    auto basis = FockBasis::make(2, 3);
    ModeGrid grid{kPi, 2};
    const auto pool = operator_pool(basis, grid);
    std::mt19937 rng(7);

    const auto A = random_graded(basis, pool, rng, 2, 2);
    CHECK(graded_max_abs(graded_adjoint(graded_adjoint(A)) - A) < 1e-13);

    // A + A^dag is Hermitian even though x^a p^b F monomials are not.
    const auto H = A + graded_adjoint(A);
    CHECK(graded_hermiticity_defect(H) < 1e-13);
    GradedOperator xp{basis};
    xp.add_term(1, 1, identity_op(basis));
    CHECK(graded_hermiticity_defect(xp) > 0.5 * hbar);  // xp - px = i hbar
}

TEST_CASE("generator structure and degenerate limits", "[gauge_series]") {
    // The coupling sum S is length-independent: the cavity length enters the
    // generator only through the explicit 1/d prefactors.
    {
        auto basis = FockBasis::make(3, 2);
        ModeGrid ga{kPi, 3}, gb{2.5, 3};
        const auto Sa = coupling_sum_S(basis, ga, mixing_matrix(ga, 1));
        const auto Sb = coupling_sum_S(basis, gb, mixing_matrix(gb, 1));
        CHECK(max_abs((Sa - Sb).mat) < 1e-14);
        CHECK(hermiticity_defect(Sa) < 1e-15);
        CHECK(std::abs(vacuum_expectation(Sa)) < 1e-15);

        // G carries exactly grades (1,0) and (2,0), with the grade-2 part
        // equal to -1/(2d) times the grade-1 part.
        const auto G = build_G(basis, ga, mixing_matrix(ga, 1), kPi);
        CHECK(G.terms().size() == 2);
        const auto g1 = G.coefficient(1, 0);
        const auto g2 = G.coefficient(2, 0);
        CHECK(max_abs((g1 + (2.0 * kPi) * g2).mat) < 1e-14);
        CHECK_FALSE(G.has_grade0_part());
        CHECK_FALSE(G.has_momentum_part());
    }

    // One retained mode: no partner to mix with, so S and G vanish.
    {
        auto basis = FockBasis::make(1, 3);
        ModeGrid grid{kPi, 1};
        const auto G = build_G(basis, grid, mixing_matrix(grid, 1), kPi);
        CHECK(graded_max_abs(G) == 0.0);
    }

    // Validation.
    {
        auto basis = FockBasis::make(2, 2);
        ModeGrid grid{kPi, 2};
        CHECK_THROWS_AS(build_G(basis, grid, mixing_matrix(grid, 1), 0.0), std::domain_error);
        CHECK_THROWS_AS(build_G(basis, grid, mixing_matrix(grid, 2), kPi), std::domain_error);
        CHECK_THROWS_AS(coupling_sum_S(FockBasis::make(3, 2), grid, mixing_matrix(grid, 1)),
                        std::domain_error);
    }
}

TEST_CASE("conjugation is unital, additive and Hermiticity-preserving", "[gauge_series]") {
    auto basis = FockBasis::make(2, 4);
    ModeGrid grid{kPi, 2};
    const auto G = build_G(basis, grid, mixing_matrix(grid, 1), kPi);
    const auto pool = operator_pool(basis, grid);
    std::mt19937 rng(99);

    // G = 0 conjugates to the identity map, bitwise.
    {
        GradedOperator zero{basis};
        const auto O = random_graded(basis, pool, rng, 2, 1);
        CHECK(graded_max_abs(conjugate_by_T(O, zero) - O) == 0.0);
    }

    // Pure mirror-position polynomials commute with the generator (an
    // x-dependent field operator), so they conjugate to themselves.  Mirror
    // momentum does not: [G, p] is the p_kin story, tested via the audit.
    {
        GradedOperator O{basis};
        O.add_term(1, 0, identity_op(basis));
        O.add_term(2, 0, identity_op(basis));
        const auto got = conjugate_by_T(O, G);
        CHECK(graded_max_abs(got - O) == 0.0);
    }

    // Additivity (linearity of the commutator series).
    {
        const auto O1 = random_graded(basis, pool, rng, 1, 1);
        const auto O2 = random_graded(basis, pool, rng, 1, 1);
        const auto lhs = conjugate_by_T(O1 + O2, G);
        const auto rhs = conjugate_by_T(O1, G) + conjugate_by_T(O2, G);
        CHECK(graded_max_abs(lhs - rhs) < 1e-12);
    }

    // Unitary conjugation preserves Hermiticity on the operators the model
    // composes: p-free graded operators (inputs normalized to unit magnitude
    // so the absolute tolerance has a fixed meaning) ...
    {
        const auto A = random_graded(basis, pool, rng, 2, 0);
        auto H = A + graded_adjoint(A);
        H = (1.0 / graded_max_abs(H)) * H;
        CHECK(graded_hermiticity_defect(H) < 1e-14);
        CHECK(graded_hermiticity_defect(conjugate_by_T(H, G)) < 1e-12);
    }

    // ... and symmetrized xp-terms whose field coefficient commutes with the
    // coupling sum (here: a scalar).
    {
        GradedOperator H{basis};
        H.add_term(1, 1, 0.7 * identity_op(basis));
        H.add_term(0, 0, Complex(0.0, -0.5 * hbar * 0.7) * identity_op(basis));
        CHECK(graded_hermiticity_defect(H) < 1e-15);
        CHECK(graded_hermiticity_defect(conjugate_by_T(H, G)) < 1e-12);
    }

    // Boundary of the guarantee: an xp-term whose coefficient does not
    // commute with the coupling sum pushes true x^3 p content out of the
    // window, and the adjoint of that dropped grade would have closed
    // Hermiticity at grade (2,0).  The leak is real and of order [S, Q_1];
    // the Hamiltonian families are immune because their leak carries [S, S].
    {
        GradedOperator H{basis};
        H.add_term(1, 1, quadrature_Q(basis, 1, grid));
        H.add_term(0, 0, Complex(0.0, -0.5 * hbar) * quadrature_Q(basis, 1, grid));
        CHECK(graded_hermiticity_defect(H) < 1e-15);
        CHECK(graded_hermiticity_defect(conjugate_by_T(H, G)) > 0.1);
    }

    // The generator must have no x-free part and no mirror momentum.
    {
        GradedOperator bad1 = G;
        bad1.add_term(0, 0, quadrature_Q(basis, 1, grid));
        CHECK_THROWS_AS(conjugate_by_T(G, bad1), std::domain_error);
        GradedOperator bad2 = G;
        bad2.add_term(1, 1, identity_op(basis));
        CHECK_THROWS_AS(conjugate_by_T(G, bad2), std::domain_error);
    }
}

TEST_CASE("derivation audit passes every hard identity", "[gauge_series]") {
    SystemParams p;
    p.K = 3;
    p.N = 3;
    p.d = kPi;

    const auto rep = audit_appendix_B(p);

    CHECK(rep.field_modes == 3);
    CHECK(rep.nominal_cap == 3);
    CHECK(rep.enlarged_cap == 9);
    CHECK(rep.checks.size() == 9);
    CHECK(rep.passed());
    // Measured residuals sit near 3e-14; the contract is 1e-11.
    CHECK(rep.max_residual() <= 1e-11);

    for (const char* name :
         {"series_termination", "pkin_to_p", "Q_transform", "P_transform",
          "A1_kinetic_invariance", "A2_potential_transform", "A3_linear_transform",
          "A4_quadratic_invariance", "field_assembly"}) {
        const auto& c = check_named(rep, name);
        CHECK(c.passed);
        CHECK(c.tolerance == 1e-11);
    }

    // The quadratic coupling commutes with the generator at every retained
    // grade, so its invariance holds bitwise, not just numerically.
    CHECK(check_named(rep, "A4_quadratic_invariance").max_residual == 0.0);

    // Every transform check reports per-grade residuals on the nominal block.
    for (const auto& r : check_named(rep, "Q_transform").residuals) {
        CHECK(r.grade.b == 0);
        CHECK(r.residual <= 1e-11);
    }
}

TEST_CASE("derivation audit reports the printed-coefficient findings", "[gauge_series]") {
    SystemParams p;
    p.K = 3;
    p.N = 3;
    p.d = kPi;
    const auto rep = audit_appendix_B(p);
    const ModeGrid grid = p.grid();

    // The x^2-grade vacuum bookkeeping: computed 3/2, printed 1.
    {
        const auto& f = finding_named(rep, "hint_vac_x2_zero_point_coefficient");
        CHECK(std::abs(f.computed - 1.5) < 1e-10);
        CHECK(f.printed == 1.0);
    }

    // The F_1 vacuum sum: printed form gains the diagonal sum_k w_k / 4.
    {
        const auto& f = finding_named(rep, "hint_vac_f1_sum");
        CHECK(std::abs(f.computed - vacuum_sum_F1(grid)) < 1e-14);
        double diag = 0.0;
        for (int k = 1; k <= p.K; ++k) diag += 0.25 * grid.omega(k);
        CHECK(std::abs(f.printed - (f.computed / hbar + diag)) < 1e-12);
    }

    // Frequency-shift prefactor: same hbar and k != j omissions.
    {
        const auto& f = finding_named(rep, "renormalized_frequency_shift");
        const double shift = renormalized_frequency_sq(p) - p.Omega * p.Omega;
        CHECK(std::abs(f.computed - shift) < 1e-12);
        CHECK(f.printed > f.computed);
    }

    // Denominator power and frequency power discrepancies.
    {
        const auto& f = finding_named(rep, "q_transform_x2_denominator");
        CHECK(std::abs(f.computed - 1.0 / (2.0 * kPi * kPi)) < 1e-15);
        CHECK(std::abs(f.printed - 1.0 / (2.0 * kPi)) < 1e-15);
        const auto& g = finding_named(rep, "potential_transform_frequency_power");
        CHECK(g.computed == 2.0);
        CHECK(g.printed == 1.0);
    }

    // Ladder-coefficient findings carry the fitted values.
    {
        const auto& lin = finding_named(rep, "ladder_expansion_linear_coefficient");
        CHECK(std::abs(lin.computed + 1.0 / (2.0 * kPi)) < 1e-6);
        CHECK(lin.printed == -0.5);
        const auto& quad = finding_named(rep, "ladder_expansion_quadratic_coefficient");
        CHECK(std::abs(quad.computed - 1.0 / (4.0 * kPi * kPi)) < 1e-6);
        CHECK(quad.printed == 0.25);
    }

    // The two quoted F_1 constructions agree exactly at fixed cutoff; the
    // recorded deviation is pure roundoff.
    {
        const auto& f = finding_named(rep, "f1_construction_deviation");
        CHECK(f.computed < 1e-13);
        CHECK(f.printed == 0.0);
    }

    // Preconditions: the audit needs at least two modes and two quanta.
    SystemParams bad = p;
    bad.K = 1;
    CHECK_THROWS_AS(audit_appendix_B(bad), std::domain_error);
    bad = p;
    bad.N = 1;
    CHECK_THROWS_AS(audit_appendix_B(bad), std::domain_error);
}

TEST_CASE("two-route assembly of the transformed Hamiltonian agrees", "[gauge_series]") {
    SystemParams p;
    p.K = 3;
    p.N = 3;
    p.d = kPi;
    p.Omega = 1.0;
    p.m = 1.0;

    const auto got = assemble_H_prime(p);

    // Grades with x-degree <= 1 close to roundoff (measured ~2e-14); the
    // grade-2 entry is dominated by depth-4 commutator chains and is
    // reported rather than asserted against the same bar.
    CHECK(got.low_grade_residual <= 1e-11);
    CHECK(got.max_residual <= 1e-10);
    CHECK_FALSE(got.grade_residuals.empty());

    // Both routes produce Hermitian graded operators (the conjugated route
    // accumulates roundoff through depth-4 chains on matrices of magnitude
    // ~ w_K^2, hence the looser absolute bar).
    CHECK(graded_hermiticity_defect(got.direct) < 1e-12);
    CHECK(graded_hermiticity_defect(got.conjugated) < 1e-11);

    // The direct route carries the expected grade structure.
    CHECK(max_abs(got.direct.coefficient(0, 2).mat) > 0.0);
    CHECK(max_abs(got.direct.coefficient(1, 0).mat) > 0.0);
    CHECK(max_abs(got.direct.coefficient(2, 0).mat) > 0.0);

    // A single retained mode has no mixing at all: the generator vanishes
    // and the two routes coincide bitwise.
    SystemParams p1 = p;
    p1.K = 1;
    const auto single = assemble_H_prime(p1);
    CHECK(single.max_residual == 0.0);
}

TEST_CASE("derivation audit holds at the widest supported cutoffs", "[gauge_series][slow]") {
    // K = 4 with the enlarged cap means a 10^4-dimensional audit basis; this
    // case takes longer than the rest of the suite combined but pins the
    // identities at the largest shape the contract names.
    SystemParams p;
    p.K = 4;
    p.N = 3;
    p.d = 2.5;

    const auto rep = audit_appendix_B(p);
    CHECK(rep.passed());
    CHECK(rep.max_residual() <= 1e-11);

    const auto asmb = assemble_H_prime(p);
    CHECK(asmb.low_grade_residual <= 1e-11);

    // K = 2 closes the small end of the range.
    SystemParams q;
    q.K = 2;
    q.N = 2;
    q.d = kPi;
    const auto rep2 = audit_appendix_B(q);
    CHECK(rep2.passed());
    CHECK(rep2.max_residual() <= 1e-11);
}
