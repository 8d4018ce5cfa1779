#pragma once

// Final-model spectra on the joint mirror-field space: the quadratic-order
// Hamiltonian with selectable correction terms, desk-scale diagonalization
// (dense or deterministic Lanczos), dressed-vacuum populations, mechanical
// branch identification, an independent perturbative oracle for the ground
// energy, and the coupling-strength scaling ratios.
//
// Every coupling is expanded into normal-ordered ladder monomials over the
// joint basis (annihilators applied first), so each term is the exact crop
// of its untruncated operator and exactly Hermitian; products of separately
// cropped factors are never used.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "operators.hpp"

namespace optomech {

// ---------------------------------------------------------------------------
// Coupling-strength bookkeeping.
// ---------------------------------------------------------------------------

struct ScalingRatios {
    double lambda = 0.0;         // (x_zpf/d)(w_pl/Omega)
    double ratio_F0_quad = 0.0;  // (x_zpf/d) * lambda
    double ratio_F1_quad = 0.0;  // (Omega/w_1) * lambda^2
};

inline ScalingRatios scaling_ratios(const SystemParams& params) {
    params.validate();
    if (!(params.omega_pl > 0.0))
        throw std::domain_error("scaling_ratios: omega_pl must be set (> 0)");
    const ModeGrid grid = params.grid();
    if (params.omega_pl < grid.omega(params.K) * (1.0 - 1e-12))
        throw std::domain_error("scaling_ratios: cutoff below the highest retained mode");
    const double xr = params.x_zpf() / params.d;
    ScalingRatios r;
    r.lambda = xr * params.omega_pl / params.Omega;
    r.ratio_F0_quad = xr * r.lambda;
    r.ratio_F1_quad = (params.Omega / grid.omega(1)) * r.lambda * r.lambda;
    return r;
}

// Mirror mass realizing a requested coupling strength at fixed Omega, d and
// cutoff: lambda^2 = hbar w_pl^2 / (2 m Omega^3 d^2).
inline double mass_for_lambda(double lambda, double Omega, double d, double omega_pl) {
    if (!(lambda > 0.0) || !(Omega > 0.0) || !(d > 0.0) || !(omega_pl > 0.0))
        throw std::domain_error("mass_for_lambda: all arguments must be positive");
    return hbar * omega_pl * omega_pl / (2.0 * Omega * Omega * Omega * d * d * lambda * lambda);
}

inline SystemParams params_at_lambda(SystemParams base, double lambda) {
    base.m = mass_for_lambda(lambda, base.Omega, base.d, base.omega_pl);
    return base;
}

// ---------------------------------------------------------------------------
// Hamiltonian assembly.
// ---------------------------------------------------------------------------

namespace detail {

// Appends sum_{k,s} L(k,s) * scale * :(a_k + a^dag_k)(a_s + a^dag_s): times
// one mirror monomial to an accumulating sum (the c-number part of the pair
// expansion is the caller's business).
inline void add_pair_coupling(MonomialSum& s, const Eigen::MatrixXd& L, double scale,
                              const std::vector<int>& mir_create,
                              const std::vector<int>& mir_destroy) {
    const int K = s.basis->field_modes();
    for (int k = 1; k <= K; ++k) {
        const int sk = s.basis->slot_of_mode(k);
        for (int q = 1; q <= K; ++q) {
            const double w = L(k - 1, q - 1) * scale;
            if (w == 0.0) continue;
            const int sq = s.basis->slot_of_mode(q);
            const auto add = [&](std::vector<int> cr, std::vector<int> de) {
                cr.insert(cr.end(), mir_create.begin(), mir_create.end());
                de.insert(de.end(), mir_destroy.begin(), mir_destroy.end());
                s.add(Complex(w, 0.0), {std::move(cr), std::move(de)});
            };
            add({}, {sk, sq});
            add({sq}, {sk});
            add({sk}, {sq});
            add({sk, sq}, {});
        }
    }
}

// The four monomial channels of x^2 = x_zpf^2 (bb + b^dag b^dag + 2 b^dag b + 1).
struct MirrorChannel {
    std::vector<int> create;
    std::vector<int> destroy;
    double weight;
};

inline std::vector<MirrorChannel> x_channels(int mir) {
    return {{{mir}, {}, 1.0}, {{}, {mir}, 1.0}};
}

inline std::vector<MirrorChannel> x2_channels(int mir) {
    return {{{mir, mir}, {}, 1.0}, {{}, {mir, mir}, 1.0}, {{mir}, {mir}, 2.0}, {{}, {}, 1.0}};
}

}  // namespace detail

// The quadratic-order model Hamiltonian on the joint space:
//   H = hbar Omega (n_b + 1/2) + sum_k hbar w_k n_k  -  x f
//       [+ (x^2/d^2) F_1]                (include_F1: static frequency
//                                         renormalization + optical spring)
//       [+ (3/2)(x^2/d^2) :F_0:]         (include_quadratic_F0: dynamical
//                                         part of the quadratic pressure)
// with f = :F_0:/d the normal-ordered radiation-pressure force.  The linear
// coupling can be disabled to recover the exactly uncoupled model.
inline FieldOperator build_full_hamiltonian(const SystemParams& params, bool include_F1,
                                            bool include_quadratic_F0,
                                            bool include_linear = true) {
    params.validate();
    const auto basis = FockBasis::make(params);
    const ModeGrid grid = params.grid();
    const int K = params.K;
    const int mir = basis->mirror_slot();
    const double xz = params.x_zpf();
    const double d = params.d;

    MonomialSum s{basis};

    // Free part, diagonal by construction.
    s.add(Complex(hbar * params.Omega, 0.0), {{mir}, {mir}});
    s.constant += Complex(0.5 * hbar * params.Omega, 0.0);
    for (int k = 1; k <= K; ++k) {
        const int sk = basis->slot_of_mode(k);
        s.add(Complex(hbar * grid.omega(k), 0.0), {{sk}, {sk}});
    }

    const auto L0 = detail::F_pair_weights(0, grid, mixing_matrix(grid, 0), K);

    if (include_linear) {
        // -x f: mirror position against the normal-ordered pressure.
        for (const auto& ch : detail::x_channels(mir))
            detail::add_pair_coupling(s, L0, -(xz / d) * ch.weight, ch.create, ch.destroy);
    }

    if (include_quadratic_F0) {
        for (const auto& ch : detail::x2_channels(mir))
            detail::add_pair_coupling(s, L0, (1.5 * xz * xz / (d * d)) * ch.weight, ch.create,
                                      ch.destroy);
    }

    if (include_F1) {
        const auto L1 = detail::F_pair_weights(1, grid, mixing_matrix(grid, 1), K);
        // The c-number part of F_1 renormalizes the mechanical frequency; the
        // normal part is the optical-spring operator.  Both attach to the
        // same exact-crop x^2 channels, at the same cutoff.
        const double vac1 = L1.diagonal().sum();
        for (const auto& ch : detail::x2_channels(mir)) {
            const double scale = (xz * xz / (d * d)) * ch.weight;
            detail::add_pair_coupling(s, L1, scale, ch.create, ch.destroy);
            std::vector<int> cr = ch.create, de = ch.destroy;
            s.add(Complex(scale * vac1, 0.0), {std::move(cr), std::move(de)});
        }
    }

    return s.build(true);
}

// ---------------------------------------------------------------------------
// Diagonalization.
// ---------------------------------------------------------------------------

enum class SolverKind { automatic, dense, lanczos };

struct EigenSolution {
    Eigen::VectorXd values;     // ascending, n_eigen entries
    Eigen::MatrixXcd vectors;   // matching columns, unit norm
    std::string solver;         // "dense" or "lanczos"
    int iterations = 0;         // Krylov steps (0 for dense)
    double max_residual = 0.0;  // max ||H x - theta x||_inf over returned pairs
};

namespace detail {

inline EigenSolution dense_lowest(const SparseC& H, int n_eigen) {
    const Eigen::MatrixXcd D(H);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(D);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("diagonalize: dense solver failed to converge");
    EigenSolution out;
    out.values = es.eigenvalues().head(n_eigen);
    out.vectors = es.eigenvectors().leftCols(n_eigen);
    out.solver = "dense";
    return out;
}

// Lanczos with full reorthogonalization and a fixed start vector; entirely
// deterministic.  Converges the lowest `n_eigen` Ritz pairs to ~1e-12
// relative and throws with diagnostics if the Krylov budget is exhausted.
inline EigenSolution lanczos_lowest(const SparseC& H, int n_eigen) {
    const Eigen::Index n = H.rows();
    const int max_m = static_cast<int>(std::min<Eigen::Index>(n, 420));

    const auto start_vector = [&](int seed_shift) {
        Eigen::VectorXcd v(n);
        for (Eigen::Index i = 0; i < n; ++i)
            v(i) = Complex(1.3 + std::sin(0.7 * static_cast<double>(i + 1) +
                                          0.37 * static_cast<double>(seed_shift)),
                           0.0);
        v.normalize();
        return v;
    };

    std::vector<Eigen::VectorXcd> V;
    std::vector<double> alpha, beta;  // beta[j] couples v_j and v_{j+1}
    V.push_back(start_vector(0));
    int restarts = 0;

    double scale = 1.0;
    const auto reorthogonalize = [&](Eigen::VectorXcd& w) {
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& u : V) w -= u.dot(w) * u;
    };

    Eigen::MatrixXd S;
    Eigen::VectorXd theta;
    int converged_upto = 0;

    while (static_cast<int>(alpha.size()) < max_m) {
        // One Lanczos step.
        Eigen::VectorXcd w = H * V.back();
        const double a = V.back().dot(w).real();
        alpha.push_back(a);
        reorthogonalize(w);
        double b = w.norm();
        scale = std::max({scale, std::abs(a), b});
        if (b < 1e-13 * scale) {
            // Invariant subspace exhausted: deflate with a fresh deterministic
            // direction, or stop when the space is gone.
            if (static_cast<Eigen::Index>(V.size()) >= n) { beta.push_back(0.0); break; }
            Eigen::VectorXcd f = start_vector(++restarts);
            reorthogonalize(f);
            if (f.norm() < 1e-10) { beta.push_back(0.0); break; }
            f.normalize();
            beta.push_back(0.0);
            V.push_back(std::move(f));
        } else {
            beta.push_back(b);
            V.push_back(w / b);
        }

        const int m = static_cast<int>(alpha.size());
        if (m < n_eigen || m % 10 != 0) continue;

        // Ritz pairs of the tridiagonal section.
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            T(i, i) = alpha[static_cast<std::size_t>(i)];
            if (i + 1 < m) {
                T(i, i + 1) = beta[static_cast<std::size_t>(i)];
                T(i + 1, i) = beta[static_cast<std::size_t>(i)];
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        theta = es.eigenvalues();
        S = es.eigenvectors();
        converged_upto = 0;
        const double blast = beta.back();
        for (int i = 0; i < n_eigen && i < m; ++i) {
            if (std::abs(blast * S(m - 1, i)) <= 1e-12 * scale)
                ++converged_upto;
            else
                break;
        }
        if (converged_upto >= n_eigen) break;
    }

    const int m = static_cast<int>(alpha.size());
    if (converged_upto < n_eigen) {
        std::ostringstream msg;
        msg << "diagonalize: Lanczos did not converge " << n_eigen << " pairs after " << m
            << " iterations (converged " << converged_upto << ")";
        throw std::runtime_error(msg.str());
    }

    EigenSolution out;
    out.values = theta.head(n_eigen);
    out.vectors = Eigen::MatrixXcd::Zero(n, n_eigen);
    for (int i = 0; i < n_eigen; ++i) {
        Eigen::VectorXcd x = Eigen::VectorXcd::Zero(n);
        for (int j = 0; j < m; ++j) x += S(j, i) * V[static_cast<std::size_t>(j)];
        x.normalize();
        out.vectors.col(i) = x;
    }
    out.solver = "lanczos";
    out.iterations = m;
    return out;
}

}  // namespace detail

inline EigenSolution diagonalize(const FieldOperator& H, int n_eigen,
                                 SolverKind kind = SolverKind::automatic) {
    if (!H.basis) throw std::domain_error("diagonalize: operator has no basis");
    const auto dim = static_cast<Eigen::Index>(H.dim());
    if (n_eigen < 1 || n_eigen > dim)
        throw std::domain_error("diagonalize: n_eigen out of range");
    const double scale = std::max(1.0, max_abs(H.mat));
    if (hermiticity_defect(H) > 1e-10 * scale)
        throw std::domain_error("diagonalize: operator is not Hermitian");

    const bool dense = (kind == SolverKind::dense) ||
                       (kind == SolverKind::automatic && dim < 4000);
    EigenSolution out =
        dense ? detail::dense_lowest(H.mat, n_eigen) : detail::lanczos_lowest(H.mat, n_eigen);

    for (int i = 0; i < n_eigen; ++i) {
        const Eigen::VectorXcd r =
            H.mat * out.vectors.col(i) - out.values(i) * out.vectors.col(i);
        out.max_residual = std::max(out.max_residual, r.cwiseAbs().maxCoeff());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Spectrum extraction.
// ---------------------------------------------------------------------------

struct SpectrumResult {
    BasisPtr basis;
    Eigen::VectorXd eigenvalues;   // ascending
    Eigen::MatrixXcd eigenvectors; // matching columns
    Eigen::VectorXcd ground_state;
    std::vector<double> mode_populations;  // <n_k> in the ground state
    double mirror_population = 0.0;        // <n_b>
    double mechanical_gap = 0.0;
    double lambda = 0.0;
    double ratio_quad_F0 = 0.0;
    double ratio_quad_F1 = 0.0;
    std::string solver;
    int iterations = 0;
    double max_residual = 0.0;
};

// Excitation energy of the eigenstate with maximal single-phonon character
// |<excited| b^dag |ground>|.  Branch hybridization near Omega = w_1 makes
// energy ordering unreliable; two candidates within 1% of each other are an
// ambiguity, surfaced as an error rather than resolved silently.
inline double mechanical_gap(const SpectrumResult& r, const SystemParams& params) {
    if (!r.basis || !r.basis->include_mirror())
        throw std::domain_error("mechanical_gap: result lacks a mirror slot");
    const auto n = r.eigenvalues.size();
    if (n < 2) throw std::domain_error("mechanical_gap: need at least two eigenpairs");

    const auto bdag = creation(r.basis, r.basis->mirror_slot());
    const Eigen::VectorXcd target = bdag.mat * r.ground_state;
    int best = -1, second = -1;
    double best_ovl = -1.0, second_ovl = -1.0;
    for (Eigen::Index i = 1; i < n; ++i) {
        const double ovl = std::abs(r.eigenvectors.col(i).dot(target));
        if (ovl > best_ovl) {
            second = best; second_ovl = best_ovl;
            best = static_cast<int>(i); best_ovl = ovl;
        } else if (ovl > second_ovl) {
            second = static_cast<int>(i); second_ovl = ovl;
        }
    }
    if (second >= 0 && second_ovl >= 0.99 * best_ovl) {
        std::ostringstream msg;
        msg << "mechanical_gap: ambiguous branch near Omega = " << params.Omega
            << ": candidate " << best << " (E-E0 = " << r.eigenvalues(best) - r.eigenvalues(0)
            << ", overlap " << best_ovl << ") vs candidate " << second
            << " (E-E0 = " << r.eigenvalues(second) - r.eigenvalues(0) << ", overlap "
            << second_ovl << ")";
        throw std::runtime_error(msg.str());
    }
    return r.eigenvalues(best) - r.eigenvalues(0);
}

struct SpectrumOptions {
    bool include_F1 = false;
    bool include_quadratic_F0 = false;
    bool include_linear = true;
    int n_eigen = 12;
    SolverKind solver = SolverKind::automatic;
};

inline SpectrumResult compute_spectrum(const SystemParams& params,
                                       const SpectrumOptions& opt = {}) {
    const auto H = build_full_hamiltonian(params, opt.include_F1, opt.include_quadratic_F0,
                                          opt.include_linear);
    const int n_eigen = std::min<int>(opt.n_eigen, static_cast<int>(H.dim()));
    auto sol = diagonalize(H, n_eigen, opt.solver);

    SpectrumResult r;
    r.basis = H.basis;
    r.eigenvalues = std::move(sol.values);
    r.eigenvectors = std::move(sol.vectors);
    r.ground_state = r.eigenvectors.col(0);
    r.solver = std::move(sol.solver);
    r.iterations = sol.iterations;
    r.max_residual = sol.max_residual;

    // Populations are diagonal in the Fock basis: read them off the tuples.
    r.mode_populations.assign(static_cast<std::size_t>(params.K), 0.0);
    for (std::size_t i = 0; i < r.basis->dim(); ++i) {
        const double w = std::norm(r.ground_state(static_cast<Eigen::Index>(i)));
        if (w == 0.0) continue;
        const auto& t = r.basis->tuple(i);
        for (int k = 0; k < params.K; ++k)
            r.mode_populations[static_cast<std::size_t>(k)] += w * t[static_cast<std::size_t>(k)];
        r.mirror_population += w * t[static_cast<std::size_t>(r.basis->mirror_slot())];
    }

    r.mechanical_gap = mechanical_gap(r, params);

    if (params.omega_pl > 0.0) {
        const auto sr = scaling_ratios(params);
        r.lambda = sr.lambda;
        r.ratio_quad_F0 = sr.ratio_F0_quad;
        r.ratio_quad_F1 = sr.ratio_F1_quad;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Perturbative oracle.
// ---------------------------------------------------------------------------

// Second-order ground energy of the linear model, from the closed-form sum
// over the virtual states the coupling reaches from the vacuum: one phonon
// plus either a two-photon pair (k < j) or a double occupation (k = j).
// Shares no code with the diagonalization path.
inline double perturbative_ground_energy(const SystemParams& params) {
    params.validate();
    if (params.omega_pl > 0.0 && scaling_ratios(params).lambda >= 0.1)
        throw std::domain_error("perturbative_ground_energy: coupling too strong (lambda >= 0.1)");
    const ModeGrid grid = params.grid();
    const double xz = params.x_zpf();
    double sum = 0.0;
    for (int k = 1; k <= params.K; ++k) {
        const double wk = grid.omega(k);
        sum += wk * wk / (2.0 * (params.Omega + 2.0 * wk));
        for (int j = k + 1; j <= params.K; ++j)
            sum += wk * grid.omega(j) / (params.Omega + wk + grid.omega(j));
    }
    return 0.5 * hbar * params.Omega - hbar * (xz * xz / (params.d * params.d)) * sum;
}

// ---------------------------------------------------------------------------
// Sweeps.
// ---------------------------------------------------------------------------

struct SweepPoint {
    double lambda = 0.0;  // coupling coordinate (0 when sweeping another axis)
    SystemParams params;  // fully resolved parameters at this point
    SpectrumOptions options;
};

struct SweepRow {
    SweepPoint point;
    bool ok = false;
    std::string error;  // empty on success
    double ground_energy = 0.0;
    double gap = 0.0;
    double effect_vs_linear = 0.0;  // E0(model) - E0(linear-only), 0 when equal models
    SpectrumResult result;
};

// Evaluates each point independently; failures are recorded in-row and the
// sweep continues.  Row order equals input order.
inline std::vector<SweepRow> run_sweep(const std::vector<SweepPoint>& points) {
    std::vector<SweepRow> rows;
    rows.reserve(points.size());
    for (const auto& p : points) {
        SweepRow row;
        row.point = p;
        try {
            row.result = compute_spectrum(p.params, p.options);
            row.ground_energy = row.result.eigenvalues(0);
            row.gap = row.result.mechanical_gap;
            if (p.options.include_F1 || p.options.include_quadratic_F0) {
                SpectrumOptions base = p.options;
                base.include_F1 = false;
                base.include_quadratic_F0 = false;
                const auto lin = compute_spectrum(p.params, base);
                row.effect_vs_linear = row.ground_energy - lin.eigenvalues(0);
            }
            row.ok = true;
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

// Least-squares slope of log|y| against log(x); the scaling-exponent fit.
inline double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::domain_error("log_log_slope: need matching samples, at least two");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const auto n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || y[i] == 0.0)
            throw std::domain_error("log_log_slope: samples must be positive / nonzero");
        const double lx = std::log(x[i]);
        const double ly = std::log(std::abs(y[i]));
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace optomech
