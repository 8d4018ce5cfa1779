// Tour of the spectral layer: assemble the joint mirror-field Hamiltonian on
// a truncated Fock space, diagonalize it with and without the quadratic
// correction terms, and report how the ground energy and the mechanical gap
// move as the coupling is dialed.

#include <cstdio>

#include <optomech/spectra.hpp>

int main() {
    using namespace optomech;

    SystemParams base;
    base.Omega = 1.0;
    base.d = ModeGrid::pi();
    base.K = 3;
    base.N = 3;
    base.total_cap = 6;
    base.mirror_max = 6;
    base.omega_pl = 3.0;

    const double lambda = 0.02;
    const SystemParams p = params_at_lambda(base, lambda);
    const auto ratios = scaling_ratios(p);

    std::printf("operating point: Omega = %g, d = pi, K = %d, N = %d, C = %d\n", p.Omega, p.K,
                p.N, *p.total_cap);
    std::printf("coupling: lambda = %g  (mass resolved to %g)\n", ratios.lambda, p.m);
    std::printf("expected correction scales: F0-quad ~ %.3g, F1 ~ %.3g\n\n",
                ratios.ratio_F0_quad, ratios.ratio_F1_quad);

    SpectrumOptions linear_only;
    SpectrumOptions with_corrections;
    with_corrections.include_F1 = true;
    with_corrections.include_quadratic_F0 = true;

    const auto lin = compute_spectrum(p, linear_only);
    const auto cor = compute_spectrum(p, with_corrections);

    std::printf("%-34s %18s %18s\n", "", "linear coupling", "with corrections");
    std::printf("%-34s %18.12g %18.12g\n", "ground energy", lin.eigenvalues(0),
                cor.eigenvalues(0));
    std::printf("%-34s %18.12g %18.12g\n", "mechanical gap", lin.mechanical_gap,
                cor.mechanical_gap);
    std::printf("%-34s %18.3g %18.3g\n", "mirror population (ground state)",
                lin.mirror_population, cor.mirror_population);
    for (int k = 0; k < p.K; ++k)
        std::printf("mode %d population (ground state)  %18.3g %18.3g\n", k + 1,
                    lin.mode_populations[k], cor.mode_populations[k]);
    std::printf("\nsolver: %s, max residual %.3g\n", lin.solver.c_str(), lin.max_residual);

    std::printf("\nground-energy shift from the pair correction across a coupling decade:\n");
    std::printf("%10s %22s %22s\n", "lambda", "E0(corrected) - E0(lin)", "shift / lambda^2");
    for (int i = 0; i < 5; ++i) {
        const double lam = 0.005 * std::pow(10.0, i / 4.0);
        const SystemParams q = params_at_lambda(base, lam);
        SpectrumOptions f1;
        f1.include_F1 = true;
        const double shift =
            compute_spectrum(q, f1).eigenvalues(0) - compute_spectrum(q, {}).eigenvalues(0);
        std::printf("%10.4g %22.6g %22.6g\n", lam, shift, shift / (lam * lam));
    }

    std::printf("\nsecond-order perturbation theory at the operating point:\n");
    std::printf("  E0 (exact)         = %.12g\n", lin.eigenvalues(0));
    std::printf("  E0 (perturbative)  = %.12g\n", perturbative_ground_energy(p));
    return 0;
}
