// Tour of the mode-mixing layer: the closed-form overlap coefficients, their
// quadrature cross-check, and the completeness sum rule that bounds how much
// of the derivative couplings a finite mode truncation retains.

#include <cstdio>

#include <optomech/mode_mixing.hpp>

int main() {
    using namespace optomech;

    const int K = 4;
    const ModeGrid grid(ModeGrid::pi(), K);

    std::printf("mode grid: d = pi, K = %d, omega_k = k\n\n", K);

    std::printf("overlap coefficients g_jk (closed form vs quadrature):\n");
    std::printf("%4s %4s %16s %16s %12s\n", "j", "k", "closed", "quadrature", "deviation");
    for (int j = 1; j <= K; ++j) {
        for (int k = 1; k <= K; ++k) {
            const double closed = overlap_coefficient(j, k);
            const double quad = overlap_coefficient_quadrature(j, k, grid);
            std::printf("%4d %4d %16.9g %16.9g %12.3g\n", j, k, closed, quad,
                        std::abs(closed - quad));
        }
    }

    std::printf("\nantisymmetry: g_jk = -g_kj\n");
    for (int j = 1; j <= 3; ++j)
        for (int k = j + 1; k <= 3; ++k)
            std::printf("  j=%d k=%d: %13.6g vs %13.6g\n", j, k, overlap_coefficient(j, k),
                        -overlap_coefficient(k, j));

    std::printf("\ncompleteness sum rule, extrapolated from cutoffs {64,128,256}:\n");
    std::printf("%4s %4s %14s %14s %14s %14s\n", "j", "k", "S=64", "S=128", "S=256",
                "extrapolated");
    for (int j = 1; j <= 3; ++j)
        for (int k = j; k <= 3; ++k) {
            const auto ce = completeness_extrapolation(j, k, grid);
            std::printf("%4d %4d %14.6g %14.6g %14.6g %14.6g%s\n", j, k, ce.residuals[0],
                        ce.residuals[1], ce.residuals[2], ce.extrapolated,
                        ce.monotone ? "" : "  (not monotone)");
        }

    std::printf("\nfirst- and second-order mixing matrices at K = %d:\n", K);
    for (int order = 1; order <= 2; ++order) {
        const auto mix = mixing_matrix(grid, order);
        std::printf("order %d:\n", order);
        for (int j = 1; j <= K; ++j) {
            std::printf("   ");
            for (int k = 1; k <= K; ++k) std::printf(" %12.5g", mix(j, k));
            std::printf("\n");
        }
    }
    return 0;
}
