// Command-line front end: strict JSON configuration, four subcommands
// (coefficients, audit, spectrum, sweep), deterministic CSV/JSON emission.
//
// Exit codes: 0 success, 1 algebra-audit assertion failure, 2 configuration
// or I/O error, 3 numerical failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <optomech/gauge_series.hpp>
#include <optomech/output.hpp>
#include <optomech/run_config.hpp>

namespace {

using namespace optomech;

constexpr int kExitOk = 0;
constexpr int kExitAuditFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

// ---------------------------------------------------------------------------
// Negative-control fault registry (test-only).  Each fault perturbs the
// computed side of one audited identity; a healthy audit must go red.
// ---------------------------------------------------------------------------

struct FaultPlan {
    bool gauge_sign = false;        // negate the gauge generator build
    bool mixing_transpose = false;  // transpose the order-1 mixing matrix
    bool vacuum_scale = false;      // scale computed vacuum sums by 1.001
};

FaultPlan parse_faults(const std::string& name) {
    FaultPlan f;
    if (name.empty()) return f;
    if (name == "gauge-sign")
        f.gauge_sign = true;
    else if (name == "mixing-transpose")
        f.mixing_transpose = true;
    else if (name == "vacuum-scale")
        f.vacuum_scale = true;
    else
        throw ConfigError("unknown fault \"" + name +
                          "\" (known: gauge-sign, mixing-transpose, vacuum-scale)");
    return f;
}

// ---------------------------------------------------------------------------
// Shared plumbing.
// ---------------------------------------------------------------------------

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file \"" + path + "\"");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string model_string(const RunConfig& c) {
    if (!c.model_f0quad && !c.model_f1) return "linear_only";
    std::string s;
    if (c.model_f0quad) s += "quadratic_f0";
    if (c.model_f1) s += (s.empty() ? "" : "+") + std::string("quadratic_f1");
    return s;
}

void stamp_meta(Table& t, const RunConfig& c, const std::string& command) {
    const int p = c.output.precision;
    t.add_meta("config_hash", Cell::text(hex64(fnv1a64(canonical_config(c)))));
    t.add_meta("command", Cell::text(command));
    t.add_meta("model", Cell::text(model_string(c)));
    t.add_meta("modes", Cell::integer(c.system.K));
    t.add_meta("fock_cap", Cell::integer(c.system.N));
    if (c.system.total_cap)
        t.add_meta("total_cap", Cell::integer(*c.system.total_cap));
    else
        t.add_meta("total_cap", Cell::text("none"));
    t.add_meta("mirror_cap", Cell::integer(c.system.mirror_cap()));
    t.add_meta("Omega", Cell::num(c.system.Omega, p));
    t.add_meta("cavity_length", Cell::num(c.system.d, p));
    t.add_meta("mass", Cell::num(c.system.m, p));
    t.add_meta("omega_pl", Cell::num(c.system.omega_pl, p));
    if (c.lambda > 0.0) t.add_meta("lambda", Cell::num(c.lambda, p));
}

int emit_table(const Table& t, const RunConfig& c) {
    if (c.output.path.empty()) {
        write_table(std::cout, t, c.output.format);
        return kExitOk;
    }
    std::ofstream out(c.output.path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file \"" + c.output.path + "\"");
    write_table(out, t, c.output.format);
    out.flush();
    if (!out) throw ConfigError("failed writing output file \"" + c.output.path + "\"");
    return kExitOk;
}

// ---------------------------------------------------------------------------
// coefficients: mode-mixing table with oracle and completeness columns.
// ---------------------------------------------------------------------------

int cmd_coefficients(const RunConfig& c) {
    const ModeGrid grid = c.system.grid();
    const int p = c.output.precision;
    Table t;
    t.columns = {"j",
                 "k",
                 "g_closed",
                 "g_quadrature",
                 "closed_vs_quadrature",
                 "completeness_extrapolated",
                 "completeness_monotone"};
    for (int j = 1; j <= c.system.K; ++j) {
        for (int k = 1; k <= c.system.K; ++k) {
            const double g = overlap_coefficient(j, k);
            const double gq = overlap_coefficient_quadrature(j, k, grid);
            const auto ce = completeness_extrapolation(j, k, grid);
            t.rows.push_back({Cell::integer(j), Cell::integer(k), Cell::num(g, p),
                              Cell::num(gq, p), Cell::num(std::abs(g - gq), p),
                              Cell::num(ce.extrapolated, p), Cell::boolean(ce.monotone)});
        }
    }
    stamp_meta(t, c, "coefficients");
    return emit_table(t, c);
}

// ---------------------------------------------------------------------------
// audit: every closed-form identity the library exposes, one line each,
// followed by the printed-coefficient findings.
// ---------------------------------------------------------------------------

struct Identity {
    std::string section;
    std::string name;
    double residual = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    std::string note;
};

int cmd_audit(const RunConfig& c, const FaultPlan& faults) {
    const ModeGrid grid = c.system.grid();
    const int K = c.system.K;
    std::vector<Identity> ids;
    const auto check = [&](std::string section, std::string name, double residual,
                           double tolerance, std::string note = "") {
        ids.push_back({std::move(section), std::move(name), residual, tolerance,
                       residual <= tolerance, std::move(note)});
    };

    // --- mode mixing ---------------------------------------------------------
    {
        double worst = 0.0;
        for (int j = 1; j <= 6; ++j)
            for (int k = 1; k <= 6; ++k)
                worst = std::max(worst, std::abs(overlap_coefficient(j, k) -
                                                 overlap_coefficient_quadrature(j, k, grid)));
        check("mode_mixing", "closed_form_vs_quadrature", worst, 1e-8, "j,k <= 6");

        double anti = 0.0;
        for (int j = 1; j <= 12; ++j)
            for (int k = 1; k <= 12; ++k)
                anti = std::max(anti,
                                std::abs(overlap_coefficient(j, k) + overlap_coefficient(k, j)));
        check("mode_mixing", "antisymmetry", anti, 1e-15, "j,k <= 12");

        double worst_extrap = 0.0;
        bool monotone = true;
        for (int j = 1; j <= std::min(K, 3); ++j)
            for (int k = 1; k <= std::min(K, 3); ++k) {
                const auto ce = completeness_extrapolation(j, k, grid);
                worst_extrap = std::max(worst_extrap, ce.extrapolated);
                monotone = monotone && ce.monotone;
            }
        check("mode_mixing", "completeness_extrapolated",
              monotone ? worst_extrap : std::numeric_limits<double>::infinity(), 1e-4,
              monotone ? "cutoffs 64/128/256, monotone" : "NOT monotone per doubling");
    }

    // --- operator construction routes ----------------------------------------
    const auto basis = FockBasis::make(K, c.system.N);
    MixingMatrix m1 = mixing_matrix(grid, 1);
    const MixingMatrix m2 = mixing_matrix(grid, 2);
    if (faults.mixing_transpose) m1.entries.transposeInPlace();

    {
        const auto F0a = build_F(0, basis, grid, mixing_matrix(grid, 0));
        const auto F0b = build_F_alternative(0, basis, grid, m1, m2);
        const auto F0c = build_F_ladder(0, basis, grid, ladder_mixing_matrix(grid, 0));
        const double r = std::max(max_abs((F0a - F0b).mat),
                                  std::max(max_abs((F0a - F0c).mat), max_abs((F0b - F0c).mat)));
        check("operators", "f0_route_agreement", r, 1e-12, "three constructions, pairwise");

        if (K >= 2) {
            const auto F1a = build_F(1, basis, grid, m1);
            const auto F1b = build_F_alternative(1, basis, grid, m1, m2);
            const auto F1c = build_F_ladder(1, basis, grid, ladder_mixing_matrix(grid, 1));
            const double r1 =
                std::max(max_abs((F1a - F1b).mat),
                         std::max(max_abs((F1a - F1c).mat), max_abs((F1b - F1c).mat)));
            check("operators", "f1_route_agreement", r1, 1e-12, "three constructions, pairwise");
        } else {
            const auto F1a = build_F(1, basis, grid, m1);
            check("operators", "f1_route_agreement", max_abs(F1a.mat), 1e-15,
                  "vacuously empty at K=1: F1 = 0");
        }

        const double fault = faults.vacuum_scale ? 1.001 : 1.0;
        const double vac0 = vacuum_expectation(build_F(0, basis, grid, mixing_matrix(grid, 0)))
                                .real() * fault;
        check("operators", "vacuum_sum_f0", std::abs(vac0 - vacuum_sum_F0(grid)), 1e-12,
              "against the closed cutoff sum");
        const double vac1 = vacuum_expectation(build_F(1, basis, grid, m1)).real() * fault;
        check("operators", "vacuum_sum_f1", std::abs(vac1 - vacuum_sum_F1(grid)), 1e-12,
              K >= 2 ? "against the closed cutoff sum" : "vacuously zero at K=1");

        const auto G0q = build_Gamma0(basis, grid, m1);
        const auto G0l = build_Gamma0_ladder(basis, grid);
        check("operators", "gamma0_cross_construction", max_abs((G0q - G0l).mat), 1e-12,
              "quadrature form vs ladder form");
    }

    // --- gauge generator -------------------------------------------------------
    {
        // The generator's field part is cavity-length independent; compare two
        // builds at unrelated lengths (the negative control flips one sign).
        const ModeGrid grid_b(grid.d * 2.5, K);
        MixingMatrix m1b = mixing_matrix(grid_b, 1);
        auto Sa = coupling_sum_S(basis, grid, mixing_matrix(grid, 1));
        const auto Sb = coupling_sum_S(basis, grid_b, m1b);
        if (faults.gauge_sign) Sa = -1.0 * Sa;
        check("gauge", "generator_length_independence", max_abs((Sa - Sb).mat), 1e-12,
              "field part of the generator");
    }

    if (K == 1) {
        const auto F1 = build_F(1, basis, grid, m1);
        const auto G0 = build_Gamma0_ladder(basis, grid);
        const auto dW2 = build_delta_omega2(basis, grid, ladder_mixing_matrix(grid, 1), c.system);
        const double r = std::max({max_abs(F1.mat), max_abs(G0.mat), max_abs(dW2.mat)});
        check("operators", "single_mode_nullity", r, 0.0,
              "F1, Gamma0 and the frequency-shift operator all vanish");
    }

    // --- derivation audit (skipped for a single mode: nothing to transform) ----
    AuditReport report;
    bool have_report = false;
    if (K >= 2) {
        report = audit_appendix_B(c.system);
        have_report = true;
        for (const auto& ck : report.checks)
            check("derivation", ck.name, ck.max_residual, ck.tolerance);
    }

    // --- render ----------------------------------------------------------------
    int failed = 0;
    std::ostream& os = std::cout;
    os << "audit: modes=" << K << " fock_cap=" << c.system.N
       << " cavity_length=" << format_double(c.system.d) << "\n";
    for (const auto& id : ids) {
        if (!id.passed) ++failed;
        os << (id.passed ? "[ok]   " : "[FAIL] ") << id.section << ":" << id.name
           << "  residual=" << format_double(id.residual, 6)
           << "  tol=" << format_double(id.tolerance, 6);
        if (!id.note.empty()) os << "  (" << id.note << ")";
        os << "\n";
    }
    if (K < 2)
        os << "[note] derivation sections vacuously empty at K=1 "
              "(no partner modes to mix)\n";
    if (have_report) {
        for (const auto& f : report.findings)
            os << "[finding] " << f.name << "  computed=" << format_double(f.computed, 9)
               << "  printed=" << format_double(f.printed, 9) << "  " << f.detail << "\n";
    }
    os << (failed == 0 ? "audit passed: " : "audit FAILED: ") << (ids.size() - failed) << "/"
       << ids.size() << " identities";
    if (have_report) os << ", " << report.findings.size() << " findings";
    os << "\n";

    // Optional table emission mirrors the stdout report.
    if (!c.output.path.empty()) {
        Table t;
        t.columns = {"section", "name", "residual", "tolerance", "passed", "note"};
        const int p = c.output.precision;
        for (const auto& id : ids)
            t.rows.push_back({Cell::text(id.section), Cell::text(id.name),
                              Cell::num(id.residual, p), Cell::num(id.tolerance, p),
                              Cell::boolean(id.passed), Cell::text(id.note)});
        stamp_meta(t, c, "audit");
        if (have_report)
            for (const auto& f : report.findings) {
                t.add_meta("finding_" + f.name + "_computed", Cell::num(f.computed, p));
                t.add_meta("finding_" + f.name + "_printed", Cell::num(f.printed, p));
            }
        emit_table(t, c);
    }

    return failed == 0 ? kExitOk : kExitAuditFail;
}

// ---------------------------------------------------------------------------
// spectrum: low-lying eigenvalues plus ground-state observables.
// ---------------------------------------------------------------------------

int cmd_spectrum(const RunConfig& c) {
    const auto r = compute_spectrum(c.system, c.spectrum_options());
    if (r.max_residual > c.solver.residual_tolerance)
        throw std::runtime_error("spectrum: eigenpair residual " +
                                 format_double(r.max_residual, 6) + " exceeds tolerance " +
                                 format_double(c.solver.residual_tolerance, 6));

    const int p = c.output.precision;
    Table t;
    t.columns = {"index", "energy", "excitation"};
    for (Eigen::Index i = 0; i < r.eigenvalues.size(); ++i)
        t.rows.push_back({Cell::integer(static_cast<long long>(i)),
                          Cell::num(r.eigenvalues(i), p),
                          Cell::num(r.eigenvalues(i) - r.eigenvalues(0), p)});

    stamp_meta(t, c, "spectrum");
    t.add_meta("ground_energy", Cell::num(r.eigenvalues(0), p));
    t.add_meta("mechanical_gap", Cell::num(r.mechanical_gap, p));
    t.add_meta("gap_shift_vs_free", Cell::num(r.mechanical_gap - hbar * c.system.Omega, p));
    if (c.model_f1 || c.model_f0quad) {
        SpectrumOptions lin = c.spectrum_options();
        lin.include_F1 = false;
        lin.include_quadratic_F0 = false;
        const auto rl = compute_spectrum(c.system, lin);
        t.add_meta("ground_shift_vs_linear", Cell::num(r.eigenvalues(0) - rl.eigenvalues(0), p));
        t.add_meta("gap_shift_vs_linear", Cell::num(r.mechanical_gap - rl.mechanical_gap, p));
    }
    if (r.lambda > 0.0) {
        t.add_meta("ratio_quad_F0", Cell::num(r.ratio_quad_F0, p));
        t.add_meta("ratio_quad_F1", Cell::num(r.ratio_quad_F1, p));
    }
    for (std::size_t k = 0; k < r.mode_populations.size(); ++k)
        t.add_meta("population_mode_" + std::to_string(k + 1),
                   Cell::num(r.mode_populations[k], p));
    t.add_meta("population_mirror", Cell::num(r.mirror_population, p));
    t.add_meta("solver", Cell::text(r.solver));
    t.add_meta("solver_iterations", Cell::integer(r.iterations));
    t.add_meta("max_residual", Cell::num(r.max_residual, p));
    t.add_meta("residual_tolerance", Cell::num(c.solver.residual_tolerance, p));
    return emit_table(t, c);
}

// ---------------------------------------------------------------------------
// sweep: cartesian parameter grid, one row per point, metadata trailer.
// ---------------------------------------------------------------------------

int cmd_sweep(const RunConfig& config) {
    RunConfig c = config;
    if (c.axes.empty()) {
        // Default decade sweep of the coupling.
        c.axes.push_back(SweepAxis{"lambda", 0.005, 0.05, 8, "log"});
    }

    // Cartesian product, lexicographic in axis order.
    std::vector<std::vector<double>> grids;
    std::size_t total = 1;
    for (const auto& ax : c.axes) {
        grids.push_back(ax.grid());
        total *= grids.back().size();
    }

    std::vector<SweepPoint> points;
    std::vector<std::vector<double>> coords;
    points.reserve(total);
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::vector<double> coord(c.axes.size());
        std::size_t rem = flat;
        for (std::size_t a = c.axes.size(); a-- > 0;) {
            coord[a] = grids[a][rem % grids[a].size()];
            rem /= grids[a].size();
        }

        SweepPoint pt;
        pt.params = c.system;
        pt.options = c.spectrum_options();
        double lambda_value = 0.0;
        bool lambda_axis = false;
        for (std::size_t a = 0; a < c.axes.size(); ++a) {
            const auto& name = c.axes[a].name;
            const double v = coord[a];
            if (name == "Omega")
                pt.params.Omega = v;
            else if (name == "cavity_length")
                pt.params.d = v;
            else if (name == "mass")
                pt.params.m = v;
            else if (name == "omega_pl")
                pt.params.omega_pl = v;
            else if (name == "lambda") {
                lambda_axis = true;
                lambda_value = v;
            }
        }
        if (lambda_axis) {
            pt.lambda = lambda_value;
            if (pt.params.omega_pl > 0.0 && pt.params.Omega > 0.0 && pt.params.d > 0.0)
                pt.params.m = mass_for_lambda(lambda_value, pt.params.Omega, pt.params.d,
                                              pt.params.omega_pl);
        } else if (!c.mass_given && c.lambda > 0.0 && pt.params.omega_pl > 0.0) {
            // Keep the configured coupling fixed while other axes move.
            pt.lambda = c.lambda;
            pt.params.m =
                mass_for_lambda(c.lambda, pt.params.Omega, pt.params.d, pt.params.omega_pl);
        }
        points.push_back(std::move(pt));
        coords.push_back(std::move(coord));
    }

    auto rows = run_sweep(points);
    for (auto& row : rows)
        if (row.ok && row.result.max_residual > c.solver.residual_tolerance) {
            row.ok = false;
            row.error = "eigenpair residual " + format_double(row.result.max_residual, 6) +
                        " exceeds tolerance";
        }

    const int p = c.output.precision;
    Table t;
    for (const auto& ax : c.axes) t.columns.push_back(ax.name);
    t.columns.insert(t.columns.end(), {"ok", "ground_energy", "mechanical_gap",
                                       "gap_shift_vs_free", "effect_vs_linear", "error"});
    std::size_t n_ok = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::vector<Cell> cells;
        for (const double v : coords[i]) cells.push_back(Cell::num(v, p));
        const auto& row = rows[i];
        cells.push_back(Cell::boolean(row.ok));
        if (row.ok) {
            ++n_ok;
            cells.push_back(Cell::num(row.ground_energy, p));
            cells.push_back(Cell::num(row.gap, p));
            cells.push_back(Cell::num(row.gap - hbar * row.point.params.Omega, p));
            cells.push_back(Cell::num(row.effect_vs_linear, p));
            cells.push_back(Cell::text(""));
        } else {
            cells.push_back(Cell::none());
            cells.push_back(Cell::none());
            cells.push_back(Cell::none());
            cells.push_back(Cell::none());
            cells.push_back(Cell::text(row.error));
        }
        t.rows.push_back(std::move(cells));
    }

    stamp_meta(t, c, "sweep");
    t.add_meta("points_total", Cell::integer(static_cast<long long>(rows.size())));
    t.add_meta("points_ok", Cell::integer(static_cast<long long>(n_ok)));
    t.add_meta("residual_tolerance", Cell::num(c.solver.residual_tolerance, p));

    // Fitted coupling exponent whenever a lambda axis was swept: on the
    // quadratic-correction effect when a quadratic term is on, otherwise on
    // the gap shift of the linear model.
    int lambda_col = -1;
    for (std::size_t a = 0; a < c.axes.size(); ++a)
        if (c.axes[a].name == "lambda") lambda_col = static_cast<int>(a);
    if (lambda_col >= 0) {
        const bool quad = c.model_f1 || c.model_f0quad;
        std::vector<double> xs, ys;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (!rows[i].ok) continue;
            const double y = quad ? rows[i].effect_vs_linear
                                  : rows[i].gap - hbar * rows[i].point.params.Omega;
            if (y == 0.0) continue;
            xs.push_back(coords[i][static_cast<std::size_t>(lambda_col)]);
            ys.push_back(std::abs(y));
        }
        if (xs.size() >= 2) {
            t.add_meta("exponent_fit_on",
                       Cell::text(quad ? "effect_vs_linear" : "gap_shift_vs_free"));
            t.add_meta("fitted_lambda_exponent", Cell::num(log_log_slope(xs, ys), p));
        }
    }

    const int rc = emit_table(t, c);
    if (rc != kExitOk) return rc;
    return n_ok > 0 ? kExitOk : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"operator algebra and spectra for a cavity field coupled to a moving mirror"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_path, format, faults;
    int modes = 0, fock = 0, total_cap = 0;
    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--out", out_path, "output file path (default: stdout)");
    auto* opt_format =
        app.add_option("--format", format, "output format")->check(CLI::IsMember({"csv", "json"}));
    auto* opt_modes = app.add_option("--modes", modes, "override: retained field modes K");
    auto* opt_fock = app.add_option("--fock", fock, "override: per-mode occupation cap N");
    auto* opt_cap =
        app.add_option("--total-cap", total_cap, "override: total occupation cap (negative: none)");
    app.add_option("--seed-faults", faults,
                   "inject a named defect into the audit (negative-control testing)");

    auto* sc_coeff = app.add_subcommand("coefficients", "mode-mixing coefficient table");
    auto* sc_audit = app.add_subcommand("audit", "run every closed-form algebra identity");
    auto* sc_spectrum = app.add_subcommand("spectrum", "low-lying spectrum at one operating point");
    auto* sc_sweep = app.add_subcommand("sweep", "spectrum observables over a parameter grid");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        RunConfig c;
        try {
            c = config_path.empty() ? default_config() : parse_config_text(slurp(config_path));
            if (opt_modes->count()) c.system.K = modes;
            if (opt_fock->count()) c.system.N = fock;
            if (opt_cap->count()) {
                if (total_cap < 0)
                    c.system.total_cap.reset();
                else
                    c.system.total_cap = total_cap;
            }
            if (opt_format->count()) c.output.format = format;
            if (const char* env = std::getenv("OPTOMECH_OUT")) c.output.path = env;
            if (!out_path.empty()) c.output.path = out_path;
            c.system.validate();
        } catch (const std::domain_error& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }

        const FaultPlan plan = parse_faults(faults);
        if ((plan.gauge_sign || plan.mixing_transpose || plan.vacuum_scale) &&
            !sc_audit->parsed())
            throw ConfigError("--seed-faults applies to the audit subcommand only");

        if (sc_coeff->parsed()) return cmd_coefficients(c);
        if (sc_audit->parsed()) return cmd_audit(c, plan);
        if (sc_spectrum->parsed()) return cmd_spectrum(c);
        if (sc_sweep->parsed()) return cmd_sweep(c);
        std::cerr << "error: no subcommand\n";
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::length_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumeric;
    }
}
