#pragma once

// Run configuration: one JSON document (plus a handful of command-line
// overrides) resolved into concrete simulation inputs.  Parsing is strict —
// unknown keys are rejected at every level with a field-path diagnostic —
// and the resolved configuration has a canonical serialization whose hash is
// embedded in every output file, so artifacts can be traced to the exact
// inputs that produced them.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "spectra.hpp"

namespace optomech {

// Configuration problems carry their own type so the front end can map them
// to the dedicated exit code.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct SolverSettings {
    SolverKind kind = SolverKind::automatic;
    int eigenpairs = 12;
    double residual_tolerance = 1e-9;  // accepted worst ||Hx - Ex||_inf
};

struct OutputSettings {
    std::string format = "csv";  // csv | json
    std::string path;            // empty: write to stdout
    int precision = 15;          // significant digits for float emission
};

struct SweepAxis {
    std::string name;  // lambda | Omega | cavity_length | mass | omega_pl
    double min = 0.0;
    double max = 0.0;
    int count = 0;
    std::string spacing = "log";  // linear | log

    std::vector<double> grid() const {
        std::vector<double> v(static_cast<std::size_t>(count));
        for (int i = 0; i < count; ++i) {
            const double t =
                count == 1 ? 0.0
                           : static_cast<double>(i) / static_cast<double>(count - 1);
            v[static_cast<std::size_t>(i)] =
                spacing == "log" ? min * std::pow(max / min, t) : min + (max - min) * t;
        }
        return v;
    }
};

struct RunConfig {
    SystemParams system;
    double lambda = 0.0;      // operating coupling; > 0 unless mass given directly
    bool mass_given = false;  // true: system.m came from the config verbatim
    bool model_f1 = false;
    bool model_f0quad = false;
    SolverSettings solver;
    OutputSettings output;
    std::vector<SweepAxis> axes;

    SpectrumOptions spectrum_options() const {
        SpectrumOptions opt;
        opt.include_F1 = model_f1;
        opt.include_quadratic_F0 = model_f0quad;
        opt.n_eigen = solver.eigenpairs;
        opt.solver = solver.kind;
        return opt;
    }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const std::string& where,
                                const std::set<std::string>& allowed) {
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key))
            throw ConfigError("config: unknown key \"" + where + key + "\"");
}

inline double require_number(const nlohmann::json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError("config: \"" + where + "\" must be a number");
    return v.get<double>();
}

inline int require_int(const nlohmann::json& v, const std::string& where) {
    if (!v.is_number_integer())
        throw ConfigError("config: \"" + where + "\" must be an integer");
    return v.get<int>();
}

inline std::string require_string(const nlohmann::json& v, const std::string& where) {
    if (!v.is_string()) throw ConfigError("config: \"" + where + "\" must be a string");
    return v.get<std::string>();
}

}  // namespace detail

// Default operating point: three modes at unit fundamental (Omega = w_1, the
// hybridizing case), desk-scale caps, cutoff at the band edge, and a coupling
// small enough that the truncation-convergence gate holds with slack.
inline RunConfig default_config() {
    RunConfig c;
    c.system.Omega = 1.0;
    c.system.d = ModeGrid::pi();
    c.system.K = 3;
    c.system.N = 3;
    c.system.total_cap = 6;
    c.system.mirror_max = 6;
    c.system.omega_pl = 3.0;
    c.lambda = 0.0025;
    c.system.m = mass_for_lambda(c.lambda, c.system.Omega, c.system.d, c.system.omega_pl);
    return c;
}

inline RunConfig parse_config(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
    detail::reject_unknown_keys(j, "", {"system", "model", "solver", "output", "sweep"});

    RunConfig c = default_config();
    bool lambda_given = false;

    if (j.contains("system")) {
        const auto& s = j.at("system");
        if (!s.is_object()) throw ConfigError("config: \"system\" must be an object");
        detail::reject_unknown_keys(
            s, "system.",
            {"Omega", "cavity_length", "mass", "lambda", "modes", "fock_cap", "total_cap",
             "mirror_cap", "omega_pl", "dimension_guard"});
        if (s.contains("Omega")) c.system.Omega = detail::require_number(s["Omega"], "system.Omega");
        if (s.contains("cavity_length"))
            c.system.d = detail::require_number(s["cavity_length"], "system.cavity_length");
        if (s.contains("modes")) c.system.K = detail::require_int(s["modes"], "system.modes");
        if (s.contains("fock_cap")) c.system.N = detail::require_int(s["fock_cap"], "system.fock_cap");
        if (s.contains("total_cap")) {
            if (s["total_cap"].is_null())
                c.system.total_cap.reset();
            else
                c.system.total_cap = detail::require_int(s["total_cap"], "system.total_cap");
        }
        if (s.contains("mirror_cap"))
            c.system.mirror_max = detail::require_int(s["mirror_cap"], "system.mirror_cap");
        if (s.contains("omega_pl"))
            c.system.omega_pl = detail::require_number(s["omega_pl"], "system.omega_pl");
        if (s.contains("dimension_guard")) {
            const int g = detail::require_int(s["dimension_guard"], "system.dimension_guard");
            if (g < 1) throw ConfigError("config: \"system.dimension_guard\" must be positive");
            c.system.dimension_guard = static_cast<std::size_t>(g);
        }
        if (s.contains("mass") && s.contains("lambda"))
            throw ConfigError(
                "config: \"system.mass\" and \"system.lambda\" are mutually exclusive");
        if (s.contains("mass")) {
            c.system.m = detail::require_number(s["mass"], "system.mass");
            c.mass_given = true;
            c.lambda = 0.0;
        }
        if (s.contains("lambda")) {
            c.lambda = detail::require_number(s["lambda"], "system.lambda");
            lambda_given = true;
            if (!(c.lambda > 0.0)) throw ConfigError("config: \"system.lambda\" must be positive");
        }
    }

    if (j.contains("model")) {
        const auto& m = j.at("model");
        if (!m.is_array()) throw ConfigError("config: \"model\" must be an array of flags");
        bool linear_only = false;
        for (const auto& v : m) {
            const std::string flag = detail::require_string(v, "model[]");
            if (flag == "linear_only")
                linear_only = true;
            else if (flag == "quadratic_f0")
                c.model_f0quad = true;
            else if (flag == "quadratic_f1")
                c.model_f1 = true;
            else
                throw ConfigError("config: unknown model flag \"" + flag + "\"");
        }
        if (linear_only && (c.model_f0quad || c.model_f1))
            throw ConfigError("config: \"linear_only\" contradicts the quadratic model flags");
    }

    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        if (!s.is_object()) throw ConfigError("config: \"solver\" must be an object");
        detail::reject_unknown_keys(s, "solver.", {"kind", "eigenpairs", "residual_tolerance"});
        if (s.contains("kind")) {
            const std::string k = detail::require_string(s["kind"], "solver.kind");
            if (k == "auto")
                c.solver.kind = SolverKind::automatic;
            else if (k == "dense")
                c.solver.kind = SolverKind::dense;
            else if (k == "lanczos")
                c.solver.kind = SolverKind::lanczos;
            else
                throw ConfigError("config: \"solver.kind\" must be auto, dense or lanczos");
        }
        if (s.contains("eigenpairs")) {
            c.solver.eigenpairs = detail::require_int(s["eigenpairs"], "solver.eigenpairs");
            if (c.solver.eigenpairs < 2)
                throw ConfigError("config: \"solver.eigenpairs\" must be at least 2");
        }
        if (s.contains("residual_tolerance")) {
            c.solver.residual_tolerance =
                detail::require_number(s["residual_tolerance"], "solver.residual_tolerance");
            if (!(c.solver.residual_tolerance > 0.0))
                throw ConfigError("config: \"solver.residual_tolerance\" must be positive");
        }
    }

    if (j.contains("output")) {
        const auto& o = j.at("output");
        if (!o.is_object()) throw ConfigError("config: \"output\" must be an object");
        detail::reject_unknown_keys(o, "output.", {"format", "path", "precision"});
        if (o.contains("format")) {
            c.output.format = detail::require_string(o["format"], "output.format");
            if (c.output.format != "csv" && c.output.format != "json")
                throw ConfigError("config: \"output.format\" must be csv or json");
        }
        if (o.contains("path")) c.output.path = detail::require_string(o["path"], "output.path");
        if (o.contains("precision")) {
            c.output.precision = detail::require_int(o["precision"], "output.precision");
            if (c.output.precision < 6 || c.output.precision > 17)
                throw ConfigError("config: \"output.precision\" must be in [6, 17]");
        }
    }

    if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        if (!s.is_object()) throw ConfigError("config: \"sweep\" must be an object");
        detail::reject_unknown_keys(s, "sweep.", {"axes"});
        if (s.contains("axes")) {
            if (!s["axes"].is_array())
                throw ConfigError("config: \"sweep.axes\" must be an array");
            if (s["axes"].empty())
                throw ConfigError("config: \"sweep.axes\" must name at least one axis");
            c.axes.clear();
            for (const auto& a : s["axes"]) {
                if (!a.is_object())
                    throw ConfigError("config: each sweep axis must be an object");
                detail::reject_unknown_keys(a, "sweep.axes[].",
                                            {"name", "min", "max", "count", "spacing"});
                SweepAxis ax;
                if (!a.contains("name") || !a.contains("min") || !a.contains("max") ||
                    !a.contains("count"))
                    throw ConfigError("config: sweep axis needs name, min, max and count");
                ax.name = detail::require_string(a["name"], "sweep.axes[].name");
                static const std::set<std::string> kAxisNames{"lambda", "Omega", "cavity_length",
                                                              "mass", "omega_pl"};
                if (!kAxisNames.count(ax.name))
                    throw ConfigError("config: unknown sweep parameter \"" + ax.name + "\"");
                ax.min = detail::require_number(a["min"], "sweep.axes[].min");
                ax.max = detail::require_number(a["max"], "sweep.axes[].max");
                ax.count = detail::require_int(a["count"], "sweep.axes[].count");
                if (a.contains("spacing")) {
                    ax.spacing = detail::require_string(a["spacing"], "sweep.axes[].spacing");
                    if (ax.spacing != "linear" && ax.spacing != "log")
                        throw ConfigError("config: axis spacing must be linear or log");
                }
                if (!(ax.min > 0.0) || !(ax.max >= ax.min))
                    throw ConfigError("config: sweep axis \"" + ax.name +
                                      "\" needs 0 < min <= max");
                if (ax.count < 1)
                    throw ConfigError("config: sweep axis \"" + ax.name +
                                      "\" needs at least one point");
                c.axes.push_back(std::move(ax));
            }
        }
    }

    // Resolve the coupling into a mass once all of Omega, d and omega_pl are
    // known.  A directly-given mass stands as is.
    if (!c.mass_given) {
        if (!(c.system.omega_pl > 0.0))
            throw ConfigError("config: \"system.lambda\" needs a positive \"system.omega_pl\"");
        if (!(c.system.Omega > 0.0) || !(c.system.d > 0.0))
            throw ConfigError("config: lambda resolution needs positive Omega and cavity_length");
        c.system.m =
            mass_for_lambda(c.lambda, c.system.Omega, c.system.d, c.system.omega_pl);
    }
    (void)lambda_given;

    try {
        c.system.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

inline RunConfig parse_config_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return parse_config(j);
}

// Canonical serialization of the resolved configuration (alphabetical keys,
// shortest-round-trip numbers).  This is what gets hashed into outputs.  The
// output section is deliberately excluded: the hash fingerprints the
// computation, and the same run written to a different path or format must
// keep its identity.
inline std::string canonical_config(const RunConfig& c) {
    nlohmann::json j;
    j["system"]["Omega"] = c.system.Omega;
    j["system"]["cavity_length"] = c.system.d;
    j["system"]["mass"] = c.system.m;
    j["system"]["lambda"] = c.lambda;
    j["system"]["modes"] = c.system.K;
    j["system"]["fock_cap"] = c.system.N;
    if (c.system.total_cap)
        j["system"]["total_cap"] = *c.system.total_cap;
    else
        j["system"]["total_cap"] = nullptr;
    j["system"]["mirror_cap"] = c.system.mirror_cap();
    j["system"]["omega_pl"] = c.system.omega_pl;
    j["system"]["dimension_guard"] = c.system.dimension_guard;
    j["model"] = nlohmann::json::array();
    if (!c.model_f0quad && !c.model_f1) j["model"].push_back("linear_only");
    if (c.model_f0quad) j["model"].push_back("quadratic_f0");
    if (c.model_f1) j["model"].push_back("quadratic_f1");
    j["solver"]["kind"] = c.solver.kind == SolverKind::automatic
                              ? "auto"
                              : (c.solver.kind == SolverKind::dense ? "dense" : "lanczos");
    j["solver"]["eigenpairs"] = c.solver.eigenpairs;
    j["solver"]["residual_tolerance"] = c.solver.residual_tolerance;
    j["sweep"]["axes"] = nlohmann::json::array();
    for (const auto& ax : c.axes) {
        nlohmann::json a;
        a["name"] = ax.name;
        a["min"] = ax.min;
        a["max"] = ax.max;
        a["count"] = ax.count;
        a["spacing"] = ax.spacing;
        j["sweep"]["axes"].push_back(a);
    }
    return j.dump();
}

}  // namespace optomech
