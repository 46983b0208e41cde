#include "swave/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace swave {

namespace {

using json = nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

std::string join(const std::vector<std::string>& items, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
    return out;
}

std::string num(double x) {
    if (std::isnan(x)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10e", x);
    return buf;
}

const char* kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Rates: return "rates";
        case ExperimentKind::Stability: return "stability";
        case ExperimentKind::Analytic: return "analytic";
    }
    return "";
}

const char* scheme_name(Discretization d) {
    return d == Discretization::FullyImplicit ? "implicit" : "mcn";
}

json diffusion_json(const DiffusionSpec& g) {
    switch (g.kind) {
        case DiffusionSpec::Kind::Zero: return {{"kind", "zero"}};
        case DiffusionSpec::Kind::Linear: return {{"kind", "linear"}, {"slope", g.slope}};
        case DiffusionSpec::Kind::SmoothedAbs: return {{"kind", "smoothed_abs"}, {"epsilon", g.epsilon}};
    }
    return {};
}

json ladder_json(const LadderConfig& l) {
    return {{"enabled", l.enabled}, {"cells", l.cells}, {"levels", l.levels}, {"tau", l.tau}, {"horizon", l.horizon},
            {"reference_extra_levels", l.reference_extra_levels}};
}

json config_json(const ExperimentConfig& c) {
    const PolynomialDrift drift = make_drift(c);
    json j;
    j["name"] = c.name;
    j["kind"] = kind_name(c.kind);
    j["dimension"] = c.dimension;
    j["degree"] = c.degree;
    j["drift"] = {{"coeffs", c.drift_coeffs}, {"alpha", drift.alpha}, {"lambda", drift.lambda}};
    j["diffusion"] = diffusion_json(c.diffusion);
    j["initial"] = {{"h1", c.h1}, {"h2", c.h2}};
    j["scheme"] = scheme_name(c.discretization);
    if (c.kind != ExperimentKind::Stability) j["spatial"] = ladder_json(c.spatial);
    if (c.kind == ExperimentKind::Rates) j["temporal"] = ladder_json(c.temporal);
    if (c.kind == ExperimentKind::Stability)
        j["stability"] = {{"cells", c.stability.cells}, {"tau", c.stability.tau}, {"horizon", c.stability.horizon},
                          {"kappa", c.stability.kappa}};
    j["newton"] = {{"abs_tol", c.newton.abs_tol}, {"rel_tol", c.newton.rel_tol}, {"max_iter", c.newton.max_iter}};
    j["samples"] = c.n_samples;
    j["seed"] = c.master_seed;
    return j;
}

// ---- presets ---------------------------------------------------------------------------------

ExperimentConfig test1_base(const std::string& name) {
    ExperimentConfig c;
    c.name = name;
    c.kind = ExperimentKind::Rates;
    c.drift_coeffs = {-1.0, 0.0, -1.0};
    c.diffusion = DiffusionSpec::linear(1.0);
    c.h1 = "cos_pi_x";
    c.h2 = "zero";
    c.spatial = {true, 4, 5, 1e-3, 0.01, 1};
    c.temporal = {true, 128, 6, 0.1, 0.4, 3};
    return c;
}

ExperimentConfig test3_base(const std::string& name) {
    ExperimentConfig c;
    c.name = name;
    c.kind = ExperimentKind::Stability;
    c.dimension = 2;
    c.drift_coeffs = {-1.0, 0.0, -1.0};
    c.diffusion = DiffusionSpec::linear(1.0);
    c.h1 = "cos_pi_x_cos_2pi_y";
    c.h2 = "zero";
    c.stability = {16, 0.01, 1.0, 0.0};
    return c;
}

// ---- config parsing --------------------------------------------------------------------------

class Reader {
public:
    std::vector<std::string> problems;

    template <class T>
    void get(const json& obj, const std::string& path, const char* key, T& out) {
        if (!obj.contains(key)) return;
        try {
            out = obj.at(key).get<T>();
        } catch (const json::exception&) {
            problems.push_back(path + key + ": wrong type (" + obj.at(key).type_name() + ")");
        }
    }

    void only(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
        if (!obj.is_object()) {
            problems.push_back((path.empty() ? std::string("<root>") : path.substr(0, path.size() - 1)) +
                               ": expected an object");
            return;
        }
        for (const auto& item : obj.items()) {
            if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return item.key() == k; }))
                problems.push_back(path + item.key() + ": unknown key");
        }
    }
};

void read_ladder(Reader& r, const json& j, const std::string& path, LadderConfig& l) {
    r.only(j, path, {"enabled", "cells", "levels", "tau", "horizon", "reference_extra_levels"});
    if (!j.is_object()) return;
    r.get(j, path, "enabled", l.enabled);
    r.get(j, path, "cells", l.cells);
    r.get(j, path, "levels", l.levels);
    r.get(j, path, "tau", l.tau);
    r.get(j, path, "horizon", l.horizon);
    r.get(j, path, "reference_extra_levels", l.reference_extra_levels);
}

std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

void check_horizon(std::vector<std::string>& out, const std::string& path, double tau, double horizon) {
    if (!(tau > 0.0)) {
        out.push_back(path + ".tau: must be > 0");
        return;
    }
    if (!(horizon > 0.0)) {
        out.push_back(path + ".horizon: must be > 0");
        return;
    }
    const double n = std::round(horizon / tau);
    if (n < 1.0 || std::abs(n * tau - horizon) > 1e-12 * std::max(1.0, horizon)) {
        std::ostringstream os;
        os << path << ".tau: horizon " << horizon << " is not an integer multiple of tau = " << tau;
        out.push_back(os.str());
    }
}

LadderSpec ladder_spec(const ExperimentConfig& c, const LadderConfig& l, LadderKind kind) {
    LadderSpec s;
    s.kind = kind;
    s.dimension = c.dimension;
    s.degree = c.degree;
    s.coarsest_cells = l.cells;
    s.levels = l.levels;
    s.tau = l.tau;
    s.horizon = l.horizon;
    s.reference_extra_levels = l.reference_extra_levels;
    s.discretization = c.discretization;
    s.newton = c.newton;
    return s;
}

std::size_t steps(double horizon, double tau) { return static_cast<std::size_t>(std::round(horizon / tau)); }

void write_file(const std::filesystem::path& path, const std::string& content, std::vector<std::string>& files) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    files.push_back(path.string());
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error("invalid configuration: " + join(problems, "; ")), problems_(std::move(problems)) {}

std::vector<std::string> preset_names() {
    return {"test1a", "test1b", "test1c", "test2", "test3a", "test3b", "test3c", "lin-det-check"};
}

ExperimentConfig preset_config(const std::string& name, bool full_scale) {
    ExperimentConfig c;
    if (name == "test1a") {
        c = test1_base(name);
    } else if (name == "test1b") {
        c = test1_base(name);
        c.drift_coeffs.assign(11, 0.0);
        c.drift_coeffs[0] = -1.0;
        c.drift_coeffs[10] = -1.0;
    } else if (name == "test1c") {
        c = test1_base(name);
        c.diffusion = DiffusionSpec::smoothed_abs(0.01);
    } else if (name == "test2") {
        c = test1_base(name);
        c.h1 = "zero";
        c.h2 = "hat_pulse";
        c.spatial = {true, 16, 5, 5e-3, 0.05, 1};
        c.temporal = {true, full_scale ? 512 : 128, 5, 0.1 / 8.0, 1.0, 3};
    } else if (name == "test3a") {
        c = test3_base(name);
    } else if (name == "test3b") {
        c = test3_base(name);
        c.drift_coeffs.assign(7, 0.0);
        c.drift_coeffs[0] = -1.0;
        c.drift_coeffs[6] = -1.0;
    } else if (name == "test3c") {
        c = test3_base(name);
        c.diffusion = DiffusionSpec::smoothed_abs(1.0);
    } else if (name == "lin-det-check") {
        c.name = name;
        c.kind = ExperimentKind::Analytic;
        c.drift_coeffs = {};
        c.diffusion = DiffusionSpec::zero();
        c.h1 = "cos_pi_x";
        c.h2 = "zero";
        c.spatial = {true, 8, 4, 1e-4, 0.5, 0};
        c.temporal.enabled = false;
        c.n_samples = 1;
        return c;
    } else {
        throw ConfigError({"preset: unknown preset '" + name + "' (known: " + join(preset_names(), ", ") + ")"});
    }
    c.n_samples = full_scale ? 5000 : 200;
    return c;
}

ExperimentConfig parse_config(const std::string& text, bool full_scale) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_col(text, e.byte);
        std::ostringstream os;
        os << "line " << line << ", column " << col << ": " << e.what();
        throw ConfigError({os.str()});
    }
    Reader r;
    r.only(j, "", {"preset", "name", "kind", "dimension", "degree", "drift", "diffusion", "initial", "scheme", "spatial",
                   "temporal", "stability", "newton", "samples", "seed", "threads", "out"});
    if (!j.is_object()) throw ConfigError(r.problems);

    ExperimentConfig c;
    if (j.contains("preset")) {
        std::string preset;
        r.get(j, "", "preset", preset);
        try {
            c = preset_config(preset, full_scale);
        } catch (const ConfigError& e) {
            r.problems.insert(r.problems.end(), e.problems().begin(), e.problems().end());
        }
    }
    r.get(j, "", "name", c.name);
    if (j.contains("kind")) {
        std::string k;
        r.get(j, "", "kind", k);
        if (k == "rates") c.kind = ExperimentKind::Rates;
        else if (k == "stability") c.kind = ExperimentKind::Stability;
        else if (k == "analytic") c.kind = ExperimentKind::Analytic;
        else r.problems.push_back("kind: expected rates, stability or analytic, got '" + k + "'");
    }
    r.get(j, "", "dimension", c.dimension);
    r.get(j, "", "degree", c.degree);
    if (j.contains("drift")) {
        const json& d = j["drift"];
        r.only(d, "drift.", {"coeffs", "alpha", "lambda"});
        if (d.is_object()) {
            r.get(d, "drift.", "coeffs", c.drift_coeffs);
            if (d.contains("alpha")) {
                double a = 0.0;
                r.get(d, "drift.", "alpha", a);
                c.drift_alpha = a;
            }
            if (d.contains("lambda")) {
                double l = 0.0;
                r.get(d, "drift.", "lambda", l);
                c.drift_lambda = l;
            }
        }
    }
    if (j.contains("diffusion")) {
        const json& d = j["diffusion"];
        r.only(d, "diffusion.", {"kind", "slope", "epsilon"});
        if (d.is_object()) {
            std::string k = "zero";
            r.get(d, "diffusion.", "kind", k);
            if (k == "zero") {
                c.diffusion = DiffusionSpec::zero();
            } else if (k == "linear") {
                double s = 1.0;
                r.get(d, "diffusion.", "slope", s);
                c.diffusion = DiffusionSpec::linear(s);
            } else if (k == "smoothed_abs") {
                double e = 0.01;
                r.get(d, "diffusion.", "epsilon", e);
                c.diffusion = DiffusionSpec::smoothed_abs(e);
            } else {
                r.problems.push_back("diffusion.kind: expected zero, linear or smoothed_abs, got '" + k + "'");
            }
        }
    }
    if (j.contains("initial")) {
        r.only(j["initial"], "initial.", {"h1", "h2"});
        if (j["initial"].is_object()) {
            r.get(j["initial"], "initial.", "h1", c.h1);
            r.get(j["initial"], "initial.", "h2", c.h2);
        }
    }
    if (j.contains("scheme")) {
        std::string s;
        r.get(j, "", "scheme", s);
        if (s == "mcn") c.discretization = Discretization::ModifiedCrankNicolson;
        else if (s == "implicit") c.discretization = Discretization::FullyImplicit;
        else r.problems.push_back("scheme: expected implicit or mcn, got '" + s + "'");
    }
    if (j.contains("spatial")) read_ladder(r, j["spatial"], "spatial.", c.spatial);
    if (j.contains("temporal")) read_ladder(r, j["temporal"], "temporal.", c.temporal);
    if (j.contains("stability")) {
        const json& s = j["stability"];
        r.only(s, "stability.", {"cells", "tau", "horizon", "kappa"});
        if (s.is_object()) {
            r.get(s, "stability.", "cells", c.stability.cells);
            r.get(s, "stability.", "tau", c.stability.tau);
            r.get(s, "stability.", "horizon", c.stability.horizon);
            r.get(s, "stability.", "kappa", c.stability.kappa);
        }
    }
    if (j.contains("newton")) {
        const json& n = j["newton"];
        r.only(n, "newton.", {"abs_tol", "rel_tol", "max_iter"});
        if (n.is_object()) {
            r.get(n, "newton.", "abs_tol", c.newton.abs_tol);
            r.get(n, "newton.", "rel_tol", c.newton.rel_tol);
            r.get(n, "newton.", "max_iter", c.newton.max_iter);
        }
    }
    r.get(j, "", "samples", c.n_samples);
    r.get(j, "", "seed", c.master_seed);
    r.get(j, "", "threads", c.threads);
    r.get(j, "", "out", c.output_dir);
    if (!r.problems.empty()) throw ConfigError(r.problems);
    return c;
}

ExperimentConfig load_config(const std::string& path, bool full_scale) {
    std::ifstream in(path);
    if (!in) throw ConfigError({"config: cannot open '" + path + "'"});
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str(), full_scale);
    } catch (const ConfigError& e) {
        std::vector<std::string> p;
        for (const auto& m : e.problems()) p.push_back(path + ": " + m);
        throw ConfigError(p);
    }
}

void apply_overrides(ExperimentConfig& c, const Overrides& o) {
    if (o.samples) c.n_samples = *o.samples;
    if (o.seed) c.master_seed = *o.seed;
    if (o.tau) {
        c.spatial.tau = *o.tau;
        c.temporal.tau = *o.tau;
        c.stability.tau = *o.tau;
    }
    if (o.h_level) {
        const int cells = *o.h_level >= 0 && *o.h_level < 30 ? 1 << *o.h_level : -1;
        c.temporal.cells = cells;
        c.stability.cells = cells;
    }
    if (o.scheme) c.discretization = *o.scheme;
    if (o.threads) c.threads = *o.threads;
    if (o.out) c.output_dir = *o.out;
}

std::vector<std::string> validate_config(const ExperimentConfig& c) {
    std::vector<std::string> out;
    if (c.dimension != 1 && c.dimension != 2) out.push_back("dimension: must be 1 or 2");
    if (c.degree != 1 && c.degree != 2) out.push_back("degree: must be 1 or 2");
    for (const auto& v : validate(make_drift(c), c.dimension, c.discretization))
        out.push_back("drift.coeffs: [" + v.constraint + "] " + v.message);
    if (c.diffusion.kind == DiffusionSpec::Kind::SmoothedAbs && !(c.diffusion.epsilon > 0.0))
        out.push_back("diffusion.epsilon: must be > 0");
    for (const auto& [path, name] : {std::pair{"initial.h1", c.h1}, std::pair{"initial.h2", c.h2}}) {
        try {
            named_field(name);
        } catch (const std::invalid_argument& e) {
            out.push_back(std::string(path) + ": " + e.what());
        }
    }
    if (c.n_samples < 1) out.push_back("samples: must be >= 1");
    if (c.newton.max_iter < 1) out.push_back("newton.max_iter: must be >= 1");
    auto ladder = [&](const LadderConfig& l, const std::string& path) {
        if (!l.enabled) return;
        if (l.cells < 1) out.push_back(path + ".cells: must be >= 1");
        if (l.levels < 1) out.push_back(path + ".levels: must be >= 1");
        check_horizon(out, path, l.tau, l.horizon);
        if (c.kind == ExperimentKind::Rates && l.reference_extra_levels < 1)
            out.push_back(path + ".reference_extra_levels: must be >= 1 so the reference is finer than every row");
    };
    if (c.kind == ExperimentKind::Rates) {
        ladder(c.spatial, "spatial");
        ladder(c.temporal, "temporal");
        if (c.temporal.enabled && c.temporal.tau > 0.0 && c.temporal.levels >= 1) {
            // Every temporal row and the reference must divide the horizon.
            const double finest = std::ldexp(c.temporal.tau, -(c.temporal.levels - 1 + c.temporal.reference_extra_levels));
            check_horizon(out, "temporal(reference)", finest, c.temporal.horizon);
        }
        if (!c.spatial.enabled && !c.temporal.enabled) out.push_back("spatial/temporal: at least one ladder must be enabled");
    } else if (c.kind == ExperimentKind::Analytic) {
        ladder(c.spatial, "spatial");
        if (!c.spatial.enabled) out.push_back("spatial.enabled: the analytic check needs the spatial ladder");
        if (c.dimension != 1 || !make_drift(c).is_zero() || !c.diffusion.is_zero() || c.h1 != "cos_pi_x" ||
            c.h2 != "zero")
            out.push_back("kind: the analytic check needs dimension 1, zero drift, zero diffusion, h1 = cos_pi_x, h2 = zero");
    } else {
        if (c.stability.cells < 1) out.push_back("stability.cells: must be >= 1");
        check_horizon(out, "stability", c.stability.tau, c.stability.horizon);
    }
    return out;
}

PolynomialDrift make_drift(const ExperimentConfig& c) {
    PolynomialDrift d;
    d.coeffs = c.drift_coeffs;
    const int q = d.degree();
    // Defaults for f = a_1 u + ... + a_q u^q: alpha = -a_1, lambda = -2 a_q / (q + 1).
    d.alpha = c.drift_alpha.value_or(q >= 1 ? -d.coeffs[0] : 0.0);
    d.lambda = c.drift_lambda.value_or(q >= 1 ? -2.0 * d.coeffs[static_cast<std::size_t>(q - 1)] / (q + 1) : 0.0);
    if (q == 1 && !c.drift_alpha) d.alpha = 0.0;
    return d;
}

Field named_field(const std::string& name) {
    using std::numbers::pi;
    if (name == "zero") return [](const Point&) { return 0.0; };
    if (name == "one") return [](const Point&) { return 1.0; };
    if (name == "cos_pi_x") return [](const Point& p) { return std::cos(pi * p[0]); };
    if (name == "cos_pi_x_cos_2pi_y") return [](const Point& p) { return std::cos(pi * p[0]) * std::cos(2.0 * pi * p[1]); };
    if (name == "hat_pulse") return [](const Point& p) { return std::max(0.0, 1.0 - 4.0 * std::abs(p[0] - 0.5)); };
    throw std::invalid_argument("unknown initial condition '" + name +
                                "' (known: zero, one, cos_pi_x, cos_pi_x_cos_2pi_y, hat_pulse)");
}

Problem make_problem(const ExperimentConfig& c) {
    return {make_drift(c), c.diffusion, named_field(c.h1), named_field(c.h2)};
}

std::string manifest_json(const ExperimentConfig& c) {
    json j;
    j["config"] = config_json(c);
    j["manifest_hash"] = manifest_hash(c);
    j["threads"] = c.threads;
    j["output_dir"] = c.output_dir;
    j["versions"] = {{"swave", kVersion},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"compiler", __VERSION__}};
    return j.dump(2) + "\n";
}

std::string manifest_hash(const ExperimentConfig& c) {
    json j = config_json(c);
    j["version"] = kVersion;
    const std::string text = j.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

void write_error_table(std::ostream& os, const ErrorTable& t, const std::string& hash) {
    os << "# manifest_hash=" << hash << "\n";
    os << "# ladder=" << (t.kind == LadderKind::Space ? "space" : "time") << "\n";
    os << "# seed=" << t.master_seed << "\n";
    os << "# samples=" << t.n_samples << "\n";
    os << "# failed=" << t.n_failed << "\n";
    os << "# reference_" << (t.kind == LadderKind::Space ? "h" : "tau") << "=" << num(t.reference_param) << "\n";
    os << "param,l2,l2_order,h1,h1_order,dtl2,dtl2_order\n";
    for (const ErrorRow& r : t.rows)
        os << num(r.param) << ',' << num(r.l2) << ',' << num(r.l2_order) << ',' << num(r.h1) << ','
           << num(r.h1_order) << ',' << num(r.dt_l2) << ',' << num(r.dt_l2_order) << "\n";
}

void write_subset_curve(std::ostream& os, const ErrorTable& t, const std::string& hash) {
    os << "# manifest_hash=" << hash << "\n";
    os << "# samples=" << t.n_samples << "\n";
    os << "kappa,subset_fraction\n";
    for (const auto& [kappa, frac] : t.subset_curve) os << num(kappa) << ',' << num(frac) << "\n";
}

void write_stability_series(std::ostream& os, const EnsembleStats& s, const std::vector<double>& subset, double kappa,
                            const std::string& hash) {
    os << "# manifest_hash=" << hash << "\n";
    os << "# seed=" << s.master_seed << "\n";
    os << "# samples=" << s.n_samples << "\n";
    os << "# failed=" << s.n_failed << "\n";
    os << "# kappa=" << num(kappa) << "\n";
    os << "t,mean_l2sq,min_l2sq,max_l2sq,mean_h1sq,min_h1sq,max_h1sq,mean_dtl2sq,min_dtl2sq,max_dtl2sq,"
          "mean_H,min_H,max_H,mean_H2,mean_H4,subset_fraction\n";
    const auto& h2 = s.hamiltonian_moments.at(2);
    const auto& h4 = s.hamiltonian_moments.at(4);
    for (std::size_t n = 0; n < s.times.size(); ++n) {
        os << num(s.times[n]);
        for (const SeriesStats* series : {&s.l2sq, &s.grad_sq, &s.dt_l2sq, &s.hamiltonian})
            os << ',' << num(series->mean[n]) << ',' << num(series->min[n]) << ',' << num(series->max[n]);
        os << ',' << num(h2[n]) << ',' << num(h4[n]) << ',' << num(subset[n]) << "\n";
    }
}

void write_deterministic_series(std::ostream& os, const Trajectory& t, const std::string& hash) {
    os << "# manifest_hash=" << hash << "\n";
    os << "# deterministic companion (g = 0)\n";
    os << "t,l2sq,h1sq,dtl2sq,H\n";
    for (std::size_t n = 0; n < t.hamiltonian.size(); ++n)
        os << num(t.tau * static_cast<double>(n)) << ',' << num(t.l2sq[n]) << ',' << num(t.grad_sq[n]) << ','
           << num(t.dt_l2sq[n]) << ',' << num(t.hamiltonian[n]) << "\n";
}

ExperimentOutputs run_experiment(const ExperimentConfig& c, bool write_files) {
    if (auto problems = validate_config(c); !problems.empty()) throw ConfigError(problems);
    const Problem problem = make_problem(c);
    const std::string hash = manifest_hash(c);
    ExperimentOutputs out;

    std::filesystem::path dir(c.output_dir);
    if (write_files) {
        std::filesystem::create_directories(dir);
        write_file(dir / (c.name + "_manifest.json"), manifest_json(c), out.files);
    }
    auto emit = [&](const std::string& suffix, const auto& writer) {
        if (!write_files) return;
        std::ostringstream os;
        writer(os);
        write_file(dir / (c.name + suffix), os.str(), out.files);
    };

    EnsembleOptions opts;
    opts.n_samples = c.n_samples;
    opts.master_seed = c.master_seed;
    opts.threads = c.threads;

    if (c.kind == ExperimentKind::Rates) {
        if (c.spatial.enabled) {
            out.spatial = convergence_table(ladder_spec(c, c.spatial, LadderKind::Space), problem, opts);
            emit("_spatial.csv", [&](std::ostream& os) { write_error_table(os, *out.spatial, hash); });
            emit("_spatial_subset.csv", [&](std::ostream& os) { write_subset_curve(os, *out.spatial, hash); });
        }
        if (c.temporal.enabled) {
            out.temporal = convergence_table(ladder_spec(c, c.temporal, LadderKind::Time), problem, opts);
            emit("_temporal.csv", [&](std::ostream& os) { write_error_table(os, *out.temporal, hash); });
            emit("_temporal_subset.csv", [&](std::ostream& os) { write_subset_curve(os, *out.temporal, hash); });
        }
    } else if (c.kind == ExperimentKind::Analytic) {
        using std::numbers::pi;
        const SpaceTimeField exact = [](const Point& p, double t) { return std::cos(pi * p[0]) * std::cos(pi * t); };
        const SpaceTimeGradient grad = [](const Point& p, double t) {
            return Point{-pi * std::sin(pi * p[0]) * std::cos(pi * t), 0.0};
        };
        out.analytic = analytic_convergence_table(ladder_spec(c, c.spatial, LadderKind::Space), problem, exact, grad);
        emit("_sup.csv", [&](std::ostream& os) { write_error_table(os, out.analytic->sup, hash); });
        emit("_final.csv", [&](std::ostream& os) { write_error_table(os, out.analytic->final, hash); });
    } else {
        const MeshPtr mesh = c.dimension == 1 ? build_interval_mesh(c.stability.cells)
                                              : build_unit_square_tri_mesh(c.stability.cells);
        const auto ops = std::make_shared<const SpaceOperators>(
            make_space(mesh, c.degree, required_quadrature_degree(c.degree, problem.drift.degree())));
        SchemeConfig scheme;
        scheme.discretization = c.discretization;
        scheme.tau = c.stability.tau;
        scheme.n_steps = steps(c.stability.horizon, c.stability.tau);
        scheme.newton = c.newton;

        Problem deterministic = problem;
        deterministic.diffusion = DiffusionSpec::zero();
        Stepper det(ops, scheme, deterministic.drift, deterministic.diffusion);
        BrownianPath zero_path;
        zero_path.tau = scheme.tau;
        zero_path.increments.assign(scheme.n_steps, 0.0);
        out.deterministic = det.run(det.initial_state(problem.h1, problem.h2), zero_path, TrajectoryOptions{false});

        out.kappa = c.stability.kappa;
        if (!(out.kappa > 0.0)) {
            for (std::size_t n = 0; n < out.deterministic->l2sq.size(); ++n)
                out.kappa = std::max(out.kappa, out.deterministic->l2sq[n] + out.deterministic->grad_sq[n]);
            out.kappa *= 2.0;
        }

        opts.keep_trajectories = true;
        EnsembleResult result = run_ensemble(ops, scheme, problem, opts);
        std::vector<std::vector<double>> h1sq;
        for (const auto& t : result.trajectories) {
            if (!t) continue;
            std::vector<double> s(t->l2sq.size());
            for (std::size_t n = 0; n < s.size(); ++n) s[n] = t->l2sq[n] + t->grad_sq[n];
            h1sq.push_back(std::move(s));
        }
        out.subset = subset_fraction_curve(h1sq, {}, out.kappa);
        out.stochastic = std::move(result.stats);
        emit("_stochastic.csv",
             [&](std::ostream& os) { write_stability_series(os, *out.stochastic, out.subset, out.kappa, hash); });
        emit("_deterministic.csv", [&](std::ostream& os) { write_deterministic_series(os, *out.deterministic, hash); });
    }
    return out;
}

}  // namespace swave
