#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "swave/experiment.hpp"

namespace py = pybind11;
using namespace swave;

namespace {

Discretization parse_scheme(const std::string& s) {
    if (s == "implicit") return Discretization::FullyImplicit;
    if (s == "mcn") return Discretization::ModifiedCrankNicolson;
    throw py::value_error("scheme must be 'implicit' or 'mcn'");
}

py::dict table_dict(const ErrorTable& t) {
    py::list rows;
    for (const ErrorRow& r : t.rows) {
        py::dict d;
        d["param"] = r.param;
        d["l2"] = r.l2;
        d["l2_order"] = r.l2_order;
        d["h1"] = r.h1;
        d["h1_order"] = r.h1_order;
        d["dtl2"] = r.dt_l2;
        d["dtl2_order"] = r.dt_l2_order;
        rows.append(d);
    }
    py::dict d;
    d["rows"] = rows;
    d["reference_param"] = t.reference_param;
    d["samples"] = t.n_samples;
    d["failed"] = t.n_failed;
    d["seed"] = t.master_seed;
    d["max_energy_ratio"] = t.max_energy_ratio;
    d["max_newton_iterations"] = t.max_newton_iterations;
    d["all_finite"] = t.all_finite;
    d["subset_curve"] = t.subset_curve;
    return d;
}

py::dict series_dict(const SeriesStats& s) {
    py::dict d;
    d["mean"] = s.mean;
    d["min"] = s.min;
    d["max"] = s.max;
    return d;
}

py::dict stats_dict(const EnsembleStats& s) {
    py::dict d;
    d["times"] = s.times;
    d["l2sq"] = series_dict(s.l2sq);
    d["grad_sq"] = series_dict(s.grad_sq);
    d["dt_l2sq"] = series_dict(s.dt_l2sq);
    d["hamiltonian"] = series_dict(s.hamiltonian);
    d["hamiltonian_moments"] = s.hamiltonian_moments;
    d["samples"] = s.n_samples;
    d["failed"] = s.n_failed;
    d["max_energy_ratio"] = s.max_energy_ratio;
    d["max_newton_iterations"] = s.max_newton_iterations;
    d["all_finite"] = s.all_finite;
    return d;
}

py::dict trajectory_dict(const Trajectory& t) {
    py::dict d;
    d["tau"] = t.tau;
    d["hamiltonian"] = t.hamiltonian;
    d["l2sq"] = t.l2sq;
    d["grad_sq"] = t.grad_sq;
    d["dt_l2sq"] = t.dt_l2sq;
    d["newton_iterations"] = t.newton_iterations;
    d["energy_residuals"] = t.energy_residuals;
    d["max_energy_ratio"] = t.max_energy_ratio();
    if (!t.u.empty()) {
        d["u"] = t.u;
        d["v"] = t.v;
    }
    return d;
}

ExperimentConfig config_from(const std::string& json_text, bool full_scale) {
    try {
        return parse_config(json_text, full_scale);
    } catch (const ConfigError& e) {
        throw py::value_error(e.what());
    }
}

}  // namespace

PYBIND11_MODULE(_swave, m) {
    m.doc() = "Finite element solver for semilinear stochastic wave equations";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<EnsembleFailed>(m, "EnsembleFailed", PyExc_RuntimeError);
    py::register_exception<NewtonDiverged>(m, "NewtonDiverged", PyExc_RuntimeError);

    m.def("preset_names", &preset_names);

    m.def(
        "preset_config",
        [](const std::string& name, bool full_scale) -> py::object {
            const std::string manifest = manifest_json(preset_config(name, full_scale));
            py::object parsed = py::module_::import("json").attr("loads")(manifest);
            return parsed["config"];
        },
        py::arg("name"), py::arg("full_scale") = false, "Resolved preset configuration as a dict.");

    m.def(
        "validate_config",
        [](const std::string& json_text) {
            try {
                return validate_config(parse_config(json_text));
            } catch (const ConfigError& e) {
                return e.problems();
            }
        },
        py::arg("json_text"), "Problems found in a JSON config (empty when valid).");

    m.def(
        "manifest_hash", [](const std::string& json_text) { return manifest_hash(config_from(json_text, false)); },
        py::arg("json_text"));

    m.def(
        "run_experiment",
        [](const std::string& json_text, bool full_scale, bool write_files) {
            const ExperimentConfig c = config_from(json_text, full_scale);
            ExperimentOutputs out;
            {
                py::gil_scoped_release release;
                out = run_experiment(c, write_files);
            }
            py::dict d;
            d["manifest_hash"] = manifest_hash(c);
            d["files"] = out.files;
            if (out.spatial) d["spatial"] = table_dict(*out.spatial);
            if (out.temporal) d["temporal"] = table_dict(*out.temporal);
            if (out.stochastic) d["stochastic"] = stats_dict(*out.stochastic);
            if (out.deterministic) d["deterministic"] = trajectory_dict(*out.deterministic);
            if (!out.subset.empty()) {
                d["subset_fraction"] = out.subset;
                d["kappa"] = out.kappa;
            }
            if (out.analytic) {
                d["sup"] = table_dict(out.analytic->sup);
                d["final"] = table_dict(out.analytic->final);
            }
            return d;
        },
        py::arg("json_text"), py::arg("full_scale") = false, py::arg("write_files") = false,
        "Runs a JSON experiment config and returns its tables and series.");

    m.def(
        "brownian_increments",
        [](std::uint64_t seed, std::uint64_t index, std::size_t n_steps, double tau) {
            return sample_path(seed, index, n_steps, tau).increments;
        },
        py::arg("seed"), py::arg("index"), py::arg("n_steps"), py::arg("tau"));

    m.def(
        "coarsen_increments",
        [](std::vector<double> increments, double tau, std::size_t factor) {
            return coarsen(BrownianPath{tau, std::move(increments), 0, 0}, factor).increments;
        },
        py::arg("increments"), py::arg("tau"), py::arg("factor"));

    m.def(
        "drift_values",
        [](const std::vector<double>& coeffs, const std::vector<double>& a, const std::vector<double>& b) {
            if (a.size() != b.size()) throw py::value_error("a and b must have equal length");
            const PolynomialDrift d{coeffs, 0.0, 0.0};
            std::vector<double> f(a.size()), fhat(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) {
                f[i] = d.f(a[i]);
                fhat[i] = d.fhat(a[i], b[i]);
            }
            return std::make_pair(f, fhat);
        },
        py::arg("coeffs"), py::arg("a"), py::arg("b"), "Returns (f(a), fhat(a, b)).");

    m.def(
        "drift_problems",
        [](const std::vector<double>& coeffs, int dimension, const std::string& scheme) {
            ExperimentConfig c;
            c.drift_coeffs = coeffs;
            const PolynomialDrift d = make_drift(c);
            std::vector<std::string> out;
            for (const DriftViolation& v : validate(d, dimension, parse_scheme(scheme)))
                out.push_back(v.constraint + ": " + v.message);
            return out;
        },
        py::arg("coeffs"), py::arg("dimension") = 1, py::arg("scheme") = "mcn");

    m.def(
        "simulate",
        [](const std::string& json_text, int cells, double tau, double horizon, std::uint64_t index) {
            const ExperimentConfig c = config_from(json_text, false);
            const Problem p = make_problem(c);
            auto mesh = c.dimension == 1 ? build_interval_mesh(cells) : build_unit_square_tri_mesh(cells);
            auto space = make_space(mesh, c.degree, required_quadrature_degree(c.degree, p.drift.degree()));
            SchemeConfig sc;
            sc.discretization = c.discretization;
            sc.tau = tau;
            sc.n_steps = static_cast<std::size_t>(std::llround(horizon / tau));
            sc.newton = c.newton;
            const BrownianPath path = p.diffusion.is_zero()
                                          ? BrownianPath{tau, std::vector<double>(sc.n_steps, 0.0), 0, 0}
                                          : sample_path(c.master_seed, index, sc.n_steps, tau);
            Trajectory t;
            {
                py::gil_scoped_release release;
                t = run_trajectory(space, sc, path, p.drift, p.diffusion, p.h1, p.h2);
            }
            py::dict d = trajectory_dict(t);
            std::vector<std::vector<double>> points;
            for (std::size_t i = 0; i < space->num_dofs(); ++i) {
                const Point& x = space->dof_point(i);
                points.emplace_back(x.begin(), x.begin() + c.dimension);
            }
            d["dof_points"] = points;
            d["increments"] = path.increments;
            return d;
        },
        py::arg("json_text"), py::arg("cells"), py::arg("tau"), py::arg("horizon"), py::arg("sample_index") = 0,
        "One trajectory of the config's problem on a mesh with `cells` cells per side.");

    m.attr("__version__") = "0.1.0";
}
