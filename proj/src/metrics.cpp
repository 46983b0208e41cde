#include "swave/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "swave/parallel.hpp"

namespace swave {

namespace {

std::size_t step_ratio(double tau_coarse, double tau_ref) {
    const double r = tau_coarse / tau_ref;
    const double k = std::round(r);
    if (k < 1.0 || std::abs(r - k) > 1e-9 * k)
        throw std::invalid_argument("error_norms: reference step must divide the coarse step");
    return static_cast<std::size_t>(k);
}

std::size_t steps_for(double horizon, double tau) {
    const double n = std::round(horizon / tau);
    if (n < 1.0 || std::abs(n * tau - horizon) > 1e-12 * std::max(1.0, horizon))
        throw std::invalid_argument("horizon is not an integer multiple of tau");
    return static_cast<std::size_t>(n);
}

}  // namespace

ErrorEvaluator::ErrorEvaluator(const FeSpace& coarse, OperatorsPtr reference)
    : transfer_(transfer_matrix(coarse, *reference->space)), ref_(std::move(reference)) {}

NodeErrors ErrorEvaluator::operator()(const Trajectory& coarse, const Trajectory& reference) const {
    if (coarse.u.empty() || reference.u.empty())
        throw std::invalid_argument("error_norms: trajectories must keep their states");
    const std::size_t k = step_ratio(coarse.tau, reference.tau);
    const std::size_t nodes = coarse.u.size();
    if ((nodes - 1) * k + 1 != reference.u.size())
        throw std::invalid_argument("error_norms: trajectories cover different time horizons");

    NodeErrors out;
    out.l2sq.resize(nodes);
    out.grad_sq.resize(nodes);
    out.dt_l2sq.assign(nodes, 0.0);
    Vector prev;
    for (std::size_t n = 0; n < nodes; ++n) {
        Vector e = transfer_ * coarse.u[n] - reference.u[n * k];
        out.l2sq[n] = ref_->mass.quadratic_form(e);
        out.grad_sq[n] = ref_->stiffness.quadratic_form(e);
        if (n > 0) {
            const Vector de = (e - prev) / coarse.tau;
            out.dt_l2sq[n] = ref_->mass.quadratic_form(de);
        }
        prev = std::move(e);
    }
    return out;
}

NodeErrors error_norms(const Trajectory& coarse, const FeSpace& coarse_space, const Trajectory& reference,
                       const OperatorsPtr& reference_ops) {
    return ErrorEvaluator(coarse_space, reference_ops)(coarse, reference);
}

SupRmsErrors sup_rms_errors(const std::vector<NodeErrors>& per_sample) {
    if (per_sample.empty()) throw std::invalid_argument("sup_rms_errors: need at least one sample");
    const NodeErrors total = tree_reduce(per_sample, 0, per_sample.size(), [](const NodeErrors& a, const NodeErrors& b) {
        NodeErrors out = a;
        for (std::size_t n = 0; n < out.l2sq.size(); ++n) {
            out.l2sq[n] += b.l2sq[n];
            out.grad_sq[n] += b.grad_sq[n];
            out.dt_l2sq[n] += b.dt_l2sq[n];
        }
        return out;
    });
    const double inv = 1.0 / static_cast<double>(per_sample.size());
    SupRmsErrors s;
    for (std::size_t n = 0; n < total.l2sq.size(); ++n) {
        s.l2 = std::max(s.l2, std::sqrt(total.l2sq[n] * inv));
        s.h1 = std::max(s.h1, std::sqrt(total.grad_sq[n] * inv));
        if (n >= 1) s.dt_l2 = std::max(s.dt_l2, std::sqrt(total.dt_l2sq[n] * inv));
    }
    return s;
}

void fill_orders(std::vector<ErrorRow>& rows) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i == 0) {
            rows[i].l2_order = rows[i].h1_order = rows[i].dt_l2_order = nan;
            continue;
        }
        rows[i].l2_order = std::log2(rows[i - 1].l2 / rows[i].l2);
        rows[i].h1_order = std::log2(rows[i - 1].h1 / rows[i].h1);
        rows[i].dt_l2_order = std::log2(rows[i - 1].dt_l2 / rows[i].dt_l2);
    }
}

namespace {

struct Level {
    OperatorsPtr ops;
    SchemeConfig config;
    State start;
    double param = 0.0;
};

struct LadderSetup {
    std::vector<Level> rows;
    Level reference;
};

LadderSetup build_ladder(const LadderSpec& ladder, const Problem& problem) {
    if (ladder.levels < 1) throw std::invalid_argument("ladder needs at least one level");
    if (ladder.reference_extra_levels < 0) throw std::invalid_argument("reference_extra_levels must be >= 0");
    const int quad = required_quadrature_degree(ladder.degree, problem.drift.degree());
    auto make_mesh = [&](int cells) {
        return ladder.dimension == 1 ? build_interval_mesh(cells) : build_unit_square_tri_mesh(cells);
    };
    auto make_level = [&](const MeshPtr& mesh, double tau) {
        Level l;
        l.ops = std::make_shared<const SpaceOperators>(make_space(mesh, ladder.degree, quad));
        l.config.discretization = ladder.discretization;
        l.config.tau = tau;
        l.config.n_steps = steps_for(ladder.horizon, tau);
        l.config.newton = ladder.newton;
        l.start = Stepper(l.ops, l.config, problem.drift, problem.diffusion).initial_state(problem.h1, problem.h2);
        return l;
    };

    LadderSetup setup;
    MeshPtr mesh = make_mesh(ladder.coarsest_cells);
    if (ladder.kind == LadderKind::Space) {
        for (int k = 0; k < ladder.levels; ++k) {
            if (k > 0) mesh = refine_uniform(mesh);
            setup.rows.push_back(make_level(mesh, ladder.tau));
            setup.rows.back().param = mesh->h();
        }
        for (int k = 0; k < ladder.reference_extra_levels; ++k) mesh = refine_uniform(mesh);
        setup.reference = make_level(mesh, ladder.tau);
        setup.reference.param = mesh->h();
    } else {
        double tau = ladder.tau;
        for (int k = 0; k < ladder.levels; ++k) {
            if (k > 0) tau *= 0.5;
            setup.rows.push_back(make_level(mesh, tau));
            setup.rows.back().param = tau;
        }
        for (int k = 0; k < ladder.reference_extra_levels; ++k) tau *= 0.5;
        setup.reference = make_level(mesh, tau);
        setup.reference.param = tau;
    }
    return setup;
}

bool bit_equal(const BrownianPath& a, const BrownianPath& b) {
    return a.tau == b.tau && a.increments == b.increments;
}

}  // namespace

ErrorTable convergence_table(const LadderSpec& ladder, const Problem& problem, const EnsembleOptions& options) {
    if (options.n_samples == 0) throw std::invalid_argument("convergence_table: n_samples must be >= 1");
    const LadderSetup setup = build_ladder(ladder, problem);
    const std::size_t n_rows = setup.rows.size();
    const Level& ref = setup.reference;

    std::vector<ErrorEvaluator> evaluators;
    evaluators.reserve(n_rows);
    for (const Level& l : setup.rows) evaluators.emplace_back(*l.ops->space, ref.ops);

    struct SampleOutcome {
        bool ok = false;
        std::string error;
        std::vector<NodeErrors> errors;  // per row
        double energy_ratio = -std::numeric_limits<double>::infinity();
        int newton = 0;
        bool finite = true;
        std::vector<double> finest_h1sq;  // discrete, at finest-row nodes
        std::vector<double> ref_h1sq;     // reference, max over each finest-row window
    };
    std::vector<SampleOutcome> outcomes(options.n_samples);

    parallel_for(options.n_samples, options.threads, [&](std::size_t s) {
        SampleOutcome& out = outcomes[s];
        const BrownianPath ref_path = sample_path(options.master_seed, s, ref.config.n_steps, ref.config.tau);
        auto account = [&](const Trajectory& t) {
            if (!t.energy_residuals.empty()) out.energy_ratio = std::max(out.energy_ratio, t.max_energy_ratio());
            for (int it : t.newton_iterations) out.newton = std::max(out.newton, it);
            out.finite = out.finite && t.finite();
        };
        try {
            Stepper ref_stepper(ref.ops, ref.config, problem.drift, problem.diffusion);
            const Trajectory ref_traj = ref_stepper.run(ref.start, ref_path);
            account(ref_traj);

            // Paths for every row: successive halvings of the reference path, checked against a
            // direct coarsening so all rows see the same Wiener path.
            std::vector<BrownianPath> paths(n_rows);
            BrownianPath current = ref_path;
            for (std::size_t r = n_rows; r-- > 0;) {
                const std::size_t factor = step_ratio(setup.rows[r].config.tau, current.tau);
                current = coarsen(current, factor);
                const std::size_t direct = step_ratio(setup.rows[r].config.tau, ref.config.tau);
                if (!bit_equal(current, coarsen(ref_path, direct)))
                    throw std::logic_error("Brownian path coupling violated between ladder rows");
                paths[r] = current;
            }

            out.errors.reserve(n_rows);
            for (std::size_t r = 0; r < n_rows; ++r) {
                Stepper stepper(setup.rows[r].ops, setup.rows[r].config, problem.drift, problem.diffusion);
                const Trajectory traj = stepper.run(setup.rows[r].start, paths[r]);
                account(traj);
                out.errors.push_back(evaluators[r](traj, ref_traj));
                if (r + 1 == n_rows) {
                    const std::size_t k = step_ratio(traj.tau, ref_traj.tau);
                    out.finest_h1sq.resize(traj.l2sq.size());
                    out.ref_h1sq.assign(traj.l2sq.size(), 0.0);
                    for (std::size_t n = 0; n < traj.l2sq.size(); ++n) {
                        out.finest_h1sq[n] = traj.l2sq[n] + traj.grad_sq[n];
                        const std::size_t lo = n == 0 ? 0 : (n - 1) * k + 1;
                        for (std::size_t j = lo; j <= n * k; ++j)
                            out.ref_h1sq[n] = std::max(out.ref_h1sq[n], ref_traj.l2sq[j] + ref_traj.grad_sq[j]);
                    }
                }
            }
            out.ok = true;
        } catch (const NewtonDiverged& e) {
            out.error = e.what();
        } catch (const LinearSolveFailed& e) {
            out.error = e.what();
        }
    });

    ErrorTable table;
    table.kind = ladder.kind;
    table.reference_param = ref.param;
    table.master_seed = options.master_seed;
    table.max_energy_ratio = -std::numeric_limits<double>::infinity();
    std::vector<std::vector<NodeErrors>> per_row(n_rows);
    std::vector<std::vector<double>> discrete_h1, reference_h1;
    std::string first_error;
    for (auto& o : outcomes) {
        if (!o.ok) {
            ++table.n_failed;
            if (first_error.empty()) first_error = o.error;
            continue;
        }
        for (std::size_t r = 0; r < n_rows; ++r) per_row[r].push_back(std::move(o.errors[r]));
        table.max_energy_ratio = std::max(table.max_energy_ratio, o.energy_ratio);
        table.max_newton_iterations = std::max(table.max_newton_iterations, o.newton);
        table.all_finite = table.all_finite && o.finite;
        discrete_h1.push_back(std::move(o.finest_h1sq));
        reference_h1.push_back(std::move(o.ref_h1sq));
    }
    if (static_cast<double>(table.n_failed) > 0.1 * static_cast<double>(options.n_samples))
        throw EnsembleFailed(std::to_string(table.n_failed) + " of " + std::to_string(options.n_samples) +
                             " samples failed; first failure: " + first_error);
    table.n_samples = discrete_h1.size();

    for (std::size_t r = 0; r < n_rows; ++r) {
        const SupRmsErrors e = sup_rms_errors(per_row[r]);
        table.rows.push_back({setup.rows[r].param, e.l2, 0.0, e.h1, 0.0, e.dt_l2, 0.0});
    }
    fill_orders(table.rows);

    // Subset fraction at the final node over a kappa grid spanning the observed totals.
    const std::size_t last = discrete_h1.front().size() - 1;
    std::vector<double> totals;
    for (std::size_t s = 0; s < discrete_h1.size(); ++s) {
        double d = 0.0, rr = 0.0;
        for (std::size_t n = 0; n <= last; ++n) {
            if (n >= 1) d = std::max(d, discrete_h1[s][n]);
            rr = std::max(rr, reference_h1[s][n]);
        }
        totals.push_back(d + rr);
    }
    std::sort(totals.begin(), totals.end());
    table.subset_curve.emplace_back(0.0, subset_fraction(discrete_h1, reference_h1, 0.0, last));
    for (int decile = 1; decile <= 10; ++decile) {
        const auto idx = static_cast<std::size_t>(std::ceil(0.1 * decile * static_cast<double>(totals.size()))) - 1;
        const double kappa = totals[std::min(idx, totals.size() - 1)];
        table.subset_curve.emplace_back(kappa, subset_fraction(discrete_h1, reference_h1, kappa, last));
    }
    return table;
}

AnalyticErrors analytic_errors(const FeSpace& space, const Trajectory& traj, const SpaceTimeField& exact,
                               const SpaceTimeGradient& exact_grad, int quadrature_degree) {
    if (traj.u.empty()) throw std::invalid_argument("analytic_errors: trajectory must keep its states");
    const FeSpace fine_quad(space.mesh_ptr(), space.degree(), quadrature_degree);
    const std::size_t nodes = traj.u.size();
    const std::size_t nq = fine_quad.num_qp();
    const std::size_t nc = fine_quad.num_cells();
    std::vector<double> prev(nc * nq, 0.0), cur(nc * nq, 0.0);

    AnalyticErrors out;
    out.per_node.l2sq.resize(nodes);
    out.per_node.grad_sq.resize(nodes);
    out.per_node.dt_l2sq.assign(nodes, 0.0);
    for (std::size_t n = 0; n < nodes; ++n) {
        const double t = traj.tau * static_cast<double>(n);
        const Vector& u = traj.u[n];
        double l2 = 0.0, g2 = 0.0, d2 = 0.0;
        for (std::size_t c = 0; c < nc; ++c) {
            const auto dofs = fine_quad.cell_dofs(c);
            for (std::size_t q = 0; q < nq; ++q) {
                double val = 0.0, gx = 0.0, gy = 0.0;
                for (int a = 0; a < fine_quad.dofs_per_cell(); ++a) {
                    const double ua = u[dofs[static_cast<std::size_t>(a)]];
                    val += ua * fine_quad.shape(q, a);
                    const Point g = fine_quad.shape_grad(c, q, a);
                    gx += ua * g[0];
                    gy += ua * g[1];
                }
                const Point x = fine_quad.qp_point(c, q);
                const Point ge = exact_grad(x, t);
                const double e = val - exact(x, t);
                const double w = fine_quad.jxw(c, q);
                l2 += w * e * e;
                g2 += w * ((gx - ge[0]) * (gx - ge[0]) + (gy - ge[1]) * (gy - ge[1]));
                cur[c * nq + q] = e;
                if (n > 0) {
                    const double de = (e - prev[c * nq + q]) / traj.tau;
                    d2 += w * de * de;
                }
            }
        }
        out.per_node.l2sq[n] = l2;
        out.per_node.grad_sq[n] = g2;
        out.per_node.dt_l2sq[n] = d2;
        std::swap(prev, cur);
    }
    out.sup = sup_rms_errors({out.per_node});
    out.final = {std::sqrt(out.per_node.l2sq.back()), std::sqrt(out.per_node.grad_sq.back()),
                 std::sqrt(out.per_node.dt_l2sq.back())};
    return out;
}

AnalyticTable analytic_convergence_table(const LadderSpec& ladder, const Problem& problem,
                                         const SpaceTimeField& exact, const SpaceTimeGradient& exact_grad) {
    if (!problem.diffusion.is_zero()) throw std::invalid_argument("analytic_convergence_table: needs g = 0");
    LadderSpec no_reference = ladder;
    no_reference.reference_extra_levels = 0;
    const LadderSetup setup = build_ladder(no_reference, problem);

    AnalyticTable table;
    table.sup.kind = table.final.kind = ladder.kind;
    table.sup.n_samples = table.final.n_samples = 1;
    table.sup.max_energy_ratio = -std::numeric_limits<double>::infinity();
    for (const Level& level : setup.rows) {
        Stepper stepper(level.ops, level.config, problem.drift, problem.diffusion);
        BrownianPath path;
        path.tau = level.config.tau;
        path.increments.assign(level.config.n_steps, 0.0);
        const Trajectory traj = stepper.run(level.start, path);
        table.sup.max_energy_ratio = std::max(table.sup.max_energy_ratio, traj.max_energy_ratio());
        for (int it : traj.newton_iterations) table.sup.max_newton_iterations = std::max(table.sup.max_newton_iterations, it);
        table.sup.all_finite = table.sup.all_finite && traj.finite();
        const AnalyticErrors e = analytic_errors(*level.ops->space, traj, exact, exact_grad);
        table.sup.rows.push_back({level.param, e.sup.l2, 0.0, e.sup.h1, 0.0, e.sup.dt_l2, 0.0});
        table.final.rows.push_back({level.param, e.final.l2, 0.0, e.final.h1, 0.0, e.final.dt_l2, 0.0});
    }
    table.final.max_energy_ratio = table.sup.max_energy_ratio;
    table.final.max_newton_iterations = table.sup.max_newton_iterations;
    table.final.all_finite = table.sup.all_finite;
    fill_orders(table.sup.rows);
    fill_orders(table.final.rows);
    return table;
}

}  // namespace swave
