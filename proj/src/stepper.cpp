#include "swave/stepper.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace swave {

namespace {

std::string diverged_message(std::size_t step, const std::vector<double>& history) {
    std::ostringstream os;
    os << "Newton iteration diverged at step " << step << "; residual history:";
    for (double r : history) os << ' ' << r;
    return os.str();
}

double max_abs(const Vector& x) { return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff(); }

}  // namespace

NewtonDiverged::NewtonDiverged(std::size_t s, std::vector<double> history)
    : std::runtime_error(diverged_message(s, history)), step(s), residual_history(std::move(history)) {}

SpaceOperators::SpaceOperators(FeSpacePtr s)
    : space(std::move(s)), mass(assemble_mass(*space)), stiffness(assemble_stiffness(*space)) {}

double Trajectory::max_energy_ratio() const {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < energy_residuals.size(); ++n)
        worst = std::max(worst, energy_residuals[n] / (1.0 + std::abs(hamiltonian[n])));
    return worst;
}

bool Trajectory::finite() const {
    auto ok = [](const std::vector<double>& xs) {
        for (double x : xs)
            if (!std::isfinite(x)) return false;
        return true;
    };
    return ok(hamiltonian) && ok(l2sq) && ok(grad_sq) && ok(dt_l2sq) && ok(energy_residuals);
}

Stepper::Stepper(OperatorsPtr ops, SchemeConfig config, PolynomialDrift drift, DiffusionSpec diffusion)
    : ops_(std::move(ops)),
      config_(config),
      drift_(std::move(drift)),
      diffusion_(diffusion),
      solver_(SpdSolver::for_dimension(ops_->space->dimension(), config.linear_tol)) {
    if (!(config_.tau > 0.0)) throw std::invalid_argument("SchemeConfig: tau must be positive");
    if (!(config_.newton.abs_tol > 0.0) || !(config_.newton.rel_tol > 0.0) || config_.newton.max_iter < 1 ||
        !(config_.linear_tol > 0.0))
        throw std::invalid_argument("SchemeConfig: tolerances must be positive");

    const SparseMatrix& m = ops_->mass.matrix();
    const SparseMatrix& k = ops_->stiffness.matrix();
    const double tau2 = config_.tau * config_.tau;
    base_values_.resize(static_cast<std::size_t>(m.nonZeros()));
    for (Eigen::Index i = 0; i < m.nonZeros(); ++i)
        base_values_[static_cast<std::size_t>(i)] = m.valuePtr()[i] + tau2 * k.valuePtr()[i];
    jacobian_ = m;
    std::copy(base_values_.begin(), base_values_.end(), jacobian_.valuePtr());
    drift_load_ = Vector::Zero(static_cast<Eigen::Index>(space().num_dofs()));
    drift_jac_values_.assign(base_values_.size(), 0.0);
}

State Stepper::initial_state(const Field& h1, const Field& h2) const {
    SpdSolver solver = SpdSolver::for_dimension(space().dimension(), config_.linear_tol);
    solver.factorize(ops_->mass.matrix());
    State s;
    s.n = 0;
    s.u = solver.solve(assemble_field_load(space(), h1));
    s.v = solver.solve(assemble_field_load(space(), h2));
    return s;
}

void Stepper::assemble_drift(const Vector& u_new, const Vector& u_old, bool with_jacobian) {
    const FeSpace& sp = space();
    const int nd = sp.dofs_per_cell();
    const bool implicit = config_.discretization == Discretization::FullyImplicit;
    drift_load_.setZero();
    if (with_jacobian) std::fill(drift_jac_values_.begin(), drift_jac_values_.end(), 0.0);
    for (std::size_t c = 0; c < sp.num_cells(); ++c) {
        const auto dofs = sp.cell_dofs(c);
        for (std::size_t q = 0; q < sp.num_qp(); ++q) {
            double a = 0.0;
            double b = 0.0;
            for (int i = 0; i < nd; ++i) {
                const double phi = sp.shape(q, i);
                a += u_new[dofs[static_cast<std::size_t>(i)]] * phi;
                b += u_old[dofs[static_cast<std::size_t>(i)]] * phi;
            }
            const double jxw = sp.jxw(c, q);
            const double fval = implicit ? drift_.f(a) : drift_.fhat(a, b);
            const double w = jxw * fval;
            for (int i = 0; i < nd; ++i) drift_load_[dofs[static_cast<std::size_t>(i)]] += w * sp.shape(q, i);
            if (!with_jacobian) continue;
            const double wd = jxw * (implicit ? drift_.f_prime(a) : drift_.fhat_da(a, b));
            for (int i = 0; i < nd; ++i)
                for (int j = 0; j < nd; ++j)
                    drift_jac_values_[static_cast<std::size_t>(sp.value_index(c, i, j))] +=
                        wd * (sp.shape(q, i) * sp.shape(q, j));
        }
    }
}

double Stepper::hamiltonian(const Vector& u, const Vector& v) const {
    double potential = 0.0;
    if (!drift_.is_zero()) {
        const FeSpace& sp = space();
        for (std::size_t c = 0; c < sp.num_cells(); ++c) {
            const auto dofs = sp.cell_dofs(c);
            for (std::size_t q = 0; q < sp.num_qp(); ++q) {
                double a = 0.0;
                for (int i = 0; i < sp.dofs_per_cell(); ++i) a += u[dofs[static_cast<std::size_t>(i)]] * sp.shape(q, i);
                potential += sp.jxw(c, q) * drift_.potential(a);
            }
        }
    }
    return 0.5 * ops_->mass.quadratic_form(v) + 0.5 * ops_->stiffness.quadratic_form(u) + potential;
}

State Stepper::step(const State& state, double dW, StepInfo* info) {
    const SparseMatrix& m = ops_->mass.matrix();
    const SparseMatrix& k = ops_->stiffness.matrix();
    const double tau = config_.tau;
    const FeSpace& sp = space();

    Vector noise_load = Vector::Zero(static_cast<Eigen::Index>(sp.num_dofs()));
    if (!diffusion_.is_zero()) {
        noise_load = assemble_pointwise_load(
            sp, [this](double u) { return diffusion_.g(u); }, state.u);
    }

    // (M + tau^2 K) v - tau b_f(u^n + tau v, u^n) = M v^n - tau K u^n + b_g dW
    const Vector rhs = m * state.v - tau * (k * state.u) + dW * noise_load;
    const bool has_drift = !drift_.is_zero();

    Vector v = state.v;
    Vector u_new = state.u + tau * v;
    auto residual = [&](bool with_jacobian) {
        u_new = state.u + tau * v;
        if (has_drift) assemble_drift(u_new, state.u, with_jacobian);
        std::copy(base_values_.begin(), base_values_.end(), jacobian_.valuePtr());
        Vector g = jacobian_ * v - rhs;
        if (has_drift) g -= tau * drift_load_;
        return g;
    };

    Vector g = residual(true);
    std::vector<double> history{max_abs(g)};
    const double r0 = history.front();
    const auto& opt = config_.newton;
    int iterations = 0;
    auto converged = [&](double r) { return r <= opt.abs_tol || r <= opt.rel_tol * r0; };
    while (!converged(history.back())) {
        if (iterations >= opt.max_iter || !std::isfinite(history.back())) throw NewtonDiverged(state.n, history);
        if (has_drift) {
            const double tau2 = tau * tau;
            double* values = jacobian_.valuePtr();
            for (std::size_t i = 0; i < base_values_.size(); ++i) values[i] = base_values_[i] - tau2 * drift_jac_values_[i];
            solver_.factorize(jacobian_);
        } else if (!constant_jacobian_factorized_) {
            solver_.factorize(jacobian_);
            constant_jacobian_factorized_ = true;
        }
        const Vector delta = solver_.solve(-g);
        v += delta;
        ++iterations;
        g = residual(true);
        history.push_back(max_abs(g));
        // Update below rounding: the residual cannot be reduced further.
        if (max_abs(delta) <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + max_abs(v)) &&
            std::isfinite(history.back()))
            break;
    }

    State next;
    next.n = state.n + 1;
    next.u = u_new;
    next.v = v;

    if (info) {
        info->newton_iterations = iterations;
        info->residual_history = history;
        const Vector u_prev = state.u - tau * state.v;
        Vector primal = m * ((next.u - 2.0 * state.u + u_prev) / tau) + tau * (k * next.u) - dW * noise_load;
        if (has_drift) primal -= tau * drift_load_;
        info->primal_residual = max_abs(primal);
        info->mixed_defect = max_abs((next.u - state.u) / tau - next.v);
        info->hamiltonian_before = hamiltonian(state.u, state.v);
        info->hamiltonian_after = hamiltonian(next.u, next.v);
        const Vector dv = next.v - state.v;
        const Vector du = next.u - state.u;
        info->energy_residual = info->hamiltonian_after - info->hamiltonian_before +
                                0.5 * ops_->mass.quadratic_form(dv) + 0.5 * ops_->stiffness.quadratic_form(du) -
                                noise_load.dot(next.v) * dW;
    }
    return next;
}

Trajectory Stepper::run(const State& start, const BrownianPath& path, TrajectoryOptions options) {
    if (path.n_steps() != config_.n_steps)
        throw std::invalid_argument("run: Brownian path length does not match n_steps");
    if (std::abs(path.tau - config_.tau) > 1e-12 * config_.tau)
        throw std::invalid_argument("run: Brownian path step does not match tau");

    Trajectory traj;
    traj.tau = config_.tau;
    const std::size_t n = config_.n_steps;
    traj.hamiltonian.reserve(n + 1);
    traj.l2sq.reserve(n + 1);
    traj.grad_sq.reserve(n + 1);
    traj.dt_l2sq.reserve(n + 1);
    traj.newton_iterations.reserve(n);
    traj.energy_residuals.reserve(n);

    auto record = [&](const State& s) {
        traj.l2sq.push_back(ops_->mass.quadratic_form(s.u));
        traj.grad_sq.push_back(ops_->stiffness.quadratic_form(s.u));
        traj.dt_l2sq.push_back(ops_->mass.quadratic_form(s.v));
        if (options.keep_states) {
            traj.u.push_back(s.u);
            traj.v.push_back(s.v);
        }
    };

    State s = start;
    s.n = 0;
    record(s);
    traj.hamiltonian.push_back(hamiltonian(s.u, s.v));
    StepInfo info;
    for (std::size_t i = 0; i < n; ++i) {
        s = step(s, path.increments[i], &info);
        record(s);
        traj.hamiltonian.push_back(info.hamiltonian_after);
        traj.newton_iterations.push_back(info.newton_iterations);
        traj.energy_residuals.push_back(info.energy_residual);
        traj.max_primal_residual = std::max(traj.max_primal_residual, info.primal_residual);
        traj.max_mixed_defect = std::max(traj.max_mixed_defect, info.mixed_defect);
    }
    return traj;
}

namespace {

OperatorsPtr operators_for(const FeSpacePtr& space) { return std::make_shared<const SpaceOperators>(space); }

}  // namespace

State initial_state(const FeSpacePtr& space, const Field& h1, const Field& h2) {
    State s;
    s.u = l2_project(space, h1).coeffs;
    s.v = l2_project(space, h2).coeffs;
    return s;
}

State step(const State& state, double dW, const SchemeConfig& config, const FeSpacePtr& space,
           const PolynomialDrift& drift, const DiffusionSpec& diffusion, StepInfo* info) {
    Stepper stepper(operators_for(space), config, drift, diffusion);
    return stepper.step(state, dW, info);
}

double hamiltonian(const FeSpace& space, const PolynomialDrift& drift, const Vector& u_n, const Vector& u_prev,
                   double tau) {
    const Vector dt = (u_n - u_prev) / tau;
    const SymSparseMatrix m = assemble_mass(space);
    const SymSparseMatrix k = assemble_stiffness(space);
    double potential = 0.0;
    for (std::size_t c = 0; c < space.num_cells(); ++c) {
        const auto dofs = space.cell_dofs(c);
        for (std::size_t q = 0; q < space.num_qp(); ++q) {
            double a = 0.0;
            for (int i = 0; i < space.dofs_per_cell(); ++i) a += u_n[dofs[static_cast<std::size_t>(i)]] * space.shape(q, i);
            potential += space.jxw(c, q) * drift.potential(a);
        }
    }
    return 0.5 * m.quadratic_form(dt) + 0.5 * k.quadratic_form(u_n) + potential;
}

Trajectory run_trajectory(const FeSpacePtr& space, const SchemeConfig& config, const BrownianPath& path,
                          const PolynomialDrift& drift, const DiffusionSpec& diffusion, const Field& h1,
                          const Field& h2, TrajectoryOptions options) {
    Stepper stepper(operators_for(space), config, drift, diffusion);
    return stepper.run(stepper.initial_state(h1, h2), path, options);
}

}  // namespace swave
