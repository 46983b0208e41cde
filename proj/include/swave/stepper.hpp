#pragma once

#include <memory>
#include <stdexcept>
#include <vector>

#include "swave/diffusion.hpp"
#include "swave/drift.hpp"
#include "swave/fe.hpp"
#include "swave/noise.hpp"

namespace swave {

struct NewtonOptions {
    double abs_tol = 1e-11;  // on the residual max-norm
    double rel_tol = 1e-10;  // relative to the initial residual
    int max_iter = 30;
};

struct SchemeConfig {
    Discretization discretization = Discretization::ModifiedCrankNicolson;
    double tau = 1e-3;
    std::size_t n_steps = 1;
    NewtonOptions newton{};
    double linear_tol = 1e-12;

    double horizon() const { return tau * static_cast<double>(n_steps); }
};

/// Discrete state at t_n: displacement u^n and velocity v^n = (u^n - u^{n-1}) / tau.
struct State {
    std::size_t n = 0;
    Vector u;
    Vector v;
};

class NewtonDiverged : public std::runtime_error {
public:
    NewtonDiverged(std::size_t step, std::vector<double> history);
    std::size_t step;
    std::vector<double> residual_history;
};

struct StepInfo {
    int newton_iterations = 0;
    std::vector<double> residual_history;
    /// Max-norm residual of the two-step (primal) form recomputed from u^{n+1}, u^n, u^{n-1}.
    double primal_residual = 0.0;
    /// Max-norm of (u^{n+1} - u^n)/tau - v^{n+1}.
    double mixed_defect = 0.0;
    /// Energy balance residual r_n (nonpositive up to rounding for admissible drifts).
    double energy_residual = 0.0;
    double hamiltonian_before = 0.0;
    double hamiltonian_after = 0.0;
};

/// Mass and stiffness matrices of a space, shared read-only by every stepper on it.
struct SpaceOperators {
    FeSpacePtr space;
    SymSparseMatrix mass;
    SymSparseMatrix stiffness;

    explicit SpaceOperators(FeSpacePtr s);
};

using OperatorsPtr = std::shared_ptr<const SpaceOperators>;

struct TrajectoryOptions {
    bool keep_states = true;
};

/// One sample path of the scheme.
struct Trajectory {
    double tau = 0.0;
    std::vector<Vector> u;  // u^0..u^N when states are kept
    std::vector<Vector> v;
    std::vector<double> hamiltonian;   // H(u^n), n = 0..N
    std::vector<double> l2sq;          // ||u^n||^2
    std::vector<double> grad_sq;       // ||grad u^n||^2
    std::vector<double> dt_l2sq;       // ||d_t u^n||^2 (v^0 at n = 0)
    std::vector<int> newton_iterations;      // per step
    std::vector<double> energy_residuals;    // r_n per step
    double max_primal_residual = 0.0;
    double max_mixed_defect = 0.0;

    std::size_t n_steps() const { return energy_residuals.size(); }
    /// max_n r_n / (1 + |H(u^n)|).
    double max_energy_ratio() const;
    /// True if every recorded quantity is finite.
    bool finite() const;
};

/// Fully discrete scheme for d u_t = (Delta u + f(u)) dt + g(u) dW with natural Neumann conditions,
/// in mixed form: u^{n+1} = u^n + tau v^{n+1} and
///   (v^{n+1} - v^n, w) + tau (grad u^{n+1}, grad w) = tau (f_h^{n+1}, w) + (g(u^n), w) dW_{n+1},
/// with f_h^{n+1} = f(u^{n+1}) (fully implicit) or fhat(u^{n+1}, u^n) (modified Crank-Nicolson),
/// evaluated at quadrature points. Each step is a Newton solve for v^{n+1}.
///
/// A Stepper owns per-trajectory scratch and is not thread-safe; create one per worker.
class Stepper {
public:
    Stepper(OperatorsPtr ops, SchemeConfig config, PolynomialDrift drift, DiffusionSpec diffusion);

    const FeSpace& space() const { return *ops_->space; }
    const SchemeConfig& config() const { return config_; }

    /// u^0 = P_h h1, v^0 = P_h h2 (so u^{-1} = u^0 - tau v^0).
    State initial_state(const Field& h1, const Field& h2) const;

    State step(const State& state, double dW, StepInfo* info = nullptr);

    /// 1/2 ||v||^2 + 1/2 ||grad u||^2 + (F(u), 1).
    double hamiltonian(const Vector& u, const Vector& v) const;

    /// Runs config().n_steps steps driven by `path` from `start`.
    /// Throws std::invalid_argument if the path does not match the configured grid.
    Trajectory run(const State& start, const BrownianPath& path, TrajectoryOptions options = {});

private:
    void assemble_drift(const Vector& u_new, const Vector& u_old, bool with_jacobian);

    OperatorsPtr ops_;
    SchemeConfig config_;
    PolynomialDrift drift_;
    DiffusionSpec diffusion_;

    std::vector<double> base_values_;  // values of M + tau^2 K in the shared pattern
    SparseMatrix jacobian_;
    SpdSolver solver_;
    bool constant_jacobian_factorized_ = false;
    Vector drift_load_;
    std::vector<double> drift_jac_values_;
};

// Free-function forms of the scheme operations.

State initial_state(const FeSpacePtr& space, const Field& h1, const Field& h2);

State step(const State& state, double dW, const SchemeConfig& config, const FeSpacePtr& space,
           const PolynomialDrift& drift, const DiffusionSpec& diffusion, StepInfo* info = nullptr);

/// Discrete Hamiltonian from the pair (u^n, u^{n-1}).
double hamiltonian(const FeSpace& space, const PolynomialDrift& drift, const Vector& u_n, const Vector& u_prev,
                   double tau);

Trajectory run_trajectory(const FeSpacePtr& space, const SchemeConfig& config, const BrownianPath& path,
                          const PolynomialDrift& drift, const DiffusionSpec& diffusion, const Field& h1,
                          const Field& h2, TrajectoryOptions options = {});

}  // namespace swave
