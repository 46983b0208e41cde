#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "swave/ensemble.hpp"

namespace swave {

/// Squared error norms at every coarse time node.
/// dt_l2sq[0] is unused (the difference quotient needs n >= 1) and set to 0.
struct NodeErrors {
    std::vector<double> l2sq;
    std::vector<double> grad_sq;
    std::vector<double> dt_l2sq;
};

/// Errors of a coarse trajectory against a finer same-path reference.
///
/// e^n = I u_coarse^n - u_ref^{n k}, where I is the exact nested-space interpolation and
/// k = tau_coarse / tau_ref; d_t e^n = (e^n - e^{n-1}) / tau_coarse. Norms are evaluated on the
/// reference space. Throws std::invalid_argument for non-nested spaces or non-integer step ratios.
class ErrorEvaluator {
public:
    ErrorEvaluator(const FeSpace& coarse, OperatorsPtr reference);

    NodeErrors operator()(const Trajectory& coarse, const Trajectory& reference) const;

private:
    SparseMatrix transfer_;
    OperatorsPtr ref_;
};

NodeErrors error_norms(const Trajectory& coarse, const FeSpace& coarse_space, const Trajectory& reference,
                       const OperatorsPtr& reference_ops);

struct SupRmsErrors {
    double l2 = 0.0;
    double h1 = 0.0;
    double dt_l2 = 0.0;
};

/// sup_n sqrt(mean_s ||e_s^n||^2) for each norm; the d_t norm takes the sup over n >= 1.
/// Sample means use a tree reduction in sample order.
SupRmsErrors sup_rms_errors(const std::vector<NodeErrors>& per_sample);

enum class LadderKind { Space, Time };

/// A halving ladder of discretizations.
/// Space: meshes with coarsest_cells * 2^k cells per side, k = 0..levels-1, at fixed tau.
/// Time:  tau / 2^k, k = 0..levels-1, on a fixed mesh with coarsest_cells per side.
/// The reference is reference_extra_levels further halvings of the finest row.
struct LadderSpec {
    LadderKind kind = LadderKind::Space;
    int dimension = 1;
    int degree = 1;
    int coarsest_cells = 4;
    int levels = 5;
    double tau = 1e-3;
    double horizon = 0.01;
    int reference_extra_levels = 1;
    Discretization discretization = Discretization::ModifiedCrankNicolson;
    NewtonOptions newton{};
};

struct ErrorRow {
    double param = 0.0;  // h or tau
    double l2 = 0.0;
    double l2_order = 0.0;  // NaN on the first row
    double h1 = 0.0;
    double h1_order = 0.0;
    double dt_l2 = 0.0;
    double dt_l2_order = 0.0;
};

struct ErrorTable {
    LadderKind kind = LadderKind::Space;
    std::vector<ErrorRow> rows;
    double reference_param = 0.0;
    std::size_t n_samples = 0;
    std::size_t n_failed = 0;
    std::uint64_t master_seed = 0;
    /// max over all samples, rows and the reference of r_n / (1 + |H(u^n)|).
    double max_energy_ratio = 0.0;
    int max_newton_iterations = 0;
    bool all_finite = true;
    /// Empirical fraction of samples in the subset {max_n ||u_h^n||_{H1}^2 + max ||u_ref||_{H1}^2 <= kappa}
    /// at the final time of the finest row, over a kappa grid.
    std::vector<std::pair<double, double>> subset_curve;
};

/// Orders log2(err_prev / err_curr) for halving ladders; NaN for the first row.
void fill_orders(std::vector<ErrorRow>& rows);

/// Runs the coupled ensemble for every ladder row against the shared reference and fills the table.
/// Each sample draws one Brownian path at the reference step and coarsens it for every row.
ErrorTable convergence_table(const LadderSpec& ladder, const Problem& problem, const EnsembleOptions& options);

/// Errors of a deterministic trajectory against a known solution u(x,t) with gradient grad_u.
/// Integrals use a quadrature rule of degree `quadrature_degree` on each cell.
struct AnalyticErrors {
    NodeErrors per_node;
    SupRmsErrors sup;   // sup over nodes
    SupRmsErrors final; // at the last node
};

using SpaceTimeField = std::function<double(const Point&, double)>;
using SpaceTimeGradient = std::function<Point(const Point&, double)>;

AnalyticErrors analytic_errors(const FeSpace& space, const Trajectory& traj, const SpaceTimeField& exact,
                               const SpaceTimeGradient& exact_grad, int quadrature_degree = 8);

/// Spatial ladder of deterministic runs measured against an exact solution.
struct AnalyticTable {
    ErrorTable sup;    // sup over time nodes
    ErrorTable final;  // at the final time
};

AnalyticTable analytic_convergence_table(const LadderSpec& ladder, const Problem& problem,
                                         const SpaceTimeField& exact, const SpaceTimeGradient& exact_grad);

}  // namespace swave
