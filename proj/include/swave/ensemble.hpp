#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "swave/stepper.hpp"

namespace swave {

/// SPDE data shared by every sample: drift, noise coefficient and initial conditions.
struct Problem {
    PolynomialDrift drift;
    DiffusionSpec diffusion;
    Field h1;
    Field h2;
};

struct EnsembleOptions {
    std::size_t n_samples = 200;
    std::uint64_t master_seed = 1;
    unsigned threads = 1;
    /// Return per-sample trajectories (scalar series always; u/v states only with keep_states).
    bool keep_trajectories = false;
    bool keep_states = false;
    std::vector<int> moment_powers{1, 2, 4};
};

/// Per-node envelope of one scalar series across samples.
struct SeriesStats {
    std::vector<double> mean;
    std::vector<double> min;
    std::vector<double> max;
};

struct EnsembleStats {
    std::vector<double> times;
    SeriesStats l2sq;     // ||u^n||^2
    SeriesStats grad_sq;  // ||grad u^n||^2
    SeriesStats dt_l2sq;  // ||d_t u^n||^2
    SeriesStats hamiltonian;
    /// p -> per-node sample mean of H(u^n)^p.
    std::map<int, std::vector<double>> hamiltonian_moments;

    std::size_t n_samples = 0;   // successful samples
    std::size_t n_failed = 0;    // samples aborted by NewtonDiverged / LinearSolveFailed
    std::uint64_t master_seed = 0;
    double max_energy_ratio = 0.0;  // max over samples/steps of r_n / (1 + |H(u^n)|)
    int max_newton_iterations = 0;
    bool all_finite = true;
};

struct EnsembleResult {
    EnsembleStats stats;
    /// Per-sample trajectories (empty optional for failed samples); only with keep_trajectories.
    std::vector<std::optional<Trajectory>> trajectories;
};

class EnsembleFailed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Runs n_samples independent trajectories driven by sample_path(master_seed, i, ...), i = 0..n-1,
/// and aggregates per-node statistics by a tree reduction keyed by sample index, so results are
/// bit-identical for any thread count. Throws EnsembleFailed if more than 10% of samples fail.
EnsembleResult run_ensemble(const OperatorsPtr& ops, const SchemeConfig& config, const Problem& problem,
                            const EnsembleOptions& options);

/// Fraction of samples whose running maximum of discrete plus reference H^1 norms (squared) up to
/// node m stays <= kappa. `discrete[s][n]` and `reference[s][n]` are per-sample node series; an
/// empty `reference` omits the reference term. m = 0 gives the fraction over an empty window (1).
double subset_fraction(const std::vector<std::vector<double>>& discrete,
                       const std::vector<std::vector<double>>& reference, double kappa, std::size_t m);

/// subset_fraction for every m = 0..N.
std::vector<double> subset_fraction_curve(const std::vector<std::vector<double>>& discrete,
                                          const std::vector<std::vector<double>>& reference, double kappa);

}  // namespace swave
