#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "swave/metrics.hpp"

namespace swave {

enum class ExperimentKind { Rates, Stability, Analytic };

struct LadderConfig {
    bool enabled = true;
    int cells = 4;        // coarsest (spatial) or fixed (temporal) cells per side
    int levels = 5;
    double tau = 1e-3;    // fixed (spatial) or coarsest (temporal) step
    double horizon = 0.01;
    int reference_extra_levels = 1;  // halvings of the finest row that give the shared reference
};

struct StabilityConfig {
    int cells = 16;
    double tau = 0.01;
    double horizon = 1.0;
    /// Threshold of the subset diagnostic; <= 0 selects 2 x max_n of the deterministic ||u||_{H1}^2.
    double kappa = 0.0;
};

/// Fully resolved experiment description. Presets fill every field; config files and flags override.
struct ExperimentConfig {
    std::string name = "custom";
    ExperimentKind kind = ExperimentKind::Rates;
    int dimension = 1;
    int degree = 1;
    std::vector<double> drift_coeffs;
    std::optional<double> drift_alpha;   // derived from the coefficients when unset
    std::optional<double> drift_lambda;
    DiffusionSpec diffusion = DiffusionSpec::zero();
    std::string h1 = "zero";
    std::string h2 = "zero";
    Discretization discretization = Discretization::ModifiedCrankNicolson;
    LadderConfig spatial;
    LadderConfig temporal;
    StabilityConfig stability;
    NewtonOptions newton{};
    std::size_t n_samples = 200;
    std::uint64_t master_seed = 1;
    unsigned threads = 1;
    std::string output_dir = "results";
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

std::vector<std::string> preset_names();
/// Throws ConfigError for unknown names. full_scale switches to 5000 samples and the full ladders.
ExperimentConfig preset_config(const std::string& name, bool full_scale = false);

/// Reads a JSON config file; a "preset" key selects the base configuration that the file overrides.
/// Parse errors report line and column; unknown keys and bad values report their field path.
ExperimentConfig load_config(const std::string& path, bool full_scale = false);
ExperimentConfig parse_config(const std::string& text, bool full_scale = false);

struct Overrides {
    std::optional<std::size_t> samples;
    std::optional<std::uint64_t> seed;
    std::optional<double> tau;       // spatial-ladder step, stability step and coarsest temporal step
    std::optional<int> h_level;      // 2^L cells per side for the fixed mesh (temporal ladder, stability)
    std::optional<Discretization> scheme;
    std::optional<unsigned> threads;
    std::optional<std::string> out;
};

void apply_overrides(ExperimentConfig& config, const Overrides& overrides);

/// Field-path messages for every violated constraint (empty when valid).
std::vector<std::string> validate_config(const ExperimentConfig& config);

PolynomialDrift make_drift(const ExperimentConfig& config);
Problem make_problem(const ExperimentConfig& config);
Field named_field(const std::string& name);

/// Resolved config plus build metadata as JSON text.
std::string manifest_json(const ExperimentConfig& config);
/// FNV-1a hash of the numeric-content-determining part of the manifest (thread count and output
/// directory excluded), as 16 hex digits.
std::string manifest_hash(const ExperimentConfig& config);

void write_error_table(std::ostream& os, const ErrorTable& table, const std::string& hash);
void write_subset_curve(std::ostream& os, const ErrorTable& table, const std::string& hash);
void write_stability_series(std::ostream& os, const EnsembleStats& stats, const std::vector<double>& subset,
                            double kappa, const std::string& hash);
void write_deterministic_series(std::ostream& os, const Trajectory& traj, const std::string& hash);

struct ExperimentOutputs {
    std::vector<std::string> files;
    std::optional<ErrorTable> spatial;
    std::optional<ErrorTable> temporal;
    std::optional<EnsembleStats> stochastic;
    std::optional<Trajectory> deterministic;
    std::vector<double> subset;  // per node, stability runs
    double kappa = 0.0;
    std::optional<AnalyticTable> analytic;
};

/// Validates, runs and writes every output of the experiment into config.output_dir.
/// Throws ConfigError on invalid configs and EnsembleFailed when too many samples fail.
ExperimentOutputs run_experiment(const ExperimentConfig& config, bool write_files = true);

}  // namespace swave
