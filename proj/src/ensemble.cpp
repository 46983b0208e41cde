#include "swave/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "swave/parallel.hpp"

namespace swave {

namespace {

struct Accumulator {
    std::vector<double> sum, min, max;

    explicit Accumulator(const std::vector<double>& x) : sum(x), min(x), max(x) {}

    static Accumulator merge(const Accumulator& a, const Accumulator& b) {
        Accumulator out = a;
        for (std::size_t i = 0; i < out.sum.size(); ++i) {
            out.sum[i] += b.sum[i];
            out.min[i] = std::min(out.min[i], b.min[i]);
            out.max[i] = std::max(out.max[i], b.max[i]);
        }
        return out;
    }

    SeriesStats finish(std::size_t n) const {
        SeriesStats s{sum, min, max};
        for (double& m : s.mean) m /= static_cast<double>(n);
        return s;
    }
};

struct SampleSummary {
    Accumulator l2, grad, dt, ham;
    std::vector<std::vector<double>> moments;
};

SampleSummary merge(const SampleSummary& a, const SampleSummary& b) {
    SampleSummary out{Accumulator::merge(a.l2, b.l2), Accumulator::merge(a.grad, b.grad), Accumulator::merge(a.dt, b.dt),
                      Accumulator::merge(a.ham, b.ham), a.moments};
    for (std::size_t p = 0; p < out.moments.size(); ++p)
        for (std::size_t i = 0; i < out.moments[p].size(); ++i) out.moments[p][i] += b.moments[p][i];
    return out;
}

}  // namespace

EnsembleResult run_ensemble(const OperatorsPtr& ops, const SchemeConfig& config, const Problem& problem,
                            const EnsembleOptions& options) {
    if (options.n_samples == 0) throw std::invalid_argument("run_ensemble: n_samples must be >= 1");

    // Initial data are deterministic; project once.
    const State start = Stepper(ops, config, problem.drift, problem.diffusion).initial_state(problem.h1, problem.h2);

    struct Outcome {
        std::optional<Trajectory> traj;
        std::string error;
    };
    std::vector<Outcome> outcomes(options.n_samples);
    parallel_for(options.n_samples, options.threads, [&](std::size_t i) {
        Stepper stepper(ops, config, problem.drift, problem.diffusion);
        const BrownianPath path = sample_path(options.master_seed, i, config.n_steps, config.tau);
        try {
            outcomes[i].traj = stepper.run(start, path, TrajectoryOptions{options.keep_states});
        } catch (const NewtonDiverged& e) {
            outcomes[i].error = e.what();
        } catch (const LinearSolveFailed& e) {
            outcomes[i].error = e.what();
        }
    });

    EnsembleResult result;
    EnsembleStats& stats = result.stats;
    stats.master_seed = options.master_seed;
    stats.max_energy_ratio = -std::numeric_limits<double>::infinity();
    std::vector<SampleSummary> summaries;
    for (auto& o : outcomes) {
        if (!o.traj) {
            ++stats.n_failed;
            continue;
        }
        const Trajectory& t = *o.traj;
        stats.all_finite = stats.all_finite && t.finite();
        if (!t.energy_residuals.empty()) stats.max_energy_ratio = std::max(stats.max_energy_ratio, t.max_energy_ratio());
        for (int it : t.newton_iterations) stats.max_newton_iterations = std::max(stats.max_newton_iterations, it);
        SampleSummary s{Accumulator(t.l2sq), Accumulator(t.grad_sq), Accumulator(t.dt_l2sq), Accumulator(t.hamiltonian), {}};
        for (int p : options.moment_powers) {
            std::vector<double> hp(t.hamiltonian.size());
            for (std::size_t n = 0; n < hp.size(); ++n) hp[n] = std::pow(t.hamiltonian[n], p);
            s.moments.push_back(std::move(hp));
        }
        summaries.push_back(std::move(s));
    }
    if (static_cast<double>(stats.n_failed) > 0.1 * static_cast<double>(options.n_samples)) {
        std::ostringstream os;
        os << stats.n_failed << " of " << options.n_samples << " samples failed (threshold 10%)";
        for (const auto& o : outcomes)
            if (!o.traj) {
                os << "; first failure: " << o.error;
                break;
            }
        throw EnsembleFailed(os.str());
    }
    stats.n_samples = summaries.size();

    const SampleSummary total = tree_reduce(summaries, 0, summaries.size(), merge);
    const std::size_t n = stats.n_samples;
    stats.l2sq = total.l2.finish(n);
    stats.grad_sq = total.grad.finish(n);
    stats.dt_l2sq = total.dt.finish(n);
    stats.hamiltonian = total.ham.finish(n);
    for (std::size_t p = 0; p < options.moment_powers.size(); ++p) {
        std::vector<double> m = total.moments[p];
        for (double& x : m) x /= static_cast<double>(n);
        stats.hamiltonian_moments[options.moment_powers[p]] = std::move(m);
    }
    stats.times.resize(config.n_steps + 1);
    for (std::size_t k = 0; k <= config.n_steps; ++k) stats.times[k] = config.tau * static_cast<double>(k);

    if (options.keep_trajectories) {
        result.trajectories.reserve(outcomes.size());
        for (auto& o : outcomes) result.trajectories.push_back(std::move(o.traj));
    }
    return result;
}

double subset_fraction(const std::vector<std::vector<double>>& discrete,
                       const std::vector<std::vector<double>>& reference, double kappa, std::size_t m) {
    if (discrete.empty()) return 0.0;
    if (!reference.empty() && reference.size() != discrete.size())
        throw std::invalid_argument("subset_fraction: sample counts differ");
    std::size_t inside = 0;
    for (std::size_t s = 0; s < discrete.size(); ++s) {
        double dmax = 0.0;
        for (std::size_t n = 1; n <= m && n < discrete[s].size(); ++n) dmax = std::max(dmax, discrete[s][n]);
        double rmax = 0.0;
        if (!reference.empty())
            for (std::size_t n = 0; n <= m && n < reference[s].size(); ++n) rmax = std::max(rmax, reference[s][n]);
        if (dmax + rmax <= kappa) ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(discrete.size());
}

std::vector<double> subset_fraction_curve(const std::vector<std::vector<double>>& discrete,
                                          const std::vector<std::vector<double>>& reference, double kappa) {
    std::vector<double> out;
    if (discrete.empty()) return out;
    const std::size_t nodes = discrete.front().size();
    std::vector<double> dmax(discrete.size(), 0.0);
    std::vector<double> rmax(discrete.size(), 0.0);
    out.reserve(nodes);
    for (std::size_t m = 0; m < nodes; ++m) {
        std::size_t inside = 0;
        for (std::size_t s = 0; s < discrete.size(); ++s) {
            if (m >= 1) dmax[s] = std::max(dmax[s], discrete[s][m]);
            if (!reference.empty()) rmax[s] = std::max(rmax[s], reference[s][m]);
            if (dmax[s] + rmax[s] <= kappa) ++inside;
        }
        out.push_back(static_cast<double>(inside) / static_cast<double>(discrete.size()));
    }
    return out;
}

}  // namespace swave
