// Experiment runner: presets for the stochastic wave tests, or a JSON config with flag overrides.
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "swave/experiment.hpp"

namespace {

void print_table(const char* title, const swave::ErrorTable& t) {
    std::printf("%s (samples %zu, failed %zu)\n", title, t.n_samples, t.n_failed);
    std::printf("%12s %12s %7s %12s %7s %12s %7s\n", "param", "L2", "order", "H1", "order", "dtL2", "order");
    for (const auto& r : t.rows)
        std::printf("%12.4e %12.4e %7.3f %12.4e %7.3f %12.4e %7.3f\n", r.param, r.l2, r.l2_order, r.h1, r.h1_order,
                    r.dt_l2, r.dt_l2_order);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite element Monte Carlo runner for the stochastic wave equation"};
    std::string preset, config_path, scheme;
    swave::Overrides ov;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    double tau = 0.0;
    int h_level = 0;
    unsigned threads = 0;
    std::string out;
    bool full_scale = false;
    bool list = false;

    auto* p = app.add_option("--preset", preset, "Preset name");
    auto* c = app.add_option("--config", config_path, "JSON config file (may name a base preset)");
    p->excludes(c);
    auto* o_samples = app.add_option("--samples", samples, "Monte Carlo sample count")->check(CLI::PositiveNumber);
    auto* o_seed = app.add_option("--seed", seed, "Master seed");
    auto* o_tau = app.add_option("--tau", tau, "Time step (fixed step, or coarsest step of temporal ladders)");
    auto* o_h = app.add_option("--h-level", h_level, "Fixed mesh with 2^L cells per side")->check(CLI::Range(0, 20));
    auto* o_scheme = app.add_option("--scheme", scheme, "Drift discretization")->check(CLI::IsMember({"implicit", "mcn"}));
    auto* o_threads = app.add_option("--threads", threads, "Worker threads (0 = all cores)");
    auto* o_out = app.add_option("--out", out, "Output directory");
    app.add_flag("--paper-scale", full_scale, "5000 samples and full ladders");
    app.add_flag("--list-presets", list, "Print preset names and exit");
    CLI11_PARSE(app, argc, argv);

    if (list) {
        for (const auto& n : swave::preset_names()) std::cout << n << "\n";
        return 0;
    }
    if (preset.empty() && config_path.empty()) {
        std::cerr << "error: one of --preset or --config is required\n" << app.help();
        return 2;
    }
    if (*o_samples) ov.samples = samples;
    if (*o_seed) ov.seed = seed;
    if (*o_tau) ov.tau = tau;
    if (*o_h) ov.h_level = h_level;
    if (*o_scheme)
        ov.scheme = scheme == "implicit" ? swave::Discretization::FullyImplicit
                                         : swave::Discretization::ModifiedCrankNicolson;
    if (*o_threads) ov.threads = threads;
    if (*o_out) ov.out = out;

    try {
        swave::ExperimentConfig cfg =
            config_path.empty() ? swave::preset_config(preset, full_scale) : swave::load_config(config_path, full_scale);
        swave::apply_overrides(cfg, ov);
        const swave::ExperimentOutputs res = swave::run_experiment(cfg);
        if (res.spatial) print_table("spatial", *res.spatial);
        if (res.temporal) print_table("temporal", *res.temporal);
        if (res.analytic) {
            print_table("analytic (sup over time)", res.analytic->sup);
            print_table("analytic (final time)", res.analytic->final);
        }
        if (res.stochastic)
            std::printf("stability: samples %zu, failed %zu, max energy ratio %.3e, finite %s\n",
                        res.stochastic->n_samples, res.stochastic->n_failed, res.stochastic->max_energy_ratio,
                        res.stochastic->all_finite ? "yes" : "no");
        for (const auto& f : res.files) std::cout << "wrote " << f << "\n";
        if (res.stochastic && !res.stochastic->all_finite) return 3;
        return 0;
    } catch (const swave::ConfigError& e) {
        for (const auto& m : e.problems()) std::cerr << "error: " << m << "\n";
        return 2;
    } catch (const swave::EnsembleFailed& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
