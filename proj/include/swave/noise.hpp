#pragma once

#include <cstdint>
#include <vector>

namespace swave {

/// Increments W(t_{n+1}) - W(t_n) of one scalar Wiener path on a uniform grid of step `tau`.
struct BrownianPath {
    double tau = 0.0;
    std::vector<double> increments;
    std::uint64_t master_seed = 0;
    std::uint64_t sample_index = 0;

    std::size_t n_steps() const { return increments.size(); }
    double horizon() const { return tau * static_cast<double>(increments.size()); }
    /// W(T) - W(0), summed in index order.
    double endpoint() const;
};

/// N(0, tau) increments from a stream keyed by (master_seed, sample_index). Streams for different
/// indices are independent, so paths can be generated in any order or in parallel.
/// Throws std::invalid_argument for tau <= 0 or n_steps == 0.
BrownianPath sample_path(std::uint64_t master_seed, std::uint64_t sample_index, std::size_t n_steps, double tau);

/// Sums consecutive blocks of `factor` increments, giving the same path on the grid of step factor*tau.
/// Throws std::invalid_argument if factor is zero or does not divide n_steps.
BrownianPath coarsen(const BrownianPath& path, std::size_t factor);

}  // namespace swave
