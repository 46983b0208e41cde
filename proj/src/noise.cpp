#include "swave/noise.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace swave {

namespace {

// Pairwise summation; for power-of-two block sizes this makes repeated coarsening by 2
// bit-identical to a single coarsening by the product.
double pairwise_sum(const double* x, std::size_t n) {
    if (n == 1) return x[0];
    const std::size_t half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

}  // namespace

double BrownianPath::endpoint() const {
    double w = 0.0;
    for (double dw : increments) w += dw;
    return w;
}

BrownianPath sample_path(std::uint64_t master_seed, std::uint64_t sample_index, std::size_t n_steps, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("sample_path: tau must be positive");
    if (n_steps == 0) throw std::invalid_argument("sample_path: n_steps must be >= 1");

    std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(sample_index), static_cast<std::uint32_t>(sample_index >> 32),
                      0x5157u};
    std::mt19937_64 engine(seq);
    std::normal_distribution<double> normal(0.0, 1.0);

    BrownianPath path;
    path.tau = tau;
    path.master_seed = master_seed;
    path.sample_index = sample_index;
    path.increments.resize(n_steps);
    const double scale = std::sqrt(tau);
    for (double& dw : path.increments) dw = scale * normal(engine);
    return path;
}

BrownianPath coarsen(const BrownianPath& path, std::size_t factor) {
    if (factor == 0 || path.n_steps() % factor != 0)
        throw std::invalid_argument("coarsen: factor must divide the number of steps");
    BrownianPath out;
    out.tau = path.tau * static_cast<double>(factor);
    out.master_seed = path.master_seed;
    out.sample_index = path.sample_index;
    out.increments.resize(path.n_steps() / factor);
    for (std::size_t k = 0; k < out.increments.size(); ++k)
        out.increments[k] = pairwise_sum(path.increments.data() + k * factor, factor);
    return out;
}

}  // namespace swave
