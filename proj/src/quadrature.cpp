#include "swave/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace swave {

QuadratureRule gauss_legendre(int n_points) {
    if (n_points < 1) throw std::invalid_argument("gauss_legendre: need at least one point");
    const int n = n_points;
    QuadratureRule rule;
    rule.exact_degree = 2 * n - 1;
    rule.points.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));

    // Newton iteration on P_n over [-1,1], starting from the Chebyshev-like guess.
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // Recompute derivative at the converged root for the weight.
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);

        const auto lo = static_cast<std::size_t>(i);
        const auto hi = static_cast<std::size_t>(n - 1 - i);
        // Map from [-1,1] to [0,1].
        rule.points[lo] = {0.5 * (1.0 - x), 0.0};
        rule.points[hi] = {0.5 * (1.0 + x), 0.0};
        rule.weights[lo] = 0.5 * w;
        rule.weights[hi] = 0.5 * w;
    }
    return rule;
}

QuadratureRule triangle_rule(int degree) {
    QuadratureRule rule;
    if (degree <= 1) {
        rule.exact_degree = 1;
        rule.points = {{1.0 / 3.0, 1.0 / 3.0}};
        rule.weights = {0.5};
        return rule;
    }
    if (degree == 2) {
        rule.exact_degree = 2;
        rule.points = {{1.0 / 6.0, 1.0 / 6.0}, {2.0 / 3.0, 1.0 / 6.0}, {1.0 / 6.0, 2.0 / 3.0}};
        rule.weights = {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0};
        return rule;
    }

    // x = s, y = t (1 - s), dx dy = (1 - s) ds dt. A degree-p integrand becomes degree p+1 in s
    // and degree p in t.
    const QuadratureRule gs = gauss_legendre((degree + 3) / 2);
    const QuadratureRule gt = gauss_legendre((degree + 2) / 2);
    rule.exact_degree = degree;
    for (std::size_t a = 0; a < gs.size(); ++a) {
        const double s = gs.points[a][0];
        for (std::size_t b = 0; b < gt.size(); ++b) {
            const double t = gt.points[b][0];
            rule.points.push_back({s, t * (1.0 - s)});
            rule.weights.push_back(gs.weights[a] * gt.weights[b] * (1.0 - s));
        }
    }
    return rule;
}

QuadratureRule reference_rule(int dim, int degree) {
    degree = std::max(degree, 1);
    if (dim == 1) {
        return gauss_legendre((degree + 2) / 2);
    }
    if (dim == 2) return triangle_rule(degree);
    throw std::invalid_argument("reference_rule: dimension must be 1 or 2");
}

}  // namespace swave
