#include "swave/drift.hpp"

#include <cmath>
#include <sstream>

namespace swave {

int PolynomialDrift::degree() const {
    for (int j = static_cast<int>(coeffs.size()); j >= 1; --j)
        if (coeffs[static_cast<std::size_t>(j - 1)] != 0.0) return j;
    return 0;
}

double PolynomialDrift::f(double u) const {
    double acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * u + *it;
    return acc * u;
}

double PolynomialDrift::f_prime(double u) const {
    double acc = 0.0;
    for (std::size_t j = coeffs.size(); j >= 1; --j) acc = acc * u + static_cast<double>(j) * coeffs[j - 1];
    return acc;
}

double PolynomialDrift::potential(double u) const {
    double acc = 0.0;
    for (std::size_t j = coeffs.size(); j >= 1; --j) acc = acc * u + coeffs[j - 1] / static_cast<double>(j + 1);
    return -acc * u * u;
}

double PolynomialDrift::fhat(double a, double b) const {
    // s_j = sum_{k=0}^j a^k b^{j-k}, s_j = a s_{j-1} + b^j.
    double s = 1.0;
    double bj = 1.0;
    double sum = 0.0;
    for (std::size_t j = 1; j <= coeffs.size(); ++j) {
        bj *= b;
        s = a * s + bj;
        sum += coeffs[j - 1] / static_cast<double>(j + 1) * s;
    }
    return sum;
}

double PolynomialDrift::fhat_da(double a, double b) const {
    // d_j = ds_j/da = s_{j-1} + a d_{j-1}.
    double s = 1.0;
    double d = 0.0;
    double bj = 1.0;
    double sum = 0.0;
    for (std::size_t j = 1; j <= coeffs.size(); ++j) {
        d = s + a * d;
        bj *= b;
        s = a * s + bj;
        sum += coeffs[j - 1] / static_cast<double>(j + 1) * d;
    }
    return sum;
}

std::vector<DriftViolation> validate(const PolynomialDrift& drift, int dimension, Discretization scheme) {
    std::vector<DriftViolation> out;
    const int q = drift.degree();
    if (q == 0) return out;

    if (q % 2 == 0) {
        out.push_back({"odd_degree", 0.0,
                       "drift degree q = " + std::to_string(q) + " must be odd (f(u) = sum a_j u^j with q odd)"});
        return out;
    }
    if (dimension == 3 && q > 3)
        out.push_back({"degree_dim3", 0.0, "drift degree q must satisfy q <= 3 in three dimensions"});
    if (!(drift.lambda > 0.0))
        out.push_back({"lambda_positive", 0.0, "coercivity constant lambda must be > 0"});
    if (drift.alpha < 0.0) out.push_back({"alpha_nonnegative", 0.0, "coercivity constant alpha must be >= 0"});

    constexpr double kRange = 1e3;
    constexpr int kPoints = 100000;
    bool coercive_reported = false;
    bool convex_reported = false;
    // A few unit-scale probes come first so witnesses are readable, then the full grid.
    std::vector<double> samples{1.0, -1.0, 0.5, -0.5, 2.0, -2.0, 10.0, -10.0};
    samples.reserve(samples.size() + kPoints);
    for (int i = 0; i < kPoints; ++i)
        samples.push_back(-kRange + 2.0 * kRange * static_cast<double>(i) / static_cast<double>(kPoints - 1));
    for (const double u : samples) {
        if (!coercive_reported) {
            const double lhs = drift.potential(u);
            const double rhs = (0.5 * drift.alpha + 0.5 * drift.lambda * std::pow(u, q - 1)) * u * u;
            // Equality cases (e.g. f = -u - u^3 with alpha = 1, lambda = 1/2) differ only by rounding.
            if (lhs < rhs - 1e-13 * std::abs(rhs)) {
                std::ostringstream msg;
                msg << "coercivity F(u) >= (alpha/2 + lambda/2 u^(q-1)) u^2 fails at u = " << u << " (F = " << lhs
                    << ", bound = " << rhs << ")";
                out.push_back({"coercivity", u, msg.str()});
                coercive_reported = true;
            }
        }
        if (scheme == Discretization::FullyImplicit && !convex_reported && -drift.f_prime(u) < 0.0) {
            std::ostringstream msg;
            msg << "F must be convex for the fully implicit discretization; F''(u) = " << -drift.f_prime(u)
                << " < 0 at u = " << u;
            out.push_back({"convexity", u, msg.str()});
            convex_reported = true;
        }
    }
    return out;
}

}  // namespace swave
