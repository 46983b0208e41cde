#pragma once

#include <string>
#include <vector>

namespace swave {

/// Odd-degree polynomial drift f(u) = sum_{j=1}^q a_j u^j with spatially constant coefficients,
/// together with its potential F(u) = -int_0^u f and the difference quotient used by the
/// modified Crank-Nicolson discretization.
struct PolynomialDrift {
    /// coeffs[j-1] = a_j.
    std::vector<double> coeffs;
    /// Structure constants of the coercivity bound F(u) >= (alpha/2 + lambda/2 u^{q-1}) u^2.
    double alpha = 0.0;
    double lambda = 0.0;

    /// Degree of the highest nonzero coefficient (0 for the zero drift).
    int degree() const;
    bool is_zero() const { return degree() == 0; }

    double f(double u) const;
    double f_prime(double u) const;
    double potential(double u) const;

    /// fhat(a, b) = -(F(a) - F(b)) / (a - b), evaluated as the divided-difference polynomial
    /// sum_j a_j/(j+1) sum_{k=0}^j a^k b^{j-k}; equals f(a) on the diagonal.
    double fhat(double a, double b) const;
    /// Partial derivative of fhat with respect to its first argument.
    double fhat_da(double a, double b) const;
};

enum class Discretization { FullyImplicit, ModifiedCrankNicolson };

struct DriftViolation {
    std::string constraint;
    double witness = 0.0;
    std::string message;
};

/// Admissibility checks for a drift:
///  - q odd (and q <= 3 when dimension == 3),
///  - coercivity F(u) >= (alpha/2 + lambda/2 u^{q-1}) u^2 on a 10^5-point grid over [-10^3, 10^3],
///  - convexity of F on the same grid when the fully implicit discretization is used.
/// The zero drift (linear wave equation) is accepted without the coercivity check.
std::vector<DriftViolation> validate(const PolynomialDrift& drift, int dimension, Discretization scheme);

}  // namespace swave
