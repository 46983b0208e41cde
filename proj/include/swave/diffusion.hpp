#pragma once

#include <cmath>
#include <string>

namespace swave {

/// Noise coefficient g(u) multiplying the scalar Wiener increment.
///   Zero:         g = 0 (deterministic limit)
///   Linear:       g = c u
///   SmoothedAbs:  g = sqrt(u^2 + epsilon)
struct DiffusionSpec {
    enum class Kind { Zero, Linear, SmoothedAbs };

    Kind kind = Kind::Zero;
    double slope = 1.0;
    double epsilon = 0.01;

    static DiffusionSpec zero() { return {}; }
    static DiffusionSpec linear(double c) { return {Kind::Linear, c, 0.0}; }
    static DiffusionSpec smoothed_abs(double eps) { return {Kind::SmoothedAbs, 1.0, eps}; }

    double g(double u) const {
        switch (kind) {
            case Kind::Zero: return 0.0;
            case Kind::Linear: return slope * u;
            case Kind::SmoothedAbs: return std::sqrt(u * u + epsilon);
        }
        return 0.0;
    }

    bool is_zero() const { return kind == Kind::Zero || (kind == Kind::Linear && slope == 0.0); }

    /// Global Lipschitz constant: |c| for Linear, 1 for SmoothedAbs.
    double lipschitz() const;
    /// C with g(u)^2 <= C (1 + u^2): max(c^2, 1, epsilon).
    double growth_constant() const;

    std::string name() const;
};

}  // namespace swave
