#pragma once

#include <vector>

#include "swave/mesh.hpp"

namespace swave {

/// Quadrature rule on a reference cell: [0,1] in 1D, the unit simplex {x,y >= 0, x+y <= 1} in 2D.
/// Weights sum to the reference measure (1 or 1/2).
struct QuadratureRule {
    std::vector<Point> points;
    std::vector<double> weights;
    int exact_degree = 0;

    std::size_t size() const { return weights.size(); }
};

/// n-point Gauss-Legendre rule on [0,1], exact for polynomials of degree 2n-1.
QuadratureRule gauss_legendre(int n_points);

/// Rule on the reference simplex exact for total degree `degree`.
/// Degrees 1 and 2 use the symmetric centroid and edge-interior rules; higher degrees use a
/// collapsed (Duffy) Gauss-Legendre product.
QuadratureRule triangle_rule(int degree);

/// Reference-cell rule for dimension `dim` exact for polynomials of degree `degree`.
QuadratureRule reference_rule(int dim, int degree);

}  // namespace swave
