#pragma once

#include <Eigen/Sparse>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "swave/mesh.hpp"
#include "swave/quadrature.hpp"

namespace swave {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Continuous P_r Lagrange space (r = 1 or 2) over a structured mesh.
///
/// Degrees of freedom are numbered vertices first, then edge midpoints (P2).
/// Quadrature is fixed per space: a rule exact for polynomials of degree `quadrature_degree`
/// on every cell, used for every integral assembled on this space.
class FeSpace {
public:
    /// `quadrature_degree` <= 0 selects 2r (exact mass matrix).
    FeSpace(MeshPtr mesh, int degree, int quadrature_degree = 0);

    const Mesh& mesh() const { return *mesh_; }
    const MeshPtr& mesh_ptr() const { return mesh_; }
    int dimension() const { return mesh_->dimension(); }
    int degree() const { return degree_; }
    std::size_t num_dofs() const { return dof_points_.size(); }
    std::size_t num_cells() const { return mesh_->num_cells(); }
    int dofs_per_cell() const { return dofs_per_cell_; }

    std::span<const int> cell_dofs(std::size_t c) const {
        return {cell_dofs_.data() + c * static_cast<std::size_t>(dofs_per_cell_),
                static_cast<std::size_t>(dofs_per_cell_)};
    }
    const Point& dof_point(std::size_t i) const { return dof_points_[i]; }

    const QuadratureRule& rule() const { return rule_; }
    std::size_t num_qp() const { return rule_.size(); }
    /// Reference basis value of local function `a` at reference quadrature point `q`.
    double shape(std::size_t q, int a) const {
        return shape_[q * static_cast<std::size_t>(dofs_per_cell_) + static_cast<std::size_t>(a)];
    }
    /// Quadrature weight times |det J| of cell `c`.
    double jxw(std::size_t c, std::size_t q) const { return rule_.weights[q] * det_[c]; }
    /// Physical coordinates of quadrature point `q` in cell `c`.
    Point qp_point(std::size_t c, std::size_t q) const { return map_to_cell(c, rule_.points[q]); }
    /// Physical gradient of local basis function `a` at quadrature point `q` of cell `c`.
    Point shape_grad(std::size_t c, std::size_t q, int a) const;

    /// Affine image of a reference point in cell `c`.
    Point map_to_cell(std::size_t c, const Point& ref) const;
    /// Value of the finite element function `coeffs` at the physical point `p`.
    double evaluate(std::span<const double> coeffs, const Point& p) const;

    /// Sparsity pattern shared by every matrix assembled on this space (explicit zeros).
    const SparseMatrix& pattern() const { return pattern_; }
    /// Offset into the pattern's value array of entry (cell_dofs[a], cell_dofs[b]) of cell `c`.
    int value_index(std::size_t c, int a, int b) const {
        const auto n = static_cast<std::size_t>(dofs_per_cell_);
        return value_index_[(c * n + static_cast<std::size_t>(a)) * n + static_cast<std::size_t>(b)];
    }

    /// Evaluates the basis of the reference cell at `ref`; `values` and `grads` have dofs_per_cell entries.
    void reference_basis(const Point& ref, std::span<double> values, std::span<Point> grads) const;

private:
    Point reference_coords(std::size_t c, const Point& p) const;

    MeshPtr mesh_;
    int degree_;
    int dofs_per_cell_;
    QuadratureRule rule_;
    std::vector<int> cell_dofs_;
    std::vector<Point> dof_points_;
    std::vector<double> shape_;
    std::vector<Point> ref_grads_;
    std::vector<std::array<double, 4>> inv_jt_;  // row-major J^{-T}
    std::vector<double> det_;
    SparseMatrix pattern_;
    std::vector<int> value_index_;
};

using FeSpacePtr = std::shared_ptr<const FeSpace>;

FeSpacePtr make_space(MeshPtr mesh, int degree, int quadrature_degree = 0);

/// Quadrature degree needed so (f(u), phi), (F(u), 1) and the Newton Jacobian are exact for a
/// degree-q polynomial drift on P_r: max(2r, r q + r).
int required_quadrature_degree(int degree, int drift_degree);

/// A coefficient vector in an FeSpace.
struct FeFunction {
    FeSpacePtr space;
    Vector coeffs;

    FeFunction(FeSpacePtr s, Vector c);
    explicit FeFunction(FeSpacePtr s);

    double operator()(const Point& p) const { return space->evaluate({coeffs.data(), static_cast<std::size_t>(coeffs.size())}, p); }
};

/// Symmetric sparse matrix with both triangles stored.
class SymSparseMatrix {
public:
    SymSparseMatrix() = default;
    explicit SymSparseMatrix(SparseMatrix m) : m_(std::move(m)) {}

    const SparseMatrix& matrix() const { return m_; }
    Eigen::Index dim() const { return m_.rows(); }
    double operator()(Eigen::Index i, Eigen::Index j) const { return m_.coeff(i, j); }
    Vector apply(const Vector& x) const { return m_ * x; }
    double quadratic_form(const Vector& x) const { return x.dot(m_ * x); }
    /// Exact (bitwise) symmetry of the stored entries.
    bool is_symmetric() const;

private:
    SparseMatrix m_;
};

class LinearSolveFailed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Solver for SPD systems: sparse LDL^T in 1D, Jacobi-preconditioned CG in 2D.
class SpdSolver {
public:
    enum class Method { Cholesky, ConjugateGradient };

    explicit SpdSolver(Method method = Method::Cholesky, double rel_tol = 1e-12);
    static SpdSolver for_dimension(int dim, double rel_tol = 1e-12);

    /// Numeric factorization; the symbolic analysis is reused while the pattern is unchanged.
    void factorize(const SparseMatrix& a);
    Vector solve(const Vector& rhs) const;

    Method method() const { return method_; }

private:
    Method method_;
    double rel_tol_;
    bool analyzed_ = false;
    Eigen::Index analyzed_nnz_ = -1;
    std::unique_ptr<Eigen::SimplicialLDLT<SparseMatrix>> ldlt_;
    SparseMatrix a_;
};

SymSparseMatrix assemble_mass(const FeSpace& space);
SymSparseMatrix assemble_stiffness(const FeSpace& space);

using Field = std::function<double(const Point&)>;
using PointwiseMap1 = std::function<double(double)>;
using PointwiseMap2 = std::function<double(double, double)>;

/// b_i = (field, phi_i) by the space's quadrature.
Vector assemble_field_load(const FeSpace& space, const Field& field);
/// b_i = (phi(u), phi_i).
Vector assemble_pointwise_load(const FeSpace& space, const PointwiseMap1& phi, const Vector& u);
/// b_i = (phi(u, w), phi_i).
Vector assemble_pointwise_load(const FeSpace& space, const PointwiseMap2& phi, const Vector& u, const Vector& w);

/// L2 projection: M c = (field, phi_i).
FeFunction l2_project(const FeSpacePtr& space, const Field& field);

/// Discrete Laplacian: M y = -K z.
FeFunction discrete_laplacian(const FeFunction& z);

double norm_l2(const FeSpace& space, const Vector& u);
double seminorm_h1(const FeSpace& space, const Vector& u);
double norm_lp(const FeSpace& space, const Vector& u, double p);

/// Exact interpolation of a coarse function onto a nested fine space of the same degree.
/// Throws std::invalid_argument if the fine mesh does not descend from the coarse one.
SparseMatrix transfer_matrix(const FeSpace& coarse, const FeSpace& fine);
FeFunction transfer_to_fine(const FeFunction& u_coarse, const FeSpacePtr& fine);

}  // namespace swave
