#include "swave/fe.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

namespace swave {

namespace {

constexpr std::array<std::array<int, 2>, 3> kTriangleEdges{{{0, 1}, {1, 2}, {2, 0}}};

}  // namespace

FeSpace::FeSpace(MeshPtr mesh, int degree, int quadrature_degree)
    : mesh_(std::move(mesh)), degree_(degree) {
    if (!mesh_) throw std::invalid_argument("FeSpace: null mesh");
    if (degree_ != 1 && degree_ != 2) throw std::invalid_argument("FeSpace: degree must be 1 or 2");
    const int dim = mesh_->dimension();
    if (quadrature_degree <= 0) quadrature_degree = 2 * degree_;
    rule_ = reference_rule(dim, quadrature_degree);

    const std::size_t nc = mesh_->num_cells();
    const int nv = mesh_->vertices_per_cell();
    dofs_per_cell_ = (dim == 1) ? degree_ + 1 : (degree_ == 1 ? 3 : 6);

    dof_points_ = mesh_->vertices();
    cell_dofs_.resize(nc * static_cast<std::size_t>(dofs_per_cell_));
    std::map<std::pair<int, int>, int> edge_dof;
    for (std::size_t c = 0; c < nc; ++c) {
        int* dofs = cell_dofs_.data() + c * static_cast<std::size_t>(dofs_per_cell_);
        for (int k = 0; k < nv; ++k) dofs[k] = mesh_->cell_vertex(c, k);
        if (degree_ == 1) continue;
        if (dim == 1) {
            const Point& a = mesh_->vertex(static_cast<std::size_t>(dofs[0]));
            const Point& b = mesh_->vertex(static_cast<std::size_t>(dofs[1]));
            dofs[2] = static_cast<int>(dof_points_.size());
            dof_points_.push_back({0.5 * (a[0] + b[0]), 0.0});
            continue;
        }
        for (int e = 0; e < 3; ++e) {
            const int va = dofs[kTriangleEdges[static_cast<std::size_t>(e)][0]];
            const int vb = dofs[kTriangleEdges[static_cast<std::size_t>(e)][1]];
            const auto key = std::minmax(va, vb);
            auto [it, inserted] = edge_dof.try_emplace({key.first, key.second}, static_cast<int>(dof_points_.size()));
            if (inserted) {
                const Point& a = mesh_->vertex(static_cast<std::size_t>(va));
                const Point& b = mesh_->vertex(static_cast<std::size_t>(vb));
                dof_points_.push_back({0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])});
            }
            dofs[3 + e] = it->second;
        }
    }

    // Reference basis at quadrature points.
    const auto nd = static_cast<std::size_t>(dofs_per_cell_);
    shape_.resize(rule_.size() * nd);
    ref_grads_.resize(rule_.size() * nd);
    for (std::size_t q = 0; q < rule_.size(); ++q)
        reference_basis(rule_.points[q], {shape_.data() + q * nd, nd}, {ref_grads_.data() + q * nd, nd});

    // Affine maps.
    inv_jt_.resize(nc);
    det_.resize(nc);
    for (std::size_t c = 0; c < nc; ++c) {
        const Point& v0 = mesh_->vertex(static_cast<std::size_t>(mesh_->cell_vertex(c, 0)));
        const Point& v1 = mesh_->vertex(static_cast<std::size_t>(mesh_->cell_vertex(c, 1)));
        if (dim == 1) {
            const double j = v1[0] - v0[0];
            det_[c] = std::abs(j);
            inv_jt_[c] = {1.0 / j, 0.0, 0.0, 0.0};
            continue;
        }
        const Point& v2 = mesh_->vertex(static_cast<std::size_t>(mesh_->cell_vertex(c, 2)));
        const double j00 = v1[0] - v0[0], j01 = v2[0] - v0[0];
        const double j10 = v1[1] - v0[1], j11 = v2[1] - v0[1];
        const double det = j00 * j11 - j01 * j10;
        det_[c] = std::abs(det);
        // J^{-T} = (1/det) [[j11, -j10], [-j01, j00]]
        inv_jt_[c] = {j11 / det, -j10 / det, -j01 / det, j00 / det};
    }

    // Sparsity pattern and the cell-local to value-array map.
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(nc * nd * nd);
    for (std::size_t c = 0; c < nc; ++c) {
        const auto dofs = cell_dofs(c);
        for (std::size_t a = 0; a < nd; ++a)
            for (std::size_t b = 0; b < nd; ++b) triplets.emplace_back(dofs[a], dofs[b], 0.0);
    }
    const auto n = static_cast<Eigen::Index>(num_dofs());
    pattern_.resize(n, n);
    pattern_.setFromTriplets(triplets.begin(), triplets.end());
    pattern_.makeCompressed();

    value_index_.resize(nc * nd * nd);
    const int* outer = pattern_.outerIndexPtr();
    const int* inner = pattern_.innerIndexPtr();
    for (std::size_t c = 0; c < nc; ++c) {
        const auto dofs = cell_dofs(c);
        for (std::size_t a = 0; a < nd; ++a) {
            for (std::size_t b = 0; b < nd; ++b) {
                const int row = dofs[a];
                const int col = dofs[b];
                const int* pos = std::lower_bound(inner + outer[col], inner + outer[col + 1], row);
                value_index_[(c * nd + a) * nd + b] = static_cast<int>(pos - inner);
            }
        }
    }
}

void FeSpace::reference_basis(const Point& ref, std::span<double> values, std::span<Point> grads) const {
    if (dimension() == 1) {
        const double l0 = 1.0 - ref[0];
        const double l1 = ref[0];
        if (degree_ == 1) {
            values[0] = l0;
            values[1] = l1;
            grads[0] = {-1.0, 0.0};
            grads[1] = {1.0, 0.0};
        } else {
            values[0] = l0 * (2.0 * l0 - 1.0);
            values[1] = l1 * (2.0 * l1 - 1.0);
            values[2] = 4.0 * l0 * l1;
            grads[0] = {-(4.0 * l0 - 1.0), 0.0};
            grads[1] = {4.0 * l1 - 1.0, 0.0};
            grads[2] = {4.0 * (l0 - l1), 0.0};
        }
        return;
    }

    const std::array<double, 3> l{1.0 - ref[0] - ref[1], ref[0], ref[1]};
    const std::array<Point, 3> dl{{{-1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}}};
    if (degree_ == 1) {
        for (std::size_t i = 0; i < 3; ++i) {
            values[i] = l[i];
            grads[i] = dl[i];
        }
        return;
    }
    for (std::size_t i = 0; i < 3; ++i) {
        values[i] = l[i] * (2.0 * l[i] - 1.0);
        const double s = 4.0 * l[i] - 1.0;
        grads[i] = {s * dl[i][0], s * dl[i][1]};
    }
    for (std::size_t e = 0; e < 3; ++e) {
        const auto i = static_cast<std::size_t>(kTriangleEdges[e][0]);
        const auto j = static_cast<std::size_t>(kTriangleEdges[e][1]);
        values[3 + e] = 4.0 * l[i] * l[j];
        grads[3 + e] = {4.0 * (l[j] * dl[i][0] + l[i] * dl[j][0]), 4.0 * (l[j] * dl[i][1] + l[i] * dl[j][1])};
    }
}

Point FeSpace::shape_grad(std::size_t c, std::size_t q, int a) const {
    const Point& g = ref_grads_[q * static_cast<std::size_t>(dofs_per_cell_) + static_cast<std::size_t>(a)];
    const auto& m = inv_jt_[c];
    return {m[0] * g[0] + m[1] * g[1], m[2] * g[0] + m[3] * g[1]};
}

Point FeSpace::map_to_cell(std::size_t c, const Point& ref) const {
    const Point& v0 = mesh_->vertex(static_cast<std::size_t>(mesh_->cell_vertex(c, 0)));
    const Point& v1 = mesh_->vertex(static_cast<std::size_t>(mesh_->cell_vertex(c, 1)));
    if (dimension() == 1) return {v0[0] + ref[0] * (v1[0] - v0[0]), 0.0};
    const Point& v2 = mesh_->vertex(static_cast<std::size_t>(mesh_->cell_vertex(c, 2)));
    return {v0[0] + ref[0] * (v1[0] - v0[0]) + ref[1] * (v2[0] - v0[0]),
            v0[1] + ref[0] * (v1[1] - v0[1]) + ref[1] * (v2[1] - v0[1])};
}

Point FeSpace::reference_coords(std::size_t c, const Point& p) const {
    const Point& v0 = mesh_->vertex(static_cast<std::size_t>(mesh_->cell_vertex(c, 0)));
    const double dx = p[0] - v0[0];
    const double dy = p[1] - v0[1];
    const auto& m = inv_jt_[c];
    // ref = J^{-1} (p - v0), and J^{-1} is the transpose of the stored J^{-T}.
    if (dimension() == 1) return {m[0] * dx, 0.0};
    return {m[0] * dx + m[2] * dy, m[1] * dx + m[3] * dy};
}

double FeSpace::evaluate(std::span<const double> coeffs, const Point& p) const {
    const std::size_t c = mesh_->locate(p);
    std::array<double, 6> values{};
    std::array<Point, 6> grads{};
    const auto nd = static_cast<std::size_t>(dofs_per_cell_);
    reference_basis(reference_coords(c, p), {values.data(), nd}, {grads.data(), nd});
    const auto dofs = cell_dofs(c);
    double sum = 0.0;
    for (std::size_t a = 0; a < nd; ++a) sum += coeffs[static_cast<std::size_t>(dofs[a])] * values[a];
    return sum;
}

FeSpacePtr make_space(MeshPtr mesh, int degree, int quadrature_degree) {
    return std::make_shared<const FeSpace>(std::move(mesh), degree, quadrature_degree);
}

int required_quadrature_degree(int degree, int drift_degree) {
    return std::max(2 * degree, degree * drift_degree + degree);
}

FeFunction::FeFunction(FeSpacePtr s, Vector c) : space(std::move(s)), coeffs(std::move(c)) {
    if (!space) throw std::invalid_argument("FeFunction: null space");
    if (coeffs.size() != static_cast<Eigen::Index>(space->num_dofs()))
        throw std::invalid_argument("FeFunction: coefficient length does not match the space");
}

FeFunction::FeFunction(FeSpacePtr s) : FeFunction(s, Vector::Zero(static_cast<Eigen::Index>(s ? s->num_dofs() : 0))) {}

bool SymSparseMatrix::is_symmetric() const {
    for (Eigen::Index k = 0; k < m_.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(m_, k); it; ++it)
            if (m_.coeff(it.col(), it.row()) != it.value()) return false;
    return true;
}

SpdSolver::SpdSolver(Method method, double rel_tol)
    : method_(method), rel_tol_(rel_tol), ldlt_(std::make_unique<Eigen::SimplicialLDLT<SparseMatrix>>()) {}

SpdSolver SpdSolver::for_dimension(int dim, double rel_tol) {
    return SpdSolver(dim == 1 ? Method::Cholesky : Method::ConjugateGradient, rel_tol);
}

void SpdSolver::factorize(const SparseMatrix& a) {
    if (method_ == Method::ConjugateGradient) {
        a_ = a;
        return;
    }
    if (!analyzed_ || analyzed_nnz_ != a.nonZeros()) {
        ldlt_->analyzePattern(a);
        analyzed_ = true;
        analyzed_nnz_ = a.nonZeros();
    }
    ldlt_->factorize(a);
    if (ldlt_->info() != Eigen::Success) throw LinearSolveFailed("sparse LDL^T factorization failed");
    if ((ldlt_->vectorD().array() <= 0.0).any()) throw LinearSolveFailed("matrix is not positive definite");
}

Vector SpdSolver::solve(const Vector& rhs) const {
    if (method_ == Method::Cholesky) {
        Vector x = ldlt_->solve(rhs);
        if (ldlt_->info() != Eigen::Success || !x.allFinite()) throw LinearSolveFailed("sparse LDL^T solve failed");
        return x;
    }
    if (rhs.squaredNorm() == 0.0) return Vector::Zero(rhs.size());
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
    cg.setTolerance(rel_tol_);
    cg.setMaxIterations(10 * a_.rows());
    cg.compute(a_);
    Vector x = cg.solve(rhs);
    if (cg.info() != Eigen::Success || !x.allFinite())
        throw LinearSolveFailed("conjugate gradient did not converge (error " + std::to_string(cg.error()) + ")");
    return x;
}

namespace {

template <class CellKernel>
SymSparseMatrix assemble_matrix(const FeSpace& space, CellKernel&& kernel) {
    SparseMatrix m = space.pattern();
    double* values = m.valuePtr();
    std::fill(values, values + m.nonZeros(), 0.0);
    const int nd = space.dofs_per_cell();
    for (std::size_t c = 0; c < space.num_cells(); ++c)
        for (int a = 0; a < nd; ++a)
            for (int b = 0; b < nd; ++b) values[space.value_index(c, a, b)] += kernel(c, a, b);
    return SymSparseMatrix(std::move(m));
}

}  // namespace

SymSparseMatrix assemble_mass(const FeSpace& space) {
    return assemble_matrix(space, [&](std::size_t c, int a, int b) {
        double s = 0.0;
        for (std::size_t q = 0; q < space.num_qp(); ++q) s += space.jxw(c, q) * (space.shape(q, a) * space.shape(q, b));
        return s;
    });
}

SymSparseMatrix assemble_stiffness(const FeSpace& space) {
    return assemble_matrix(space, [&](std::size_t c, int a, int b) {
        double s = 0.0;
        for (std::size_t q = 0; q < space.num_qp(); ++q) {
            const Point ga = space.shape_grad(c, q, a);
            const Point gb = space.shape_grad(c, q, b);
            s += space.jxw(c, q) * (ga[0] * gb[0] + ga[1] * gb[1]);
        }
        return s;
    });
}

namespace {

double value_at_qp(const FeSpace& space, std::span<const int> dofs, const Vector& u, std::size_t q) {
    double s = 0.0;
    for (int a = 0; a < space.dofs_per_cell(); ++a) s += u[dofs[static_cast<std::size_t>(a)]] * space.shape(q, a);
    return s;
}

template <class QpValue>
Vector assemble_load(const FeSpace& space, QpValue&& integrand) {
    Vector b = Vector::Zero(static_cast<Eigen::Index>(space.num_dofs()));
    for (std::size_t c = 0; c < space.num_cells(); ++c) {
        const auto dofs = space.cell_dofs(c);
        for (std::size_t q = 0; q < space.num_qp(); ++q) {
            const double val = space.jxw(c, q) * integrand(c, dofs, q);
            for (int a = 0; a < space.dofs_per_cell(); ++a) b[dofs[static_cast<std::size_t>(a)]] += val * space.shape(q, a);
        }
    }
    return b;
}

void check_size(const FeSpace& space, const Vector& u) {
    if (u.size() != static_cast<Eigen::Index>(space.num_dofs()))
        throw std::invalid_argument("coefficient vector does not match the space");
}

}  // namespace

Vector assemble_field_load(const FeSpace& space, const Field& field) {
    return assemble_load(space, [&](std::size_t c, std::span<const int>, std::size_t q) { return field(space.qp_point(c, q)); });
}

Vector assemble_pointwise_load(const FeSpace& space, const PointwiseMap1& phi, const Vector& u) {
    check_size(space, u);
    return assemble_load(space, [&](std::size_t, std::span<const int> dofs, std::size_t q) {
        return phi(value_at_qp(space, dofs, u, q));
    });
}

Vector assemble_pointwise_load(const FeSpace& space, const PointwiseMap2& phi, const Vector& u, const Vector& w) {
    check_size(space, u);
    check_size(space, w);
    return assemble_load(space, [&](std::size_t, std::span<const int> dofs, std::size_t q) {
        return phi(value_at_qp(space, dofs, u, q), value_at_qp(space, dofs, w, q));
    });
}

FeFunction l2_project(const FeSpacePtr& space, const Field& field) {
    const SymSparseMatrix mass = assemble_mass(*space);
    SpdSolver solver = SpdSolver::for_dimension(space->dimension());
    solver.factorize(mass.matrix());
    return FeFunction(space, solver.solve(assemble_field_load(*space, field)));
}

FeFunction discrete_laplacian(const FeFunction& z) {
    const FeSpace& space = *z.space;
    const SymSparseMatrix mass = assemble_mass(space);
    const SymSparseMatrix stiff = assemble_stiffness(space);
    SpdSolver solver = SpdSolver::for_dimension(space.dimension());
    solver.factorize(mass.matrix());
    return FeFunction(z.space, solver.solve(-stiff.apply(z.coeffs)));
}

double norm_l2(const FeSpace& space, const Vector& u) { return norm_lp(space, u, 2.0); }

double seminorm_h1(const FeSpace& space, const Vector& u) {
    check_size(space, u);
    double s = 0.0;
    for (std::size_t c = 0; c < space.num_cells(); ++c) {
        const auto dofs = space.cell_dofs(c);
        for (std::size_t q = 0; q < space.num_qp(); ++q) {
            double gx = 0.0, gy = 0.0;
            for (int a = 0; a < space.dofs_per_cell(); ++a) {
                const Point g = space.shape_grad(c, q, a);
                const double ua = u[dofs[static_cast<std::size_t>(a)]];
                gx += ua * g[0];
                gy += ua * g[1];
            }
            s += space.jxw(c, q) * (gx * gx + gy * gy);
        }
    }
    return std::sqrt(s);
}

double norm_lp(const FeSpace& space, const Vector& u, double p) {
    if (p < 1.0) throw std::invalid_argument("norm_lp: p must be >= 1");
    check_size(space, u);
    double s = 0.0;
    for (std::size_t c = 0; c < space.num_cells(); ++c) {
        const auto dofs = space.cell_dofs(c);
        for (std::size_t q = 0; q < space.num_qp(); ++q) {
            const double v = std::abs(value_at_qp(space, dofs, u, q));
            s += space.jxw(c, q) * (p == 2.0 ? v * v : std::pow(v, p));
        }
    }
    return p == 2.0 ? std::sqrt(s) : std::pow(s, 1.0 / p);
}

SparseMatrix transfer_matrix(const FeSpace& coarse, const FeSpace& fine) {
    if (coarse.degree() != fine.degree()) throw std::invalid_argument("transfer_to_fine: degrees differ");
    if (!fine.mesh().descends_from(coarse.mesh()))
        throw std::invalid_argument("transfer_to_fine: fine mesh is not a refinement of the coarse mesh");

    std::vector<Eigen::Triplet<double>> triplets;
    const auto nd = static_cast<std::size_t>(coarse.dofs_per_cell());
    std::array<double, 6> values{};
    std::array<Point, 6> grads{};
    const Mesh& cm = coarse.mesh();
    for (std::size_t i = 0; i < fine.num_dofs(); ++i) {
        const Point& p = fine.dof_point(i);
        const std::size_t c = cm.locate(p);
        // Reference coordinates through the public affine map inverse.
        const Point& v0 = cm.vertex(static_cast<std::size_t>(cm.cell_vertex(c, 0)));
        const Point& v1 = cm.vertex(static_cast<std::size_t>(cm.cell_vertex(c, 1)));
        Point ref{};
        if (cm.dimension() == 1) {
            ref = {(p[0] - v0[0]) / (v1[0] - v0[0]), 0.0};
        } else {
            const Point& v2 = cm.vertex(static_cast<std::size_t>(cm.cell_vertex(c, 2)));
            const double j00 = v1[0] - v0[0], j01 = v2[0] - v0[0];
            const double j10 = v1[1] - v0[1], j11 = v2[1] - v0[1];
            const double det = j00 * j11 - j01 * j10;
            const double dx = p[0] - v0[0], dy = p[1] - v0[1];
            ref = {(j11 * dx - j01 * dy) / det, (-j10 * dx + j00 * dy) / det};
        }
        coarse.reference_basis(ref, {values.data(), nd}, {grads.data(), nd});
        const auto dofs = coarse.cell_dofs(c);
        for (std::size_t a = 0; a < nd; ++a)
            if (std::abs(values[a]) > 1e-14) triplets.emplace_back(static_cast<int>(i), dofs[a], values[a]);
    }
    SparseMatrix t(static_cast<Eigen::Index>(fine.num_dofs()), static_cast<Eigen::Index>(coarse.num_dofs()));
    t.setFromTriplets(triplets.begin(), triplets.end());
    t.makeCompressed();
    return t;
}

FeFunction transfer_to_fine(const FeFunction& u_coarse, const FeSpacePtr& fine) {
    return FeFunction(fine, transfer_matrix(*u_coarse.space, *fine) * u_coarse.coeffs);
}

}  // namespace swave
