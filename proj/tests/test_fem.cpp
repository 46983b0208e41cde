#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "swave/fe.hpp"

using namespace swave;
using std::numbers::pi;

namespace {

// Independent 1D oracle: composite Gauss-Legendre with many points per cell, P1 hats evaluated by hand.
double hat(const std::vector<double>& c, double x, int n) {
    const double s = x * n;
    const int i = std::min(static_cast<int>(s), n - 1);
    const double t = s - i;
    return c[i] * (1.0 - t) + c[i + 1] * t;
}

template <class F>
double composite(F&& f, int cells, int pts = 50) {
    const QuadratureRule g = gauss_legendre(pts);
    double s = 0.0;
    for (int c = 0; c < cells; ++c)
        for (std::size_t q = 0; q < g.size(); ++q) s += f((c + g.points[q][0]) / cells) * g.weights[q] / cells;
    return s;
}

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

}  // namespace

TEST(Quadrature, GaussLegendreExactness) {
    for (int n = 1; n <= 8; ++n) {
        const QuadratureRule r = gauss_legendre(n);
        for (int k = 0; k <= 2 * n - 1; ++k) {
            double s = 0.0;
            for (std::size_t q = 0; q < r.size(); ++q) s += r.weights[q] * std::pow(r.points[q][0], k);
            EXPECT_NEAR(s, 1.0 / (k + 1), 1e-14) << "n=" << n << " k=" << k;
        }
    }
}

TEST(Quadrature, TriangleRulesExactForMonomials) {
    for (int deg = 1; deg <= 10; ++deg) {
        const QuadratureRule r = triangle_rule(deg);
        EXPECT_GE(r.exact_degree, deg);
        for (int a = 0; a <= deg; ++a)
            for (int b = 0; a + b <= deg; ++b) {
                double s = 0.0;
                for (std::size_t q = 0; q < r.size(); ++q)
                    s += r.weights[q] * std::pow(r.points[q][0], a) * std::pow(r.points[q][1], b);
                EXPECT_NEAR(s, factorial(a) * factorial(b) / factorial(a + b + 2), 1e-14)
                    << "deg=" << deg << " a=" << a << " b=" << b;
            }
    }
}

TEST(Assembly, P1MassRowsMatchHandValues) {
    const int n = 8;
    const double h = 1.0 / n;
    auto space = make_space(build_interval_mesh(n), 1);
    const SymSparseMatrix m = assemble_mass(*space);
    EXPECT_NEAR(m(0, 0), h / 3.0, 1e-14);
    EXPECT_NEAR(m(0, 1), h / 6.0, 1e-14);
    for (int i = 1; i < n; ++i) {
        EXPECT_NEAR(m(i, i - 1), h / 6.0, 1e-14);
        EXPECT_NEAR(m(i, i), 2.0 * h / 3.0, 1e-14);
        EXPECT_NEAR(m(i, i + 1), h / 6.0, 1e-14);
    }
    EXPECT_NEAR(m(n, n), h / 3.0, 1e-14);
    EXPECT_NEAR(m.matrix().sum(), 1.0, 1e-14);
    EXPECT_TRUE(m.is_symmetric());
}

TEST(Assembly, P1StiffnessRowsMatchHandValues) {
    const int n = 8;
    const double h = 1.0 / n;
    auto space = make_space(build_interval_mesh(n), 1);
    const SymSparseMatrix k = assemble_stiffness(*space);
    EXPECT_NEAR(k(0, 0), 1.0 / h, 1e-14 / h);
    for (int i = 1; i < n; ++i) {
        EXPECT_NEAR(k(i, i - 1), -1.0 / h, 1e-14 / h);
        EXPECT_NEAR(k(i, i), 2.0 / h, 1e-14 / h);
    }
    Vector ones = Vector::Ones(n + 1);
    EXPECT_NEAR(k.apply(ones).norm(), 0.0, 1e-12);
}

TEST(Assembly, MassSumsToAreaAndIsPositiveDefinite) {
    for (int r : {1, 2}) {
        for (int dim : {1, 2}) {
            auto mesh = dim == 1 ? build_interval_mesh(5) : build_unit_square_tri_mesh(3);
            auto space = make_space(mesh, r);
            const SymSparseMatrix m = assemble_mass(*space);
            EXPECT_NEAR(m.matrix().sum(), 1.0, 1e-13);
            EXPECT_TRUE(m.is_symmetric());
            Eigen::MatrixXd dense(m.matrix());
            Eigen::LLT<Eigen::MatrixXd> llt(dense);
            EXPECT_EQ(llt.info(), Eigen::Success);
            const SymSparseMatrix k = assemble_stiffness(*space);
            EXPECT_TRUE(k.is_symmetric());
            EXPECT_NEAR(k.apply(Vector::Ones(k.dim())).cwiseAbs().maxCoeff(), 0.0, 1e-11);
        }
    }
}

TEST(Assembly, TwoByTwoSquareMassTotal) {
    auto space = make_space(build_unit_square_tri_mesh(1), 1);
    EXPECT_NEAR(assemble_mass(*space).matrix().sum(), 1.0, 1e-15);
}

TEST(FeSpace, PartitionOfUnityAndContinuity) {
    for (int r : {1, 2}) {
        auto space = make_space(build_unit_square_tri_mesh(3), r, 6);
        for (std::size_t q = 0; q < space->num_qp(); ++q) {
            double s = 0.0;
            for (int a = 0; a < space->dofs_per_cell(); ++a) s += space->shape(q, a);
            EXPECT_NEAR(s, 1.0, 1e-12);
        }
        // A global function must take the same value from both sides of an interior edge.
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        Vector c(space->num_dofs());
        for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = u(rng);
        const double y = 0.5 + 1.0 / 3.0;
        const double left = space->evaluate({c.data(), static_cast<std::size_t>(c.size())}, {1.0 / 3.0 - 1e-13, y});
        const double right = space->evaluate({c.data(), static_cast<std::size_t>(c.size())}, {1.0 / 3.0 + 1e-13, y});
        EXPECT_NEAR(left, right, 1e-10);
    }
}

TEST(FeSpace, QuadratureDegreeRequirement) {
    EXPECT_EQ(required_quadrature_degree(1, 3), 4);
    EXPECT_EQ(required_quadrature_degree(1, 0), 2);
    EXPECT_EQ(required_quadrature_degree(2, 11), 24);
}

TEST(FeFunction, RejectsWrongLength) {
    auto space = make_space(build_interval_mesh(4), 1);
    EXPECT_THROW(FeFunction(space, Vector::Zero(3)), std::invalid_argument);
}

TEST(Projection, ResidualOrthogonality) {
    const int n = 8;
    auto space = make_space(build_interval_mesh(n), 1, 16);
    auto f = [](const Point& p) { return std::cos(pi * p[0]) + p[0] * p[0]; };
    const FeFunction ph = l2_project(space, f);
    std::vector<double> c(ph.coeffs.data(), ph.coeffs.data() + ph.coeffs.size());
    for (int i = 0; i <= n; ++i) {
        std::vector<double> e(n + 1, 0.0);
        e[i] = 1.0;
        const double r = composite([&](double x) { return (hat(c, x, n) - f({x, 0.0})) * hat(e, x, n); }, n);
        EXPECT_LE(std::abs(r), 1e-10);
    }
}

TEST(Projection, ReproducesDiscreteFunctions) {
    auto space = make_space(build_unit_square_tri_mesh(3), 2);
    auto f = [](const Point& p) { return 1.0 + p[0] - 2.0 * p[1] + p[0] * p[1] - 0.5 * p[1] * p[1]; };
    const FeFunction ph = l2_project(space, f);
    for (const Point& p : {Point{0.1, 0.2}, Point{0.77, 0.4}, Point{0.5, 0.99}}) EXPECT_NEAR(ph(p), f(p), 1e-12);
}

TEST(DiscreteLaplacian, MatchesDenseSolve) {
    auto space = make_space(build_interval_mesh(6), 2);
    const FeFunction z = l2_project(space, [](const Point& p) { return std::sin(3.0 * p[0]); });
    const FeFunction y = discrete_laplacian(z);
    Eigen::MatrixXd m(assemble_mass(*space).matrix());
    Eigen::MatrixXd k(assemble_stiffness(*space).matrix());
    const Eigen::VectorXd expected = m.ldlt().solve(-k * z.coeffs);
    EXPECT_LE((y.coeffs - expected).cwiseAbs().maxCoeff(), 1e-9 * (1.0 + expected.cwiseAbs().maxCoeff()));
}

TEST(Norms, MatchAnalyticValues) {
    auto space = make_space(build_interval_mesh(4), 1);
    Vector x(5);
    for (int i = 0; i <= 4; ++i) x[i] = i / 4.0;
    EXPECT_NEAR(norm_l2(*space, x), 1.0 / std::sqrt(3.0), 1e-14);
    EXPECT_NEAR(seminorm_h1(*space, x), 1.0, 1e-14);
    EXPECT_NEAR(norm_lp(*space, Vector::Ones(5) * 2.0, 4.0), 2.0, 1e-14);
}

TEST(Transfer, ExactOnNestedSpaces) {
    for (int dim : {1, 2}) {
        for (int r : {1, 2}) {
            auto cm = dim == 1 ? build_interval_mesh(3) : build_unit_square_tri_mesh(2);
            auto coarse = make_space(cm, r);
            auto fine = make_space(refine_uniform(refine_uniform(cm)), r);
            std::mt19937_64 rng(11);
            std::uniform_real_distribution<double> u(-1.0, 1.0);
            FeFunction fc(coarse);
            for (Eigen::Index i = 0; i < fc.coeffs.size(); ++i) fc.coeffs[i] = u(rng);
            const FeFunction ff = transfer_to_fine(fc, fine);
            for (int s = 0; s < 20; ++s) {
                const Point p{0.5 * (u(rng) + 1.0), dim == 2 ? 0.5 * (u(rng) + 1.0) : 0.0};
                EXPECT_NEAR(ff(p), fc(p), 1e-12);
            }
        }
    }
}

TEST(Transfer, RejectsNonNested) {
    auto a = make_space(build_interval_mesh(3), 1);
    auto b = make_space(build_interval_mesh(6), 1);
    EXPECT_THROW(transfer_matrix(*a, *b), std::invalid_argument);
    auto c = make_space(refine_uniform(build_interval_mesh(3)), 2);
    EXPECT_THROW(transfer_matrix(*a, *c), std::invalid_argument);
}

TEST(SpdSolver, CholeskyAndCgAgree) {
    auto space = make_space(build_unit_square_tri_mesh(6), 1);
    SparseMatrix a = assemble_mass(*space).matrix() + 1e-3 * assemble_stiffness(*space).matrix();
    Vector b = Vector::LinSpaced(a.rows(), -1.0, 1.0);
    SpdSolver chol(SpdSolver::Method::Cholesky);
    SpdSolver cg(SpdSolver::Method::ConjugateGradient, 1e-13);
    chol.factorize(a);
    cg.factorize(a);
    const Vector x1 = chol.solve(b), x2 = cg.solve(b);
    EXPECT_LE((a * x1 - b).norm(), 1e-12 * b.norm());
    EXPECT_LE((x1 - x2).norm(), 1e-9 * x1.norm());
}
