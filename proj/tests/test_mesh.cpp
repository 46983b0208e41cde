#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "swave/mesh.hpp"

using namespace swave;

namespace {

double total_measure(const Mesh& m) {
    double s = 0.0;
    for (std::size_t c = 0; c < m.num_cells(); ++c) s += m.cell_measure(c);
    return s;
}

}  // namespace

TEST(Mesh, IntervalVertices) {
    auto m = build_interval_mesh(4);
    ASSERT_EQ(m->num_vertices(), 5u);
    ASSERT_EQ(m->num_cells(), 4u);
    const double expected[] = {0.0, 0.25, 0.5, 0.75, 1.0};
    for (int i = 0; i < 5; ++i) EXPECT_EQ(m->vertex(i)[0], expected[i]);
    EXPECT_EQ(m->h(), 0.25);
    EXPECT_EQ(m->dimension(), 1);
}

TEST(Mesh, IntervalSingleCellAndFine) {
    auto one = build_interval_mesh(1);
    EXPECT_EQ(one->num_cells(), 1u);
    EXPECT_EQ(one->h(), 1.0);
    auto fine = build_interval_mesh(64);
    EXPECT_EQ(fine->num_vertices(), 65u);
    EXPECT_EQ(fine->h(), 1.0 / 64.0);
    EXPECT_NEAR(total_measure(*fine), 1.0, 1e-12);
}

TEST(Mesh, RejectsZeroCells) {
    EXPECT_THROW(build_interval_mesh(0), std::invalid_argument);
    EXPECT_THROW(build_unit_square_tri_mesh(0), std::invalid_argument);
}

TEST(Mesh, SquareCounts) {
    auto m1 = build_unit_square_tri_mesh(1);
    EXPECT_EQ(m1->num_cells(), 2u);
    EXPECT_EQ(m1->num_vertices(), 4u);
    auto m2 = build_unit_square_tri_mesh(2);
    EXPECT_EQ(m2->num_cells(), 8u);
    EXPECT_EQ(m2->num_vertices(), 9u);
    EXPECT_NEAR(total_measure(*m2), 1.0, 1e-12);
    EXPECT_EQ(build_unit_square_tri_mesh(16)->num_cells(), 512u);
    EXPECT_DOUBLE_EQ(m2->h(), std::sqrt(2.0) / 2.0);
}

TEST(Mesh, QuasiUniform) {
    auto m = build_unit_square_tri_mesh(5);
    double lo = 1e300, hi = 0.0;
    for (std::size_t c = 0; c < m->num_cells(); ++c) {
        lo = std::min(lo, m->cell_diameter(c));
        hi = std::max(hi, m->cell_diameter(c));
    }
    EXPECT_LE(hi / lo, 2.0);
    EXPECT_DOUBLE_EQ(hi, m->h());
}

TEST(Mesh, RefineInterval) {
    auto coarse = build_interval_mesh(4);
    auto fine = refine_uniform(coarse);
    EXPECT_EQ(fine->num_cells(), 8u);
    EXPECT_EQ(fine->h(), coarse->h() / 2.0);
    EXPECT_EQ(fine->parent().get(), coarse.get());
    EXPECT_TRUE(fine->descends_from(*coarse));
    EXPECT_FALSE(coarse->descends_from(*fine));
}

TEST(Mesh, RefineSquareNestedBitIdentical) {
    auto coarse = build_unit_square_tri_mesh(2);
    auto fine = refine_uniform(coarse);
    EXPECT_EQ(fine->num_cells(), 32u);
    EXPECT_EQ(fine->h(), coarse->h() / 2.0);
    EXPECT_NEAR(total_measure(*fine), 1.0, 1e-12);
    std::set<std::pair<double, double>> fine_vertices;
    for (const auto& v : fine->vertices()) fine_vertices.insert({v[0], v[1]});
    for (const auto& v : coarse->vertices()) EXPECT_TRUE(fine_vertices.count({v[0], v[1]}));
}

TEST(Mesh, RefinedChildrenAreCongruent) {
    auto fine = refine_uniform(build_unit_square_tri_mesh(3));
    const double area = fine->cell_measure(0);
    for (std::size_t c = 0; c < fine->num_cells(); ++c) EXPECT_NEAR(fine->cell_measure(c), area, 1e-15);
    EXPECT_NEAR(area, 1.0 / (2.0 * 36.0), 1e-15);
}

TEST(Mesh, LocateFindsContainingCell) {
    auto m = build_unit_square_tri_mesh(4);
    const Point p{0.3, 0.71};
    const std::size_t c = m->locate(p);
    // Barycentric coordinates must be nonnegative.
    const Point a = m->vertex(m->cell_vertex(c, 0)), b = m->vertex(m->cell_vertex(c, 1)), d = m->vertex(m->cell_vertex(c, 2));
    const double det = (b[0] - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (b[1] - a[1]);
    const double l1 = ((p[0] - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (p[1] - a[1])) / det;
    const double l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
    EXPECT_GE(l1, -1e-14);
    EXPECT_GE(l2, -1e-14);
    EXPECT_GE(1.0 - l1 - l2, -1e-14);
}

TEST(Mesh, JsonDump) {
    const std::string j = build_interval_mesh(2)->to_json();
    EXPECT_NE(j.find("vertices"), std::string::npos);
    EXPECT_NE(j.find("cells"), std::string::npos);
}
