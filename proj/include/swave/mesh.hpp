#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace swave {

/// A point in the reference domain (0,1)^d; y is unused for d = 1.
using Point = std::array<double, 2>;

/// Structured, quasi-uniform partition of the unit interval or the unit square.
///
/// 1D meshes are uniform partitions of (0,1). 2D meshes split each square of an
/// n x n grid into two triangles along the (0,0)-(1,1) diagonal. Meshes are
/// immutable once built and may be shared across threads.
class Mesh {
public:
    int dimension() const { return dim_; }
    int cells_per_side() const { return n_; }
    double h() const { return h_; }

    std::size_t num_vertices() const { return vertices_.size(); }
    std::size_t num_cells() const { return cells_.size() / vertices_per_cell(); }
    int vertices_per_cell() const { return dim_ + 1; }

    const Point& vertex(std::size_t i) const { return vertices_[i]; }
    const std::vector<Point>& vertices() const { return vertices_; }

    /// Vertex index of local vertex `local` of cell `c`.
    int cell_vertex(std::size_t c, int local) const {
        return cells_[c * static_cast<std::size_t>(vertices_per_cell()) + static_cast<std::size_t>(local)];
    }

    /// Lebesgue measure (length or area) of cell `c`.
    double cell_measure(std::size_t c) const;
    /// Diameter (longest edge) of cell `c`.
    double cell_diameter(std::size_t c) const;

    /// Mesh this one was obtained from by refine_uniform, if any.
    const std::shared_ptr<const Mesh>& parent() const { return parent_; }

    /// True if `ancestor` is reachable through the parent chain (or is this mesh).
    bool descends_from(const Mesh& ancestor) const;

    /// Index of a cell containing `p`; points on shared facets resolve to one of the neighbours.
    std::size_t locate(const Point& p) const;

    /// JSON dump of vertices and cells, for debugging.
    std::string to_json() const;

private:
    friend std::shared_ptr<const Mesh> build_interval_mesh(int n_cells);
    friend std::shared_ptr<const Mesh> build_unit_square_tri_mesh(int n_per_side);
    friend std::shared_ptr<const Mesh> refine_uniform(const std::shared_ptr<const Mesh>& mesh);

    static Mesh structured(int dim, int n);

    int dim_ = 1;
    int n_ = 1;
    double h_ = 1.0;
    std::vector<Point> vertices_;
    std::vector<int> cells_;
    std::shared_ptr<const Mesh> parent_;
};

using MeshPtr = std::shared_ptr<const Mesh>;

/// Uniform partition of (0,1) into `n_cells` cells. Throws std::invalid_argument for n_cells < 1.
MeshPtr build_interval_mesh(int n_cells);

/// n_per_side^2 squares, each split into two triangles. Throws std::invalid_argument for n_per_side < 1.
MeshPtr build_unit_square_tri_mesh(int n_per_side);

/// Bisects every interval, or splits every triangle into four congruent children.
/// The child keeps all parent vertices with bit-identical coordinates and records the parent.
MeshPtr refine_uniform(const MeshPtr& mesh);

}  // namespace swave
