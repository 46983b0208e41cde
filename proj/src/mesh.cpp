#include "swave/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace swave {

Mesh Mesh::structured(int dim, int n) {
    Mesh m;
    m.dim_ = dim;
    m.n_ = n;
    const double dn = static_cast<double>(n);
    if (dim == 1) {
        m.h_ = 1.0 / dn;
        m.vertices_.reserve(static_cast<std::size_t>(n) + 1);
        for (int i = 0; i <= n; ++i) m.vertices_.push_back({static_cast<double>(i) / dn, 0.0});
        m.cells_.reserve(2 * static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            m.cells_.push_back(i);
            m.cells_.push_back(i + 1);
        }
        return m;
    }

    m.h_ = std::sqrt(2.0) / dn;
    const int stride = n + 1;
    m.vertices_.reserve(static_cast<std::size_t>(stride) * static_cast<std::size_t>(stride));
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i)
            m.vertices_.push_back({static_cast<double>(i) / dn, static_cast<double>(j) / dn});

    // Square (i,j) -> lower triangle (v00, v10, v11), upper triangle (v00, v11, v01).
    m.cells_.reserve(6 * static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int v00 = j * stride + i;
            const int v10 = v00 + 1;
            const int v01 = v00 + stride;
            const int v11 = v01 + 1;
            m.cells_.insert(m.cells_.end(), {v00, v10, v11, v00, v11, v01});
        }
    }
    return m;
}

MeshPtr build_interval_mesh(int n_cells) {
    if (n_cells < 1) throw std::invalid_argument("build_interval_mesh: n_cells must be >= 1");
    return std::make_shared<const Mesh>(Mesh::structured(1, n_cells));
}

MeshPtr build_unit_square_tri_mesh(int n_per_side) {
    if (n_per_side < 1) throw std::invalid_argument("build_unit_square_tri_mesh: n_per_side must be >= 1");
    return std::make_shared<const Mesh>(Mesh::structured(2, n_per_side));
}

MeshPtr refine_uniform(const MeshPtr& mesh) {
    if (!mesh) throw std::invalid_argument("refine_uniform: null mesh");
    // Midpoint subdivision of the structured mesh reproduces the structured mesh with
    // twice the resolution; vertex (i,j) of the parent is vertex (2i,2j) of the child
    // and 2i/(2n) == i/n exactly in floating point.
    Mesh child = Mesh::structured(mesh->dimension(), 2 * mesh->cells_per_side());
    child.parent_ = mesh;
    return std::make_shared<const Mesh>(std::move(child));
}

double Mesh::cell_measure(std::size_t c) const {
    const Point& a = vertices_[static_cast<std::size_t>(cell_vertex(c, 0))];
    const Point& b = vertices_[static_cast<std::size_t>(cell_vertex(c, 1))];
    if (dim_ == 1) return std::abs(b[0] - a[0]);
    const Point& d = vertices_[static_cast<std::size_t>(cell_vertex(c, 2))];
    return 0.5 * std::abs((b[0] - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (b[1] - a[1]));
}

double Mesh::cell_diameter(std::size_t c) const {
    const int nv = vertices_per_cell();
    double diam = 0.0;
    for (int i = 0; i < nv; ++i) {
        for (int j = i + 1; j < nv; ++j) {
            const Point& a = vertices_[static_cast<std::size_t>(cell_vertex(c, i))];
            const Point& b = vertices_[static_cast<std::size_t>(cell_vertex(c, j))];
            diam = std::max(diam, std::hypot(b[0] - a[0], b[1] - a[1]));
        }
    }
    return diam;
}

bool Mesh::descends_from(const Mesh& ancestor) const {
    for (const Mesh* m = this; m != nullptr; m = m->parent_.get())
        if (m == &ancestor) return true;
    return false;
}

std::size_t Mesh::locate(const Point& p) const {
    const double dn = static_cast<double>(n_);
    auto index = [&](double x) {
        const int i = static_cast<int>(std::floor(x * dn));
        return std::clamp(i, 0, n_ - 1);
    };
    const int i = index(p[0]);
    if (dim_ == 1) return static_cast<std::size_t>(i);
    const int j = index(p[1]);
    const double xi = p[0] * dn - i;
    const double eta = p[1] * dn - j;
    const std::size_t square = static_cast<std::size_t>(j) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(i);
    return 2 * square + (eta > xi ? 1 : 0);
}

std::string Mesh::to_json() const {
    std::ostringstream os;
    os.precision(17);
    os << "{\"dimension\":" << dim_ << ",\"h\":" << h_ << ",\"vertices\":[";
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        if (i) os << ',';
        if (dim_ == 1)
            os << '[' << vertices_[i][0] << ']';
        else
            os << '[' << vertices_[i][0] << ',' << vertices_[i][1] << ']';
    }
    os << "],\"cells\":[";
    const int nv = vertices_per_cell();
    for (std::size_t c = 0; c < num_cells(); ++c) {
        if (c) os << ',';
        os << '[';
        for (int k = 0; k < nv; ++k) os << (k ? "," : "") << cell_vertex(c, k);
        os << ']';
    }
    os << "]}";
    return os.str();
}

}  // namespace swave
