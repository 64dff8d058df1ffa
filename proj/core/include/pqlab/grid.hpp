#pragma once
/**
 * @file grid.hpp
 * @brief Rectangular lattices, nodal and cellwise fields, forward differences,
 *        shift differences and local L^r norms on balls.
 *
 * Layout conventions used everywhere in pqlab:
 *  - nodes are row-major with axis 0 fastest: node = i0 + nodes[0] * i1;
 *  - a GridField stores component r of node i at values[i * N + r];
 *  - cells are indexed like nodes on the (nodes-1)^n cell lattice, and a
 *    GradientField stores entry (r, s) of cell c at values[c * N * n + r * n + s];
 *  - cell c owns the forward differences taken from its lower-left node.
 * Axis indices are 0-based.
 */

#include <array>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace pqlab {

using Point = std::array<double, 2>;

struct Lattice {
    int n = 2;                     ///< domain dimension, 1 or 2
    int N = 1;                     ///< number of field components
    std::array<double, 2> lower{0.0, 0.0};
    std::array<double, 2> upper{1.0, 1.0};
    std::array<int, 2> nodes{3, 3}; ///< nodes per axis; nodes[1] == 1 when n == 1

    /// Validated constructor. Throws DomainError on bad bounds or node counts.
    static Lattice make(int n, int N, std::array<double, 2> lower, std::array<double, 2> upper,
                        std::array<int, 2> nodes);
    static Lattice square(int nodes_per_axis, int N = 1, double lo = 0.0, double hi = 1.0);
    static Lattice interval(int nodes, int N = 1, double lo = 0.0, double hi = 1.0);

    void validate() const;

    double spacing(int s) const { return (upper[s] - lower[s]) / (nodes[s] - 1); }
    int node_count() const { return nodes[0] * nodes[1]; }
    int cells_along(int s) const { return s < n ? nodes[s] - 1 : 1; }
    int cell_count() const { return cells_along(0) * cells_along(1); }
    double cell_volume() const;
    double volume() const { return cell_volume() * cell_count(); }

    int node_index(int i0, int i1 = 0) const { return i0 + nodes[0] * i1; }
    int cell_index(int c0, int c1 = 0) const { return c0 + cells_along(0) * c1; }
    std::array<int, 2> node_multi(int node) const { return {node % nodes[0], node / nodes[0]}; }
    std::array<int, 2> cell_multi(int cell) const { return {cell % cells_along(0), cell / cells_along(0)}; }

    double coord(int i, int s) const { return lower[s] + i * spacing(s); }
    Point node_point(int node) const;
    Point cell_center(int cell) const;
    bool is_boundary(int node) const;

    /// Same geometry and node counts (N may differ).
    bool same_grid(const Lattice& o) const;
    bool operator==(const Lattice&) const = default;
};

struct GridField {
    Lattice lattice;
    std::vector<double> values;

    GridField() = default;
    GridField(Lattice lat, std::vector<double> v);
    explicit GridField(Lattice lat) : lattice(lat), values(static_cast<std::size_t>(lat.node_count()) * lat.N, 0.0) {}

    /// Samples f(x, component) at every node.
    static GridField sample(const Lattice& lat, const std::function<double(const Point&, int)>& f);

    double& at(int node, int r = 0) { return values[static_cast<std::size_t>(node) * lattice.N + r]; }
    double at(int node, int r = 0) const { return values[static_cast<std::size_t>(node) * lattice.N + r]; }

    /// Throws DomainError naming the first non-finite node.
    void check_finite() const;
};

struct GradientField {
    Lattice lattice;
    std::vector<double> values;

    GradientField() = default;
    GradientField(Lattice lat, std::vector<double> v);
    explicit GradientField(Lattice lat)
        : lattice(lat), values(static_cast<std::size_t>(lat.cell_count()) * lat.N * lat.n, 0.0) {}

    /// Samples f(cell center, r, s) in every cell.
    static GradientField sample(const Lattice& lat, const std::function<double(const Point&, int, int)>& f);

    int block() const { return lattice.N * lattice.n; }
    double& at(int cell, int r, int s) { return values[static_cast<std::size_t>(cell) * block() + r * lattice.n + s]; }
    double at(int cell, int r, int s) const { return values[static_cast<std::size_t>(cell) * block() + r * lattice.n + s]; }
    std::span<const double> cell(int c) const { return {values.data() + static_cast<std::size_t>(c) * block(), static_cast<std::size_t>(block())}; }
    std::span<double> cell(int c) { return {values.data() + static_cast<std::size_t>(c) * block(), static_cast<std::size_t>(block())}; }

    void check_finite() const;
};

struct BallRegion {
    Point center{0.0, 0.0};
    double radius = 1.0;
};

/// Cellwise forward differences. Throws DomainError on non-finite input.
GradientField forward_gradient(const GridField& u);

/// Transpose of forward_gradient: (D^T sigma) at every node, boundary included.
GridField forward_gradient_adjoint(const GradientField& sigma);

/// (D^T sigma) restricted to interior nodes, measured as (sum vol |D^T sigma|^2)^{1/2}.
double interior_adjoint_norm(const GradientField& sigma);

/// w(x + m h e_s) - w(x) on the overlap sub-lattice, s 0-based.
/// Throws DomainError if |m| is out of range or the overlap has fewer than 3 nodes.
GridField delta_sh(const GridField& w, int s, int m);

enum class Quadrature { Cell, Nodal };

/// Discrete L^r(B) norm; r may be infinity. Cell quadrature uses cells whose center lies in B
/// with the corner average as cell value; nodal quadrature uses nodes in B weighted by the cell volume.
double local_norm(const GridField& w, const BallRegion& ball, double r, Quadrature quad = Quadrature::Cell);

/// Discrete L^r(B) norm of the Frobenius norm of a cellwise matrix field.
double local_norm(const GradientField& w, const BallRegion& ball, double r);

/// Total volume of cells whose center lies in the ball.
double ball_measure(const Lattice& lat, const BallRegion& ball);

/// Distance from the ball to the rectangle boundary (negative if the ball sticks out).
double boundary_distance(const Lattice& lat, const BallRegion& ball);

/// Picks the nodes of u lying on the nodes of `sub`. Throws if they do not align.
GridField restrict_to(const GridField& u, const Lattice& sub);

/// Picks the cells of w coinciding with the cells of `sub`.
GradientField restrict_to(const GradientField& w, const Lattice& sub);

inline constexpr double infinity = std::numeric_limits<double>::infinity();

} // namespace pqlab
