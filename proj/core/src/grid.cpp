#include "pqlab/grid.hpp"

#include "pqlab/error.hpp"

#include <cmath>
#include <string>

namespace pqlab {

namespace {

std::string node_label(const Lattice& lat, int node) {
    auto m = lat.node_multi(node);
    return lat.n == 1 ? "node " + std::to_string(m[0])
                      : "node (" + std::to_string(m[0]) + ", " + std::to_string(m[1]) + ")";
}

bool in_ball(const Point& x, const BallRegion& b, int n) {
    double d2 = 0.0;
    for (int s = 0; s < n; ++s) d2 += (x[s] - b.center[s]) * (x[s] - b.center[s]);
    return d2 <= b.radius * b.radius;
}

int aligned_index(double value, double origin, double h, const char* what) {
    double t = (value - origin) / h;
    double r = std::round(t);
    if (std::abs(t - r) > 1e-8) throw DomainError(std::string("restrict_to: ") + what + " not aligned with the parent lattice");
    return static_cast<int>(r);
}

} // namespace

Lattice Lattice::make(int n, int N, std::array<double, 2> lower, std::array<double, 2> upper,
                      std::array<int, 2> nodes) {
    Lattice lat;
    lat.n = n;
    lat.N = N;
    lat.lower = lower;
    lat.upper = upper;
    lat.nodes = nodes;
    if (n == 1) {
        lat.lower[1] = 0.0;
        lat.upper[1] = 0.0;
        lat.nodes[1] = 1;
    }
    lat.validate();
    return lat;
}

Lattice Lattice::square(int nodes_per_axis, int N, double lo, double hi) {
    return make(2, N, {lo, lo}, {hi, hi}, {nodes_per_axis, nodes_per_axis});
}

Lattice Lattice::interval(int nodes, int N, double lo, double hi) {
    return make(1, N, {lo, 0.0}, {hi, 0.0}, {nodes, 1});
}

void Lattice::validate() const {
    if (n != 1 && n != 2) throw DomainError("lattice: dimension n must be 1 or 2");
    if (N < 1) throw DomainError("lattice: target dimension N must be at least 1");
    for (int s = 0; s < n; ++s) {
        if (nodes[s] < 3) throw DomainError("lattice: at least 3 nodes required along axis " + std::to_string(s));
        if (!std::isfinite(lower[s]) || !std::isfinite(upper[s]) || !(lower[s] < upper[s]))
            throw DomainError("lattice: bounds along axis " + std::to_string(s) + " must be finite with lower < upper");
    }
    if (n == 1 && nodes[1] != 1) throw DomainError("lattice: 1D lattice must have nodes[1] == 1");
}

double Lattice::cell_volume() const {
    double v = spacing(0);
    if (n == 2) v *= spacing(1);
    return v;
}

Point Lattice::node_point(int node) const {
    auto m = node_multi(node);
    return {coord(m[0], 0), n == 2 ? coord(m[1], 1) : 0.0};
}

Point Lattice::cell_center(int cell) const {
    auto m = cell_multi(cell);
    return {coord(m[0], 0) + 0.5 * spacing(0), n == 2 ? coord(m[1], 1) + 0.5 * spacing(1) : 0.0};
}

bool Lattice::is_boundary(int node) const {
    auto m = node_multi(node);
    for (int s = 0; s < n; ++s)
        if (m[s] == 0 || m[s] == nodes[s] - 1) return true;
    return false;
}

bool Lattice::same_grid(const Lattice& o) const {
    return n == o.n && lower == o.lower && upper == o.upper && nodes == o.nodes;
}

GridField::GridField(Lattice lat, std::vector<double> v) : lattice(lat), values(std::move(v)) {
    lattice.validate();
    if (values.size() != static_cast<std::size_t>(lattice.node_count()) * lattice.N)
        throw DomainError("GridField: value array length must equal node count times N");
    check_finite();
}

GridField GridField::sample(const Lattice& lat, const std::function<double(const Point&, int)>& f) {
    GridField u(lat);
    for (int i = 0; i < lat.node_count(); ++i) {
        Point x = lat.node_point(i);
        for (int r = 0; r < lat.N; ++r) u.at(i, r) = f(x, r);
    }
    u.check_finite();
    return u;
}

void GridField::check_finite() const {
    for (std::size_t k = 0; k < values.size(); ++k)
        if (!std::isfinite(values[k]))
            throw DomainError("non-finite field value at " + node_label(lattice, static_cast<int>(k / lattice.N)) +
                              ", component " + std::to_string(k % lattice.N));
}

GradientField::GradientField(Lattice lat, std::vector<double> v) : lattice(lat), values(std::move(v)) {
    lattice.validate();
    if (values.size() != static_cast<std::size_t>(lattice.cell_count()) * block())
        throw DomainError("GradientField: one N x n matrix per cell required");
    check_finite();
}

GradientField GradientField::sample(const Lattice& lat, const std::function<double(const Point&, int, int)>& f) {
    GradientField w(lat);
    for (int c = 0; c < lat.cell_count(); ++c) {
        Point x = lat.cell_center(c);
        for (int r = 0; r < lat.N; ++r)
            for (int s = 0; s < lat.n; ++s) w.at(c, r, s) = f(x, r, s);
    }
    w.check_finite();
    return w;
}

void GradientField::check_finite() const {
    for (std::size_t k = 0; k < values.size(); ++k)
        if (!std::isfinite(values[k]))
            throw DomainError("non-finite gradient entry in cell " + std::to_string(k / block()));
}

GradientField forward_gradient(const GridField& u) {
    u.check_finite();
    const Lattice& lat = u.lattice;
    GradientField du(lat);
    const int N = lat.N, n = lat.n;
    const std::array<int, 2> stride{N, N * lat.nodes[0]};
    const std::array<double, 2> inv_h{1.0 / lat.spacing(0), n == 2 ? 1.0 / lat.spacing(1) : 0.0};
    for (int c1 = 0; c1 < lat.cells_along(1); ++c1) {
        for (int c0 = 0; c0 < lat.cells_along(0); ++c0) {
            const int cell = lat.cell_index(c0, c1);
            const double* base = u.values.data() + static_cast<std::size_t>(lat.node_index(c0, c1)) * N;
            double* out = du.values.data() + static_cast<std::size_t>(cell) * N * n;
            for (int r = 0; r < N; ++r)
                for (int s = 0; s < n; ++s) out[r * n + s] = (base[stride[s] + r] - base[r]) * inv_h[s];
        }
    }
    return du;
}

GridField forward_gradient_adjoint(const GradientField& sigma) {
    const Lattice& lat = sigma.lattice;
    GridField out(lat);
    const int N = lat.N, n = lat.n;
    const std::array<int, 2> stride{N, N * lat.nodes[0]};
    const std::array<double, 2> inv_h{1.0 / lat.spacing(0), n == 2 ? 1.0 / lat.spacing(1) : 0.0};
    for (int c1 = 0; c1 < lat.cells_along(1); ++c1) {
        for (int c0 = 0; c0 < lat.cells_along(0); ++c0) {
            const double* sg = sigma.values.data() + static_cast<std::size_t>(lat.cell_index(c0, c1)) * N * n;
            double* base = out.values.data() + static_cast<std::size_t>(lat.node_index(c0, c1)) * N;
            for (int r = 0; r < N; ++r)
                for (int s = 0; s < n; ++s) {
                    const double v = sg[r * n + s] * inv_h[s];
                    base[stride[s] + r] += v;
                    base[r] -= v;
                }
        }
    }
    return out;
}

double interior_adjoint_norm(const GradientField& sigma) {
    const GridField div = forward_gradient_adjoint(sigma);
    const Lattice& lat = sigma.lattice;
    double acc = 0.0;
    for (int i = 0; i < lat.node_count(); ++i) {
        if (lat.is_boundary(i)) continue;
        for (int r = 0; r < lat.N; ++r) acc += div.at(i, r) * div.at(i, r);
    }
    return std::sqrt(acc * lat.cell_volume());
}

GridField delta_sh(const GridField& w, int s, int m) {
    const Lattice& lat = w.lattice;
    if (s < 0 || s >= lat.n) throw DomainError("delta_sh: axis index out of range");
    const int am = m < 0 ? -m : m;
    if (am >= lat.nodes[s]) throw DomainError("delta_sh: step out of range");
    const int count = lat.nodes[s] - am;
    if (count < 3) throw DomainError("delta_sh: overlap sub-lattice has fewer than 3 nodes");
    const int first = m < 0 ? am : 0;

    Lattice out_lat = lat;
    out_lat.nodes[s] = count;
    out_lat.lower[s] = lat.coord(first, s);
    out_lat.upper[s] = lat.coord(first + count - 1, s);
    GridField out(out_lat);
    const int N = lat.N;
    for (int j = 0; j < out_lat.node_count(); ++j) {
        auto mj = out_lat.node_multi(j);
        std::array<int, 2> src = mj;
        src[s] += first;
        std::array<int, 2> dst = src;
        dst[s] += m;
        const int a = lat.node_index(src[0], src[1]);
        const int b = lat.node_index(dst[0], dst[1]);
        for (int r = 0; r < N; ++r) out.at(j, r) = w.at(b, r) - w.at(a, r);
    }
    return out;
}

namespace {

double finish_norm(double acc, double mx, double r, bool any, const char* what) {
    if (!any) throw DomainError(std::string(what) + ": region does not intersect the lattice");
    if (std::isinf(r)) return mx;
    return std::pow(acc, 1.0 / r);
}

void check_exponent(double r) {
    if (!(r >= 1.0)) throw DomainError("local_norm: exponent r must be at least 1");
}

} // namespace

double local_norm(const GridField& w, const BallRegion& ball, double r, Quadrature quad) {
    check_exponent(r);
    const Lattice& lat = w.lattice;
    const int N = lat.N;
    const double vol = lat.cell_volume();
    double acc = 0.0, mx = 0.0;
    bool any = false;
    auto add = [&](double mag) {
        any = true;
        if (std::isinf(r)) mx = std::max(mx, mag);
        else acc += std::pow(mag, r) * vol;
    };
    if (quad == Quadrature::Nodal) {
        for (int i = 0; i < lat.node_count(); ++i) {
            if (!in_ball(lat.node_point(i), ball, lat.n)) continue;
            double s2 = 0.0;
            for (int k = 0; k < N; ++k) s2 += w.at(i, k) * w.at(i, k);
            add(std::sqrt(s2));
        }
        return finish_norm(acc, mx, r, any, "local_norm");
    }
    std::vector<double> avg(N);
    for (int c = 0; c < lat.cell_count(); ++c) {
        if (!in_ball(lat.cell_center(c), ball, lat.n)) continue;
        auto m = lat.cell_multi(c);
        std::fill(avg.begin(), avg.end(), 0.0);
        const int corners = lat.n == 2 ? 4 : 2;
        for (int k = 0; k < corners; ++k) {
            const int node = lat.node_index(m[0] + (k & 1), m[1] + ((k >> 1) & 1));
            for (int q = 0; q < N; ++q) avg[q] += w.at(node, q);
        }
        double s2 = 0.0;
        for (int q = 0; q < N; ++q) s2 += (avg[q] / corners) * (avg[q] / corners);
        add(std::sqrt(s2));
    }
    return finish_norm(acc, mx, r, any, "local_norm");
}

double local_norm(const GradientField& w, const BallRegion& ball, double r) {
    check_exponent(r);
    const Lattice& lat = w.lattice;
    const double vol = lat.cell_volume();
    double acc = 0.0, mx = 0.0;
    bool any = false;
    for (int c = 0; c < lat.cell_count(); ++c) {
        if (!in_ball(lat.cell_center(c), ball, lat.n)) continue;
        any = true;
        double s2 = 0.0;
        for (double v : w.cell(c)) s2 += v * v;
        const double mag = std::sqrt(s2);
        if (std::isinf(r)) mx = std::max(mx, mag);
        else acc += std::pow(mag, r) * vol;
    }
    return finish_norm(acc, mx, r, any, "local_norm");
}

double ball_measure(const Lattice& lat, const BallRegion& ball) {
    int count = 0;
    for (int c = 0; c < lat.cell_count(); ++c)
        if (in_ball(lat.cell_center(c), ball, lat.n)) ++count;
    return count * lat.cell_volume();
}

double boundary_distance(const Lattice& lat, const BallRegion& ball) {
    double d = std::numeric_limits<double>::infinity();
    for (int s = 0; s < lat.n; ++s) {
        d = std::min(d, ball.center[s] - lat.lower[s] - ball.radius);
        d = std::min(d, lat.upper[s] - ball.center[s] - ball.radius);
    }
    return d;
}

GridField restrict_to(const GridField& u, const Lattice& sub) {
    const Lattice& lat = u.lattice;
    if (sub.n != lat.n || sub.N != lat.N) throw DomainError("restrict_to: dimension mismatch");
    std::array<int, 2> off{0, 0}, stride{1, 1};
    for (int s = 0; s < lat.n; ++s) {
        off[s] = aligned_index(sub.lower[s], lat.lower[s], lat.spacing(s), "origin");
        stride[s] = aligned_index(sub.spacing(s), 0.0, lat.spacing(s), "spacing");
        if (stride[s] < 1 || off[s] < 0 || off[s] + stride[s] * (sub.nodes[s] - 1) > lat.nodes[s] - 1)
            throw DomainError("restrict_to: sub-lattice exceeds the parent lattice");
    }
    GridField out(sub);
    for (int j = 0; j < sub.node_count(); ++j) {
        auto m = sub.node_multi(j);
        const int src = lat.node_index(off[0] + stride[0] * m[0], lat.n == 2 ? off[1] + stride[1] * m[1] : 0);
        for (int r = 0; r < lat.N; ++r) out.at(j, r) = u.at(src, r);
    }
    return out;
}

GradientField restrict_to(const GradientField& w, const Lattice& sub) {
    const Lattice& lat = w.lattice;
    if (sub.n != lat.n || sub.N != lat.N) throw DomainError("restrict_to: dimension mismatch");
    std::array<int, 2> off{0, 0};
    for (int s = 0; s < lat.n; ++s) {
        off[s] = aligned_index(sub.lower[s], lat.lower[s], lat.spacing(s), "origin");
        if (aligned_index(sub.spacing(s), 0.0, lat.spacing(s), "spacing") != 1)
            throw DomainError("restrict_to: cell restriction requires equal spacing");
        if (off[s] < 0 || off[s] + sub.cells_along(s) > lat.cells_along(s))
            throw DomainError("restrict_to: sub-lattice exceeds the parent lattice");
    }
    GradientField out(sub);
    for (int c = 0; c < sub.cell_count(); ++c) {
        auto m = sub.cell_multi(c);
        auto src = w.cell(lat.cell_index(off[0] + m[0], lat.n == 2 ? off[1] + m[1] : 0));
        auto dst = out.cell(c);
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return out;
}

} // namespace pqlab
