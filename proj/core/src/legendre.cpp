#include "pqlab/legendre.hpp"

#include "pqlab/error.hpp"
#include "pqlab/field_io.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace pqlab {

Profile Profile::sample(double T, int m, const std::function<double(double)>& f, std::string tag) {
    if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("profile: half-width T must be positive");
    if (m < 65) throw DomainError("profile: at least 65 samples required");
    Profile p;
    p.T = T;
    p.tag = std::move(tag);
    p.values.resize(m);
    for (int i = 0; i < m; ++i) {
        p.values[i] = f(p.t(i));
        if (!std::isfinite(p.values[i])) throw NumericError("profile: non-finite sample at index " + std::to_string(i));
    }
    return p;
}

double Profile::convexity_defect() const {
    double scale = 0.0;
    for (double v : values) scale = std::max(scale, std::abs(v));
    double worst = 0.0;
    for (int i = 1; i + 1 < size(); ++i) worst = std::min(worst, values[i - 1] - 2.0 * values[i] + values[i + 1]);
    return worst / (1.0 + scale);
}

ConvexMinorant::ConvexMinorant(const Profile& f) : f_(&f) {
    const int m = f.size();
    if (m < 2) throw DomainError("ConvexMinorant: need at least two samples");
    const double h = f.spacing();
    vertices_.reserve(m);
    for (int i = 0; i < m; ++i) {
        while (vertices_.size() >= 2) {
            const int a = vertices_[vertices_.size() - 2], b = vertices_.back();
            // drop b if it is not strictly below the chord a -> i
            const double lhs = (f.values[b] - f.values[a]) * (i - b);
            const double rhs = (f.values[i] - f.values[b]) * (b - a);
            if (lhs >= rhs) vertices_.pop_back();
            else break;
        }
        vertices_.push_back(i);
    }
    slopes_.resize(vertices_.size() - 1);
    for (std::size_t j = 0; j + 1 < vertices_.size(); ++j)
        slopes_[j] = (f.values[vertices_[j + 1]] - f.values[vertices_[j]]) / ((vertices_[j + 1] - vertices_[j]) * h);
}

ConvexMinorant::Hit ConvexMinorant::conjugate_at(double s) const {
    // first edge whose slope is >= s; its left vertex is a maximizer
    const auto it = std::lower_bound(slopes_.begin(), slopes_.end(), s);
    const std::size_t j = static_cast<std::size_t>(it - slopes_.begin());
    const int v = vertices_[j];
    const double t = f_->t(v);
    const bool boundary = (j == 0 && s < slopes_.front()) || j == slopes_.size();
    return {s * t - f_->values[v], t, boundary};
}

Profile conjugate_profile(const Profile& f, DualGrid grid, BoundaryPolicy policy) {
    if (grid.m < 65) throw DomainError("conjugate_profile: dual grid needs at least 65 points");
    if (!(grid.S > 0.0)) throw DomainError("conjugate_profile: dual half-width must be positive");
    ConvexMinorant hull(f);
    const auto& vert = hull.vertices();
    const int edges = static_cast<int>(vert.size()) - 1;
    const double h = f.spacing();

    Profile g;
    g.T = grid.S;
    g.tag = f.tag.empty() ? std::string() : f.tag + "*";
    g.values.resize(grid.m);
    int j = 0;
    double slope_j = edges > 0 ? (f.values[vert[1]] - f.values[vert[0]]) / ((vert[1] - vert[0]) * h) : 0.0;
    for (int k = 0; k < grid.m; ++k) {
        const double s = g.t(k);
        while (j < edges && slope_j < s) {
            ++j;
            if (j < edges) slope_j = (f.values[vert[j + 1]] - f.values[vert[j]]) / ((vert[j + 1] - vert[j]) * h);
        }
        const bool boundary = j == edges || (j == 0 && edges > 0 && s < slope_j);
        if (boundary && policy == BoundaryPolicy::Reject)
            throw DomainError("truncation radius too small: sup for s = " + format_double(s) + " attained at the primal boundary");
        g.values[k] = s * f.t(vert[j]) - f.values[vert[j]];
    }
    return g;
}

double polar_c3(double c2, double q) {
    return std::pow(c2, -1.0 / (q - 1.0)) * (1.0 - 1.0 / q) * std::pow(q, -1.0 / (q - 1.0));
}

double polar_c4(double c1, double p) {
    return std::pow(c1, -1.0 / (p - 1.0)) * (1.0 - 1.0 / p) * std::pow(p, -1.0 / (p - 1.0));
}

double PolarSpec::conjugate(const MatrixPoint& zeta) const {
    for (double v : zeta.v)
        if (!std::isfinite(v)) throw DomainError("polar: non-finite matrix entry");
    return integrand->conjugate(zeta.v);
}

PolarSpec polar(const IntegrandSpec& spec, int N, int n) {
    spec.validate(false);
    PolarSpec out;
    out.separable = !spec.radial();
    if (out.separable) n = spec.columns();
    out.integrand = make_integrand(spec, N, n);
    bool closed = !out.separable;
    for (const auto& prof : out.integrand->profiles()) {
        const auto* ps = dynamic_cast<const PowerSumProfile*>(prof.get());
        closed = closed && ps != nullptr && ps->pure_power();
    }
    out.representation = closed ? PolarSpec::Representation::ClosedFormPower : PolarSpec::Representation::PointwiseRoot;
    out.p_prime = spec.p / (spec.p - 1.0);
    out.q_prime = spec.q / (spec.q - 1.0);
    const GrowthConstants gc = growth_constants(spec);
    out.c1 = gc.c1;
    out.c2 = gc.c2;
    out.c3 = polar_c3(gc.c2, spec.q);
    out.c4 = polar_c4(gc.c1, spec.p);
    return out;
}

double young_gap(const IntegrandSpec& spec, const MatrixPoint& xi, const MatrixPoint& zeta) {
    if (xi.N != zeta.N || xi.n != zeta.n) throw DomainError("young_gap: shape mismatch");
    PolarSpec ps = polar(spec, xi.N, xi.n);
    const double F = ps.integrand->value(xi.v);
    return ps.conjugate(zeta) + F - dot(zeta.v, xi.v);
}

namespace {

double richardson_slope(const ConvexMinorant& hull, double s) {
    const double ds = 0.02 * (1.0 + s);
    auto central = [&](double d) { return (hull.conjugate_at(s + d).value - hull.conjugate_at(s - d).value) / (2.0 * d); };
    const double d1 = central(ds), d2 = central(0.5 * ds);
    return (4.0 * d2 - d1) / 3.0;
}

} // namespace

double inverse_gradient_check(const IntegrandSpec& spec, const MatrixPoint& xi, InverseCheckOptions opt) {
    for (double v : xi.v)
        if (!std::isfinite(v)) throw DomainError("inverse_gradient_check: non-finite matrix entry");
    spec.validate(false);
    auto F = make_integrand(spec, xi.N, xi.n);
    const int N = xi.N, n = xi.n;
    const int blocks = F->by_column() ? n : 1;
    double dist2 = 0.0;
    for (int b = 0; b < blocks; ++b) {
        std::vector<int> idx;
        for (int r = 0; r < N; ++r)
            for (int s = 0; s < n; ++s)
                if (!F->by_column() || s == b) idx.push_back(r * n + s);
        double t2 = 0.0;
        for (int k : idx) t2 += xi.v[k] * xi.v[k];
        const double t = std::sqrt(t2);
        if (t > 0.5 * opt.T)
            throw DomainError("inverse_gradient_check: |xi| exceeds the certified radius T/2 = " + format_double(0.5 * opt.T));
        const ScalarProfile& f = *F->profiles()[b];
        const Profile prof = Profile::sample(opt.T, opt.m, [&](double x) { return f.value(std::abs(x)); });
        const ConvexMinorant hull(prof);
        const double s = f.derivative(t);
        if (s + 0.04 * (1.0 + s) > hull.max_slope())
            throw DomainError("inverse_gradient_check: profile half-width too small for the slope");
        const double back = richardson_slope(hull, s);
        // (F*)'(zeta) points along zeta, which is parallel to the block of xi
        for (int k : idx) {
            const double dir = t > 0.0 ? xi.v[k] / t : 0.0;
            const double d = back * dir - xi.v[k];
            dist2 += d * d;
        }
    }
    return std::sqrt(dist2);
}

void write_profile_csv(std::ostream& os, const Profile& f) {
    for (int i = 0; i < f.size(); ++i) os << format_double(f.t(i)) << ',' << format_double(f.values[i]) << '\n';
}

} // namespace pqlab
