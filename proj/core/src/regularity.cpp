#include "pqlab/regularity.hpp"

#include "pqlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace pqlab {

namespace {

bool inside(const Point& x, const BallRegion& b, int n) {
    double d2 = 0.0;
    for (int s = 0; s < n; ++s) d2 += (x[s] - b.center[s]) * (x[s] - b.center[s]);
    return d2 <= b.radius * b.radius;
}

double exact_ball_measure(const BallRegion& b, int n) {
    return n == 2 ? std::numbers::pi * b.radius * b.radius : 2.0 * b.radius;
}

void require_nested(const std::vector<Lattice>& lats, const char* what) {
    if (lats.size() < 3) throw DomainError(std::string(what) + ": at least 3 refinement levels required");
    for (std::size_t i = 1; i < lats.size(); ++i)
        if (!nested(lats[i - 1], lats[i])) throw DomainError(std::string(what) + ": lattices are not nested");
}

std::vector<double> binomial_row(int k) {
    std::vector<double> c(k + 1, 1.0);
    for (int i = 1; i <= k; ++i) c[i] = c[i - 1] * (k - i + 1) / i;
    return c;
}

Lattice center_lattice(const Lattice& lat, int components) {
    std::array<double, 2> lo = lat.lower, hi = lat.upper;
    std::array<int, 2> nodes{lat.cells_along(0), lat.n == 2 ? lat.cells_along(1) : 1};
    for (int s = 0; s < lat.n; ++s) {
        lo[s] += 0.5 * lat.spacing(s);
        hi[s] -= 0.5 * lat.spacing(s);
        if (nodes[s] < 2) throw DomainError("v_field: lattice too coarse for a cell-center lattice");
    }
    return Lattice::make(lat.n, components, lo, hi, nodes);
}

GridField as_center_field(const GradientField& w) {
    const Lattice cl = center_lattice(w.lattice, w.block());
    return GridField(cl, w.values);
}

} // namespace

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw DomainError("fit_slope: need at least two points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw DomainError("fit_slope: abscissae coincide");
    return sxy / sxx;
}

BesovEstimate besov_seminorm(const GridField& w, const BallRegion& ball, double q, const std::vector<int>& steps,
                             std::optional<double> alpha) {
    const Lattice& lat = w.lattice;
    if (!(q >= 1.0) || !std::isfinite(q)) throw DomainError("besov_seminorm: q must be finite and at least 1");
    if (steps.size() < 4) throw DomainError("besov_seminorm: at least 4 steps required");
    if (!std::is_sorted(steps.begin(), steps.end()) || steps.front() < 1 ||
        std::adjacent_find(steps.begin(), steps.end()) != steps.end())
        throw DomainError("besov_seminorm: steps must be positive and increasing");
    if (steps.back() < 4 * steps.front()) throw DomainError("besov_seminorm: steps must span two octaves");
    if (lat.n == 2 && std::abs(lat.spacing(0) - lat.spacing(1)) > 1e-12 * lat.spacing(0))
        throw DomainError("besov_seminorm: equal spacing along both axes required");
    const double h = lat.spacing(0);
    if (boundary_distance(lat, ball) <= steps.back() * h)
        throw DomainError("besov_seminorm: ball too close to the boundary for the largest step");

    BesovEstimate out;
    out.q = q;
    out.ball = ball;
    out.steps = steps;
    for (int s = 0; s < lat.n; ++s) out.directions.push_back(s);
    std::vector<int> ball_nodes;
    for (int i = 0; i < lat.node_count(); ++i)
        if (inside(lat.node_point(i), ball, lat.n)) ball_nodes.push_back(i);
    if (ball_nodes.empty()) throw DomainError("besov_seminorm: ball contains no nodes");

    const double vol = lat.cell_volume();
    const int N = lat.N;
    std::vector<double> lx, ly;
    for (int m : steps) {
        double best = 0.0;
        for (int s : out.directions) {
            for (int sign : {1, -1}) {
                double acc = 0.0;
                for (int i : ball_nodes) {
                    auto mi = lat.node_multi(i);
                    mi[s] += sign * m;
                    const int j = lat.node_index(mi[0], mi[1]);
                    double d2 = 0.0;
                    for (int r = 0; r < N; ++r) d2 += (w.at(j, r) - w.at(i, r)) * (w.at(j, r) - w.at(i, r));
                    acc += std::pow(std::sqrt(d2), q) * vol;
                }
                best = std::max(best, acc);
            }
        }
        if (!(best > 0.0) || !std::isfinite(best)) throw NumericError("besov_seminorm: difference integral is zero or not finite");
        out.step_lengths.push_back(m * h);
        out.integrals.push_back(best);
        lx.push_back(std::log(m * h));
        ly.push_back(std::log(best));
    }
    out.slope = fit_slope(lx, ly);
    out.alpha = out.slope / q;
    out.alpha_used = alpha.value_or(out.alpha);
    for (std::size_t j = 0; j < steps.size(); ++j)
        out.seminorm = std::max(out.seminorm, out.integrals[j] / std::pow(out.step_lengths[j], q * out.alpha_used));
    return out;
}

bool nested(const Lattice& coarse, const Lattice& fine) {
    if (coarse.n != fine.n || coarse.lower != fine.lower || coarse.upper != fine.upper) return false;
    for (int s = 0; s < coarse.n; ++s) {
        const int a = coarse.nodes[s] - 1, b = fine.nodes[s] - 1;
        if (b <= a || b % a != 0) return false;
    }
    return true;
}

ScanTable integrability_scan(const std::vector<GradientField>& levels, const BallRegion& ball,
                             const std::vector<double>& r_list) {
    std::vector<Lattice> lats;
    for (const auto& l : levels) lats.push_back(l.lattice);
    require_nested(lats, "integrability_scan");
    if (boundary_distance(lats.front(), ball) < 0.0) throw DomainError("integrability_scan: ball leaves the domain");
    if (r_list.empty()) throw DomainError("integrability_scan: r list is empty");
    const double exact = exact_ball_measure(ball, lats.front().n);

    ScanTable t;
    t.r = r_list;
    for (double r : r_list) {
        std::vector<double> lx, ly;
        for (const auto& w : levels) {
            double norm = local_norm(w, ball, r);
            if (std::isfinite(r)) norm *= std::pow(exact / ball_measure(w.lattice, ball), 1.0 / r);
            const double h = w.lattice.spacing(0);
            t.rows.push_back({h, r, norm});
            lx.push_back(std::log(1.0 / h));
            ly.push_back(std::log(norm));
        }
        const bool all_zero = std::all_of(ly.begin(), ly.end(), [](double v) { return std::isinf(v) && v < 0; });
        t.slopes.push_back(all_zero ? 0.0 : fit_slope(lx, ly));
    }
    return t;
}

ScanTable integrability_scan(const std::vector<DiscreteMinimizer>& solutions, const BallRegion& ball,
                             const std::vector<double>& r_list) {
    std::vector<GradientField> levels;
    for (const auto& s : solutions) levels.push_back(forward_gradient(s.u));
    return integrability_scan(levels, ball, r_list);
}

void PenaltyConfig::validate() const {
    if (k_order < 2) throw DomainError("penalty: k_order must be at least 2");
    if (!(eps_tilde >= 0.0) || !std::isfinite(eps_tilde)) throw DomainError("penalty: eps_tilde must be finite and nonnegative");
    if (!(mollify_eps >= 0.0) || !std::isfinite(mollify_eps)) throw DomainError("penalty: mollify_eps must be finite and nonnegative");
}

namespace {

// Calls fn(mult, c0, c1, coef0, coef1) for every distinct axis split of a k-th order difference.
template <class Fn> void for_each_split(int k, int n, Fn&& fn) {
    const std::vector<double> mult = binomial_row(k);
    for (int c0 = (n == 1 ? k : 0); c0 <= k; ++c0) {
        const int c1 = k - c0;
        auto signed_row = [](int c) {
            std::vector<double> row = binomial_row(c);
            for (int a = 0; a <= c; ++a)
                if ((c - a) % 2) row[a] = -row[a];
            return row;
        };
        fn(mult[c0], c0, c1, signed_row(c0), signed_row(c1));
    }
}

} // namespace

double PenaltyObjective::evaluate(const GridField& u, GridField* grad) const {
    double total = IntegralObjective(F_).evaluate(u, grad);
    if (eps_ == 0.0) return total;
    const Lattice& lat = u.lattice;
    for (int s = 0; s < lat.n; ++s)
        if (k_ > lat.nodes[s] - 1) throw DomainError("penalty: stencil of order k does not fit the lattice");
    const double vol = lat.cell_volume();
    const int N = lat.N;
    double pen = 0.0;
    for_each_split(k_, lat.n, [&](double mult, int c0, int c1, const std::vector<double>& a0, const std::vector<double>& a1) {
        const double scale = 1.0 / (std::pow(lat.spacing(0), c0) * (c1 ? std::pow(lat.spacing(1), c1) : 1.0));
        for (int i1 = 0; i1 + c1 < lat.nodes[1]; ++i1)
            for (int i0 = 0; i0 + c0 < lat.nodes[0]; ++i0)
                for (int r = 0; r < N; ++r) {
                    double v = 0.0;
                    for (int b = 0; b <= c1; ++b)
                        for (int a = 0; a <= c0; ++a) v += a0[a] * a1[b] * u.at(lat.node_index(i0 + a, i1 + b), r);
                    v *= scale;
                    pen += mult * v * v * vol;
                    if (grad) {
                        const double gv = eps_ * mult * v * scale * vol;
                        for (int b = 0; b <= c1; ++b)
                            for (int a = 0; a <= c0; ++a) grad->at(lat.node_index(i0 + a, i1 + b), r) += gv * a0[a] * a1[b];
                    }
                }
    });
    return total + 0.5 * eps_ * pen;
}

double PenaltyObjective::higher_order_energy(const GridField& u) const {
    if (eps_ == 0.0) return PenaltyObjective(F_, k_, 2.0).higher_order_energy(u);
    const double with = evaluate(u, nullptr);
    const double without = IntegralObjective(F_).evaluate(u, nullptr);
    return 2.0 * (with - without) / eps_;
}

PenaltyResult penalty_minimize(const IntegrandSpec& spec, const GridField& base, const PenaltyConfig& cfg,
                               const SolveOptions& opt) {
    cfg.validate();
    spec.validate(false);
    base.check_finite();
    const GridField g = cfg.mollify_eps > 0.0 ? mollify(base, cfg.mollify_eps) : base;
    for (int s = 0; s < g.lattice.n; ++s)
        if (cfg.k_order > g.lattice.nodes[s] - 1) throw DomainError("penalty: stencil of order k does not fit the lattice");
    auto F = make_integrand(spec, g.lattice.N, g.lattice.n);
    const PenaltyObjective obj(*F, cfg.k_order, cfg.eps_tilde);
    PenaltyResult out;
    out.minimizer = minimize_objective(obj, g, opt);
    out.f_energy = energy(*F, out.minimizer.u);
    out.penalty_share = cfg.eps_tilde == 0.0 ? 0.0 : cfg.eps_tilde * obj.higher_order_energy(out.minimizer.u);
    return out;
}

GridField v_field(const GradientField& du, double p, double mu) {
    GradientField v(du.lattice);
    for (int c = 0; c < du.lattice.cell_count(); ++c) v_function(du.cell(c), p, mu, v.cell(c));
    return as_center_field(v);
}

VFieldTrend vfield_w12_estimate(const std::vector<GridField>& levels, const BallRegion& ball, double p, double mu) {
    std::vector<Lattice> lats;
    for (const auto& l : levels) lats.push_back(l.lattice);
    require_nested(lats, "vfield_w12_estimate");
    VFieldTrend t;
    for (const auto& u : levels) {
        const GradientField dv = forward_gradient(v_field(forward_gradient(u), p, mu));
        t.h.push_back(u.lattice.spacing(0));
        t.seminorm.push_back(local_norm(dv, ball, 2.0));
    }
    for (std::size_t i = 1; i < t.seminorm.size(); ++i) t.growth.push_back(t.seminorm[i] / t.seminorm[i - 1]);
    return t;
}

CellwiseCheck vgradient_check(const GridField& u, double p, double mu) {
    const GradientField du = forward_gradient(u);
    const GridField xi = as_center_field(du);
    const GradientField dv = forward_gradient(v_field(du, p, mu));
    const GradientField d2u = forward_gradient(xi);
    const Lattice& cl = xi.lattice;
    const int B = cl.N;
    const double C = std::abs(p - 2.0) / 2.0 + 1.0;

    auto bracket2 = [&](const double* a) {
        double s = mu * mu;
        for (int e = 0; e < B; ++e) s += a[e] * a[e];
        return s;
    };
    CellwiseCheck out;
    for (int c = 0; c < cl.cell_count(); ++c) {
        const auto m = cl.cell_multi(c);
        const int i = cl.node_index(m[0], m[1]);
        const double* x0 = &xi.values[static_cast<std::size_t>(i) * B];
        double weight = 0.0;
        for (int s = 0; s < cl.n; ++s) {
            auto ms = m;
            ms[s] += 1;
            const double* x1 = &xi.values[static_cast<std::size_t>(cl.node_index(ms[0], ms[1])) * B];
            double w;
            if (p >= 2.0) {
                w = std::pow(std::max(bracket2(x0), bracket2(x1)), (p - 2.0) / 2.0);
            } else {
                // closest point of the segment to the origin
                double dd = 0.0, xd = 0.0;
                for (int e = 0; e < B; ++e) {
                    dd += (x1[e] - x0[e]) * (x1[e] - x0[e]);
                    xd += x0[e] * (x1[e] - x0[e]);
                }
                const double t = dd > 0.0 ? std::clamp(-xd / dd, 0.0, 1.0) : 0.0;
                double s2 = mu * mu;
                for (int e = 0; e < B; ++e) {
                    const double z = x0[e] + t * (x1[e] - x0[e]);
                    s2 += z * z;
                }
                w = s2 > 0.0 ? std::pow(s2, (p - 2.0) / 2.0) : infinity;
            }
            weight = std::max(weight, w);
        }
        double lhs = 0.0, d2 = 0.0;
        for (double v : dv.cell(c)) lhs += v * v;
        for (double v : d2u.cell(c)) d2 += v * v;
        const double rhs = C * C * weight * d2;
        ++out.cells;
        if (lhs > rhs * (1.0 + 1e-10) + 1e-300) ++out.violations;
        if (rhs > 0.0 && std::isfinite(rhs)) out.max_ratio = std::max(out.max_ratio, lhs / rhs);
    }
    return out;
}

GridField mollify(const GridField& u, double eps) {
    const Lattice& lat = u.lattice;
    std::array<int, 2> m{0, 0};
    for (int s = 0; s < lat.n; ++s) {
        const double h = lat.spacing(s);
        if (!(eps >= 2.0 * h * (1.0 - 1e-12))) throw DomainError("mollify: eps must be at least twice the grid spacing");
        m[s] = static_cast<int>(std::ceil(eps / h - 1e-9));
        if (lat.nodes[s] - 2 * m[s] < 2) throw DomainError("mollify: eps too large for the lattice");
    }
    std::array<double, 2> lo = lat.lower, hi = lat.upper;
    std::array<int, 2> nodes = lat.nodes;
    for (int s = 0; s < lat.n; ++s) {
        lo[s] = lat.coord(m[s], s);
        hi[s] = lat.coord(lat.nodes[s] - 1 - m[s], s);
        nodes[s] = lat.nodes[s] - 2 * m[s];
    }
    const Lattice sub = Lattice::make(lat.n, lat.N, lo, hi, nodes);

    struct Tap {
        int a, b;
        double w;
    };
    std::vector<Tap> taps;
    double mass = 0.0;
    for (int b = -m[1]; b <= m[1]; ++b)
        for (int a = -m[0]; a <= m[0]; ++a) {
            const double y0 = a * lat.spacing(0), y1 = lat.n == 2 ? b * lat.spacing(1) : 0.0;
            const double rho2 = (y0 * y0 + y1 * y1) / (eps * eps);
            if (rho2 >= 1.0) continue;
            const double w = std::exp(-1.0 / (1.0 - rho2));
            taps.push_back({a, b, w});
            mass += w;
        }
    for (auto& t : taps) t.w /= mass;

    GridField out(sub);
    for (int j = 0; j < sub.node_count(); ++j) {
        const auto mj = sub.node_multi(j);
        const int i0 = mj[0] + m[0], i1 = mj[1] + m[1];
        for (int r = 0; r < lat.N; ++r) {
            double acc = 0.0;
            for (const auto& t : taps) acc += t.w * u.at(lat.node_index(i0 + t.a, i1 + t.b), r);
            out.at(j, r) = acc;
        }
    }
    return out;
}

nlohmann::json to_json(const BesovEstimate& b) {
    return {{"directions", b.directions}, {"steps", b.steps},   {"step_lengths", b.step_lengths},
            {"q", b.q},                   {"ball", {{"center", b.ball.center}, {"radius", b.ball.radius}}},
            {"integrals", b.integrals},   {"slope", b.slope},   {"alpha", b.alpha},
            {"alpha_used", b.alpha_used}, {"seminorm", b.seminorm}};
}

nlohmann::json to_json(const ScanTable& t) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : t.rows) rows.push_back({{"h", r.h}, {"r", r.r}, {"norm", r.norm}});
    return {{"rows", rows}, {"r", t.r}, {"slopes", t.slopes}};
}

nlohmann::json to_json(const VFieldTrend& t) {
    return {{"h", t.h}, {"seminorm", t.seminorm}, {"growth", t.growth}};
}

} // namespace pqlab
