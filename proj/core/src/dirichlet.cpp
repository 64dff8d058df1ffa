#include "pqlab/dirichlet.hpp"

#include "pqlab/error.hpp"
#include "pqlab/field_io.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>

namespace pqlab {

namespace {

// Neumaier compensated sum in a fixed order.
struct CompensatedSum {
    double sum = 0.0, comp = 0.0;
    void add(double v) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v)) comp += (sum - t) + v;
        else comp += (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

std::vector<int> interior_dofs(const Lattice& lat) {
    std::vector<int> dofs;
    for (int i = 0; i < lat.node_count(); ++i)
        if (!lat.is_boundary(i))
            for (int r = 0; r < lat.N; ++r) dofs.push_back(i * lat.N + r);
    return dofs;
}

double dot_dofs(const std::vector<double>& a, const std::vector<double>& b, const std::vector<int>& dofs) {
    double s = 0.0;
    for (int d : dofs) s += a[d] * b[d];
    return s;
}

} // namespace

double IntegralObjective::evaluate(const GridField& u, GridField* grad) const {
    const Lattice& lat = u.lattice;
    const int N = lat.N, n = lat.n;
    if (F_.N() != N || F_.n() != n) throw DomainError("energy: integrand shape does not match the lattice");
    const double vol = lat.cell_volume();
    const std::array<int, 2> stride{N, N * lat.nodes[0]};
    const std::array<double, 2> inv_h{1.0 / lat.spacing(0), n == 2 ? 1.0 / lat.spacing(1) : 0.0};
    std::vector<double> xi(static_cast<std::size_t>(N) * n), sg(static_cast<std::size_t>(N) * n);
    std::span<double> gspan = grad ? std::span<double>(sg) : std::span<double>();
    if (grad) {
        if (!grad->lattice.same_grid(lat) || grad->lattice.N != N) *grad = GridField(lat);
        std::fill(grad->values.begin(), grad->values.end(), 0.0);
    }
    CompensatedSum total;
    for (int c1 = 0; c1 < lat.cells_along(1); ++c1) {
        for (int c0 = 0; c0 < lat.cells_along(0); ++c0) {
            const std::size_t base = static_cast<std::size_t>(lat.node_index(c0, c1)) * N;
            const double* ub = u.values.data() + base;
            for (int r = 0; r < N; ++r)
                for (int s = 0; s < n; ++s) xi[r * n + s] = (ub[stride[s] + r] - ub[r]) * inv_h[s];
            const double f = F_.value_and_gradient(xi, gspan);
            if (!std::isfinite(f)) throw NumericError("energy: non-finite integrand value in cell " + std::to_string(lat.cell_index(c0, c1)));
            total.add(f * vol);
            if (grad) {
                double* gb = grad->values.data() + base;
                for (int r = 0; r < N; ++r)
                    for (int s = 0; s < n; ++s) {
                        const double v = sg[r * n + s] * inv_h[s] * vol;
                        if (!std::isfinite(v)) throw NumericError("energy: non-finite derivative in cell " + std::to_string(lat.cell_index(c0, c1)));
                        gb[stride[s] + r] += v;
                        gb[r] -= v;
                    }
            }
        }
    }
    return total.value();
}

double energy(const Integrand& F, const GridField& u) { return IntegralObjective(F).evaluate(u, nullptr); }

double interior_residual(const GridField& grad) {
    const Lattice& lat = grad.lattice;
    double acc = 0.0;
    for (int i = 0; i < lat.node_count(); ++i) {
        if (lat.is_boundary(i)) continue;
        for (int r = 0; r < lat.N; ++r) acc += grad.at(i, r) * grad.at(i, r);
    }
    return std::sqrt(acc / lat.cell_volume());
}

double el_residual(const Integrand& F, const GridField& u) {
    GridField grad(u.lattice);
    IntegralObjective(F).evaluate(u, &grad);
    return interior_residual(grad);
}

GridField harmonic_extension(const GridField& g) {
    const Lattice& lat = g.lattice;
    const std::vector<int> dofs = interior_dofs(lat);
    GridField u = g;
    for (int d : dofs) u.values[d] = 0.0;
    if (dofs.empty()) return u;

    // A v = D^T D v restricted to interior dofs; rhs = -A u_boundary
    auto apply = [&](const GridField& v) { return forward_gradient_adjoint(forward_gradient(v)); };
    GridField Au = apply(u);
    std::vector<double> r(u.values.size(), 0.0), p(u.values.size(), 0.0);
    for (int d : dofs) r[d] = -Au.values[d];
    p = r;
    double rr = dot_dofs(r, r, dofs);
    const double rr0 = rr;
    GridField pf(lat);
    for (int it = 0; it < 20 * static_cast<int>(dofs.size()) && rr > 1e-30 * std::max(rr0, 1e-300); ++it) {
        if (rr == 0.0) break;
        std::fill(pf.values.begin(), pf.values.end(), 0.0);
        for (int d : dofs) pf.values[d] = p[d];
        const GridField Ap = apply(pf);
        const double pAp = dot_dofs(p, Ap.values, dofs);
        if (!(pAp > 0.0)) break;
        const double alpha = rr / pAp;
        for (int d : dofs) {
            u.values[d] += alpha * p[d];
            r[d] -= alpha * Ap.values[d];
        }
        const double rr_new = dot_dofs(r, r, dofs);
        const double beta = rr_new / rr;
        rr = rr_new;
        for (int d : dofs) p[d] = r[d] + beta * p[d];
    }
    return u;
}

DiscreteMinimizer minimize_objective(const Objective& obj, const GridField& g, const SolveOptions& opt) {
    g.check_finite();
    const Lattice& lat = g.lattice;
    const std::vector<int> dofs = interior_dofs(lat);

    GridField u;
    switch (opt.start) {
    case StartKind::Harmonic: u = harmonic_extension(g); break;
    case StartKind::Zero:
        u = g;
        for (int d : dofs) u.values[d] = 0.0;
        break;
    case StartKind::Given:
        if (!opt.initial || !opt.initial->lattice.same_grid(lat) || opt.initial->lattice.N != lat.N)
            throw DomainError("minimize: given start must live on the solver lattice");
        u = *opt.initial;
        for (int i = 0; i < lat.node_count(); ++i)
            if (lat.is_boundary(i))
                for (int r = 0; r < lat.N; ++r) u.at(i, r) = g.at(i, r);
        break;
    }

    DiscreteMinimizer out;
    GridField grad(lat), grad_new(lat), trial = u;
    double E = obj.evaluate(u, &grad);
    if (!std::isfinite(E)) throw NumericError("minimize: initial energy is not finite");
    out.energy_history.push_back(E);

    std::deque<std::vector<double>> S, Y;
    std::deque<double> rho;
    std::vector<double> d(u.values.size(), 0.0), q(u.values.size(), 0.0);
    double res = interior_residual(grad);
    double last_decrease = 0.0;
    bool have_decrease = false;
    const double noise_rel = 1e-13;

    int it = 0;
    for (;; ++it) {
        const double tol_el = opt.tol_el_rel * (1.0 + std::abs(E));
        out.tol_el = tol_el;
        if (opt.log)
            *opt.log << "{\"iteration\":" << it << ",\"energy\":" << format_double(E) << ",\"residual\":"
                     << format_double(res) << "}\n";
        if (res <= tol_el && (!have_decrease || last_decrease <= opt.tol_e)) {
            out.converged = true;
            break;
        }
        if (it >= opt.max_iter) break;

        // two-loop recursion on interior dofs
        for (int k : dofs) q[k] = grad.values[k];
        std::vector<double> alpha(S.size());
        for (int j = static_cast<int>(S.size()) - 1; j >= 0; --j) {
            alpha[j] = rho[j] * dot_dofs(S[j], q, dofs);
            for (int k : dofs) q[k] -= alpha[j] * Y[j][k];
        }
        double gamma;
        if (!S.empty()) {
            gamma = dot_dofs(S.back(), Y.back(), dofs) / dot_dofs(Y.back(), Y.back(), dofs);
        } else {
            double gmax = 0.0;
            for (int k : dofs) gmax = std::max(gmax, std::abs(grad.values[k]));
            gamma = gmax > 0.0 ? std::min(1.0, 0.1 / gmax) * lat.spacing(0) : 1.0;
        }
        for (int k : dofs) q[k] *= gamma;
        for (std::size_t j = 0; j < S.size(); ++j) {
            const double beta = rho[j] * dot_dofs(Y[j], q, dofs);
            for (int k : dofs) q[k] += S[j][k] * (alpha[j] - beta);
        }
        for (int k : dofs) d[k] = -q[k];
        double gd = dot_dofs(grad.values, d, dofs);
        if (!(gd < 0.0)) {
            S.clear();
            Y.clear();
            rho.clear();
            for (int k : dofs) d[k] = -gamma * grad.values[k];
            gd = dot_dofs(grad.values, d, dofs);
            if (!(gd < 0.0)) break;
        }

        double step = 1.0, E_new = E;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            trial.values = u.values;
            for (int k : dofs) trial.values[k] += step * d[k];
            E_new = obj.evaluate(trial, &grad_new);
            if (std::isfinite(E_new)) {
                if (E_new <= E + 1e-4 * step * gd) {
                    accepted = true;
                    break;
                }
                // energy differences below roundoff: fall back to the derivative along d
                const double gd_new = dot_dofs(grad_new.values, d, dofs);
                if (std::abs(E_new - E) <= noise_rel * (1.0 + std::abs(E)) && std::abs(gd_new) <= 0.9 * std::abs(gd)) {
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!accepted) break;

        std::vector<double> s(u.values.size(), 0.0), y(u.values.size(), 0.0);
        for (int k : dofs) {
            s[k] = trial.values[k] - u.values[k];
            y[k] = grad_new.values[k] - grad.values[k];
        }
        const double sy = dot_dofs(s, y, dofs);
        if (sy > 1e-300 && sy > 1e-12 * std::sqrt(dot_dofs(s, s, dofs) * dot_dofs(y, y, dofs))) {
            S.push_back(std::move(s));
            Y.push_back(std::move(y));
            rho.push_back(1.0 / sy);
            if (static_cast<int>(S.size()) > opt.memory) {
                S.pop_front();
                Y.pop_front();
                rho.pop_front();
            }
        }
        last_decrease = (E - E_new) / (1.0 + std::abs(E_new));
        have_decrease = true;
        std::swap(u.values, trial.values);
        std::swap(grad.values, grad_new.values);
        E = E_new;
        res = interior_residual(grad);
        out.energy_history.push_back(E);
    }
    out.u = std::move(u);
    out.energy = E;
    out.el_residual = res;
    out.iterations = it;
    return out;
}

DiscreteMinimizer minimize(const Integrand& F, const GridField& g, const SolveOptions& opt) {
    return minimize_objective(IntegralObjective(F), g, opt);
}

DiscreteMinimizer minimize(const Integrand& F, const std::function<double(const Point&, int)>& g, const Lattice& lat,
                           const SolveOptions& opt) {
    return minimize(F, GridField::sample(lat, g), opt);
}

double w1p_distance(const GridField& u, const GridField& v, double p) {
    if (!u.lattice.same_grid(v.lattice) || u.lattice.N != v.lattice.N) throw DomainError("w1p_distance: lattice mismatch");
    const Lattice& lat = u.lattice;
    const double vol = lat.cell_volume();
    double acc = 0.0;
    for (int i = 0; i < lat.node_count(); ++i) {
        double s2 = 0.0;
        for (int r = 0; r < lat.N; ++r) s2 += (u.at(i, r) - v.at(i, r)) * (u.at(i, r) - v.at(i, r));
        acc += std::pow(std::sqrt(s2), p) * vol;
    }
    const GradientField du = forward_gradient(u), dv = forward_gradient(v);
    for (int c = 0; c < lat.cell_count(); ++c) {
        double s2 = 0.0;
        auto a = du.cell(c), b = dv.cell(c);
        for (std::size_t e = 0; e < a.size(); ++e) s2 += (a[e] - b[e]) * (a[e] - b[e]);
        acc += std::pow(std::sqrt(s2), p) * vol;
    }
    return std::pow(acc, 1.0 / p);
}

double v_distance(const GradientField& du, const GradientField& dv, double p, double mu) {
    if (!du.lattice.same_grid(dv.lattice)) throw DomainError("v_distance: lattice mismatch");
    const Lattice& lat = du.lattice;
    std::vector<double> a(du.block()), b(du.block());
    double acc = 0.0;
    for (int c = 0; c < lat.cell_count(); ++c) {
        v_function(du.cell(c), p, mu, a);
        v_function(dv.cell(c), p, mu, b);
        for (std::size_t e = 0; e < a.size(); ++e) acc += (a[e] - b[e]) * (a[e] - b[e]);
    }
    return acc * lat.cell_volume();
}

LadderSolution solve_ladder(const IntegrandSpec& spec, const GridField& g, const std::vector<int>& k_list,
                            const SolveOptions& opt, const LadderOptions& lopt) {
    for (std::size_t i = 1; i < k_list.size(); ++i)
        if (k_list[i] <= k_list[i - 1]) throw DomainError("solve_ladder: k list must be increasing");
    const Lattice& lat = g.lattice;
    auto F = make_integrand(spec, lat.N, lat.n);
    LadderSolution out;
    out.reference = minimize(*F, g, opt);
    out.converged = out.reference.converged;
    const GradientField du_ref = forward_gradient(out.reference.u);
    LadderOptions lo = lopt;
    lo.sampled_pipeline = false;
    for (int k : k_list) {
        const RegularizationLevel level = build_level(spec, k, lo);
        auto Fk = level.integrand(lat.N, lat.n);
        DiscreteMinimizer m = minimize(*Fk, g, opt);
        out.converged = out.converged && m.converged;
        const GradientField du_k = forward_gradient(m.u);
        out.k.push_back(k);
        out.energies.push_back(m.energy);
        out.v_distances.push_back(v_distance(du_ref, du_k, spec.p, 0.0));
        out.w1p_distances.push_back(w1p_distance(out.reference.u, m.u, spec.p));
        out.level_gaps.push_back(energy(*Fk, out.reference.u) - m.energy);
        out.solutions.push_back(std::move(m));
    }
    out.energies_nondecreasing = std::is_sorted(out.energies.begin(), out.energies.end());
    return out;
}

nlohmann::json to_json(const DiscreteMinimizer& m) {
    return {{"energy", m.energy},     {"el_residual", m.el_residual}, {"tol_el", m.tol_el},
            {"iterations", m.iterations}, {"converged", m.converged}};
}

} // namespace pqlab
