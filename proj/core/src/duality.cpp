#include "pqlab/duality.hpp"

#include "pqlab/dirichlet.hpp"
#include "pqlab/error.hpp"
#include "pqlab/field_io.hpp"
#include "pqlab/legendre.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace pqlab {

GradientField dual_field(const Integrand& F, const GradientField& du) {
    const Lattice& lat = du.lattice;
    if (F.N() != lat.N || F.n() != lat.n) throw DomainError("dual_field: integrand shape does not match the lattice");
    GradientField sigma(lat);
    for (int c = 0; c < lat.cell_count(); ++c) {
        F.value_and_gradient(du.cell(c), sigma.cell(c));
        for (double v : sigma.cell(c))
            if (!std::isfinite(v)) throw NumericError("dual_field: non-finite derivative in cell " + std::to_string(c));
    }
    return sigma;
}

double solenoidal_residual(const GradientField& sigma) { return interior_adjoint_norm(sigma); }

PolarBound polar_bound(const IntegrandSpec& spec) {
    const GrowthConstants gc = growth_constants(spec);
    return {spec.q, gc.c2, polar_c3(gc.c2, spec.q), 0.0};
}

DualCertificate certificate(const Integrand& F, const PolarBound& bound, const GridField& u_h, const GridField& g,
                            const CertificateOptions& opt) {
    const Lattice& lat = u_h.lattice;
    if (!g.lattice.same_grid(lat) || g.lattice.N != lat.N) throw DomainError("certificate: boundary datum lattice mismatch");
    for (int i = 0; i < lat.node_count(); ++i)
        if (lat.is_boundary(i))
            for (int r = 0; r < lat.N; ++r)
                if (u_h.at(i, r) != g.at(i, r)) throw DomainError("certificate: u_h is not pinned to g on the boundary");

    DualCertificate out;
    const GradientField du = forward_gradient(u_h);
    const GridField gh = harmonic_extension(g);
    const GradientField dg = forward_gradient(gh);
    out.sigma = dual_field(F, du);
    const double vol = lat.cell_volume();
    const int cells = lat.cell_count();
    out.gap_field.resize(cells);
    out.q_prime = bound.q / (bound.q - 1.0);

    double primal = 0.0, dual = 0.0, pairing = 0.0, gap_sum = 0.0, sig_q = 0.0, dg_q = 0.0;
    out.extremality_gap_max = -infinity;
    out.extremality_gap_min = infinity;
    for (int c = 0; c < cells; ++c) {
        auto s = out.sigma.cell(c);
        auto x = du.cell(c);
        auto y = dg.cell(c);
        const double f = F.value(x);
        const double fs = F.conjugate(s);
        if (!std::isfinite(fs)) throw NumericError("certificate: polar not finite in cell " + std::to_string(c));
        const double gap = fs + f - dot(s, x);
        out.gap_field[c] = gap;
        out.extremality_gap_max = std::max(out.extremality_gap_max, gap);
        out.extremality_gap_min = std::min(out.extremality_gap_min, gap);
        gap_sum += gap;
        primal += f * vol;
        dual += (dot(s, y) - fs) * vol;
        pairing += (dot(s, x) - dot(s, y)) * vol;
        double s2 = 0.0, y2 = 0.0;
        for (std::size_t e = 0; e < s.size(); ++e) {
            s2 += s[e] * s[e];
            y2 += y[e] * y[e];
        }
        sig_q += std::pow(std::sqrt(s2), out.q_prime) * vol;
        dg_q += std::pow(std::sqrt(y2), bound.q) * vol;
    }
    out.extremality_gap_mean = gap_sum / cells;
    out.primal_value = primal;
    out.dual_value = dual;
    out.duality_gap = primal - dual;
    out.pairing_residual = pairing;
    out.solenoidal_residual = solenoidal_residual(out.sigma);
    out.qprime_norm = std::pow(sig_q, 1.0 / out.q_prime);

    // Young with eps = c3/2 absorbs the pairing against Dg_h into the coercive part of F*.
    const double eps = bound.c3 / 2.0;
    const double cy = std::pow(eps * out.q_prime, 1.0 - bound.q) / bound.q;
    const double omega = lat.volume();
    out.qprime_bound = (2.0 / bound.c3) * (cy * dg_q + std::abs(primal) + (bound.c2 + bound.shift) * omega +
                                           std::abs(pairing) + std::max(0.0, gap_sum * vol));
    out.tau_conj = opt.tau_conj;
    out.tau_cert = 10.0 * opt.tau_conj + 10.0 * opt.tol_el * opt.scale;
    return out;
}

DualCertificate certificate(const IntegrandSpec& spec, const GridField& u_h, const GridField& g,
                            const CertificateOptions& opt) {
    spec.validate(false);
    auto F = make_integrand(spec, u_h.lattice.N, u_h.lattice.n);
    return certificate(*F, polar_bound(spec), u_h, g, opt);
}

DualCertificate certificate(const RegularizationLevel& level, const GridField& u_h, const GridField& g,
                            const CertificateOptions& opt) {
    auto F = level.integrand(u_h.lattice.N, u_h.lattice.n);
    // F_k <= F + slack, so F_k* >= F* - slack
    PolarBound b = polar_bound(level.spec);
    b.shift = level.mollification_slack();
    return certificate(*F, b, u_h, g, opt);
}

nlohmann::json to_json(const DualCertificate& c) {
    return {{"solenoidal_residual", c.solenoidal_residual},
            {"extremality_gap_max", c.extremality_gap_max},
            {"extremality_gap_mean", c.extremality_gap_mean},
            {"extremality_gap_min", c.extremality_gap_min},
            {"primal_value", c.primal_value},
            {"dual_value", c.dual_value},
            {"duality_gap", c.duality_gap},
            {"pairing_residual", c.pairing_residual},
            {"q_prime", c.q_prime},
            {"qprime_norm", c.qprime_norm},
            {"qprime_bound", c.qprime_bound},
            {"qprime_bound_ok", c.qprime_bound_ok()},
            {"tau_conj", c.tau_conj},
            {"tau_cert", c.tau_cert},
            {"weak_duality_ok", c.weak_duality_ok()}};
}

void write_gap_csv(std::ostream& os, const Lattice& lat, const std::vector<double>& gap) {
    if (static_cast<int>(gap.size()) != lat.cell_count()) throw DomainError("write_gap_csv: one value per cell required");
    os << (lat.n == 2 ? "x1,x2,gap\n" : "x1,gap\n");
    for (int c = 0; c < lat.cell_count(); ++c) {
        const Point x = lat.cell_center(c);
        os << format_double(x[0]) << ',';
        if (lat.n == 2) os << format_double(x[1]) << ',';
        os << format_double(gap[c]) << '\n';
    }
}

} // namespace pqlab
