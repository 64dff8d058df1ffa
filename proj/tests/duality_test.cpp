#include "pqlab/dirichlet.hpp"
#include "pqlab/duality.hpp"
#include "pqlab/error.hpp"
#include "pqlab/legendre.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace pqlab;

namespace {

GridField sample(const Lattice& lat, double (*f)(double, double)) {
    return GridField::sample(lat, [f](const Point& x, int) { return f(x[0], x[1]); });
}

double datum(double x, double y) { return x + 0.5 * y + 0.2 * std::cos(std::numbers::pi * x) * std::sin(std::numbers::pi * y); }

} // namespace

TEST_CASE("dual field examples") {
    const Lattice lat = Lattice::square(9);
    const auto quad = make_integrand(IntegrandSpec::quadratic(), 1, 2);
    const GradientField s = dual_field(*quad, forward_gradient(sample(lat, [](double x, double) { return x; })));
    for (int c = 0; c < lat.cell_count(); ++c) {
        CHECK(s.at(c, 0, 0) == doctest::Approx(2.0).epsilon(1e-14));
        CHECK(std::abs(s.at(c, 0, 1)) <= 1e-14);
    }
    const auto pq = make_integrand(IntegrandSpec::radial_pq_sum(2.0, 4.0), 1, 2);
    for (double v : dual_field(*pq, GradientField(lat)).values) CHECK(v == 0.0);

    const auto spec = IntegrandSpec::radial_pq_sum(1.7, 3.2, 1.0, 0.5, 0.2);
    const auto F = make_integrand(spec, 1, 2);
    const GradientField du = forward_gradient(sample(lat, datum));
    const GradientField sig = dual_field(*F, du);
    for (int c = 0; c < lat.cell_count(); ++c) {
        const auto vd = evaluate_with_derivative(spec, MatrixPoint::row({du.at(c, 0, 0), du.at(c, 0, 1)}));
        CHECK(sig.at(c, 0, 0) == doctest::Approx(vd.derivative(0, 0)).epsilon(1e-14));
        CHECK(sig.at(c, 0, 1) == doctest::Approx(vd.derivative(0, 1)).epsilon(1e-14));
    }
}

TEST_CASE("solenoidal residual examples") {
    const Lattice lat = Lattice::square(17);
    const GradientField cst = GradientField::sample(lat, [](const Point&, int, int s) { return s == 0 ? 1.5 : -0.25; });
    CHECK(solenoidal_residual(cst) == 0.0);
    const GradientField rot = GradientField::sample(lat, [](const Point& x, int, int s) { return s == 0 ? x[1] : -x[0]; });
    CHECK(solenoidal_residual(rot) <= 1e-14);

    // 3 x 3 nodes, h = 1/2: the only interior node sees (0.25 - 0.75) / 0.5 = -1, weighted by vol = 1/4.
    const Lattice small = Lattice::square(3);
    const GradientField lin = GradientField::sample(small, [](const Point& x, int, int s) { return s == 0 ? x[0] : 0.0; });
    CHECK(solenoidal_residual(lin) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("pairing identity for solenoidal fields") {
    const Lattice lat = Lattice::square(17);
    const GradientField sigma = GradientField::sample(lat, [](const Point& x, int, int s) {
        return s == 0 ? 0.3 + x[1] + x[1] * x[1] : -1.0 - x[0] + x[0] * x[0] * x[0];
    });
    REQUIRE(solenoidal_residual(sigma) <= 1e-12);
    const GridField g = sample(lat, datum);
    const GridField gh = harmonic_extension(g);
    std::mt19937_64 rng(51);
    std::normal_distribution<double> d;
    GridField u = g;
    for (int i = 0; i < lat.node_count(); ++i)
        if (!lat.is_boundary(i)) u.at(i) = d(rng);
    const GradientField du = forward_gradient(u), dg = forward_gradient(gh);
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < du.values.size(); ++i) {
        a += sigma.values[i] * du.values[i] * lat.cell_volume();
        b += sigma.values[i] * dg.values[i] * lat.cell_volume();
    }
    CHECK(std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a)));
}

TEST_CASE("quadratic certificate") {
    const Lattice lat = Lattice::square(33);
    const GridField g = sample(lat, [](double x, double) { return x; });
    const auto spec = IntegrandSpec::quadratic();
    const DiscreteMinimizer m = minimize(*make_integrand(spec, 1, 2), g);
    const DualCertificate c = certificate(spec, m.u, g, {.tol_el = m.tol_el, .scale = 1.0 + m.energy});
    CHECK(std::abs(c.duality_gap) <= 1e-8 * (1.0 + m.energy));
    CHECK(c.extremality_gap_max <= 1e-8);
    CHECK(c.solenoidal_residual <= 1e-8);
    CHECK(c.weak_duality_ok());
    CHECK(c.qprime_bound_ok());
}

TEST_CASE("extremality gaps are nonnegative for any pinned field") {
    const Lattice lat = Lattice::square(17);
    const GridField g = sample(lat, datum);
    std::mt19937_64 rng(52);
    std::normal_distribution<double> d(0.0, 0.3);
    GridField u = g;
    for (int i = 0; i < lat.node_count(); ++i)
        if (!lat.is_boundary(i)) u.at(i) += d(rng);
    for (const auto& spec : {IntegrandSpec::radial_pq_sum(2.0, 4.0), IntegrandSpec::radial_power(1.5, 1.0, 0.3),
                             IntegrandSpec::separable({1.0, 1.0}, {1.0, 0.0}, {3.0, 3.0})}) {
        const DualCertificate c = certificate(spec, u, g);
        CHECK(c.extremality_gap_min >= -1e-8);
        CHECK(c.weak_duality_ok());
        CHECK(c.qprime_bound_ok());
    }
}

TEST_CASE("certificate of a solved pq problem") {
    const Lattice lat = Lattice::square(33);
    const GridField g = sample(lat, datum);
    const auto spec = IntegrandSpec::radial_pq_sum(2.0, 4.0);
    const DiscreteMinimizer m = minimize(*make_integrand(spec, 1, 2), g, {.tol_el_rel = 1e-10});
    REQUIRE(m.converged);
    const DualCertificate c = certificate(spec, m.u, g, {.tol_el = m.tol_el, .scale = 1.0 + m.energy});
    CHECK(c.weak_duality_ok());
    CHECK(c.qprime_bound_ok());
    CHECK(c.extremality_gap_max <= 1e-8);
    CHECK(c.solenoidal_residual <= 10.0 * m.el_residual + 1e-14);
    // The duality gap is controlled by the EL residual.
    CHECK(std::abs(c.duality_gap) <= 10.0 * m.el_residual);
    CHECK(c.q_prime == doctest::Approx(4.0 / 3.0));

    std::ostringstream csv;
    write_gap_csv(csv, lat, c.gap_field);
    int rows = 0;
    for (char ch : csv.str()) rows += ch == '\n';
    CHECK(rows >= lat.cell_count());
    CHECK(to_json(c).contains("duality_gap"));
}

TEST_CASE("duality gap shrinks along solver checkpoints") {
    const Lattice lat = Lattice::square(17);
    const GridField g = sample(lat, datum);
    const auto spec = IntegrandSpec::radial_pq_sum(2.0, 4.0);
    const auto F = make_integrand(spec, 1, 2);
    double prev = INFINITY;
    for (int iters : {2, 8, 32, 200}) {
        const DiscreteMinimizer m = minimize(*F, g, {.max_iter = iters, .start = StartKind::Zero});
        const double gap = std::abs(certificate(spec, m.u, g).duality_gap);
        CHECK(gap <= prev);
        prev = gap;
    }
    CHECK(prev <= 1e-6);
}

TEST_CASE("extremality gaps of ladder certificates vanish along the ladder") {
    const Lattice lat = Lattice::square(17);
    const GridField g = sample(lat, [](double x, double y) { return 1.6 * (x + 0.5 * y) + 0.07 * std::sin(3.0 * std::numbers::pi * x); });
    const auto spec = IntegrandSpec::radial_pq_sum(2.0, 4.0);
    const auto F = make_integrand(spec, 1, 2);
    const LadderSolution L = solve_ladder(spec, g, {4, 8, 16, 32}, {}, {.sampled_pipeline = false});
    REQUIRE(L.converged);
    // sigma_k = F_k'(Du_k) measured against F: the gap to the F-extremality relation shrinks with k.
    const PolarSpec polar_F = polar(spec);
    std::vector<double> gaps;
    for (std::size_t i = 0; i < L.k.size(); ++i) {
        const RegularizationLevel level = build_level(spec, L.k[i], {.sampled_pipeline = false});
        const GradientField du = forward_gradient(L.solutions[i].u);
        const GradientField sk = dual_field(*level.integrand(1, 2), du);
        double worst = 0.0;
        for (int c = 0; c < lat.cell_count(); ++c) {
            const MatrixPoint xi = MatrixPoint::row({du.at(c, 0, 0), du.at(c, 0, 1)});
            const MatrixPoint zeta = MatrixPoint::row({sk.at(c, 0, 0), sk.at(c, 0, 1)});
            worst = std::max(worst, polar_F.conjugate(zeta) + F->value(xi.v) - dot(zeta.v, xi.v));
        }
        gaps.push_back(worst);
        const DualCertificate ck = certificate(level, L.solutions[i].u, g, {.tol_el = L.solutions[i].tol_el});
        CHECK(ck.extremality_gap_max <= 1e-8);
        CHECK(ck.weak_duality_ok());
        CHECK(ck.qprime_bound_ok());
    }
    CHECK(gaps.back() < gaps.front());
}

TEST_CASE("certificate requires the boundary to be pinned") {
    const Lattice lat = Lattice::square(9);
    const GridField g = sample(lat, datum);
    GridField u = g;
    u.at(0) += 1.0;
    CHECK_THROWS_AS(certificate(IntegrandSpec::quadratic(), u, g), DomainError);
}
