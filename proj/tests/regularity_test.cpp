#include "oracles/band_integral.hpp"

#include "pqlab/error.hpp"
#include "pqlab/regularity.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace pqlab;

namespace {

GridField sample(const Lattice& lat, const std::function<double(double, double)>& f) {
    return GridField::sample(lat, [&](const Point& x, int) { return f(x[0], x[1]); });
}

int nodes_in_ball(const Lattice& lat, const BallRegion& B) {
    int count = 0;
    for (int i = 0; i < lat.node_count(); ++i) {
        const Point x = lat.node_point(i);
        count += std::hypot(x[0] - B.center[0], x[1] - B.center[1]) <= B.radius;
    }
    return count;
}

} // namespace

TEST_CASE("Besov estimate of an affine field") {
    const Lattice lat = Lattice::square(65);
    const BallRegion B{{0.5, 0.5}, 0.25};
    const BesovEstimate e = besov_seminorm(sample(lat, [](double x, double y) { return 2.0 * x - 0.5 * y; }), B, 2.0);
    const double meas = nodes_in_ball(lat, B) * lat.cell_volume();
    for (std::size_t j = 0; j < e.steps.size(); ++j)
        CHECK(e.integrals[j] == doctest::Approx(std::pow(2.0 * e.step_lengths[j], 2.0) * meas).epsilon(1e-10));
    CHECK(e.alpha == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("Besov estimate of a jump matches the band oracle") {
    const Lattice lat = Lattice::square(257);
    const double h = lat.spacing(0), x0 = 0.5 + 0.5 * h;
    const BallRegion B{{0.5, 0.5}, 0.25};
    const BesovEstimate e = besov_seminorm(sample(lat, [&](double x, double) { return x > x0 ? 1.0 : 0.0; }), B, 2.0);
    CHECK(std::abs(e.alpha - 0.5) <= 0.05);
    // A step of length m h covers a band of width m h around the jump; the band area is the oracle.
    for (std::size_t j = 0; j < e.steps.size(); ++j) {
        const double w = e.step_lengths[j];
        const double band = oracles::disk_band_area(B.center[0], B.radius, x0 - w, x0);
        CHECK(e.integrals[j] == doctest::Approx(band).epsilon(0.1));
    }
}

TEST_CASE("Besov estimate of sin(2 pi x)") {
    const Lattice lat = Lattice::square(129);
    const BesovEstimate e = besov_seminorm(sample(lat, [](double x, double) { return std::sin(2.0 * std::numbers::pi * x); }),
                                           {{0.5, 0.5}, 0.3}, 2.0);
    CHECK(std::abs(e.alpha - 1.0) <= 0.05);
    CHECK(std::isfinite(e.seminorm));
    CHECK(e.seminorm > 0.0);
}

TEST_CASE("Besov order is at least the predicted order on a field with a kink singularity") {
    // |x - 1/2|^{3/4} has gradient in L^2 (p = 2); predicted order at q = 3 in n = 2 is 2/3.
    const Lattice lat = Lattice::square(257);
    const BesovEstimate e = besov_seminorm(sample(lat, [](double x, double) { return std::pow(std::abs(x - 0.5), 0.75); }),
                                           {{0.5, 0.5}, 0.25}, 3.0);
    const double predicted = 1.0 - 2.0 * (0.5 - 1.0 / 3.0);
    CHECK(e.alpha >= predicted - 0.1);
}

TEST_CASE("Besov preconditions") {
    const GridField w(Lattice::square(33));
    const BallRegion B{{0.5, 0.5}, 0.2};
    CHECK_THROWS_AS(besov_seminorm(w, B, 2.0, {1, 2, 4}), DomainError);
    CHECK_THROWS_AS(besov_seminorm(w, B, 2.0, {1, 2, 3, 3}), DomainError);
    CHECK_THROWS_AS(besov_seminorm(w, B, 2.0, {2, 3, 4, 5}), DomainError);
    CHECK_THROWS_WITH_AS(besov_seminorm(w, {{0.5, 0.5}, 0.45}, 2.0), doctest::Contains("too close to the boundary"), DomainError);
    CHECK_THROWS_AS(besov_seminorm(GridField(Lattice::make(2, 1, {0, 0}, {1, 2}, {33, 33})), B, 2.0), DomainError);
}

TEST_CASE("nested lattices") {
    CHECK(nested(Lattice::square(17), Lattice::square(33)));
    CHECK(nested(Lattice::square(17), Lattice::square(65)));
    CHECK_FALSE(nested(Lattice::square(17), Lattice::square(31)));
    CHECK_FALSE(nested(Lattice::square(17), Lattice::square(33, 1, 0.0, 2.0)));
}

TEST_CASE("integrability scan of affine fields has zero slopes") {
    const BallRegion B{{0.5, 0.5}, 0.3};
    std::vector<GradientField> levels;
    for (int nodes : {17, 33, 65})
        levels.push_back(forward_gradient(sample(Lattice::square(nodes), [](double x, double y) { return 0.7 * x - 1.1 * y; })));
    const ScanTable t = integrability_scan(levels, B, {2.0, 3.0, 4.0});
    REQUIRE(t.slopes.size() == 3);
    CHECK(t.rows.size() == 9);
    for (double r : t.r) CHECK(std::count_if(t.rows.begin(), t.rows.end(), [&](const ScanRow& row) { return row.r == r; }) == 3);
    for (double s : t.slopes) CHECK(std::abs(s) <= 1e-10);
}

TEST_CASE("integrability scan detects a non-integrable power") {
    // |x|^{-0.8} lies in L^r of the unit disk iff 0.8 r < 2.
    const BallRegion B{{0.0, 0.0}, 1.0};
    std::vector<GradientField> levels;
    for (int nodes : {257, 513, 1025}) {
        const Lattice lat = Lattice::square(nodes, 1, -1.0, 1.0);
        levels.push_back(GradientField::sample(lat, [](const Point& x, int, int s) {
            return s == 0 ? std::pow(std::hypot(x[0], x[1]), -0.8) : 0.0;
        }));
    }
    const ScanTable t = integrability_scan(levels, B, {2.0, 4.0});
    CHECK(t.slopes[0] <= 0.02);
    CHECK(t.slopes[1] > 0.1);
}

TEST_CASE("integrability scan preconditions") {
    const BallRegion B{{0.5, 0.5}, 0.3};
    std::vector<GradientField> two{GradientField(Lattice::square(17)), GradientField(Lattice::square(33))};
    CHECK_THROWS_AS(integrability_scan(two, B, {2.0}), DomainError);
    std::vector<GradientField> bad{GradientField(Lattice::square(17)), GradientField(Lattice::square(31)),
                                   GradientField(Lattice::square(61))};
    CHECK_THROWS_AS(integrability_scan(bad, B, {2.0}), DomainError);
    std::vector<GradientField> ok{GradientField(Lattice::square(9)), GradientField(Lattice::square(17)),
                                  GradientField(Lattice::square(33))};
    CHECK_THROWS_AS(integrability_scan(ok, {{0.9, 0.5}, 0.3}, {2.0}), DomainError);
}

TEST_CASE("fit_slope") {
    CHECK(fit_slope({0.0, 1.0, 2.0}, {1.0, 3.0, 5.0}) == doctest::Approx(2.0));
    CHECK_THROWS_AS(fit_slope({1.0}, {1.0}), DomainError);
    CHECK_THROWS_AS(fit_slope({1.0, 1.0}, {0.0, 2.0}), DomainError);
}

TEST_CASE("penalty objective gradient matches finite differences") {
    const Lattice lat = Lattice::square(9);
    const auto F = make_integrand(IntegrandSpec::radial_pq_sum(2.0, 4.0), 1, 2);
    for (int k : {2, 3}) {
        const PenaltyObjective obj(*F, k, 0.05);
        std::mt19937_64 rng(61);
        std::normal_distribution<double> d(0.0, 0.2);
        GridField u(lat);
        for (auto& v : u.values) v = d(rng);
        GridField grad(lat);
        obj.evaluate(u, &grad);
        for (int i : {10, 20, 40, 60}) {
            const double step = 1e-6;
            GridField up = u, um = u;
            up.values[i] += step;
            um.values[i] -= step;
            const double fd = (obj.evaluate(up, nullptr) - obj.evaluate(um, nullptr)) / (2.0 * step);
            CHECK(fd == doctest::Approx(grad.values[i]).epsilon(1e-6));
        }
    }
}

TEST_CASE("penalty with eps = 0 is the plain solve") {
    const Lattice lat = Lattice::square(17);
    const auto spec = IntegrandSpec::radial_pq_sum(2.0, 4.0);
    const GridField g = sample(lat, [](double x, double y) { return x + 0.5 * y + 0.2 * std::cos(3.0 * x) * y; });
    const PenaltyResult r = penalty_minimize(spec, g, {.k_order = 2, .eps_tilde = 0.0});
    const DiscreteMinimizer m = minimize(*make_integrand(spec, 1, 2), g);
    CHECK(w1p_distance(r.minimizer.u, m.u, 2.0) <= 10.0 * m.tol_el);
    CHECK(r.penalty_share == 0.0);
}

TEST_CASE("penalty with affine base and quadratic F keeps the base") {
    const Lattice lat = Lattice::square(17);
    const GridField g = sample(lat, [](double x, double y) { return 0.3 * x - y; });
    const PenaltyResult r = penalty_minimize(IntegrandSpec::quadratic(), g, {.k_order = 2, .eps_tilde = 1e-2}, {.tol_el_rel = 1e-12});
    CHECK(r.minimizer.el_residual <= 1e-10);
    for (std::size_t i = 0; i < g.values.size(); ++i) CHECK(std::abs(r.minimizer.u.values[i] - g.values[i]) <= 1e-10);
}

TEST_CASE("penalty sweep approaches the unpenalized energy") {
    const Lattice lat = Lattice::square(17);
    const auto spec = IntegrandSpec::radial_pq_sum(2.0, 4.0);
    const GridField g = sample(lat, [](double x, double y) { return x + 0.5 * y + 0.2 * std::cos(std::numbers::pi * x) * std::sin(std::numbers::pi * y); });
    const double E0 = minimize(*make_integrand(spec, 1, 2), g).energy;
    double prev_F = INFINITY, prev_share = INFINITY;
    for (double eps : {1e-2, 1e-3, 1e-4}) {
        const PenaltyResult r = penalty_minimize(spec, g, {.k_order = 2, .eps_tilde = eps});
        REQUIRE(r.minimizer.converged);
        for (std::size_t i = 1; i < r.minimizer.energy_history.size(); ++i)
            CHECK(r.minimizer.energy_history[i] <= r.minimizer.energy_history[i - 1] + 1e-13 * (1.0 + r.minimizer.energy_history[i - 1]));
        CHECK(r.f_energy <= prev_F);
        CHECK(r.penalty_share <= prev_share);
        CHECK(r.f_energy >= E0 - 1e-9);
        prev_F = r.f_energy;
        prev_share = r.penalty_share;
    }
    CHECK((prev_F - E0) / E0 <= 0.02);
    CHECK(prev_share <= 1e-3 * E0);
}

TEST_CASE("penalty config validation") {
    CHECK_THROWS_AS((PenaltyConfig{.k_order = 1}).validate(), DomainError);
    CHECK_THROWS_AS((PenaltyConfig{.eps_tilde = -1.0}).validate(), DomainError);
    CHECK_THROWS_AS((PenaltyConfig{.mollify_eps = -0.1}).validate(), DomainError);
    CHECK_NOTHROW((PenaltyConfig{.eps_tilde = 0.0}).validate());
}

TEST_CASE("V-field seminorm of affine fields vanishes") {
    std::vector<GridField> levels;
    for (int nodes : {17, 33, 65}) levels.push_back(sample(Lattice::square(nodes), [](double x, double y) { return 2.0 * x + y; }));
    const VFieldTrend t = vfield_w12_estimate(levels, {{0.5, 0.5}, 0.3}, 3.0, 0.5);
    for (double s : t.seminorm) CHECK(s <= 1e-10);
    CHECK(t.growth.size() == 2);
}

TEST_CASE("V-field seminorm at p = 2 is the discrete Hessian norm") {
    const BallRegion B{{0.5, 0.5}, 0.3};
    std::vector<GridField> levels;
    for (int nodes : {17, 33, 65})
        levels.push_back(sample(Lattice::square(nodes), [](double x, double y) { return std::sin(2.0 * x) * std::cos(3.0 * y); }));
    const VFieldTrend t = vfield_w12_estimate(levels, B, 2.0, 0.7);
    for (std::size_t l = 0; l < levels.size(); ++l) {
        const GridField& u = levels[l];
        const Lattice& L = u.lattice;
        const double h = L.spacing(0);
        const auto U = [&](int i, int j) { return u.at(L.node_index(i, j)); };
        double acc = 0.0;
        for (int j = 0; j + 2 < L.nodes[1]; ++j)
            for (int i = 0; i + 2 < L.nodes[0]; ++i) {
                const double cx = (i + 1) * h, cy = (j + 1) * h;
                if (std::hypot(cx - B.center[0], cy - B.center[1]) > B.radius) continue;
                const double uxx = U(i + 2, j) - 2.0 * U(i + 1, j) + U(i, j);
                const double uyy = U(i, j + 2) - 2.0 * U(i, j + 1) + U(i, j);
                const double uxy_a = U(i + 1, j + 1) - U(i + 1, j) - U(i, j + 1) + U(i, j);
                acc += (uxx * uxx + uyy * uyy + 2.0 * uxy_a * uxy_a) / (h * h * h * h) * h * h;
            }
        CHECK(t.seminorm[l] == doctest::Approx(std::sqrt(acc)).epsilon(1e-12));
    }
}

TEST_CASE("cellwise V-gradient inequality on a smooth field") {
    const GridField u = sample(Lattice::square(65), [](double x, double y) { return std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y); });
    const CellwiseCheck c = vgradient_check(u, 3.0, 1.0);
    CHECK(c.cells > 0);
    CHECK(c.violations == 0);
    CHECK(c.max_ratio <= 1.0);
    CHECK(vgradient_check(u, 1.5, 0.2).violations == 0);
}

TEST_CASE("mollifier preserves constants and affine fields") {
    const Lattice lat = Lattice::square(33);
    const GridField c = sample(lat, [](double, double) { return 2.5; });
    const GridField mc = mollify(c, 0.1);
    for (double v : mc.values) CHECK(v == doctest::Approx(2.5).epsilon(1e-14));
    const GridField a = sample(lat, [](double x, double y) { return 1.0 + 3.0 * x - 2.0 * y; });
    const GridField ma = mollify(a, 0.1);
    CHECK(ma.lattice.nodes[0] == 33 - 2 * 4);
    for (int j = 0; j < ma.lattice.node_count(); ++j) {
        const Point x = ma.lattice.node_point(j);
        CHECK(ma.at(j) == doctest::Approx(1.0 + 3.0 * x[0] - 2.0 * x[1]).epsilon(1e-13));
    }
    CHECK_THROWS_AS(mollify(a, 0.01), DomainError);
    CHECK_THROWS_AS(mollify(a, 0.6), DomainError);
}

TEST_CASE("mollified gradients converge as eps halves") {
    const Lattice lat = Lattice::square(257);
    const auto f = [](double x, double y) { return std::sin(3.0 * x) * std::exp(y) + x * x * y; };
    const GridField u = sample(lat, f);
    // Compare on the region left by the largest eps.
    const Lattice inner = Lattice::make(2, 1, {0.25, 0.25}, {0.75, 0.75}, {129, 129});
    const GradientField du = forward_gradient(restrict_to(u, inner));
    double prev = INFINITY;
    for (double eps : {0.2, 0.1, 0.05}) {
        const GradientField dm = forward_gradient(restrict_to(mollify(u, eps), inner));
        double acc = 0.0;
        for (std::size_t i = 0; i < dm.values.size(); ++i) acc += std::pow(std::abs(dm.values[i] - du.values[i]), 3.0);
        const double dist = std::cbrt(acc * inner.cell_volume());
        CHECK(dist < prev);
        prev = dist;
    }
}
