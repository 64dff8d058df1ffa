#include "oracles/brute_conjugate.hpp"

#include "pqlab/error.hpp"
#include "pqlab/legendre.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace pqlab;

namespace {

constexpr int m16 = (1 << 16) + 1;

double max_error(const Profile& g, const std::function<double(double)>& exact, double range) {
    double err = 0.0;
    for (int i = 0; i < g.size(); ++i)
        if (std::abs(g.t(i)) <= range) err = std::max(err, std::abs(g.values[i] - exact(g.t(i))));
    return err;
}

} // namespace

TEST_CASE("conjugates of powers") {
    const Profile half = Profile::sample(6.0, m16, [](double t) { return 0.5 * t * t; });
    CHECK(max_error(conjugate_profile(half, {3.0, 1201}), [](double s) { return 0.5 * s * s; }, 3.0) <= 1e-6);

    const Profile cube = Profile::sample(4.0, m16, [](double t) { return std::pow(std::abs(t), 3.0) / 3.0; });
    CHECK(max_error(conjugate_profile(cube, {3.0, 1201}), [](double s) { return std::pow(std::abs(s), 1.5) / 1.5; }, 3.0) <= 1e-6);

    const Profile quart = Profile::sample(2.0, 4097, [](double t) { return t * t * t * t; });
    const ConvexMinorant hull(quart);
    const auto hit = hull.conjugate_at(4.0);
    CHECK(hit.value == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(hit.argmax == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(hit.on_boundary);
}

TEST_CASE("merge transform agrees with brute force") {
    const auto f = [](double t) { return std::cosh(t) + 0.3 * t; };
    const double T = 3.0;
    const int m = 2049;
    const Profile p = Profile::sample(T, m, f);
    const Profile g = conjugate_profile(p, {4.0, 257});
    for (int i = 0; i < g.size(); ++i) CHECK(g.values[i] == doctest::Approx(oracles::brute_conjugate(f, T, m, g.t(i))).epsilon(1e-13));
}

TEST_CASE("truncation radius too small is rejected") {
    const Profile p = Profile::sample(1.0, 1025, [](double t) { return 0.5 * t * t; });
    CHECK_THROWS_WITH_AS(conjugate_profile(p, {3.0, 65}), doctest::Contains("truncation radius too small"), DomainError);
    CHECK_NOTHROW(conjugate_profile(p, {3.0, 65}, BoundaryPolicy::Allow));
}

TEST_CASE("bipolar restores convex profiles") {
    const auto f = [](double t) { return std::exp(0.5 * t) + t * t; };
    const Profile p = Profile::sample(2.0, 4097, f);
    const Profile g = conjugate_profile(p, {8.0, 16385}, BoundaryPolicy::Allow);
    const Profile back = conjugate_profile(g, {2.0, 4097}, BoundaryPolicy::Allow);
    CHECK(max_error(back, f, 2.0) <= 2e-6);
}

TEST_CASE("bipolar of t^4 - t^2 is its convex envelope") {
    const auto f = [](double t) { return t * t * t * t - t * t; };
    const Profile p = Profile::sample(2.0, 4097, f);
    const Profile g = conjugate_profile(p, {30.0, 16385}, BoundaryPolicy::Allow);
    const Profile back = conjugate_profile(g, {2.0, 4097}, BoundaryPolicy::Allow);
    CHECK(back.is_convex(1e-9));
    CHECK_FALSE(p.is_convex(1e-9));
    for (int i = 0; i < back.size(); ++i) {
        const double t = back.t(i);
        CHECK(back.values[i] <= f(t) + 1e-6);
        if (std::abs(t) < 0.7) CHECK(back.values[i] == doctest::Approx(-0.25).epsilon(1e-5));
        if (std::abs(t) > 0.72) CHECK(back.values[i] == doctest::Approx(f(t)).epsilon(1e-5));
    }
}

TEST_CASE("conjugation reverses order and scales") {
    const auto f = [](double t) { return 0.5 * t * t; };
    const auto h = [](double t) { return 0.5 * t * t + 0.1 * std::pow(std::abs(t), 3.0); };
    const Profile pf = Profile::sample(4.0, 8193, f), ph = Profile::sample(4.0, 8193, h);
    const Profile gf = conjugate_profile(pf, {2.0, 401}), gh = conjugate_profile(ph, {2.0, 401});
    for (int i = 0; i < gf.size(); ++i) CHECK(gf.values[i] >= gh.values[i]);

    const double lambda = 2.5;
    const Profile pl = Profile::sample(4.0, 8193, [&](double t) { return lambda * h(t); });
    const ConvexMinorant hh(ph), hl(pl);
    for (double s : {-3.0, -1.0, 0.0, 0.7, 2.0, 4.0})
        CHECK(hl.conjugate_at(s).value == doctest::Approx(lambda * hh.conjugate_at(s / lambda).value).epsilon(1e-9));
}

TEST_CASE("polar of catalog integrands") {
    const PolarSpec half = polar(IntegrandSpec::quadratic(0.5));
    for (double r : {0.0, 0.3, 1.0, 4.0}) CHECK(half.conjugate(MatrixPoint::row({r, -r})) == doctest::Approx(r * r).epsilon(1e-9));

    CHECK(polar_c3(1.0, 2.0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(polar_c4(1.0, 2.0) == doctest::Approx(0.25).epsilon(1e-15));

    const PolarSpec pq = polar(IntegrandSpec::radial_pq_sum(2.0, 4.0));
    CHECK(pq.q_prime == doctest::Approx(4.0 / 3.0));
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    for (int t = 0; t < 1000; ++t) {
        const MatrixPoint z = MatrixPoint::row({u(rng), u(rng)});
        const double r = z.norm(), fs = pq.conjugate(z);
        CHECK(fs >= pq.c3 * std::pow(r, pq.q_prime) - pq.c2 - 1e-9);
        CHECK(fs <= pq.c4 * std::pow(r, pq.p_prime) + pq.c2 + 1e-9);
    }
}

TEST_CASE("separable polar is the sum of column conjugates") {
    const IntegrandSpec spec = IntegrandSpec::separable({1.0, 1.0}, {1.0, 0.0}, {3.0, 3.0});
    const PolarSpec ps = polar(spec);
    CHECK(ps.separable);
    const PowerSumProfile c0 = spec.profile(0), c1 = spec.profile(1);
    for (double a : {-2.0, 0.5, 3.0})
        for (double b : {-1.0, 0.0, 2.0})
            CHECK(ps.conjugate(MatrixPoint::row({a, b})) == doctest::Approx(c0.conjugate(a) + c1.conjugate(b)).epsilon(1e-10));
    // Column 1 is |t|^2: conjugate s^2/4.
    CHECK(c1.conjugate(2.0) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("Young gap") {
    const IntegrandSpec half = IntegrandSpec::quadratic(0.5);
    CHECK(std::abs(young_gap(half, MatrixPoint::row({1.0, 0.0}), MatrixPoint::row({1.0, 0.0}))) <= 1e-12);
    CHECK(young_gap(half, MatrixPoint::row({1.0, 0.0}), MatrixPoint::row({0.0, 0.0})) == doctest::Approx(0.5).epsilon(1e-12));

    std::mt19937_64 rng(22);
    std::normal_distribution<double> d(0.0, 2.0);
    for (const auto& spec : {IntegrandSpec::radial_pq_sum(2.0, 4.0), IntegrandSpec::radial_power(1.5, 1.0, 0.2),
                             IntegrandSpec::separable({1.0, 1.0}, {1.0, 0.0}, {3.0, 3.0})}) {
        for (int t = 0; t < 1000; ++t) {
            const MatrixPoint x = MatrixPoint::row({d(rng), d(rng)}), z = MatrixPoint::row({d(rng), d(rng)});
            CHECK(young_gap(spec, x, z) >= -1e-8);
        }
        for (int t = 0; t < 100; ++t) {
            const MatrixPoint x = MatrixPoint::row({d(rng), d(rng)});
            const auto vd = evaluate_with_derivative(spec, x);
            CHECK(std::abs(young_gap(spec, x, vd.derivative)) <= 1e-8 * (1.0 + vd.value));
        }
    }
}

TEST_CASE("gradient inverse check") {
    CHECK(inverse_gradient_check(IntegrandSpec::quadratic(), MatrixPoint::row({0.7, -0.2})) <= 1e-8);
    CHECK(inverse_gradient_check(IntegrandSpec::radial_power(3.0, 1.0 / 3.0), MatrixPoint::row({1.0, 0.0})) <= 1e-5);
    CHECK(inverse_gradient_check(IntegrandSpec::radial_power(1.5), MatrixPoint::row({1e-3, 0.0})) <= 1e-4);
    CHECK(inverse_gradient_check(IntegrandSpec::radial_power(1.5), MatrixPoint::row({0.0, 0.0})) <= 1e-4);
}
