#include "oracles/brute_conjugate.hpp"
#include "oracles/simpson.hpp"

#include "pqlab/approximation.hpp"
#include "pqlab/error.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

using namespace pqlab;

namespace {

const RegularizationLevel& pq_level(int k) {
    static std::map<int, RegularizationLevel> cache;
    auto it = cache.find(k);
    if (it == cache.end()) it = cache.emplace(k, build_level(IntegrandSpec::radial_pq_sum(2.0, 4.0), k)).first;
    return it->second;
}

} // namespace

TEST_CASE("kernel normalization") {
    const double mass = oracles::adaptive_simpson([](double t) { return std::abs(t) < 1.0 ? std::exp(1.0 / (t * t - 1.0)) : 0.0; }, -1.0, 1.0);
    CHECK(kernel_mass() == doctest::Approx(mass).epsilon(1e-10));
    CHECK(kernel_mass() == doctest::Approx(0.443994).epsilon(1e-6));
    CHECK(kernel_constant() == doctest::Approx(2.25228).epsilon(1e-5));
    CHECK(kernel_constant() * mass == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("exact schedule") {
    const Schedule s = ladder_schedule(2, Rational(10));
    CHECK(s.delta == Rational(1, 40));
    CHECK(s.mu == Rational(1));
    CHECK_THROWS_AS(ladder_schedule(1, Rational(1)), DomainError);
    for (int k : {4, 8, 16, 32}) {
        const auto& L = pq_level(k);
        for (const auto& b : L.blocks) CHECK(b.delta_exact * b.m_exact * k * k == Rational(1));
        CHECK(L.mu_exact * (k - 1) == Rational(1));
    }
}

TEST_CASE("quadratic G_k is the truncated conjugate") {
    for (int k : {2, 4, 8}) {
        const RegularizationLevel L = build_level(IntegrandSpec::quadratic(), k);
        const LevelProfile& prof = *L.blocks[0].profile;
        const auto closed = [k](double t) { return std::abs(t) <= k ? 0.5 * t * t : k * std::abs(t) - 0.5 * k * k; };
        // Brute-force max over z in [-k, k] of (t z - z^2/2).
        const auto zf = [](double z) { return 0.5 * z * z; };
        for (double t = 0.0; t <= 3.0 * k; t += 0.37) {
            CHECK(prof.G_k(t) == doctest::Approx(closed(t)).epsilon(1e-12));
            CHECK(std::abs(oracles::brute_conjugate(zf, k, 200001, t) - closed(t)) <= 1e-6 * (1.0 + closed(t)));
        }
        const Profile& Gk = L.blocks[0].Gk;
        for (int i = 0; i < Gk.size(); i += 97) CHECK(std::abs(Gk.values[i] - closed(Gk.t(i))) <= 1e-6 * (1.0 + std::abs(closed(Gk.t(i)))));
    }
}

TEST_CASE("mollification sandwich and Lipschitz bound of H_k") {
    for (int k : {4, 16}) {
        const auto& L = pq_level(k);
        const LevelProfile& prof = *L.blocks[0].profile;
        const double m = L.m_k(), delta = L.delta_k();
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<double> u(0.0, 2.0 * L.r_k() + 1.0);
        double prev_t = 0.0, prev_h = prof.H(0.0);
        for (int i = 0; i < 1000; ++i) {
            const double t = u(rng);
            const double H = prof.H(t), M = prof.mollified_H(t);
            CHECK(M >= H - 1e-10 * (1.0 + H));
            CHECK(M <= H + m * delta + 1e-10 * (1.0 + H));
            if (t != prev_t) CHECK(std::abs(H - prof.H(prev_t)) / std::abs(t - prev_t) <= m + 1e-9);
            prev_t = t;
            prev_h = H;
        }
        (void)prev_h;
    }
}

TEST_CASE("F_k minus the p-power part is midpoint convex") {
    for (int k : {4, 32}) {
        const auto F = pq_level(k).integrand(1, 2);
        const auto phi = [&](const std::vector<double>& x) { return F->value(x) - 0.5 * (x[0] * x[0] + x[1] * x[1]); };
        std::mt19937_64 rng(32);
        std::normal_distribution<double> d(0.0, 1.5);
        for (int i = 0; i < 1000; ++i) {
            const std::vector<double> a{d(rng), d(rng)}, b{d(rng), d(rng)}, mid{0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
            CHECK(phi(mid) <= 0.5 * (phi(a) + phi(b)) + 1e-9 * (1.0 + std::abs(phi(a)) + std::abs(phi(b))));
        }
    }
}

TEST_CASE("ladder monotonicity for the pq sum") {
    const std::vector<int> ks{4, 8, 16, 32};
    const auto probes = probe_points(1, 2, 1000, 20240601, 4.0);
    const MonotonicityReport r = ladder_report(IntegrandSpec::radial_pq_sum(2.0, 4.0), ks, probes);
    REQUIRE(r.k == ks);
    for (std::size_t i = 0; i < ks.size(); ++i) {
        CHECK(r.violation_next[i] <= 1e-8 + r.slack[i]);
        CHECK(r.violation_above[i] <= 1e-8 + r.slack[i]);
    }
    for (std::size_t i = 1; i < ks.size(); ++i) {
        CHECK(r.sup_gap[i] < r.sup_gap[i - 1]);
        CHECK(r.derivative_dev[i] <= r.derivative_dev[i - 1]);
    }
}

TEST_CASE("quadratic F_k differs from F by a bounded constant near the origin") {
    for (int k : {4, 8}) {
        const RegularizationLevel L = build_level(IntegrandSpec::quadratic(), k);
        const auto Fk = L.integrand(1, 2);
        const double bound = L.mu_k() + L.m_k() * L.delta_k();
        const double off0 = 0.0 - Fk->value(std::vector<double>{0.0, 0.0});
        CHECK(std::abs(off0) <= bound + 1e-12);
        for (double t = 0.0; t <= 0.5 * L.r_k(); t += 0.05 * L.r_k()) {
            const std::vector<double> x{t * 0.6, t * 0.8};
            const double off = t * t - Fk->value(x);
            CHECK(off == doctest::Approx(off0).epsilon(1e-9));
        }
    }
}

TEST_CASE("uniform growth of the ladder") {
    const auto spec = IntegrandSpec::radial_pq_sum(2.0, 4.0);
    std::vector<double> ts;
    for (double t = 0.0; t <= 6.0; t += 0.05) ts.push_back(t);
    double cmin = INFINITY, cmax = 0.0;
    for (int k : {4, 8, 16, 32}) {
        const auto& prof = *pq_level(k).blocks[0].profile;
        std::vector<double> v;
        for (double t : ts) v.push_back(prof.value(t));
        const double c = envelope_constant(ts, v, spec.p, spec.q);
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
    }
    CHECK(cmax <= 2.0 * cmin);
}

TEST_CASE("sampled r_k agrees with the closed form") {
    for (int k : {4, 8}) {
        const auto& L = pq_level(k);
        CHECK(std::abs(L.blocks[0].r_k_sampled - L.r_k()) <= 2.0 / 1024);
    }
}

TEST_CASE("ladder input validation") {
    CHECK_THROWS_AS(build_level(IntegrandSpec::radial_pq_sum(2.0, 4.0), 1), DomainError);
    const auto probes = probe_points(1, 2, 10, 1, 1.0);
    CHECK_THROWS_AS(ladder_report(IntegrandSpec::radial_pq_sum(2.0, 4.0), {8, 4}, probes), DomainError);
}
