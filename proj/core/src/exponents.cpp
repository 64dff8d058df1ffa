#include "pqlab/exponents.hpp"

#include "pqlab/error.hpp"

#include <cmath>
#include <limits>

namespace pqlab {

std::string to_string(Regime r) {
    switch (r) {
    case Regime::FullW1q: return "full W^{1,q}_loc";
    case Regime::BelowPbar: return "W^{1,r}_loc for r < p_bar";
    case Regime::OutOfRange: return "out of range";
    }
    return "unknown";
}

double to_double(const Rational& r) { return r.convert_to<double>(); }
double to_double(const ExtRational& r) { return r ? to_double(*r) : std::numeric_limits<double>::infinity(); }

ExtRational sobolev_conjugate(int n, const Rational& p) {
    if (p < n) return Rational(n) * p / (Rational(n) - p);
    return std::nullopt;
}

ExtRational p_bar(int n, const Rational& p, const Rational& q) {
    const Rational den = Rational(n - 1) - Rational(n) / q;
    if (den <= 0) return std::nullopt;
    return Rational(n) * (p - 1) / den;
}

Rational p_iterate(int n, const Rational& p, const Rational& q, const Rational& prev) {
    return Rational(n) * p / (Rational(n - 1) + Rational(n) * (1 / prev - 1 / q));
}

double ExponentReport::p_bar_value() const { return to_double(p_bar); }

std::vector<double> ExponentReport::trace_values() const {
    std::vector<double> out;
    out.reserve(trace.size());
    for (const auto& r : trace) out.push_back(to_double(r));
    return out;
}

ExponentReport exponent_report(int n, const Rational& p, const Rational& q) {
    if (n < 2) throw DomainError("exponent_report: n must be at least 2");
    if (p <= 1) throw DomainError("p must exceed 1");
    if (q < p) throw DomainError("q must be at least p");

    ExponentReport r;
    r.n = n;
    r.p = p;
    r.q = q;
    const Rational N(n);
    r.p_star = sobolev_conjugate(n, p);
    r.np_over_nminus1 = N * p / (N - 1);
    r.p_bar = p_bar(n, p, q);
    {
        const Rational den = q * (N - 1) - N;
        if (den > 0) r.p_bar_alt = N * q * (p - 1) / den;
    }
    if (q < r.np_over_nminus1) r.regime = Regime::FullW1q;
    else if (!r.p_star || q < *r.p_star) r.regime = Regime::BelowPbar;
    else r.regime = Regime::OutOfRange;

    r.trace.push_back(p);
    const double target = r.p_bar_value();
    for (int j = 1; j <= 200; ++j) {
        if (std::isfinite(target) && std::abs(to_double(r.trace.back()) - target) < 1e-10) break;
        r.trace.push_back(p_iterate(n, p, q, r.trace.back()));
    }

    r.alpha = 1 - N * (1 / p - 1 / q);

    const Rational pn = p * N;
    const Rational a = pn - q * (N - 2);
    if (a != 0) r.theta = (q - p) / (2 * q - p) * pn / a;
    if (a != 0 && q != p) r.d = a / ((q - p) * N);
    const Rational b = pn - q * (N - 1);
    if (b != 0) r.d_prime = a / (2 * b);
    return r;
}

ExponentReport exponent_report(int n, double p, double q) {
    if (!std::isfinite(p) || !std::isfinite(q)) throw DomainError("exponent_report: p and q must be finite");
    return exponent_report(n, Rational(p), Rational(q));
}

namespace {
nlohmann::json ext(const ExtRational& r) {
    if (!r) return "inf";
    return to_double(*r);
}
nlohmann::json opt(const std::optional<Rational>& r) {
    if (!r) return nullptr;
    return to_double(*r);
}
} // namespace

nlohmann::json to_json(const ExponentReport& r) {
    return {{"n", r.n},
            {"p", to_double(r.p)},
            {"q", to_double(r.q)},
            {"p_star", ext(r.p_star)},
            {"np_over_nminus1", to_double(r.np_over_nminus1)},
            {"p_bar", ext(r.p_bar)},
            {"p_bar_alt", ext(r.p_bar_alt)},
            {"regime", to_string(r.regime)},
            {"trace", r.trace_values()},
            {"alpha", to_double(r.alpha)},
            {"theta", opt(r.theta)},
            {"d", opt(r.d)},
            {"d_prime", opt(r.d_prime)}};
}

} // namespace pqlab
