#pragma once
// Exponent calculus for (p,q) growth: Sobolev conjugate, the higher-integrability
// exponent p_bar and its iteration, the Besov order alpha, and the interpolation
// exponents theta, d, d'. Everything is computed in exact rationals; a double input
// converts exactly. An empty optional stands for +infinity.

#include "pqlab/approximation.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace pqlab {

using ExtRational = std::optional<Rational>;

enum class Regime { FullW1q, BelowPbar, OutOfRange };
std::string to_string(Regime r);

struct ExponentReport {
    int n = 2;
    Rational p, q;
    ExtRational p_star;          // np/(n-p) for p < n
    Rational np_over_nminus1;
    ExtRational p_bar;           // n(p-1) / (n-1-n/q)
    ExtRational p_bar_alt;       // nq(p-1) / (q(n-1)-n)
    Regime regime = Regime::FullW1q;
    std::vector<Rational> trace; // p_0 = p, p_j = np / (n-1 + n(1/p_{j-1} - 1/q))
    Rational alpha;              // 1 - n(1/p - 1/q)
    std::optional<Rational> theta, d, d_prime;

    double p_bar_value() const;  // +inf when unbounded
    std::vector<double> trace_values() const;
};

/// Throws DomainError when n < 2, p <= 1 or q < p.
ExponentReport exponent_report(int n, double p, double q);
ExponentReport exponent_report(int n, const Rational& p, const Rational& q);

/// Closed forms used by the report, exposed for sampling.
ExtRational sobolev_conjugate(int n, const Rational& p);
ExtRational p_bar(int n, const Rational& p, const Rational& q);
Rational p_iterate(int n, const Rational& p, const Rational& q, const Rational& prev);

double to_double(const Rational& r);
double to_double(const ExtRational& r);

nlohmann::json to_json(const ExponentReport& r);

} // namespace pqlab
