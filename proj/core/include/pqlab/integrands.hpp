#pragma once
/**
 * @file integrands.hpp
 * @brief Catalogued convex integrands F : R^{N x n} -> R with (p,q) growth,
 *        the auxiliary maps <xi> and V_{p,mu}, and randomized hypothesis checks.
 *
 * Every catalog entry is a sum of radial profiles over blocks of the matrix:
 * one block holding all entries (radial kinds) or one block per column
 * (separable kind). Each profile is f(t) = sum_i c_i (mu^2 + t^2)^{e_i / 2}.
 */

#include <nlohmann/json.hpp>

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace pqlab {

struct MatrixPoint {
    int N = 1;
    int n = 2;
    std::vector<double> v; ///< row-major, entry (r, s) at r * n + s

    static MatrixPoint zeros(int N, int n) { return {N, n, std::vector<double>(static_cast<std::size_t>(N) * n, 0.0)}; }
    static MatrixPoint row(std::vector<double> entries) {
        const int n = static_cast<int>(entries.size());
        return {1, n, std::move(entries)};
    }
    double& operator()(int r, int s) { return v[static_cast<std::size_t>(r) * n + s]; }
    double operator()(int r, int s) const { return v[static_cast<std::size_t>(r) * n + s]; }
    double norm() const;
};

double dot(std::span<const double> a, std::span<const double> b);

/// Even convex profile on t >= 0 with f'(0) = 0.
class ScalarProfile {
public:
    virtual ~ScalarProfile() = default;
    virtual double value(double t) const = 0;
    virtual double derivative(double t) const = 0;
    /// f*(s) = sup_t (s t - f(t)); default solves f'(t) = |s| by a safeguarded monotone root.
    virtual double conjugate(double s) const;
    /// The maximizing t >= 0 for |s|.
    virtual double conjugate_argmax(double s) const;
};

struct PowerTerm {
    double coef;
    double exponent;
};

/// f(t) = sum_i c_i (mu^2 + t^2)^{e_i/2}.
class PowerSumProfile final : public ScalarProfile {
public:
    PowerSumProfile(std::vector<PowerTerm> terms, double mu);
    double value(double t) const override;
    double derivative(double t) const override;
    double conjugate(double s) const override;
    const std::vector<PowerTerm>& terms() const { return terms_; }
    double mu() const { return mu_; }
    /// True when f = c t^e exactly (one term, mu = 0), which has a closed-form conjugate.
    bool pure_power() const { return terms_.size() == 1 && mu_ == 0.0; }

private:
    std::vector<PowerTerm> terms_;
    double mu_;
};

/// Integrand evaluated on a row-major N x n matrix.
class Integrand {
public:
    virtual ~Integrand() = default;
    virtual int N() const = 0;
    virtual int n() const = 0;
    /// Returns F(xi); writes F'(xi) into grad when grad is non-empty.
    virtual double value_and_gradient(std::span<const double> xi, std::span<double> grad) const = 0;
    double value(std::span<const double> xi) const { return value_and_gradient(xi, {}); }
    /// Pointwise polar F*(zeta).
    virtual double conjugate(std::span<const double> zeta) const = 0;
};

/// F(xi) = sum_j f_j(|block_j(xi)|), blocks = whole matrix or columns.
class BlockIntegrand final : public Integrand {
public:
    BlockIntegrand(int N, int n, bool by_column, std::vector<std::shared_ptr<const ScalarProfile>> profiles);
    int N() const override { return N_; }
    int n() const override { return n_; }
    double value_and_gradient(std::span<const double> xi, std::span<double> grad) const override;
    double conjugate(std::span<const double> zeta) const override;
    bool by_column() const { return by_column_; }
    const std::vector<std::shared_ptr<const ScalarProfile>>& profiles() const { return profiles_; }

private:
    int N_, n_;
    bool by_column_;
    std::vector<std::shared_ptr<const ScalarProfile>> profiles_;
};

enum class IntegrandKind { RadialPower, RadialPqSum, SeparableAnisotropic, Quadratic };

std::string to_string(IntegrandKind k);
IntegrandKind kind_from_string(const std::string& s);

struct IntegrandSpec {
    IntegrandKind kind = IntegrandKind::Quadratic;
    double p = 2.0;
    double q = 2.0;
    double ell = 1.0;
    double L = 1.0;
    double mu = 0.0;
    double coef = 1.0;              ///< radial-power: coef <xi>^p
    double a = 1.0;                 ///< radial-pq-sum a <xi>^p + b <xi>^q; quadratic a |xi|^2
    double b = 1.0;
    std::vector<double> col_a;      ///< separable: column j gets a_j <c_j>^2 + b_j <c_j>^{e_j}
    std::vector<double> col_b;
    std::vector<double> col_e;

    /// Factories set ell and L to the certified catalog values.
    static IntegrandSpec radial_power(double p, double coef = 1.0, double mu = 0.0);
    static IntegrandSpec radial_pq_sum(double p, double q, double a = 1.0, double b = 1.0, double mu = 0.0);
    static IntegrandSpec quadratic(double a = 1.0);
    static IntegrandSpec separable(std::vector<double> a, std::vector<double> b, std::vector<double> e, double mu = 0.0);

    /// Largest ell for which F - ell <.>^p is convex by construction.
    double certified_ell() const;
    /// An L with F <= L (|xi|^q + 1).
    double certified_L() const;

    /// Throws DomainError with the offending field. With `certified`, also enforces ell <= certified_ell().
    void validate(bool certified = true) const;

    bool radial() const { return kind != IntegrandKind::SeparableAnisotropic; }
    /// Column count required by a separable spec, 0 for radial kinds.
    int columns() const { return kind == IntegrandKind::SeparableAnisotropic ? static_cast<int>(col_a.size()) : 0; }
    /// Profile of the whole matrix (radial) or of column j (separable).
    PowerSumProfile profile(int column = 0) const;
};

/// F(xi) and F'(xi) for a catalog spec.
struct ValueDerivative {
    double value;
    MatrixPoint derivative;
};
ValueDerivative evaluate_with_derivative(const IntegrandSpec& spec, const MatrixPoint& xi);

/// Integrand object for N x n matrices. Separable specs require n == columns().
std::shared_ptr<const BlockIntegrand> make_integrand(const IntegrandSpec& spec, int N, int n);

/// <xi>_mu = (mu^2 + |xi|^2)^{1/2}.
double bracket(const MatrixPoint& xi, double mu);

/// V_{p,mu}(xi) = (mu^2 + |xi|^2)^{(p-2)/4} xi.
MatrixPoint v_function(const MatrixPoint& xi, double p, double mu);
void v_function(std::span<const double> xi, double p, double mu, std::span<double> out);

/// Constants with c1 |xi|^p - c2 <= F <= c2 (|xi|^q + 1), 0 < c1 <= c2.
struct GrowthConstants {
    double c1;
    double c2;
};
GrowthConstants growth_constants(const IntegrandSpec& spec);

/// Smallest c with (1/c) t^p - c <= value <= c (t^q + 1) over the given samples.
double envelope_constant(std::span<const double> t, std::span<const double> value, double p, double q);

struct HypothesisReport {
    double h1_margin = 0.0;             ///< max F / (|xi|^q + 1)
    bool h1_ok = true;                  ///< h1_margin <= L
    double h2_midpoint_violation = 0.0; ///< worst positive midpoint defect of F - ell <.>^p
    bool h2_flagged = false;            ///< some defect exceeded 1e-9 (1 + scale)
    double h2pp_ratio_min = 0.0;        ///< min monotonicity ratio
    double lipschitz_margin = 0.0;      ///< max |F'| / (2^q L (|xi|^{q-1} + 1))
    double envelope_c = 0.0;            ///< measured constant of the (p,q) envelope
    double envelope_lower_margin = 0.0; ///< min F - ((1/c)|xi|^p - c)
    double envelope_upper_margin = 0.0; ///< min c (|xi|^q + 1) - F
    double v_sandwich_ratio_min = 0.0;  ///< min of |V(xi)-V(eta)|^2 / |xi-eta|^2 / bracket
    double v_sandwich_ratio_max = 0.0;
    double v_sandwich_constant = 0.0;   ///< max(ratio_max, 1 / ratio_min)
    double v_sandwich_mu = 0.0;         ///< mu used for the V checks (clamped to [0,1])
    double bregman_v_constant = 0.0;    ///< min Bregman of (ell/2)|.|^p over |V_{p,0}(xi) - V_{p,0}(eta)|^2
    int sample_count = 0;
    std::uint64_t seed = 0;
};

/// Randomized check of the growth, convexity and monotonicity hypotheses.
/// Samples are Gaussian with scales {0.1, 1, 10} and sphere shells of radius {0.5, 1, 2, 5}, cycled.
HypothesisReport check_hypotheses(const IntegrandSpec& spec, int sample_count, std::uint64_t seed, int N = 1, int n = 2);

nlohmann::json to_json(const IntegrandSpec& spec);
IntegrandSpec spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const HypothesisReport& r);

} // namespace pqlab
