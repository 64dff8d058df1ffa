#pragma once
/**
 * @file approximation.hpp
 * @brief Regularization ladder F_k built from truncated conjugates.
 *
 * For each block profile f (whole matrix or one column) with G = f - (ell/2) t^p:
 *   G_k(t)   = max_{|z| <= k} (t z - G*(z))    (clamp form: g(t) if |g'(t)| <= k, else k|t| - G*(k))
 *   G~_k     = max(G_k, t^p / c - c)
 *   H_k      = G~_k on |t| <= r_k, tangent line of the coercive branch beyond
 *   F_k      = (phi_delta * H_k) - mu_k + (ell/2) |t|^p,  delta = 1/(k^2 m_k), mu_k = 1/(k-1)
 * All stages act on even 1D profiles; the matrix integrand is the radial or column lift.
 */

#include "pqlab/integrands.hpp"
#include "pqlab/legendre.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <memory>
#include <vector>

namespace pqlab {

using Rational = boost::multiprecision::cpp_rational;

/// Exact schedule delta = 1/(k^2 m), mu = 1/(k-1).
struct Schedule {
    Rational delta;
    Rational mu;
};
Schedule ladder_schedule(int k, const Rational& m);

/// int_{-1}^{1} exp(1/(t^2-1)) dt by adaptive Gauss-Kronrod.
double kernel_mass();
/// c_Phi = 1 / kernel_mass().
double kernel_constant();

struct LadderOptions {
    int profile_m = (1 << 16) + 1; ///< samples of the sampled pipeline profiles
    double scan_step = 1.0 / 1024; ///< grid step of the r_k scan
    bool sampled_pipeline = true;  ///< also build the sampled G, G*, G_k, G~_k, H_k, F_k profiles
};

/// Constants and closed-form pieces for one block.
struct BlockConstants {
    double p = 2.0;
    double ell = 1.0;
    double c = 1.0;       ///< envelope constant of G
    int k = 2;
    double t_k = 0.0;     ///< g'(t_k) = k
    double gstar_k = 0.0; ///< G*(k)
    double t_cross = 0.0; ///< kink of G~_k, where the coercive branch takes over
    double r_k = 0.0;
    double m_k = 0.0;
    double delta = 0.0;
    double mu = 0.0;
};

/// F_k of one block as an even profile.
class LevelProfile final : public ScalarProfile {
public:
    LevelProfile(std::shared_ptr<const ScalarProfile> f, BlockConstants bc);

    double value(double t) const override;
    double derivative(double t) const override;

    double g(double t) const;
    double g_derivative(double t) const;
    double G_k(double t) const;
    double G_tilde(double t) const;
    double H(double t) const;
    double H_derivative(double t) const;
    double coercive(double t) const;
    /// (phi_delta * H)(t) by the 33-point rule.
    double mollified_H(double t) const;
    double mollified_H_derivative(double t) const;

    const BlockConstants& constants() const { return bc_; }
    const ScalarProfile& base() const { return *f_; }

private:
    template <class Fn> double convolve(double t, Fn&& fn) const;
    std::shared_ptr<const ScalarProfile> f_;
    BlockConstants bc_;
};

struct LevelBlock {
    BlockConstants constants;
    Rational m_exact;
    Rational delta_exact;
    std::shared_ptr<const LevelProfile> profile;
    double r_k_sampled = 0.0; ///< r_k found by scanning the sampled G~_k profile
    Profile G, Gstar, Gk, Gtilde, H, Fk;
};

struct RegularizationLevel {
    IntegrandSpec spec;
    int k = 2;
    Rational mu_exact;
    std::vector<LevelBlock> blocks; ///< one per radial spec, one per column for separable specs

    double mu_k() const { return blocks.front().constants.mu; }
    double m_k() const { return blocks.front().constants.m_k; }
    double r_k() const { return blocks.front().constants.r_k; }
    double delta_k() const { return blocks.front().constants.delta; }
    double c() const { return blocks.front().constants.c; }
    /// Largest m_k delta_k over blocks, summed for separable specs.
    double mollification_slack() const;
    /// Total constant offset sum over blocks of mu_k.
    double offset() const;

    std::shared_ptr<const BlockIntegrand> integrand(int N, int n) const;
};

/// Builds F_k. Throws DomainError naming the stage if an intermediate is not convex.
RegularizationLevel build_level(const IntegrandSpec& spec, int k, const LadderOptions& opt = {});

/// Envelope constant of G = f - (ell/2) t^p measured on a fixed radius set.
double g_envelope_constant(const ScalarProfile& f, double ell, double p, double q);

struct MonotonicityReport {
    std::vector<int> k;
    std::vector<double> violation_next;  ///< max (F_k - F_{k+1})^+ over probes (last entry: 0)
    std::vector<double> violation_above; ///< max (F_k - F)^+ over probes
    std::vector<double> sup_gap;         ///< max (F - F_k) over probes with |xi| <= 2
    std::vector<double> derivative_dev;  ///< max |F_k' - F'| over probes with |xi| <= 2
    std::vector<double> slack;           ///< m_k delta_k allowance
};

/// Probe matrices with radii uniform on [0, radius] and Gaussian directions.
std::vector<MatrixPoint> probe_points(int N, int n, int count, std::uint64_t seed, double radius);

MonotonicityReport ladder_report(const IntegrandSpec& spec, const std::vector<int>& k_list,
                                 const std::vector<MatrixPoint>& probes, const LadderOptions& opt = {});

nlohmann::json to_json(const RegularizationLevel& level);
nlohmann::json to_json(const MonotonicityReport& r);

} // namespace pqlab
