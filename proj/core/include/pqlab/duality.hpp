#pragma once
/**
 * @file duality.hpp
 * @brief Dual certificates for discrete minimizers: sigma = F'(D_h u), solenoidal residual,
 *        extremality gaps, dual objective and the L^{q'} bound on sigma.
 */

#include "pqlab/approximation.hpp"
#include "pqlab/grid.hpp"
#include "pqlab/integrands.hpp"

#include <cmath>
#include <iosfwd>
#include <vector>

namespace pqlab {

/// Cellwise sigma = F'(Du). Throws NumericError naming the cell on a non-finite derivative.
GradientField dual_field(const Integrand& F, const GradientField& du);

/// (sum_interior vol |D^T sigma|^2)^{1/2}.
double solenoidal_residual(const GradientField& sigma);

/// Growth data for the L^{q'} bound: F*(zeta) >= c3 |zeta|^{q'} - c2 - shift.
struct PolarBound {
    double q = 2.0;
    double c2 = 1.0;
    double c3 = 0.25;
    double shift = 0.0;
};

struct CertificateOptions {
    double tol_el = 0.0;    ///< solver tolerance folded into tau_cert
    double tau_conj = 1e-9; ///< accuracy of the pointwise polar evaluation
    double scale = 1.0;     ///< tau_cert = 10 tau_conj + 10 tol_el scale
};

struct DualCertificate {
    GradientField sigma;
    std::vector<double> gap_field; ///< F*(sigma) + F(Du) - <sigma, Du> per cell
    double solenoidal_residual = 0.0;
    double extremality_gap_max = 0.0;
    double extremality_gap_mean = 0.0;
    double extremality_gap_min = 0.0;
    double primal_value = 0.0;
    double dual_value = 0.0;
    double duality_gap = 0.0;
    double pairing_residual = 0.0; ///< sum <sigma, D(u - g_h)> vol
    double q_prime = 2.0;
    double qprime_norm = 0.0;      ///< (sum |sigma|^{q'} vol)^{1/q'}
    double qprime_bound = 0.0;     ///< upper bound for qprime_norm^{q'} from the growth data
    double tau_conj = 0.0;
    double tau_cert = 0.0;

    bool weak_duality_ok() const { return dual_value <= primal_value + tau_cert; }
    bool qprime_bound_ok() const { return std::pow(qprime_norm, q_prime) <= qprime_bound; }
};

/// Certificate for u_h pinned to g; g_h is the harmonic extension of g's boundary values.
DualCertificate certificate(const Integrand& F, const PolarBound& bound, const GridField& u_h, const GridField& g,
                            const CertificateOptions& opt = {});
DualCertificate certificate(const IntegrandSpec& spec, const GridField& u_h, const GridField& g,
                            const CertificateOptions& opt = {});
DualCertificate certificate(const RegularizationLevel& level, const GridField& u_h, const GridField& g,
                            const CertificateOptions& opt = {});

PolarBound polar_bound(const IntegrandSpec& spec);

nlohmann::json to_json(const DualCertificate& c);

/// Cell centers and gap values, one row per cell.
void write_gap_csv(std::ostream& os, const Lattice& lat, const std::vector<double>& gap);

} // namespace pqlab
