#pragma once
/**
 * @file legendre.hpp
 * @brief Discrete Legendre-Fenchel transforms of 1D profiles, pointwise polars of
 *        catalog integrands via radial/separable lifts, and conjugacy certificates.
 */

#include "pqlab/integrands.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace pqlab {

/// Samples of a scalar function on the symmetric uniform grid t_i = T (2i - (m-1)) / (m-1).
struct Profile {
    double T = 1.0;
    std::vector<double> values;
    std::string tag;

    static Profile sample(double T, int m, const std::function<double(double)>& f, std::string tag = {});

    int size() const { return static_cast<int>(values.size()); }
    double spacing() const { return 2.0 * T / (size() - 1); }
    double t(int i) const { return T * (2.0 * i - (size() - 1)) / (size() - 1); }

    /// Most negative second difference relative to (1 + max |f|); >= 0 for convex samples.
    double convexity_defect() const;
    bool is_convex(double tol = 1e-9) const { return convexity_defect() >= -tol; }
};

enum class BoundaryPolicy {
    Reject, ///< throw "truncation radius too small" if a sup sits on the primal boundary
    Allow,  ///< keep the boundary value (used for deliberate truncation)
};

struct DualGrid {
    double S;
    int m;
};

/// Lower convex hull of a sampled profile, queried for conjugate values.
class ConvexMinorant {
public:
    explicit ConvexMinorant(const Profile& f);

    struct Hit {
        double value;
        double argmax;
        bool on_boundary;
    };
    /// max_i (s t_i - f_i) by binary search over hull slopes.
    Hit conjugate_at(double s) const;
    double min_slope() const { return slopes_.front(); }
    double max_slope() const { return slopes_.back(); }
    const std::vector<int>& vertices() const { return vertices_; }

private:
    const Profile* f_;
    std::vector<int> vertices_;
    std::vector<double> slopes_;
};

/// g(s) = max over grid t of (s t - f(t)) on the dual grid, by a linear-time merge over hull slopes.
Profile conjugate_profile(const Profile& f, DualGrid grid, BoundaryPolicy policy = BoundaryPolicy::Reject);

/// c3 = c2^{-1/(q-1)} (1 - 1/q) q^{-1/(q-1)}.
double polar_c3(double c2, double q);
/// c4 = c1^{-1/(p-1)} (1 - 1/p) p^{-1/(p-1)}.
double polar_c4(double c1, double p);

struct PolarSpec {
    enum class Representation { ClosedFormPower, PointwiseRoot };
    Representation representation = Representation::PointwiseRoot;
    bool separable = false;
    double p_prime = 2.0;
    double q_prime = 2.0;
    double c1 = 1.0, c2 = 1.0, c3 = 0.25, c4 = 0.25;
    std::shared_ptr<const BlockIntegrand> integrand;

    /// F*(zeta) through the radial or separable lift.
    double conjugate(const MatrixPoint& zeta) const;
};

/// Polar of a catalog spec for N x n matrices, with the growth constants c1..c4.
PolarSpec polar(const IntegrandSpec& spec, int N = 1, int n = 2);

/// F*(zeta) + F(xi) - <zeta, xi>.
double young_gap(const IntegrandSpec& spec, const MatrixPoint& xi, const MatrixPoint& zeta);

struct InverseCheckOptions {
    double T = 4.0;        ///< primal profile half-width; |block| must not exceed T/2
    int m = (1 << 20) + 1; ///< primal samples
};

/// |(F*)'(F'(xi)) - xi| with (F*)' from Richardson-extrapolated central differences of the
/// sampled conjugate of each block profile.
double inverse_gradient_check(const IntegrandSpec& spec, const MatrixPoint& xi, InverseCheckOptions opt = {});

void write_profile_csv(std::ostream& os, const Profile& f);

} // namespace pqlab
