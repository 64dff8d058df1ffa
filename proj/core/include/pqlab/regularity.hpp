#pragma once
// Regularity measurements on discrete solutions: Besov-Nikolskii difference
// quotients, local integrability scans across refinements, the higher-order
// penalty solver, the W^{1,2} estimate of V(Du), and discrete mollification.

#include "pqlab/dirichlet.hpp"
#include "pqlab/exponents.hpp"
#include "pqlab/grid.hpp"
#include "pqlab/integrands.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <vector>

namespace pqlab {

struct BesovEstimate {
    std::vector<int> directions;    // 0-based axes, both signs probed
    std::vector<int> steps;         // multiples of the grid spacing
    std::vector<double> step_lengths;
    double q = 2.0;
    BallRegion ball;
    std::vector<double> integrals;  // max over directions and signs of sum_B |Delta w|^q vol
    double slope = 0.0;             // least squares slope of log integral against log step
    double alpha = 0.0;             // slope / q
    double alpha_used = 0.0;        // alpha used for M
    double seminorm = 0.0;          // M = max_j integral_j / |h_j|^{q alpha_used}
};

/// Nodal quadrature over nodes in the ball. Rejects when dist(B, boundary) <= largest step.
/// Needs >= 4 steps with max/min >= 4. Uses the fitted alpha for M unless `alpha` is given.
BesovEstimate besov_seminorm(const GridField& w, const BallRegion& ball, double q,
                             const std::vector<int>& steps = {1, 2, 4, 8},
                             std::optional<double> alpha = std::nullopt);

/// True when `fine` refines `coarse` by an integer factor on the same box.
bool nested(const Lattice& coarse, const Lattice& fine);

struct ScanRow {
    double h;
    double r;
    double norm;
};

struct ScanTable {
    std::vector<ScanRow> rows;  // grouped by r, one row per level
    std::vector<double> r;
    std::vector<double> slopes; // per r, d log(norm) / d log(1/h)
};

/// Local L^r norms of cell fields across refinements. The cell sum over the
/// discrete ball is rescaled to the exact ball measure so that constant fields
/// give level-independent norms.
ScanTable integrability_scan(const std::vector<GradientField>& levels, const BallRegion& ball,
                             const std::vector<double>& r_list);
ScanTable integrability_scan(const std::vector<DiscreteMinimizer>& solutions, const BallRegion& ball,
                             const std::vector<double>& r_list);

/// Least squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

struct PenaltyConfig {
    int k_order = 2;
    double eps_tilde = 1e-3; // 0 reduces to the plain energy
    double mollify_eps = 0.0; // 0 keeps the base field unsmoothed
    void validate() const;
};

/// (eps/2) sum over ordered k-tuples of axes of |D^k v|^2 vol, at base nodes whose stencil fits.
class PenaltyObjective final : public Objective {
public:
    PenaltyObjective(const Integrand& F, int k_order, double eps_tilde) : F_(F), k_(k_order), eps_(eps_tilde) {}
    double evaluate(const GridField& u, GridField* grad) const override;
    /// sum over ordered tuples of |D^k u|^2 vol.
    double higher_order_energy(const GridField& u) const;

private:
    const Integrand& F_;
    int k_;
    double eps_;
};

struct PenaltyResult {
    DiscreteMinimizer minimizer;
    double f_energy = 0.0;      // sum F(D_h u) vol
    double penalty_share = 0.0; // eps_tilde sum |D^k u|^2 vol
};

PenaltyResult penalty_minimize(const IntegrandSpec& spec, const GridField& base, const PenaltyConfig& cfg,
                               const SolveOptions& opt = {});

/// V(Du) on the lattice of cell centers, with N*n components.
GridField v_field(const GradientField& du, double p, double mu);

struct VFieldTrend {
    std::vector<double> h;
    std::vector<double> seminorm; // ||D_h V(D_h u)||_{L^2(B)}
    std::vector<double> growth;   // seminorm[i+1] / seminorm[i]
};

VFieldTrend vfield_w12_estimate(const std::vector<GridField>& levels, const BallRegion& ball, double p, double mu);

struct CellwiseCheck {
    int cells = 0;
    int violations = 0;
    double max_ratio = 0.0; // max lhs / rhs over cells with rhs > 0
};

/// |D_h V|^2 <= (|p-2|/2 + 1)^2 w |D_h Du|^2 on every cell of the center lattice, with w the
/// extreme of <xi>^{p-2} over the segments joining the cell's forward-difference endpoints.
CellwiseCheck vgradient_check(const GridField& u, double p, double mu);

/// Discrete convolution with the normalized radial bump of radius eps, on the nodes at distance >= eps
/// from the boundary. Requires eps >= 2h.
GridField mollify(const GridField& u, double eps);

nlohmann::json to_json(const BesovEstimate& b);
nlohmann::json to_json(const ScanTable& t);
nlohmann::json to_json(const VFieldTrend& t);

} // namespace pqlab
