#pragma once
/**
 * @file dirichlet.hpp
 * @brief Discrete Dirichlet problem: minimize sum_cells F(D_h v) vol over fields pinned to g on the boundary.
 *
 * The Euler-Lagrange residual is measured as (sum_interior vol |D^T sigma|^2)^{1/2} with
 * sigma = F'(D_h u), i.e. the nodal energy gradient divided by the cell volume in the discrete L^2 norm.
 */

#include "pqlab/approximation.hpp"
#include "pqlab/grid.hpp"
#include "pqlab/integrands.hpp"

#include <functional>
#include <iosfwd>
#include <vector>

namespace pqlab {

/// A smooth objective over nodal fields on a fixed lattice.
class Objective {
public:
    virtual ~Objective() = default;
    /// Returns the objective; fills the nodal gradient (all nodes) when grad is non-null.
    virtual double evaluate(const GridField& u, GridField* grad) const = 0;
};

/// sum_cells F(D_h u) vol with fixed cell order and compensated summation.
class IntegralObjective final : public Objective {
public:
    explicit IntegralObjective(const Integrand& F) : F_(F) {}
    double evaluate(const GridField& u, GridField* grad) const override;

private:
    const Integrand& F_;
};

/// Energy sum_cells F(D_h u) vol. Throws NumericError naming the cell if an intermediate is not finite.
double energy(const Integrand& F, const GridField& u);

/// EL residual of the integral energy at u.
double el_residual(const Integrand& F, const GridField& u);

/// Norm of a nodal gradient restricted to interior nodes: (sum grad_i^2 / vol)^{1/2}.
double interior_residual(const GridField& grad);

/// Boundary values of g, interior by the discrete harmonic extension (CG on the 5-point Laplacian).
GridField harmonic_extension(const GridField& g);

enum class StartKind { Harmonic, Zero, Given };

struct SolveOptions {
    double tol_el_rel = 1e-8; ///< tol_EL = tol_el_rel (1 + |E|)
    double tol_e = 1e-12;     ///< relative energy decrease per iteration at convergence
    int max_iter = 20000;
    int memory = 10;
    StartKind start = StartKind::Harmonic;
    const GridField* initial = nullptr; ///< used with StartKind::Given; its boundary is overwritten by g
    std::ostream* log = nullptr;        ///< JSON lines (iteration, energy, residual)
};

struct DiscreteMinimizer {
    GridField u;
    double energy = 0.0;
    double el_residual = 0.0;
    double tol_el = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> energy_history; ///< energy after every accepted step, starting with the initial iterate
};

/// L-BFGS with Barzilai-Borwein initial scaling and backtracking; boundary nodes stay equal to g.
DiscreteMinimizer minimize_objective(const Objective& obj, const GridField& g, const SolveOptions& opt = {});

DiscreteMinimizer minimize(const Integrand& F, const GridField& g, const SolveOptions& opt = {});
DiscreteMinimizer minimize(const Integrand& F, const std::function<double(const Point&, int)>& g, const Lattice& lat,
                           const SolveOptions& opt = {});

/// (||u - v||_p^p + ||Du - Dv||_p^p)^{1/p} with nodal and cell quadrature over the whole lattice.
double w1p_distance(const GridField& u, const GridField& v, double p);

/// sum_cells |V_{p,mu}(Du) - V_{p,mu}(Dv)|^2 vol.
double v_distance(const GradientField& du, const GradientField& dv, double p, double mu);

struct LadderSolution {
    DiscreteMinimizer reference;
    std::vector<int> k;
    std::vector<DiscreteMinimizer> solutions;
    std::vector<double> energies;      ///< int F_k(Du_k)
    std::vector<double> v_distances;   ///< int |V(Du_ref) - V(Du_k)|^2 with V = V_{p,0}
    std::vector<double> w1p_distances; ///< W^{1,p} distance to the reference
    std::vector<double> level_gaps;    ///< int F_k(Du_ref) - int F_k(Du_k)
    bool converged = false;            ///< every member converged
    bool energies_nondecreasing = false;
};

LadderSolution solve_ladder(const IntegrandSpec& spec, const GridField& g, const std::vector<int>& k_list,
                            const SolveOptions& opt = {}, const LadderOptions& lopt = {});

nlohmann::json to_json(const DiscreteMinimizer& m);

} // namespace pqlab
