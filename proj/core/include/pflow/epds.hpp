#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "pflow/flow.hpp"
#include "pflow/network.hpp"
#include "pflow/solver.hpp"

namespace pflow {

/// Radial feeder prepared for sweeping: active branches oriented away from
/// the slack and ordered so that each sender is fed by an earlier branch.
/// Indices are dense bus indices; `branch` maps back to the case.
struct BfsOrdering {
    std::vector<std::size_t> sender;
    std::vector<std::size_t> receiver;
    std::vector<Complex> impedance;
    std::vector<std::size_t> branch;
    std::size_t bus_count = 0;

    std::size_t size() const { return sender.size(); }
};

/// Throws TopologyError if the active branches are not a spanning tree.
BfsOrdering make_bfs_ordering(const NetworkCase& net);

/// Per-bus complex demand S_D = (pd - pg) + j (qd - qg), dense order.
std::vector<Complex> bus_demands(const NetworkCase& net);

// --- State vector ---------------------------------------------------------
// x has 2(n-1) entries: x[2(k-1)] = Re V_k, x[2(k-1)+1] = Im V_k for the load
// buses k = 1..n-1 (dense order). The slack voltage is fixed at v_set.

Vector epds_flat_start(const NetworkCase& net);
Vector epds_state_from_voltages(std::span<const Complex> voltage);
std::vector<Complex> epds_voltages_from_state(const Vector& x, const NetworkCase& net);

// --- Sweep oracle ---------------------------------------------------------

struct SweepResult {
    FlowSolution solution;
    std::size_t sweeps = 0;
    double mismatch = 0.0;  ///< max |S_D - V conj(I_n)| at exit
};

/// Classic backward/forward sweep fixed-point iteration from a flat start.
/// Throws TopologyError for non-radial cases and NumericalError when the
/// iteration does not reach `tol` within `max_sweeps`.
SweepResult bfs_sweep_solve(const NetworkCase& net, double tol = 1e-12, std::size_t max_sweeps = 200);

// --- Sweep residual cost --------------------------------------------------

/// h(x) = V_calc - V after one backward/forward pass at the voltages encoded
/// by x. Length n; the slack entry is identically zero. Throws NumericalError
/// on a zero voltage.
std::vector<Complex> bfs_residuals(const Vector& x, const NetworkCase& net, const BfsOrdering& ord);

/// sum_i |h_i(x)|^2
double bfs_cost(const Vector& x, const NetworkCase& net, const BfsOrdering& ord);

/// dh/dx (n x 2(n-1), complex), built by propagating the sensitivity of each
/// real state component through the backward and forward sweeps.
Eigen::MatrixXcd bfs_residual_jacobian(const Vector& x, const NetworkCase& net, const BfsOrdering& ord);

/// 2 sum_i Re(conj(h_i) dh_i/dx)
Vector bfs_cost_gradient(const Vector& x, const NetworkCase& net, const BfsOrdering& ord);

/// Gauss-Newton Hessian product 2 Re(J^H J v).
Vector bfs_gauss_newton_product(const Vector& x, const NetworkCase& net, const BfsOrdering& ord, const Vector& v);

/// Cost, gradient and Gauss-Newton Hessian for the manifold solvers. The
/// returned callbacks capture `net` and `ord` by value.
Objective epds_objective(const NetworkCase& net, const BfsOrdering& ord);

/// Branch currents from one backward sweep at the state's voltages; the
/// solution's voltages are those encoded by x.
FlowSolution epds_solution_from_state(const Vector& x, const NetworkCase& net, const BfsOrdering& ord);

struct EpdsSolveResult {
    FlowSolution solution;
    SolveReport report;
};

/// Defaults tuned for the sweep residual: Armijo steepest descent with a tight
/// gradient tolerance.
SolverConfig epds_default_config();

/// Steepest descent on the Euclidean manifold R^{2(n-1)} from the flat start.
/// Non-convergence is reported through report.termination.
EpdsSolveResult solve_epds(const NetworkCase& net, const SolverConfig& cfg = epds_default_config());

/// Same problem solved with the trust-region method and the Gauss-Newton Hessian.
EpdsSolveResult solve_epds_trust_region(const NetworkCase& net, const SolverConfig& cfg = epds_default_config());

// --- Switching --------------------------------------------------------------

/// Replaces branch statuses with `y` and reorders the active branches away from
/// the slack (inactive ones go last). Throws InputError on a size mismatch and
/// TopologyError when the result is disconnected or not radial.
NetworkCase apply_switch_vector(const NetworkCase& net, std::span<const int> y);

// --- Penalties --------------------------------------------------------------

struct PenaltyConfig {
    double mu = 1.0;
    int p = 2;
    void validate() const;
};

/// sum max(0, g_i)^p + sum |h_i|^p for constraints g <= 0, h = 0.
double penalty_terms(std::span<const double> g_values, std::span<const double> h_values, int p = 2);

/// f + mu * penalty_terms(g, h, p)
double penalized_cost(double f, std::span<const double> g_values, std::span<const double> h_values,
                      const PenaltyConfig& cfg);

// --- Full-model feasibility -----------------------------------------------

/// Largest absolute violation per equation family of the branch-flow model.
struct EpdsResidualReport {
    double active_balance = 0.0;
    double reactive_balance = 0.0;
    double voltage_drop = 0.0;
    double apparent_power = 0.0;
    double current_bounds = 0.0;
    double voltage_bounds = 0.0;

    double max_equality() const;
};

/// Evaluates active/reactive balance, the squared voltage-drop identity
/// V_i^2 - 2(R P + X Q) - Z^2 I^2 - V_j^2, I^2 V_j^2 = P^2 + Q^2, and the
/// current and voltage bounds, with P, Q the power delivered at each branch's
/// receiving end.
EpdsResidualReport validate_epds_solution(const FlowSolution& sol, const NetworkCase& net);

}  // namespace pflow
