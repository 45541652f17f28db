#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pflow/flow.hpp"
#include "pflow/network.hpp"
#include "pflow/solver.hpp"

namespace pflow {

/// Bus admittance matrix split into real and imaginary parts (dense order).
struct AdmittanceMatrix {
    Eigen::MatrixXd g;
    Eigen::MatrixXd b;
};

/// Pi-model assembly over active branches plus bus shunts.
AdmittanceMatrix build_ybus(const NetworkCase& net);

struct PowerInjection {
    Vector p;
    Vector q;
};

/// Calculated net injections P_k, Q_k at every bus.
PowerInjection calc_pq(const Vector& vm, const Vector& va, const AdmittanceMatrix& y);

/// Partial derivatives of P and Q with respect to every angle and magnitude
/// (n x n each). Diagonal entries are written in a form that stays valid at
/// zero voltage.
struct PowerDerivatives {
    Eigen::MatrixXd dp_dva, dp_dvm, dq_dva, dq_dvm;
};
PowerDerivatives power_derivatives(const Vector& vm, const Vector& va, const AdmittanceMatrix& y);

// --- Reference solvers ------------------------------------------------------

/// Answer of a classical solver. Iterative methods count mismatch
/// evaluations; decoupled methods count P-theta and Q-V solves separately.
struct ClassicResult {
    FlowSolution solution;
    std::size_t iterations = 0;
    std::size_t p_iterations = 0;
    std::size_t q_iterations = 0;
    bool decoupled = false;
    bool iterative = true;
    double mismatch = 0.0;

    /// "3", "4 Pθ and 4 QV" or "-" for non-iterative methods.
    std::string iteration_label() const;
};

/// Full Newton-Raphson on (theta at PV/PQ, |V| at PQ) from a flat start.
/// Throws NumericalError on a singular Jacobian or when `max_iters`
/// evaluations pass without reaching `tol`.
ClassicResult newton_raphson_solve(const NetworkCase& net, double tol = 1e-3, std::size_t max_iters = 30);

/// Iterations of one P-theta and one Q-V half step, with the H and L blocks
/// re-evaluated on every half step. Both counts therefore agree.
ClassicResult decoupled_solve(const NetworkCase& net, double tol = 1e-3, std::size_t max_iters = 30);

struct FastDecoupledOptions {
    /// Whether bus shunts enter B''. Line charging always does.
    bool bus_shunts_in_bpp = true;
};

/// XB fast-decoupled scheme: B' from 1/x, B'' = -Im(Y) on PQ buses.
ClassicResult fast_decoupled_solve(const NetworkCase& net, double tol = 1e-3, std::size_t max_iters = 30,
                                   FastDecoupledOptions opts = {});

/// Non-iterative DC flow, theta = B'^{-1} P. Magnitudes are not computed.
ClassicResult dc_solve(const NetworkCase& net);

/// DC flow with one loss-feedback pass: each branch loss r/(r^2+x^2) dtheta^2
/// is split evenly between its terminals as extra demand and the angles are
/// solved again.
ClassicResult dc_losses_solve(const NetworkCase& net);

// --- Mismatch cost on R^{2n} -------------------------------------------------
// x = [theta_PV, theta_PQ, |V|_PQ, P_slack, Q_slack, Q_PV], buses in dense
// order within each group.

struct EptsLayout {
    std::vector<std::size_t> pv;
    std::vector<std::size_t> pq;
    std::size_t bus_count = 0;

    explicit EptsLayout(const NetworkCase& net);
    std::size_t state_size() const { return 2 * bus_count; }
};

struct EptsVariables {
    Vector vm;
    Vector va;
    double p_slack = 0.0;
    double q_slack = 0.0;
    Vector q_pv;
};

EptsVariables epts_unpack(const Vector& x, const NetworkCase& net);
Vector epts_pack(const EptsVariables& vars, const NetworkCase& net);
/// Packs a solved FlowSolution, taking closure values from its injections.
Vector epts_state_from_solution(const FlowSolution& sol, const NetworkCase& net);

/// Specified-minus-calculated mismatches: dP at PV and PQ buses, dQ at PQ buses.
Vector epts_mismatches(const Vector& vm, const Vector& va, const NetworkCase& net, const AdmittanceMatrix& y);

/// Mismatches followed by closure residuals var - calc (length 2n).
Vector epts_residuals(const Vector& x, const NetworkCase& net, const AdmittanceMatrix& y);
double epts_cost(const Vector& x, const NetworkCase& net, const AdmittanceMatrix& y);
Eigen::MatrixXd epts_jacobian(const Vector& x, const NetworkCase& net, const AdmittanceMatrix& y);
/// 2 J^T h
Vector epts_gradient(const Vector& x, const NetworkCase& net, const AdmittanceMatrix& y);

enum class HessianMode {
    GaussNewton,       ///< 2 J^T J v
    FiniteDifference,  ///< central difference of the gradient
};

Objective epts_objective(const NetworkCase& net, HessianMode mode = HessianMode::GaussNewton);

FlowSolution epts_solution_from_state(const Vector& x, const NetworkCase& net);

struct EptsSolveResult {
    FlowSolution solution;
    SolveReport report;
};

SolverConfig epts_default_config();

/// Trust-region solve from the zero vector.
EptsSolveResult solve_epts(const NetworkCase& net, const SolverConfig& cfg = epts_default_config(),
                           HessianMode mode = HessianMode::GaussNewton);

/// Same cost minimized by steepest descent.
EptsSolveResult solve_epts_steepest(const NetworkCase& net, const SolverConfig& cfg = epts_default_config());

}  // namespace pflow
