#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pflow/manifold.hpp"

namespace pflow {

/// Callbacks describing a smooth cost on a manifold. `grad` returns the
/// Riemannian gradient and `hess` the Riemannian Hessian applied to a tangent
/// vector; both are projected onto the tangent space by the solvers. `hess` is
/// only needed by rtr_solve. Callbacks must be pure.
struct Objective {
    std::function<double(const Vector&)> cost;
    std::function<Vector(const Vector&)> grad;
    std::function<Vector(const Vector&, const Vector&)> hess;
};

enum class StepRule {
    Armijo,  ///< backtracking with sufficient decrease
    Fixed,   ///< constant step, no cost test
};

struct SolverConfig {
    std::size_t max_iters = 1000;
    double grad_tol = 1e-6;

    // Steepest descent
    StepRule step_rule = StepRule::Armijo;
    double initial_step = 1.0;
    double contraction = 0.5;
    double sufficient_decrease = 1e-4;
    std::size_t max_backtracks = 40;

    // Trust region. Non-positive radii are replaced by sqrt(dim) and max/8.
    double max_radius = 0.0;
    double initial_radius = 0.0;
    double accept_ratio = 0.1;
    double shrink_ratio = 0.25;
    double expand_ratio = 0.75;
    double min_radius = 1e-12;
    std::size_t max_inner_iters = 0;  ///< 0 means the manifold dimension
    double tcg_kappa = 0.1;
    double tcg_theta = 1.0;

    std::optional<std::uint64_t> rng_seed;

    /// Throws InputError when a tolerance or ratio is out of range.
    void validate() const;
};

enum class Termination { GradTol, MaxIters, StepTooSmall, TrustRadiusCollapse };

const char* to_string(Termination t);

struct IterationRecord {
    double cost = 0.0;
    double grad_norm = 0.0;
    double seconds = 0.0;  ///< cumulative wall time since the solve started
};

struct SolveReport {
    Vector final_point;
    double final_cost = 0.0;
    double final_grad_norm = 0.0;
    std::size_t iterations = 0;
    std::vector<IterationRecord> history;  ///< iterations + 1 entries, x0 first
    Termination termination = Termination::MaxIters;
    std::size_t cost_evaluations = 0;
    std::size_t inner_iterations = 0;  ///< total tCG steps (trust region only)

    bool converged() const { return termination == Termination::GradTol; }
};

/// Riemannian steepest descent: x_{k+1} = R_{x_k}(-a_k grad f(x_k)).
///
/// With StepRule::Armijo the trial step starts at the last accepted step
/// (doubled after an iteration that needed no backtracking) and is contracted
/// until f decreases by at least c * a * |grad|^2. Failing that after
/// `max_backtracks` contractions ends the solve with StepTooSmall.
/// Throws NumericalError if the cost or gradient is non-finite.
SolveReport rgd_solve(const Manifold& m, const Objective& f, const Vector& x0, const SolverConfig& cfg);

/// Riemannian trust-region method with a Steihaug-Toint truncated conjugate
/// gradient inner solver.
SolveReport rtr_solve(const Manifold& m, const Objective& f, const Vector& x0, const SolverConfig& cfg);

}  // namespace pflow
