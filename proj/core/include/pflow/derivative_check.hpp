#pragma once

#include <cstdint>
#include <vector>

#include "pflow/manifold.hpp"
#include "pflow/solver.hpp"

namespace pflow {

/// Log-log slope of a Taylor remainder over a list of step sizes.
struct SlopeReport {
    double slope = 0.0;      ///< mean over directions (NaN if every direction was exact)
    double min_slope = 0.0;
    double max_slope = 0.0;
    std::vector<double> per_direction;
    std::vector<double> steps;
    std::vector<std::vector<double>> errors;  ///< errors[direction][step]
    /// True when the remainder stayed at round-off level for every step, i.e.
    /// the model is exact and no slope can be fitted.
    bool exact = false;

    bool within(double lo, double hi) const { return !exact && min_slope >= lo && max_slope <= hi; }
};

/// `count` log-spaced values between 10^lo_exp and 10^hi_exp.
std::vector<double> log_steps(double lo_exp, double hi_exp, std::size_t count);

std::vector<double> default_gradient_steps();  ///< 1e-5 .. 1e-2
std::vector<double> default_hessian_steps();   ///< 1e-4 .. 1e-2

/// For seeded random unit tangents d, fits the slope of
///   e(t) = |f(R_x(t d)) - f(x) - t <grad f(x), d>|
/// against t. A correct gradient gives a slope near 2; a wrong one near 1.
SlopeReport check_gradient(const Manifold& m, const Objective& f, const Vector& x, std::size_t directions = 3,
                           std::vector<double> steps = default_gradient_steps(), std::uint64_t seed = 0);

/// Second-order analogue with
///   e(t) = |f(R_x(t d)) - f(x) - t <g, d> - t^2/2 <H d, d>|.
/// An exact Hessian gives a slope near 3, a missing second-order term near 2.
/// On a curved manifold the test is only meaningful for retractions that are
/// second order, which holds for both manifolds provided here.
SlopeReport check_hessian(const Manifold& m, const Objective& f, const Vector& x, std::size_t directions = 3,
                          std::vector<double> steps = default_hessian_steps(), std::uint64_t seed = 0);

}  // namespace pflow
