#include "pflow/derivative_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "pflow/error.hpp"

namespace pflow {

std::vector<double> log_steps(double lo_exp, double hi_exp, std::size_t count) {
    std::vector<double> out;
    if (count == 0) return out;
    if (count == 1) return {std::pow(10.0, lo_exp)};
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double e = lo_exp + (hi_exp - lo_exp) * static_cast<double>(i) / static_cast<double>(count - 1);
        out.push_back(std::pow(10.0, e));
    }
    return out;
}

std::vector<double> default_gradient_steps() { return log_steps(-5.0, -2.0, 13); }
std::vector<double> default_hessian_steps() { return log_steps(-4.0, -2.0, 9); }

namespace {

// Least-squares slope of log(e) on log(t), ignoring entries at round-off level.
// Returns NaN when fewer than three usable points remain.
double fit_slope(const std::vector<double>& steps, const std::vector<double>& errors, const std::vector<double>& floor) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (!(errors[i] > floor[i])) continue;
        const double lx = std::log10(steps[i]);
        const double ly = std::log10(errors[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 3) return std::numeric_limits<double>::quiet_NaN();
    const double dn = static_cast<double>(n);
    return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

SlopeReport run_check(const Manifold& m, const Objective& f, const Vector& x, std::size_t directions,
                      std::vector<double> steps, std::uint64_t seed, bool second_order) {
    if (steps.size() < 3) throw InputError("slope check needs at least three step sizes");
    if (directions == 0) throw InputError("slope check needs at least one direction");
    if (second_order && !f.hess) throw InputError("Hessian check requires a Hessian-vector callback");

    std::mt19937_64 rng(seed);
    const double fx = f.cost(x);
    const Vector g = m.project_tangent(x, f.grad(x));
    constexpr double eps = std::numeric_limits<double>::epsilon();

    SlopeReport rep;
    rep.steps = steps;
    rep.min_slope = std::numeric_limits<double>::infinity();
    rep.max_slope = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    std::size_t fitted = 0;

    for (std::size_t k = 0; k < directions; ++k) {
        const Vector d = m.random_tangent(x, rng);
        const double gd = m.inner(x, g, d);
        const double dhd = second_order ? m.inner(x, d, m.project_tangent(x, f.hess(x, d))) : 0.0;

        std::vector<double> err(steps.size()), floor(steps.size());
        for (std::size_t i = 0; i < steps.size(); ++i) {
            const double t = steps[i];
            const double ft = f.cost(m.retract(x, t * d));
            double model = fx + t * gd;
            if (second_order) model += 0.5 * t * t * dhd;
            err[i] = std::abs(ft - model);
            floor[i] = 64.0 * eps * (std::abs(fx) + std::abs(ft) + std::abs(t * gd) + std::abs(0.5 * t * t * dhd));
        }
        const double s = fit_slope(steps, err, floor);
        rep.per_direction.push_back(s);
        rep.errors.push_back(std::move(err));
        if (std::isnan(s)) continue;
        sum += s;
        ++fitted;
        rep.min_slope = std::min(rep.min_slope, s);
        rep.max_slope = std::max(rep.max_slope, s);
    }

    if (fitted == 0) {
        rep.exact = true;
        rep.slope = rep.min_slope = rep.max_slope = std::numeric_limits<double>::quiet_NaN();
    } else {
        rep.slope = sum / static_cast<double>(fitted);
    }
    return rep;
}

}  // namespace

SlopeReport check_gradient(const Manifold& m, const Objective& f, const Vector& x, std::size_t directions,
                           std::vector<double> steps, std::uint64_t seed) {
    return run_check(m, f, x, directions, std::move(steps), seed, false);
}

SlopeReport check_hessian(const Manifold& m, const Objective& f, const Vector& x, std::size_t directions,
                          std::vector<double> steps, std::uint64_t seed) {
    return run_check(m, f, x, directions, std::move(steps), seed, true);
}

}  // namespace pflow
