#include "pflow/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "pflow/error.hpp"

namespace pflow {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double checked_cost(const Objective& f, const Vector& x) {
    const double c = f.cost(x);
    if (!std::isfinite(c)) throw NumericalError("non-finite cost");
    return c;
}

Vector checked_grad(const Manifold& m, const Objective& f, const Vector& x) {
    Vector g = m.project_tangent(x, f.grad(x));
    if (!g.allFinite()) throw NumericalError("non-finite gradient");
    return g;
}

// Cost at a trial point; failures there are not fatal, they just reject the step.
double trial_cost(const Objective& f, const Vector& x) {
    try {
        const double c = f.cost(x);
        return std::isfinite(c) ? c : std::numeric_limits<double>::infinity();
    } catch (const NumericalError&) {
        return std::numeric_limits<double>::infinity();
    }
}

void check_start(const Manifold& m, const Objective& f, const Vector& x0) {
    if (!f.cost || !f.grad) throw InputError("objective requires cost and gradient callbacks");
    if (static_cast<std::size_t>(x0.size()) != m.ambient_size()) throw InputError("x0 has the wrong dimension");
    if (!m.contains(x0, 1e-8)) throw InputError("x0 does not lie on the manifold");
}

}  // namespace

void SolverConfig::validate() const {
    if (!(grad_tol > 0.0)) throw InputError("grad_tol must be positive");
    if (!(initial_step > 0.0)) throw InputError("initial_step must be positive");
    if (!(contraction > 0.0 && contraction < 1.0)) throw InputError("contraction must lie in (0, 1)");
    if (!(sufficient_decrease > 0.0 && sufficient_decrease < 1.0)) throw InputError("sufficient_decrease must lie in (0, 1)");
    if (max_radius < 0.0 || initial_radius < 0.0) throw InputError("trust-region radii must be non-negative");
    if (!(accept_ratio >= 0.0 && accept_ratio < shrink_ratio && shrink_ratio < expand_ratio && expand_ratio < 1.0)) {
        throw InputError("trust-region ratios must satisfy 0 <= accept < shrink < expand < 1");
    }
    if (!(min_radius > 0.0)) throw InputError("min_radius must be positive");
    if (!(tcg_kappa > 0.0 && tcg_kappa < 1.0) || !(tcg_theta > 0.0)) throw InputError("invalid tCG stopping parameters");
}

const char* to_string(Termination t) {
    switch (t) {
        case Termination::GradTol: return "GradTol";
        case Termination::MaxIters: return "MaxIters";
        case Termination::StepTooSmall: return "StepTooSmall";
        case Termination::TrustRadiusCollapse: return "TrustRadiusCollapse";
    }
    return "?";
}

SolveReport rgd_solve(const Manifold& m, const Objective& f, const Vector& x0, const SolverConfig& cfg) {
    cfg.validate();
    check_start(m, f, x0);
    const auto t0 = Clock::now();

    SolveReport rep;
    Vector x = x0;
    double fx = checked_cost(f, x);
    rep.cost_evaluations = 1;
    double trial = cfg.initial_step;

    while (true) {
        const Vector g = checked_grad(m, f, x);
        const double gn = m.norm(x, g);
        rep.history.push_back({fx, gn, seconds_since(t0)});
        rep.final_grad_norm = gn;

        if (gn < cfg.grad_tol) {
            rep.termination = Termination::GradTol;
            break;
        }
        if (rep.iterations >= cfg.max_iters) {
            rep.termination = Termination::MaxIters;
            break;
        }

        if (cfg.step_rule == StepRule::Fixed) {
            x = m.retract(x, -cfg.initial_step * g);
            fx = checked_cost(f, x);
            ++rep.cost_evaluations;
        } else {
            double step = trial;
            bool backtracked = false;
            bool accepted = false;
            for (std::size_t b = 0; b <= cfg.max_backtracks; ++b) {
                Vector xn = m.retract(x, -step * g);
                const double fn = trial_cost(f, xn);
                ++rep.cost_evaluations;
                if (fn <= fx - cfg.sufficient_decrease * step * gn * gn) {
                    x = std::move(xn);
                    fx = fn;
                    accepted = true;
                    break;
                }
                step *= cfg.contraction;
                backtracked = true;
            }
            if (!accepted) {
                rep.termination = Termination::StepTooSmall;
                break;
            }
            trial = backtracked ? step : 2.0 * step;
        }
        ++rep.iterations;
    }

    rep.final_point = x;
    rep.final_cost = fx;
    return rep;
}

namespace {

struct TcgResult {
    Vector eta;
    Vector h_eta;
    bool hit_boundary = false;
    std::size_t steps = 0;
};

// Steihaug-Toint truncated CG on the model <g, e> + 1/2 <e, H e>, |e| <= radius.
TcgResult truncated_cg(const Manifold& m, const Objective& f, const Vector& x, const Vector& g, double radius,
                       std::size_t max_inner, double kappa, double theta) {
    const auto n = g.size();
    TcgResult out{Vector::Zero(n), Vector::Zero(n)};
    Vector r = g;
    double rr = m.inner(x, r, r);
    const double r0 = std::sqrt(rr);
    Vector delta = -r;

    double e_e = 0.0;  // <eta, eta>
    double e_d = 0.0;  // <eta, delta>
    double d_d = rr;   // <delta, delta>
    const double radius2 = radius * radius;

    for (std::size_t j = 0; j < max_inner; ++j) {
        Vector hd = m.project_tangent(x, f.hess(x, delta));
        if (!hd.allFinite()) throw NumericalError("non-finite Hessian-vector product");
        const double dhd = m.inner(x, delta, hd);
        const double alpha = rr / dhd;
        const double e_e_new = e_e + 2.0 * alpha * e_d + alpha * alpha * d_d;
        ++out.steps;

        if (dhd <= 0.0 || e_e_new >= radius2) {
            const double tau = (-e_d + std::sqrt(e_d * e_d + d_d * (radius2 - e_e))) / d_d;
            out.eta += tau * delta;
            out.h_eta += tau * hd;
            out.hit_boundary = true;
            return out;
        }

        out.eta += alpha * delta;
        out.h_eta += alpha * hd;
        e_e = e_e_new;
        r += alpha * hd;
        r = m.project_tangent(x, r);
        const double rr_new = m.inner(x, r, r);
        if (std::sqrt(rr_new) <= r0 * std::min(std::pow(r0, theta), kappa)) return out;

        const double beta = rr_new / rr;
        rr = rr_new;
        e_d = beta * (e_d + alpha * d_d);
        d_d = rr + beta * beta * d_d;
        delta = -r + beta * delta;
    }
    return out;
}

}  // namespace

SolveReport rtr_solve(const Manifold& m, const Objective& f, const Vector& x0, const SolverConfig& cfg) {
    cfg.validate();
    check_start(m, f, x0);
    if (!f.hess) throw InputError("trust-region solver requires a Hessian-vector callback");
    const auto t0 = Clock::now();

    const double dim = static_cast<double>(m.dim());
    const double max_radius = cfg.max_radius > 0.0 ? cfg.max_radius : std::sqrt(dim);
    double radius = cfg.initial_radius > 0.0 ? std::min(cfg.initial_radius, max_radius) : max_radius / 8.0;
    const std::size_t max_inner = cfg.max_inner_iters > 0 ? cfg.max_inner_iters : m.dim();

    SolveReport rep;
    Vector x = x0;
    double fx = checked_cost(f, x);
    rep.cost_evaluations = 1;
    Vector g = checked_grad(m, f, x);

    while (true) {
        const double gn = m.norm(x, g);
        rep.history.push_back({fx, gn, seconds_since(t0)});
        rep.final_grad_norm = gn;

        if (gn < cfg.grad_tol) {
            rep.termination = Termination::GradTol;
            break;
        }
        if (radius < cfg.min_radius) {
            rep.termination = Termination::TrustRadiusCollapse;
            break;
        }
        if (rep.iterations >= cfg.max_iters) {
            rep.termination = Termination::MaxIters;
            break;
        }

        auto step = truncated_cg(m, f, x, g, radius, max_inner, cfg.tcg_kappa, cfg.tcg_theta);
        rep.inner_iterations += step.steps;

        Vector xp = m.retract(x, step.eta);
        const double fp = trial_cost(f, xp);
        ++rep.cost_evaluations;

        const double model_decrease = -(m.inner(x, g, step.eta) + 0.5 * m.inner(x, step.eta, step.h_eta));
        const double reg = std::max(1.0, std::abs(fx)) * std::numeric_limits<double>::epsilon() * 1e3;
        double rho = (fx - fp + reg) / (model_decrease + reg);
        if (!(model_decrease >= 0.0) || !std::isfinite(fp)) rho = -1.0;

        if (rho < cfg.shrink_ratio) {
            radius *= 0.25;
        } else if (rho > cfg.expand_ratio && step.hit_boundary) {
            radius = std::min(2.0 * radius, max_radius);
        }

        if (rho > cfg.accept_ratio) {
            x = std::move(xp);
            fx = fp;
            g = checked_grad(m, f, x);
        }
        ++rep.iterations;
    }

    rep.final_point = x;
    rep.final_cost = fx;
    return rep;
}

}  // namespace pflow
