#include "pflow/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <random>
#include <sstream>

#include "pflow/case_io.hpp"
#include "pflow/derivative_check.hpp"
#include "pflow/epds.hpp"
#include "pflow/epts.hpp"
#include "pflow/error.hpp"
#include "pflow/solution_io.hpp"

#ifndef PFLOW_BUNDLED_DATA_DIR
#define PFLOW_BUNDLED_DATA_DIR ""
#endif

namespace pflow::cli {

namespace fs = std::filesystem;

Family parse_family(const std::string& s) {
    if (s == "epds") return Family::Epds;
    if (s == "epts") return Family::Epts;
    throw InputError("unknown family '" + s + "' (expected epds or epts)");
}

const char* to_string(Family f) { return f == Family::Epds ? "epds" : "epts"; }

const std::vector<std::string>& methods_for(Family f) {
    static const std::vector<std::string> epds{"bfs-sweep", "manifold-sd", "manifold-tr"};
    static const std::vector<std::string> epts{"manifold-sd", "manifold-tr", "nr",        "decoupled",
                                               "fast-decoupled", "dc",        "dc-losses"};
    return f == Family::Epds ? epds : epts;
}

fs::path resolve_case(const fs::path& p) {
    if (fs::exists(p)) return p;
    std::vector<fs::path> dirs;
    if (const char* env = std::getenv("PFLOW_DATA_DIR"); env && *env) dirs.emplace_back(env);
    if (*PFLOW_BUNDLED_DATA_DIR) dirs.emplace_back(PFLOW_BUNDLED_DATA_DIR);
    for (const auto& d : dirs) {
        for (const auto& candidate : {d / p, d / (p.string() + ".json")}) {
            if (fs::exists(candidate)) return candidate;
        }
    }
    throw InputError("case file not found: " + p.string());
}

namespace {

struct MethodOutcome {
    SummaryRow row;
    std::optional<FlowSolution> solution;
    std::optional<SolveReport> report;
    bool converged = false;
};

Family require_family(const RunSpec& spec) {
    if (!spec.family) throw InputError("--family is required");
    return *spec.family;
}

void check_method(Family fam, const std::string& method) {
    const auto& valid = methods_for(fam);
    if (std::find(valid.begin(), valid.end(), method) == valid.end()) {
        throw InputError("method not valid for family: '" + method + "' is not an " + to_string(fam) + " method");
    }
}

SolverConfig solver_config(Family fam, const RunSpec& spec) {
    SolverConfig cfg = fam == Family::Epds ? epds_default_config() : epts_default_config();
    if (spec.tol) cfg.grad_tol = *spec.tol;
    if (spec.max_iters) cfg.max_iters = *spec.max_iters;
    cfg.rng_seed = spec.seed;
    cfg.validate();
    return cfg;
}

MethodOutcome run_method(const NetworkCase& net, Family fam, const std::string& method, const RunSpec& spec) {
    MethodOutcome o;
    o.row.method = method;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        auto manifold = [&](auto&& result) {
            o.solution = std::move(result.solution);
            o.report = std::move(result.report);
            o.converged = o.report->converged();
            o.row.iterations = std::to_string(o.report->iterations);
            o.row.final_cost = o.report->final_cost;
        };
        auto classic = [&](ClassicResult r) {
            o.solution = std::move(r.solution);
            o.converged = true;
            o.row.iterations = r.iteration_label();
        };
        const double tol = spec.tol.value_or(1e-3);
        const std::size_t iters = spec.max_iters.value_or(30);

        if (fam == Family::Epds) {
            if (method == "bfs-sweep") {
                auto r = bfs_sweep_solve(net, spec.tol.value_or(1e-12), spec.max_iters.value_or(200));
                o.solution = std::move(r.solution);
                o.converged = true;
                o.row.iterations = std::to_string(r.sweeps);
            } else if (method == "manifold-sd") {
                manifold(solve_epds(net, solver_config(fam, spec)));
            } else {
                manifold(solve_epds_trust_region(net, solver_config(fam, spec)));
            }
        } else if (method == "manifold-tr") {
            manifold(solve_epts(net, solver_config(fam, spec)));
        } else if (method == "manifold-sd") {
            manifold(solve_epts_steepest(net, solver_config(fam, spec)));
        } else if (method == "nr") {
            classic(newton_raphson_solve(net, tol, iters));
        } else if (method == "decoupled") {
            classic(decoupled_solve(net, tol, iters));
        } else if (method == "fast-decoupled") {
            classic(fast_decoupled_solve(net, tol, iters));
        } else if (method == "dc") {
            classic(dc_solve(net));
        } else {
            classic(dc_losses_solve(net));
        }
        o.row.status = o.converged ? "converged" : std::string("not-converged (") + to_string(o.report->termination) + ")";
        if (o.solution->has_magnitudes || method == "dc-losses") o.row.loss_kw = o.solution->total_loss_kw;
        if (o.solution->has_magnitudes) o.row.v_min = o.solution->v_min;
    } catch (const NumericalError& e) {
        o.converged = false;
        o.row.status = std::string("error: ") + e.what();
    }
    if (spec.record_time) {
        o.row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    return o;
}

// Maps exceptions escaping a command body to exit codes.
template <typename Body>
int guarded(std::ostream& err, Body body) {
    try {
        return body();
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << '\n';
        return kExitNotConverged;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }
}

std::ofstream open_out(const fs::path& dir, const std::string& name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw InputError("cannot write " + (dir / name).string());
    return f;
}

void write_bus_block(std::ostream& os, const std::string& method, const FlowSolution& sol, const NetworkCase& net) {
    for (std::size_t k = 0; k < net.bus_count(); ++k) {
        const Complex v = sol.voltage[k];
        os << csv_cell(method) << ',' << net.bus(k).id << ','
           << (sol.has_magnitudes ? format_number(std::abs(v)) : std::string()) << ','
           << format_number(std::abs(std::arg(v))) << ',' << format_number(sol.p_injection[k]) << ','
           << (sol.has_magnitudes ? format_number(sol.q_injection[k]) : std::string()) << '\n';
    }
}

}  // namespace

int cmd_run(const RunSpec& spec, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const Family fam = require_family(spec);
        if (spec.methods.size() != 1) throw InputError("run takes exactly one --method");
        const std::string& method = spec.methods.front();
        check_method(fam, method);
        const NetworkCase net = load_case(resolve_case(spec.case_path));

        const auto o = run_method(net, fam, method, spec);
        write_summary_header(out);
        write_summary_row(out, o.row);
        if (spec.out_dir) {
            fs::create_directories(*spec.out_dir);
            auto s = open_out(*spec.out_dir, "summary.csv");
            write_summary_header(s);
            write_summary_row(s, o.row);
            if (o.solution) {
                auto b = open_out(*spec.out_dir, "buses.csv");
                write_buses_csv(b, *o.solution, net);
                auto br = open_out(*spec.out_dir, "branches.csv");
                write_branches_csv(br, *o.solution, net);
            }
            if (o.report) {
                auto c = open_out(*spec.out_dir, "convergence.csv");
                write_convergence_csv(c, *o.report, spec.record_time);
            }
        }
        if (!o.converged) {
            err << method << ": " << o.row.status << '\n';
            return kExitNotConverged;
        }
        return kExitOk;
    });
}

int cmd_compare(const RunSpec& spec, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const Family fam = require_family(spec);
        if (spec.methods.empty()) throw InputError("compare needs at least one method");
        for (const auto& m : spec.methods) check_method(fam, m);
        const NetworkCase net = load_case(resolve_case(spec.case_path));

        std::vector<std::future<MethodOutcome>> jobs;
        for (const auto& m : spec.methods) {
            jobs.push_back(std::async(std::launch::async, [&net, fam, m, &spec] { return run_method(net, fam, m, spec); }));
        }
        std::vector<MethodOutcome> results;
        for (auto& j : jobs) results.push_back(j.get());

        std::ostringstream table, buses;
        write_summary_header(table);
        buses << "method,id,vm_pu,abs_va_rad,p_pu,q_pu\n";
        bool all_ok = true;
        for (const auto& o : results) {
            write_summary_row(table, o.row);
            if (o.solution) write_bus_block(buses, o.row.method, *o.solution, net);
            all_ok = all_ok && o.converged;
        }
        out << table.str();
        if (fam == Family::Epts) out << '\n' << buses.str();
        if (spec.out_dir) {
            fs::create_directories(*spec.out_dir);
            open_out(*spec.out_dir, "compare.csv") << table.str();
            if (fam == Family::Epts) open_out(*spec.out_dir, "compare_buses.csv") << buses.str();
            for (const auto& o : results) {
                if (!o.report) continue;
                auto c = open_out(*spec.out_dir, "convergence_" + o.row.method + ".csv");
                write_convergence_csv(c, *o.report, spec.record_time);
            }
        }
        for (const auto& o : results) {
            if (!o.converged) err << o.row.method << ": " << o.row.status << '\n';
        }
        return all_ok ? kExitOk : kExitNotConverged;
    });
}

namespace {

struct CheckLine {
    std::string name;
    SlopeReport report;
    double lo, hi;
    bool pass() const { return report.exact || report.within(lo, hi); }
};

Vector random_state(const Vector& center, double spread, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Vector x = center;
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += spread * normal(rng);
    return x;
}

Objective scaled(Objective f, double scale) {
    if (scale != 1.0) {
        auto g = f.grad;
        f.grad = [g, scale](const Vector& x) { return Vector(scale * g(x)); };
    }
    return f;
}

}  // namespace

int cmd_checkgrad(const RunSpec& spec, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const Family fam = require_family(spec);
        const NetworkCase net = load_case(resolve_case(spec.case_path));
        std::vector<CheckLine> lines;

        if (fam == Family::Epds) {
            const auto ord = make_bfs_ordering(net);
            const EuclideanManifold m(2 * (net.bus_count() - 1));
            const auto f = scaled(epds_objective(net, ord), spec.gradient_scale);
            const Vector x = random_state(epds_flat_start(net), 0.05, spec.seed);
            lines.push_back({"gradient", check_gradient(m, f, x, 3, default_gradient_steps(), spec.seed), 1.8, 2.2});
        } else {
            const EuclideanManifold m(2 * net.bus_count());
            const auto f = scaled(epts_objective(net), spec.gradient_scale);
            const EptsLayout lay(net);
            EptsVariables flat{Vector::Ones(static_cast<Eigen::Index>(net.bus_count())),
                               Vector::Zero(static_cast<Eigen::Index>(net.bus_count())), 0.0, 0.0,
                               Vector::Zero(static_cast<Eigen::Index>(lay.pv.size()))};
            const Vector x = random_state(epts_pack(flat, net), 0.1, spec.seed);
            lines.push_back({"gradient", check_gradient(m, f, x, 3, default_gradient_steps(), spec.seed), 1.8, 2.2});
            const auto solved = solve_epts(net, solver_config(fam, spec));
            lines.push_back({"hessian-at-solution",
                             check_hessian(m, f, solved.report.final_point, 3, default_hessian_steps(), spec.seed), 2.7,
                             3.3});
        }

        std::ostringstream table;
        table << "check,slope,min_slope,max_slope,lo,hi,result\n";
        bool ok = true;
        for (const auto& l : lines) {
            const bool pass = l.pass();
            ok = ok && pass;
            table << l.name << ',' << format_number(l.report.slope) << ',' << format_number(l.report.min_slope) << ','
                  << format_number(l.report.max_slope) << ',' << format_number(l.lo) << ',' << format_number(l.hi) << ','
                  << (l.report.exact ? "exact" : pass ? "pass" : "fail") << '\n';
        }
        out << table.str();
        if (spec.out_dir) {
            fs::create_directories(*spec.out_dir);
            open_out(*spec.out_dir, "checkgrad.csv") << table.str();
        }
        return ok ? kExitOk : kExitNotConverged;
    });
}

}  // namespace pflow::cli
