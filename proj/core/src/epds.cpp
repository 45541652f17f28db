#include "pflow/epds.hpp"

#include <algorithm>
#include <cmath>

#include "pflow/error.hpp"

namespace pflow {

namespace {

constexpr Complex kI{0.0, 1.0};

// Backward sweep: accumulate injected currents from the leaves towards the
// slack. Returns one current per ordered branch.
std::vector<Complex> backward_sweep(const BfsOrdering& ord, std::vector<Complex> aux) {
    std::vector<Complex> branch_current(ord.size());
    for (std::size_t i = ord.size(); i-- > 0;) {
        branch_current[i] = aux[ord.receiver[i]];
        aux[ord.sender[i]] += branch_current[i];
    }
    return branch_current;
}

// Forward sweep: propagate voltage drops from the slack.
std::vector<Complex> forward_sweep(const BfsOrdering& ord, const std::vector<Complex>& branch_current, Complex root) {
    std::vector<Complex> v(ord.bus_count, Complex{});
    v[NetworkCase::slack_index()] = root;
    for (std::size_t i = 0; i < ord.size(); ++i) {
        v[ord.receiver[i]] = v[ord.sender[i]] - ord.impedance[i] * branch_current[i];
    }
    return v;
}

std::vector<Complex> injected_currents(const std::vector<Complex>& demand, const std::vector<Complex>& v) {
    std::vector<Complex> out(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (v[k] == Complex{}) throw NumericalError("zero voltage at dense bus " + std::to_string(k));
        out[k] = std::conj(demand[k] / v[k]);
    }
    return out;
}

void check_state(const Vector& x, const NetworkCase& net, const BfsOrdering& ord) {
    if (ord.bus_count != net.bus_count()) throw InputError("ordering does not match the case");
    if (static_cast<std::size_t>(x.size()) != 2 * (net.bus_count() - 1)) {
        throw InputError("state length must be 2(n-1) = " + std::to_string(2 * (net.bus_count() - 1)));
    }
}

}  // namespace

BfsOrdering make_bfs_ordering(const NetworkCase& net) {
    std::vector<BranchEnds> ends;
    std::vector<std::size_t> which;
    for (std::size_t k = 0; k < net.branch_count(); ++k) {
        if (!net.branch(k).active()) continue;
        ends.push_back({static_cast<int>(net.from_index(k)), static_cast<int>(net.to_index(k))});
        which.push_back(k);
    }
    if (ends.size() + 1 != net.bus_count()) {
        // Either a loop or a missing connection; let branch_order name the latter.
        (void)branch_order(ends, static_cast<int>(NetworkCase::slack_index()));
        throw TopologyError("network is not radial (" + std::to_string(ends.size()) + " active branches for " +
                            std::to_string(net.bus_count()) + " buses)");
    }
    BfsOrdering ord;
    ord.bus_count = net.bus_count();
    for (const auto& ob : branch_order(ends, static_cast<int>(NetworkCase::slack_index()))) {
        const auto& e = ends[ob.input_index];
        const auto k = which[ob.input_index];
        ord.sender.push_back(static_cast<std::size_t>(ob.swapped ? e.receiver : e.sender));
        ord.receiver.push_back(static_cast<std::size_t>(ob.swapped ? e.sender : e.receiver));
        ord.impedance.emplace_back(net.branch(k).r, net.branch(k).x);
        ord.branch.push_back(k);
    }
    return ord;
}

std::vector<Complex> bus_demands(const NetworkCase& net) {
    std::vector<Complex> s(net.bus_count());
    for (std::size_t k = 0; k < net.bus_count(); ++k) {
        const auto& b = net.bus(k);
        s[k] = Complex(-b.p_net(), -b.q_net());
    }
    return s;
}

Vector epds_flat_start(const NetworkCase& net) {
    std::vector<Complex> v(net.bus_count(), Complex(net.slack_voltage(), 0.0));
    return epds_state_from_voltages(v);
}

Vector epds_state_from_voltages(std::span<const Complex> voltage) {
    if (voltage.empty()) throw InputError("voltage vector is empty");
    return pack_complex(voltage.subspan(1));
}

std::vector<Complex> epds_voltages_from_state(const Vector& x, const NetworkCase& net) {
    std::vector<Complex> v(net.bus_count());
    v[0] = Complex(net.slack_voltage(), 0.0);
    for (std::size_t k = 1; k < net.bus_count(); ++k) v[k] = Complex(x[2 * (k - 1)], x[2 * (k - 1) + 1]);
    return v;
}

std::vector<Complex> bfs_residuals(const Vector& x, const NetworkCase& net, const BfsOrdering& ord) {
    check_state(x, net, ord);
    const auto v = epds_voltages_from_state(x, net);
    const auto current = backward_sweep(ord, injected_currents(bus_demands(net), v));
    auto h = forward_sweep(ord, current, v[0]);
    for (std::size_t k = 0; k < h.size(); ++k) h[k] -= v[k];
    return h;
}

double bfs_cost(const Vector& x, const NetworkCase& net, const BfsOrdering& ord) {
    double c = 0.0;
    for (const auto& h : bfs_residuals(x, net, ord)) c += std::norm(h);
    return c;
}

Eigen::MatrixXcd bfs_residual_jacobian(const Vector& x, const NetworkCase& net, const BfsOrdering& ord) {
    check_state(x, net, ord);
    const std::size_t n = net.bus_count();
    const auto v = epds_voltages_from_state(x, net);
    const auto demand = bus_demands(net);
    Eigen::MatrixXcd jac = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(2 * (n - 1)));

    std::vector<Complex> d_inj(n, Complex{});
    for (std::size_t k = 1; k < n; ++k) {
        if (v[k] == Complex{}) throw NumericalError("zero voltage at dense bus " + std::to_string(k));
        // I_k = conj(S_k) / conj(V_k); d conj(V_k) = 1 for Re V_k and -j for Im V_k.
        const Complex base = -std::conj(demand[k]) / (std::conj(v[k]) * std::conj(v[k]));
        const Complex seeds[2] = {base, kI * -base};
        const Complex self[2] = {Complex(1.0, 0.0), kI};
        for (int part = 0; part < 2; ++part) {
            d_inj[k] = seeds[part];
            const auto d_current = backward_sweep(ord, d_inj);
            const auto d_vcalc = forward_sweep(ord, d_current, Complex{});
            const auto col = static_cast<Eigen::Index>(2 * (k - 1) + static_cast<std::size_t>(part));
            for (std::size_t i = 0; i < n; ++i) jac(static_cast<Eigen::Index>(i), col) = d_vcalc[i];
            jac(static_cast<Eigen::Index>(k), col) -= self[part];
        }
        d_inj[k] = Complex{};
    }
    return jac;
}

Vector bfs_cost_gradient(const Vector& x, const NetworkCase& net, const BfsOrdering& ord) {
    const auto h = bfs_residuals(x, net, ord);
    const auto jac = bfs_residual_jacobian(x, net, ord);
    Eigen::VectorXcd hv(static_cast<Eigen::Index>(h.size()));
    for (std::size_t i = 0; i < h.size(); ++i) hv[static_cast<Eigen::Index>(i)] = h[i];
    return 2.0 * (jac.adjoint() * hv).real();
}

Vector bfs_gauss_newton_product(const Vector& x, const NetworkCase& net, const BfsOrdering& ord, const Vector& v) {
    const auto jac = bfs_residual_jacobian(x, net, ord);
    const Eigen::VectorXcd jv = jac * v.cast<Complex>();
    return 2.0 * (jac.adjoint() * jv).real();
}

Objective epds_objective(const NetworkCase& net, const BfsOrdering& ord) {
    Objective f;
    f.cost = [net, ord](const Vector& x) { return bfs_cost(x, net, ord); };
    f.grad = [net, ord](const Vector& x) { return bfs_cost_gradient(x, net, ord); };
    f.hess = [net, ord](const Vector& x, const Vector& v) { return bfs_gauss_newton_product(x, net, ord, v); };
    return f;
}

FlowSolution epds_solution_from_state(const Vector& x, const NetworkCase& net, const BfsOrdering& ord) {
    check_state(x, net, ord);
    const std::size_t n = net.bus_count();
    const auto demand = bus_demands(net);
    FlowSolution sol;
    sol.voltage = epds_voltages_from_state(x, net);
    const auto current = backward_sweep(ord, injected_currents(demand, sol.voltage));

    Complex out_of_slack{};
    for (std::size_t i = 0; i < ord.size(); ++i) {
        const std::size_t f = ord.sender[i], t = ord.receiver[i];
        const Complex s_from = sol.voltage[f] * std::conj(current[i]);
        const Complex s_to = sol.voltage[t] * std::conj(current[i]);
        BranchFlow bf;
        bf.branch = ord.branch[i];
        bf.from = f;
        bf.to = t;
        bf.current = current[i];
        bf.p_from = s_from.real();
        bf.q_from = s_from.imag();
        bf.p_to = s_to.real();
        bf.q_to = s_to.imag();
        bf.loss_kw = ord.impedance[i].real() * std::norm(current[i]) * net.bases().s_base_kva();
        sol.total_loss_kw += bf.loss_kw;
        if (f == NetworkCase::slack_index()) out_of_slack += s_from;
        sol.branches.push_back(bf);
    }

    sol.p_injection.resize(n);
    sol.q_injection.resize(n);
    for (std::size_t k = 1; k < n; ++k) {
        sol.p_injection[k] = -demand[k].real();
        sol.q_injection[k] = -demand[k].imag();
    }
    sol.p_injection[0] = out_of_slack.real();
    sol.q_injection[0] = out_of_slack.imag();
    sol.substation = out_of_slack + demand[0];
    auto mags = sol.magnitudes();
    sol.v_min = *std::min_element(mags.begin(), mags.end());
    return sol;
}

SweepResult bfs_sweep_solve(const NetworkCase& net, double tol, std::size_t max_sweeps) {
    if (!(tol > 0.0)) throw InputError("sweep tolerance must be positive");
    const auto ord = make_bfs_ordering(net);
    const auto demand = bus_demands(net);
    std::vector<Complex> v(net.bus_count(), Complex(net.slack_voltage(), 0.0));

    SweepResult res;
    for (std::size_t s = 1; s <= max_sweeps; ++s) {
        const auto injected = injected_currents(demand, v);
        const auto current = backward_sweep(ord, injected);
        v = forward_sweep(ord, current, v[0]);

        double mismatch = 0.0;
        for (std::size_t k = 1; k < v.size(); ++k) {
            mismatch = std::max(mismatch, std::abs(demand[k] - v[k] * std::conj(injected[k])));
        }
        if (!std::isfinite(mismatch)) throw NumericalError("sweep diverged (non-finite voltages)");
        res.sweeps = s;
        res.mismatch = mismatch;
        if (mismatch < tol) {
            res.solution = epds_solution_from_state(epds_state_from_voltages(v), net, ord);
            return res;
        }
    }
    throw NumericalError("sweep diverged: mismatch " + std::to_string(res.mismatch) + " after " +
                         std::to_string(max_sweeps) + " sweeps");
}

SolverConfig epds_default_config() {
    SolverConfig cfg;
    cfg.max_iters = 5000;
    cfg.grad_tol = 1e-10;
    return cfg;
}

namespace {

template <typename Solve>
EpdsSolveResult run_epds(const NetworkCase& net, const SolverConfig& cfg, Solve solve) {
    const auto ord = make_bfs_ordering(net);
    const EuclideanManifold m(2 * (net.bus_count() - 1));
    EpdsSolveResult out;
    out.report = solve(m, epds_objective(net, ord), epds_flat_start(net), cfg);
    out.solution = epds_solution_from_state(out.report.final_point, net, ord);
    return out;
}

}  // namespace

EpdsSolveResult solve_epds(const NetworkCase& net, const SolverConfig& cfg) { return run_epds(net, cfg, rgd_solve); }

EpdsSolveResult solve_epds_trust_region(const NetworkCase& net, const SolverConfig& cfg) {
    return run_epds(net, cfg, rtr_solve);
}

NetworkCase apply_switch_vector(const NetworkCase& net, std::span<const int> y) {
    if (y.size() != net.branch_count()) {
        throw InputError("switch vector has " + std::to_string(y.size()) + " entries for " +
                         std::to_string(net.branch_count()) + " branches");
    }
    std::vector<BranchRecord> active, inactive;
    std::vector<BranchEnds> ends;
    for (std::size_t k = 0; k < y.size(); ++k) {
        if (y[k] != 0 && y[k] != 1) throw InputError("switch vector entries must be 0 or 1");
        BranchRecord br = net.branch(k);
        br.status = y[k];
        if (br.active()) {
            ends.push_back({br.from_bus, br.to_bus});
            active.push_back(br);
        } else {
            inactive.push_back(br);
        }
    }
    std::vector<BranchRecord> branches;
    branches.reserve(y.size());
    for (const auto& ob : branch_order(ends, net.slack().id)) {
        BranchRecord br = active[ob.input_index];
        if (ob.swapped) std::swap(br.from_bus, br.to_bus);
        branches.push_back(br);
    }
    branches.insert(branches.end(), inactive.begin(), inactive.end());
    NetworkCase out = net.with_branches(std::move(branches));
    if (!check_radial(out)) throw TopologyError("switched network is not radial");
    return out;
}

void PenaltyConfig::validate() const {
    if (!(mu > 0.0)) throw InputError("penalty weight mu must be positive");
    if (p < 1) throw InputError("penalty exponent p must be >= 1");
}

double penalty_terms(std::span<const double> g_values, std::span<const double> h_values, int p) {
    if (p < 1) throw InputError("penalty exponent p must be >= 1");
    double sum = 0.0;
    for (double g : g_values) sum += std::pow(std::max(0.0, g), p);
    for (double h : h_values) sum += std::pow(std::abs(h), p);
    return sum;
}

double penalized_cost(double f, std::span<const double> g_values, std::span<const double> h_values,
                      const PenaltyConfig& cfg) {
    cfg.validate();
    return f + cfg.mu * penalty_terms(g_values, h_values, cfg.p);
}

double EpdsResidualReport::max_equality() const {
    return std::max({active_balance, reactive_balance, voltage_drop, apparent_power});
}

EpdsResidualReport validate_epds_solution(const FlowSolution& sol, const NetworkCase& net) {
    const std::size_t n = net.bus_count();
    if (sol.voltage.size() != n) throw InputError("solution does not match the case");
    const auto demand = bus_demands(net);

    std::vector<double> p_balance(n, 0.0), q_balance(n, 0.0);
    EpdsResidualReport rep;
    for (const auto& bf : sol.branches) {
        const auto& br = net.branch(bf.branch);
        const double i2 = std::norm(bf.current);
        const double vi2 = std::norm(sol.voltage[bf.from]);
        const double vj2 = std::norm(sol.voltage[bf.to]);
        const double z2 = br.r * br.r + br.x * br.x;

        p_balance[bf.to] += bf.p_to;
        q_balance[bf.to] += bf.q_to;
        p_balance[bf.from] -= bf.p_to + br.r * i2;
        q_balance[bf.from] -= bf.q_to + br.x * i2;

        rep.voltage_drop =
            std::max(rep.voltage_drop, std::abs(vi2 - 2.0 * (br.r * bf.p_to + br.x * bf.q_to) - z2 * i2 - vj2));
        rep.apparent_power =
            std::max(rep.apparent_power, std::abs(i2 * vj2 - (bf.p_to * bf.p_to + bf.q_to * bf.q_to)));

        const double im = std::sqrt(i2);
        if (br.i_max) rep.current_bounds = std::max(rep.current_bounds, im - *br.i_max);
        if (br.i_min) rep.current_bounds = std::max(rep.current_bounds, *br.i_min - im);
    }
    p_balance[0] += sol.substation.real();
    q_balance[0] += sol.substation.imag();
    for (std::size_t i = 0; i < n; ++i) {
        rep.active_balance = std::max(rep.active_balance, std::abs(p_balance[i] - demand[i].real()));
        rep.reactive_balance = std::max(rep.reactive_balance, std::abs(q_balance[i] - demand[i].imag()));
        const double vm = std::abs(sol.voltage[i]);
        if (net.v_max()) rep.voltage_bounds = std::max(rep.voltage_bounds, vm - *net.v_max());
        if (net.v_min()) rep.voltage_bounds = std::max(rep.voltage_bounds, *net.v_min() - vm);
    }
    return rep;
}

}  // namespace pflow
