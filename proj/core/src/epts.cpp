#include "pflow/epts.hpp"

#include <cmath>
#include <limits>

#include <Eigen/LU>

#include "pflow/error.hpp"

namespace pflow {

AdmittanceMatrix build_ybus(const NetworkCase& net) {
    const auto n = static_cast<Eigen::Index>(net.bus_count());
    AdmittanceMatrix y{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
    for (std::size_t k = 0; k < net.branch_count(); ++k) {
        const auto& br = net.branch(k);
        if (!br.active()) continue;
        if (br.r == 0.0 && br.x == 0.0) throw InputError("branch with zero impedance (r = x = 0)");
        const Complex ys = 1.0 / Complex(br.r, br.x);
        const auto f = static_cast<Eigen::Index>(net.from_index(k));
        const auto t = static_cast<Eigen::Index>(net.to_index(k));
        y.g(f, f) += ys.real();
        y.g(t, t) += ys.real();
        y.g(f, t) -= ys.real();
        y.g(t, f) -= ys.real();
        y.b(f, f) += ys.imag() + br.b_half;
        y.b(t, t) += ys.imag() + br.b_half;
        y.b(f, t) -= ys.imag();
        y.b(t, f) -= ys.imag();
    }
    for (Eigen::Index i = 0; i < n; ++i) y.b(i, i) += net.bus(static_cast<std::size_t>(i)).shunt_b;
    return y;
}

PowerInjection calc_pq(const Vector& vm, const Vector& va, const AdmittanceMatrix& y) {
    const auto n = vm.size();
    if (va.size() != n || y.g.rows() != n) throw InputError("calc_pq: dimension mismatch");
    PowerInjection s{Vector::Zero(n), Vector::Zero(n)};
    for (Eigen::Index k = 0; k < n; ++k) {
        for (Eigen::Index m = 0; m < n; ++m) {
            const double t = va[k] - va[m];
            const double c = std::cos(t), sn = std::sin(t);
            s.p[k] += vm[m] * (y.g(k, m) * c + y.b(k, m) * sn);
            s.q[k] += vm[m] * (y.g(k, m) * sn - y.b(k, m) * c);
        }
        s.p[k] *= vm[k];
        s.q[k] *= vm[k];
    }
    return s;
}

PowerDerivatives power_derivatives(const Vector& vm, const Vector& va, const AdmittanceMatrix& y) {
    const auto n = vm.size();
    PowerDerivatives d{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n),
                       Eigen::MatrixXd::Zero(n, n)};
    for (Eigen::Index k = 0; k < n; ++k) {
        double sum_p = 0.0, sum_q = 0.0;  // sum_m V_m (G cos + B sin), sum_m V_m (G sin - B cos)
        for (Eigen::Index m = 0; m < n; ++m) {
            const double t = va[k] - va[m];
            const double c = std::cos(t), sn = std::sin(t);
            const double a = y.g(k, m) * c + y.b(k, m) * sn;
            const double b = y.g(k, m) * sn - y.b(k, m) * c;
            sum_p += vm[m] * a;
            sum_q += vm[m] * b;
            if (m == k) continue;
            d.dp_dva(k, m) = vm[k] * vm[m] * b;
            d.dp_dvm(k, m) = vm[k] * a;
            d.dq_dva(k, m) = -vm[k] * vm[m] * a;
            d.dq_dvm(k, m) = vm[k] * b;
        }
        const double pk = vm[k] * sum_p, qk = vm[k] * sum_q;
        d.dp_dva(k, k) = -qk - y.b(k, k) * vm[k] * vm[k];
        d.dq_dva(k, k) = pk - y.g(k, k) * vm[k] * vm[k];
        d.dp_dvm(k, k) = sum_p + vm[k] * y.g(k, k);
        d.dq_dvm(k, k) = sum_q - vm[k] * y.b(k, k);
    }
    return d;
}

std::string ClassicResult::iteration_label() const {
    if (!iterative) return "-";
    if (decoupled) return std::to_string(p_iterations) + " Pθ and " + std::to_string(q_iterations) + " QV";
    return std::to_string(iterations);
}

EptsLayout::EptsLayout(const NetworkCase& net) : bus_count(net.bus_count()) {
    for (std::size_t k = 0; k < net.bus_count(); ++k) {
        if (net.bus(k).kind == BusKind::PV) pv.push_back(k);
        if (net.bus(k).kind == BusKind::PQ) pq.push_back(k);
    }
}

namespace {

struct Flat {
    Vector vm, va, p_spec, q_spec;
};

Flat flat_profile(const NetworkCase& net) {
    const auto n = static_cast<Eigen::Index>(net.bus_count());
    Flat f{Vector::Ones(n), Vector::Zero(n), Vector::Zero(n), Vector::Zero(n)};
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& b = net.bus(static_cast<std::size_t>(k));
        if (b.v_set) f.vm[k] = *b.v_set;
        if (b.kind == BusKind::Slack) f.va[k] = b.theta_set.value_or(0.0);
        f.p_spec[k] = b.p_net();
        f.q_spec[k] = b.q_net();
    }
    return f;
}

std::vector<std::size_t> angle_buses(const EptsLayout& lay) {
    auto a = lay.pv;
    a.insert(a.end(), lay.pq.begin(), lay.pq.end());
    return a;
}

Eigen::MatrixXd sub(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                m(static_cast<Eigen::Index>(rows[i]), static_cast<Eigen::Index>(cols[j]));
    return out;
}

Vector gather(const Vector& v, const std::vector<std::size_t>& idx) {
    Vector out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[static_cast<Eigen::Index>(idx[i])];
    return out;
}

void scatter_add(Vector& v, const std::vector<std::size_t>& idx, const Vector& delta) {
    for (std::size_t i = 0; i < idx.size(); ++i) v[static_cast<Eigen::Index>(idx[i])] += delta[static_cast<Eigen::Index>(i)];
}

double max_abs(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

Vector solve_checked(const Eigen::MatrixXd& a, const Vector& rhs, const char* what) {
    if (a.rows() == 0) return Vector(0);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) throw NumericalError(std::string("singular ") + what);
    Vector x = lu.solve(rhs);
    if (!x.allFinite()) throw NumericalError(std::string("non-finite update from ") + what);
    return x;
}

std::vector<Complex> to_phasors(const Vector& vm, const Vector& va) {
    std::vector<Complex> v(static_cast<std::size_t>(vm.size()));
    for (Eigen::Index k = 0; k < vm.size(); ++k) {
        v[static_cast<std::size_t>(k)] = Complex(vm[k] * std::cos(va[k]), vm[k] * std::sin(va[k]));
    }
    return v;
}

ClassicResult finish(const NetworkCase& net, const Vector& vm, const Vector& va) {
    ClassicResult r;
    r.solution = flow_from_voltages(net, to_phasors(vm, va));
    return r;
}

[[noreturn]] void not_converged(const char* method, std::size_t iters, double mismatch) {
    throw NumericalError(std::string(method) + " did not converge in " + std::to_string(iters) +
                         " iterations (mismatch " + std::to_string(mismatch) + ")");
}

}  // namespace

Vector epts_mismatches(const Vector& vm, const Vector& va, const NetworkCase& net, const AdmittanceMatrix& y) {
    const EptsLayout lay(net);
    const auto a = angle_buses(lay);
    const auto s = calc_pq(vm, va, y);
    Vector h(static_cast<Eigen::Index>(a.size() + lay.pq.size()));
    Eigen::Index r = 0;
    for (auto k : a) h[r++] = net.bus(k).p_net() - s.p[static_cast<Eigen::Index>(k)];
    for (auto k : lay.pq) h[r++] = net.bus(k).q_net() - s.q[static_cast<Eigen::Index>(k)];
    return h;
}

ClassicResult newton_raphson_solve(const NetworkCase& net, double tol, std::size_t max_iters) {
    if (!(tol > 0.0)) throw InputError("tolerance must be positive");
    const auto y = build_ybus(net);
    const EptsLayout lay(net);
    const auto a = angle_buses(lay);
    auto f = flat_profile(net);

    double mis_norm = 0.0;
    for (std::size_t it = 1; it <= max_iters; ++it) {
        const Vector mis = epts_mismatches(f.vm, f.va, net, y);
        mis_norm = max_abs(mis);
        if (!std::isfinite(mis_norm)) throw NumericalError("Newton-Raphson diverged (non-finite mismatch)");
        if (mis_norm < tol) {
            auto r = finish(net, f.vm, f.va);
            r.iterations = it;
            r.mismatch = mis_norm;
            return r;
        }
        const auto d = power_derivatives(f.vm, f.va, y);
        const auto na = static_cast<Eigen::Index>(a.size());
        const auto nq = static_cast<Eigen::Index>(lay.pq.size());
        Eigen::MatrixXd jac(na + nq, na + nq);
        jac << sub(d.dp_dva, a, a), sub(d.dp_dvm, a, lay.pq), sub(d.dq_dva, lay.pq, a), sub(d.dq_dvm, lay.pq, lay.pq);
        const Vector dz = solve_checked(jac, mis, "Jacobian");
        scatter_add(f.va, a, dz.head(na));
        scatter_add(f.vm, lay.pq, dz.tail(nq));
    }
    not_converged("Newton-Raphson", max_iters, mis_norm);
}

namespace {

// One iteration is a P-theta half step followed by a Q-V half step; the loop
// stops when the whole mismatch vector is below tol at the top of an iteration.
// `p_step` and `q_step` map the state and the relevant mismatch to corrections
// of theta (angle buses) and |V| (PQ buses).
template <typename PStep, typename QStep>
ClassicResult alternate(const NetworkCase& net, double tol, std::size_t max_iters, const char* name, PStep p_step,
                        QStep q_step) {
    if (!(tol > 0.0)) throw InputError("tolerance must be positive");
    const auto y = build_ybus(net);
    const EptsLayout lay(net);
    const auto a = angle_buses(lay);
    auto f = flat_profile(net);
    const auto na = static_cast<Eigen::Index>(a.size());

    std::size_t count = 0;
    double mis_norm = 0.0;
    for (;;) {
        Vector mis = epts_mismatches(f.vm, f.va, net, y);
        mis_norm = max_abs(mis);
        if (!std::isfinite(mis_norm)) throw NumericalError(std::string(name) + " diverged");
        if (mis_norm < tol) break;
        if (count == max_iters) not_converged(name, count, mis_norm);

        scatter_add(f.va, a, p_step(f, y, Vector(mis.head(na))));
        mis = epts_mismatches(f.vm, f.va, net, y);
        scatter_add(f.vm, lay.pq, q_step(f, y, Vector(mis.tail(mis.size() - na))));
        ++count;
    }
    auto r = finish(net, f.vm, f.va);
    r.decoupled = true;
    r.p_iterations = count;
    r.q_iterations = count;
    r.iterations = count;
    r.mismatch = mis_norm;
    return r;
}

}  // namespace

ClassicResult decoupled_solve(const NetworkCase& net, double tol, std::size_t max_iters) {
    const EptsLayout lay(net);
    const auto a = angle_buses(lay);
    return alternate(
        net, tol, max_iters, "decoupled",
        [&](const Flat& f, const AdmittanceMatrix& y, const Vector& dp) {
            return solve_checked(sub(power_derivatives(f.vm, f.va, y).dp_dva, a, a), dp, "H block");
        },
        [&](const Flat& f, const AdmittanceMatrix& y, const Vector& dq) {
            return solve_checked(sub(power_derivatives(f.vm, f.va, y).dq_dvm, lay.pq, lay.pq), dq, "L block");
        });
}

ClassicResult fast_decoupled_solve(const NetworkCase& net, double tol, std::size_t max_iters,
                                   FastDecoupledOptions opts) {
    const EptsLayout lay(net);
    const auto a = angle_buses(lay);
    const auto n = static_cast<Eigen::Index>(net.bus_count());

    Eigen::MatrixXd bp_full = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t k = 0; k < net.branch_count(); ++k) {
        const auto& br = net.branch(k);
        if (!br.active()) continue;
        if (br.x == 0.0) throw NumericalError("fast-decoupled B' needs non-zero branch reactance");
        const auto f = static_cast<Eigen::Index>(net.from_index(k)), t = static_cast<Eigen::Index>(net.to_index(k));
        const double s = 1.0 / br.x;
        bp_full(f, f) += s;
        bp_full(t, t) += s;
        bp_full(f, t) -= s;
        bp_full(t, f) -= s;
    }
    Eigen::MatrixXd bpp_full = -build_ybus(net).b;
    if (!opts.bus_shunts_in_bpp) {
        for (Eigen::Index k = 0; k < n; ++k) bpp_full(k, k) += net.bus(static_cast<std::size_t>(k)).shunt_b;
    }
    const Eigen::MatrixXd bp = sub(bp_full, a, a);
    const Eigen::MatrixXd bpp = sub(bpp_full, lay.pq, lay.pq);
    Eigen::FullPivLU<Eigen::MatrixXd> bp_lu(bp), bpp_lu(bpp);
    if (bp.rows() > 0 && !bp_lu.isInvertible()) throw NumericalError("singular B' matrix");
    if (bpp.rows() > 0 && !bpp_lu.isInvertible()) throw NumericalError("singular B'' matrix");

    return alternate(
        net, tol, max_iters, "fast-decoupled",
        [&](const Flat& f, const AdmittanceMatrix&, const Vector& dp) {
            Vector rhs = dp.cwiseQuotient(gather(f.vm, a));
            return Vector(bp_lu.solve(rhs));
        },
        [&](const Flat& f, const AdmittanceMatrix&, const Vector& dq) {
            Vector rhs = dq.cwiseQuotient(gather(f.vm, lay.pq));
            return Vector(bpp_lu.solve(rhs));
        });
}

namespace {

struct DcSystem {
    Eigen::MatrixXd b_full;
    Eigen::FullPivLU<Eigen::MatrixXd> reduced;
    double slack_angle = 0.0;
};

DcSystem dc_system(const NetworkCase& net) {
    const auto n = static_cast<Eigen::Index>(net.bus_count());
    DcSystem s;
    s.b_full = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t k = 0; k < net.branch_count(); ++k) {
        const auto& br = net.branch(k);
        if (!br.active()) continue;
        if (br.x == 0.0) throw NumericalError("DC flow needs non-zero branch reactance");
        const auto f = static_cast<Eigen::Index>(net.from_index(k)), t = static_cast<Eigen::Index>(net.to_index(k));
        const double y = 1.0 / br.x;
        s.b_full(f, f) += y;
        s.b_full(t, t) += y;
        s.b_full(f, t) -= y;
        s.b_full(t, f) -= y;
    }
    if (n > 1) {
        s.reduced.compute(s.b_full.bottomRightCorner(n - 1, n - 1));
        if (!s.reduced.isInvertible()) throw NumericalError("singular B' matrix (disconnected network?)");
    }
    s.slack_angle = net.slack().theta_set.value_or(0.0);
    return s;
}

Vector dc_angles(const DcSystem& s, const Vector& p) {
    const auto n = p.size();
    Vector va = Vector::Constant(n, s.slack_angle);
    if (n > 1) va.tail(n - 1) += s.reduced.solve(Vector(p.tail(n - 1)));
    return va;
}

ClassicResult dc_result(const NetworkCase& net, const Vector& va, const Vector& p_spec, double p_slack,
                        const std::vector<double>& loss) {
    ClassicResult r;
    r.iterative = false;
    r.iterations = 1;
    auto& sol = r.solution;
    sol.has_magnitudes = false;
    sol.voltage = to_phasors(Vector::Ones(va.size()), va);
    sol.p_injection.assign(p_spec.data(), p_spec.data() + p_spec.size());
    sol.p_injection[0] = p_slack;
    sol.q_injection.assign(static_cast<std::size_t>(va.size()), 0.0);
    sol.substation = Complex(p_slack, 0.0);
    sol.v_min = std::numeric_limits<double>::quiet_NaN();
    std::size_t li = 0;
    for (std::size_t k = 0; k < net.branch_count(); ++k) {
        const auto& br = net.branch(k);
        if (!br.active()) continue;
        BranchFlow bf;
        bf.branch = k;
        bf.from = net.from_index(k);
        bf.to = net.to_index(k);
        const double flow = (va[static_cast<Eigen::Index>(bf.from)] - va[static_cast<Eigen::Index>(bf.to)]) / br.x;
        bf.current = Complex(flow, 0.0);
        bf.p_from = bf.p_to = flow;
        bf.loss_kw = loss.empty() ? 0.0 : loss[li] * net.bases().s_base_kva();
        sol.total_loss_kw += bf.loss_kw;
        sol.branches.push_back(bf);
        ++li;
    }
    return r;
}

}  // namespace

ClassicResult dc_solve(const NetworkCase& net) {
    const auto sys = dc_system(net);
    const Vector p = flat_profile(net).p_spec;
    const Vector va = dc_angles(sys, p);
    return dc_result(net, va, p, (sys.b_full * va)[0], {});
}

ClassicResult dc_losses_solve(const NetworkCase& net) {
    const auto sys = dc_system(net);
    const Vector p = flat_profile(net).p_spec;
    const Vector va0 = dc_angles(sys, p);

    Vector share = Vector::Zero(p.size());
    std::vector<double> loss;
    for (std::size_t k = 0; k < net.branch_count(); ++k) {
        const auto& br = net.branch(k);
        if (!br.active()) continue;
        const auto f = static_cast<Eigen::Index>(net.from_index(k)), t = static_cast<Eigen::Index>(net.to_index(k));
        const double g = br.r / (br.r * br.r + br.x * br.x);
        const double dth = va0[f] - va0[t];
        loss.push_back(g * dth * dth);
        share[f] += 0.5 * loss.back();
        share[t] += 0.5 * loss.back();
    }
    const Vector va = dc_angles(sys, p - share);
    // Reported losses follow the angles of the final pass.
    std::vector<double> final_loss;
    for (std::size_t k = 0; k < net.branch_count(); ++k) {
        const auto& br = net.branch(k);
        if (!br.active()) continue;
        const auto f = static_cast<Eigen::Index>(net.from_index(k)), t = static_cast<Eigen::Index>(net.to_index(k));
        const double g = br.r / (br.r * br.r + br.x * br.x);
        final_loss.push_back(g * (va[f] - va[t]) * (va[f] - va[t]));
    }
    // Non-slack buses report the injection after their loss share.
    return dc_result(net, va, p - share, (sys.b_full * va)[0] - share[0], final_loss);
}

// --- Mismatch cost ------------------------------------------------------------

EptsVariables epts_unpack(const Vector& x, const NetworkCase& net) {
    const EptsLayout lay(net);
    if (static_cast<std::size_t>(x.size()) != lay.state_size()) {
        throw InputError("EPTS state must have length 2n = " + std::to_string(lay.state_size()));
    }
    const auto f = flat_profile(net);
    EptsVariables v{f.vm, f.va, 0.0, 0.0, Vector(static_cast<Eigen::Index>(lay.pv.size()))};
    Eigen::Index i = 0;
    for (auto k : lay.pv) v.va[static_cast<Eigen::Index>(k)] = x[i++];
    for (auto k : lay.pq) v.va[static_cast<Eigen::Index>(k)] = x[i++];
    for (auto k : lay.pq) v.vm[static_cast<Eigen::Index>(k)] = x[i++];
    v.p_slack = x[i++];
    v.q_slack = x[i++];
    for (Eigen::Index j = 0; j < v.q_pv.size(); ++j) v.q_pv[j] = x[i++];
    return v;
}

Vector epts_pack(const EptsVariables& vars, const NetworkCase& net) {
    const EptsLayout lay(net);
    if (static_cast<std::size_t>(vars.vm.size()) != lay.bus_count || vars.va.size() != vars.vm.size() ||
        static_cast<std::size_t>(vars.q_pv.size()) != lay.pv.size()) {
        throw InputError("EPTS variables do not match the case");
    }
    Vector x(static_cast<Eigen::Index>(lay.state_size()));
    Eigen::Index i = 0;
    for (auto k : lay.pv) x[i++] = vars.va[static_cast<Eigen::Index>(k)];
    for (auto k : lay.pq) x[i++] = vars.va[static_cast<Eigen::Index>(k)];
    for (auto k : lay.pq) x[i++] = vars.vm[static_cast<Eigen::Index>(k)];
    x[i++] = vars.p_slack;
    x[i++] = vars.q_slack;
    for (Eigen::Index j = 0; j < vars.q_pv.size(); ++j) x[i++] = vars.q_pv[j];
    return x;
}

Vector epts_state_from_solution(const FlowSolution& sol, const NetworkCase& net) {
    const EptsLayout lay(net);
    const auto n = static_cast<Eigen::Index>(lay.bus_count);
    EptsVariables v{Vector(n), Vector(n), sol.p_injection.at(0), sol.q_injection.at(0),
                    Vector(static_cast<Eigen::Index>(lay.pv.size()))};
    for (Eigen::Index k = 0; k < n; ++k) {
        v.vm[k] = std::abs(sol.voltage.at(static_cast<std::size_t>(k)));
        v.va[k] = std::arg(sol.voltage[static_cast<std::size_t>(k)]);
    }
    for (std::size_t j = 0; j < lay.pv.size(); ++j) v.q_pv[static_cast<Eigen::Index>(j)] = sol.q_injection.at(lay.pv[j]);
    return epts_pack(v, net);
}

Vector epts_residuals(const Vector& x, const NetworkCase& net, const AdmittanceMatrix& y) {
    const EptsLayout lay(net);
    const auto v = epts_unpack(x, net);
    const auto s = calc_pq(v.vm, v.va, y);
    const Vector mis = epts_mismatches(v.vm, v.va, net, y);
    Vector h(static_cast<Eigen::Index>(lay.state_size()));
    h.head(mis.size()) = mis;
    Eigen::Index r = mis.size();
    h[r++] = v.p_slack - s.p[0];
    h[r++] = v.q_slack - s.q[0];
    for (std::size_t j = 0; j < lay.pv.size(); ++j) {
        h[r++] = v.q_pv[static_cast<Eigen::Index>(j)] - s.q[static_cast<Eigen::Index>(lay.pv[j])];
    }
    return h;
}

double epts_cost(const Vector& x, const NetworkCase& net, const AdmittanceMatrix& y) {
    return epts_residuals(x, net, y).squaredNorm();
}

Eigen::MatrixXd epts_jacobian(const Vector& x, const NetworkCase& net, const AdmittanceMatrix& y) {
    const EptsLayout lay(net);
    const auto v = epts_unpack(x, net);
    const auto d = power_derivatives(v.vm, v.va, y);
    const auto a = angle_buses(lay);
    const auto dim = static_cast<Eigen::Index>(lay.state_size());
    const auto na = static_cast<Eigen::Index>(a.size());
    const auto nq = static_cast<Eigen::Index>(lay.pq.size());
    const Eigen::Index closure_col = na + nq;

    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::Index row = 0;
    // Every residual is (specified or variable) - calc(bus); fill -d calc / dx.
    auto fill = [&](bool is_p, std::size_t bus) {
        const auto& dva = is_p ? d.dp_dva : d.dq_dva;
        const auto& dvm = is_p ? d.dp_dvm : d.dq_dvm;
        const auto k = static_cast<Eigen::Index>(bus);
        for (Eigen::Index j = 0; j < na; ++j) jac(row, j) = -dva(k, static_cast<Eigen::Index>(a[static_cast<std::size_t>(j)]));
        for (Eigen::Index j = 0; j < nq; ++j)
            jac(row, na + j) = -dvm(k, static_cast<Eigen::Index>(lay.pq[static_cast<std::size_t>(j)]));
    };
    for (auto k : a) { fill(true, k); ++row; }
    for (auto k : lay.pq) { fill(false, k); ++row; }
    fill(true, NetworkCase::slack_index());
    jac(row, closure_col) = 1.0;
    ++row;
    fill(false, NetworkCase::slack_index());
    jac(row, closure_col + 1) = 1.0;
    ++row;
    for (std::size_t j = 0; j < lay.pv.size(); ++j) {
        fill(false, lay.pv[j]);
        jac(row, closure_col + 2 + static_cast<Eigen::Index>(j)) = 1.0;
        ++row;
    }
    return jac;
}

Vector epts_gradient(const Vector& x, const NetworkCase& net, const AdmittanceMatrix& y) {
    return 2.0 * epts_jacobian(x, net, y).transpose() * epts_residuals(x, net, y);
}

Objective epts_objective(const NetworkCase& net, HessianMode mode) {
    const auto y = build_ybus(net);
    Objective f;
    f.cost = [net, y](const Vector& x) { return epts_cost(x, net, y); };
    f.grad = [net, y](const Vector& x) { return epts_gradient(x, net, y); };
    if (mode == HessianMode::GaussNewton) {
        f.hess = [net, y](const Vector& x, const Vector& v) {
            const auto jac = epts_jacobian(x, net, y);
            return Vector(2.0 * jac.transpose() * (jac * v));
        };
    } else {
        f.hess = [net, y](const Vector& x, const Vector& v) {
            const double nv = v.norm();
            if (nv == 0.0) return Vector(Vector::Zero(v.size()));
            const double t = 1e-6 * std::max(1.0, x.norm()) / nv;
            return Vector((epts_gradient(x + t * v, net, y) - epts_gradient(x - t * v, net, y)) / (2.0 * t));
        };
    }
    return f;
}

FlowSolution epts_solution_from_state(const Vector& x, const NetworkCase& net) {
    const EptsLayout lay(net);
    const auto v = epts_unpack(x, net);
    auto sol = flow_from_voltages(net, to_phasors(v.vm, v.va));
    sol.p_injection[0] = v.p_slack;
    sol.q_injection[0] = v.q_slack;
    for (std::size_t j = 0; j < lay.pv.size(); ++j) sol.q_injection[lay.pv[j]] = v.q_pv[static_cast<Eigen::Index>(j)];
    sol.substation = Complex(v.p_slack, v.q_slack);
    return sol;
}

SolverConfig epts_default_config() {
    SolverConfig cfg;
    cfg.max_iters = 1000;
    cfg.grad_tol = 1e-6;
    return cfg;
}

EptsSolveResult solve_epts(const NetworkCase& net, const SolverConfig& cfg, HessianMode mode) {
    const EuclideanManifold m(2 * net.bus_count());
    EptsSolveResult out;
    out.report = rtr_solve(m, epts_objective(net, mode), Vector::Zero(static_cast<Eigen::Index>(m.dim())), cfg);
    out.solution = epts_solution_from_state(out.report.final_point, net);
    return out;
}

EptsSolveResult solve_epts_steepest(const NetworkCase& net, const SolverConfig& cfg) {
    const EuclideanManifold m(2 * net.bus_count());
    EptsSolveResult out;
    out.report = rgd_solve(m, epts_objective(net), Vector::Zero(static_cast<Eigen::Index>(m.dim())), cfg);
    out.solution = epts_solution_from_state(out.report.final_point, net);
    return out;
}

}  // namespace pflow
