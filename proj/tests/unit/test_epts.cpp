#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pflow/epts.hpp"
#include "pflow/error.hpp"
#include "test_support.hpp"

using namespace pflow;
using namespace pflow::test;

namespace {

// Independent complex-arithmetic evaluation of S = V conj(Y V).
std::vector<Complex> complex_injection(const Vector& vm, const Vector& va, const AdmittanceMatrix& y) {
    const auto n = vm.size();
    std::vector<Complex> v(static_cast<std::size_t>(n)), s(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) v[k] = std::polar(vm[k], va[k]);
    for (Eigen::Index k = 0; k < n; ++k) {
        Complex i{};
        for (Eigen::Index j = 0; j < n; ++j) i += Complex(y.g(k, j), y.b(k, j)) * v[j];
        s[k] = v[k] * std::conj(i);
    }
    return s;
}

double vm_of(const FlowSolution& s, const NetworkCase& net, int id) { return std::abs(s.voltage[net.index_of(id)]); }
double p_of(const FlowSolution& s, const NetworkCase& net, int id) { return s.p_injection[net.index_of(id)]; }
double q_of(const FlowSolution& s, const NetworkCase& net, int id) { return s.q_injection[net.index_of(id)]; }

Vector random_state(const NetworkCase& net, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    EptsVariables v = epts_unpack(Vector::Zero(static_cast<Eigen::Index>(2 * net.bus_count())), net);
    const EptsLayout lay(net);
    for (auto k : lay.pq) v.vm[static_cast<Eigen::Index>(k)] = 1.0 + 0.05 * n01(rng);
    for (auto k : lay.pv) v.va[static_cast<Eigen::Index>(k)] = 0.1 * n01(rng);
    for (auto k : lay.pq) v.va[static_cast<Eigen::Index>(k)] = 0.1 * n01(rng);
    v.p_slack = n01(rng);
    v.q_slack = n01(rng);
    for (auto& q : v.q_pv) q = n01(rng);
    return epts_pack(v, net);
}

}  // namespace

TEST(Ybus, ThreeBusEntries) {
    const auto net = bundled("epts3_1");
    const auto y = build_ybus(net);
    EXPECT_NEAR(y.g(0, 1), -10.0, 1e-12);
    EXPECT_NEAR(y.b(0, 1), 30.0, 1e-12);
    EXPECT_NEAR(y.g(0, 1), y.g(1, 0), 0.0);
    // No shunts: every row sums to zero.
    for (Eigen::Index k = 0; k < 3; ++k) {
        EXPECT_NEAR(y.g.row(k).sum(), 0.0, 1e-12);
        EXPECT_NEAR(y.b.row(k).sum(), 0.0, 1e-12);
    }
}

TEST(Ybus, ShuntsAndLineCharging) {
    const auto net = bundled("epts3_2");
    const auto y = build_ybus(net);
    // Row sums leave only the shunt elements: bus 1 has b_half 0.02 + 0.03 and a -0.05 shunt.
    EXPECT_NEAR(y.b.row(net.index_of(1)).sum(), 0.02 + 0.03 - 0.05, 1e-12);
    EXPECT_NEAR(y.b.row(net.index_of(2)).sum(), 0.02 + 0.01, 1e-12);
    EXPECT_NEAR(y.g.row(net.index_of(3)).sum(), 0.0, 1e-12);

    const NetworkCase lone(Bases{100, 230}, {slack_bus(1), pq_bus(2, 0, 0)}, {line(1, 2, 0.1, 0.2, 0.0, 0)});
    auto b = std::vector<BusRecord>(lone.buses().begin(), lone.buses().end());
    b[1].shunt_b = 0.4;
    const auto ys = build_ybus(NetworkCase(Bases{100, 230}, b, {line(1, 2, 0.1, 0.2, 0.0, 0)}));
    EXPECT_EQ(ys.b(1, 1), 0.4);
    EXPECT_EQ(ys.b(0, 1), 0.0);
}

TEST(CalcPq, MatchesComplexEvaluation) {
    const auto net = bundled("epts4");
    const auto y = build_ybus(net);
    Vector vm(4), va(4);
    vm << 1.0, 0.97, 0.95, 1.02;
    va << 0.0, -0.02, -0.04, 0.03;
    const auto pq = calc_pq(vm, va, y);
    const auto s = complex_injection(vm, va, y);
    for (Eigen::Index k = 0; k < 4; ++k) {
        EXPECT_NEAR(pq.p[k], s[k].real(), 1e-12);
        EXPECT_NEAR(pq.q[k], s[k].imag(), 1e-12);
    }
}

TEST(CalcPq, FlatProfileWithoutShuntsIsZero) {
    const auto net = bundled("epts3_1");
    const auto pq = calc_pq(Vector::Ones(3), Vector::Zero(3), build_ybus(net));
    EXPECT_LT(pq.p.cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(pq.q.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CalcPq, AngleShiftInvariance) {
    const auto net = bundled("epts4");
    const auto y = build_ybus(net);
    Vector vm(4), va(4);
    vm << 1.0, 0.98, 0.96, 1.02;
    va << 0.0, -0.03, -0.05, 0.02;
    const auto a = calc_pq(vm, va, y);
    const auto b = calc_pq(vm, (va.array() + 0.7).matrix(), y);
    EXPECT_LT((a.p - b.p).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((a.q - b.q).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PowerDerivatives, MatchFiniteDifferencesIncludingZeroVoltage) {
    const auto net = bundled("epts3_2");
    const auto y = build_ybus(net);
    for (const double scale : {1.0, 0.0}) {
        Vector vm(3), va(3);
        vm << 1.01, 0.99, 1.0;
        vm *= scale;
        va << 0.05, 0.0, -0.03;
        const auto d = power_derivatives(vm, va, y);
        const double h = 1e-7;
        for (Eigen::Index j = 0; j < 3; ++j) {
            Vector vp = vm, vn = vm, ap = va, an = va;
            vp[j] += h;
            vn[j] -= h;
            ap[j] += h;
            an[j] -= h;
            const auto dvm_p = calc_pq(vp, va, y), dvm_n = calc_pq(vn, va, y);
            const auto dva_p = calc_pq(vm, ap, y), dva_n = calc_pq(vm, an, y);
            for (Eigen::Index k = 0; k < 3; ++k) {
                EXPECT_NEAR(d.dp_dvm(k, j), (dvm_p.p[k] - dvm_n.p[k]) / (2 * h), 1e-6);
                EXPECT_NEAR(d.dq_dvm(k, j), (dvm_p.q[k] - dvm_n.q[k]) / (2 * h), 1e-6);
                EXPECT_NEAR(d.dp_dva(k, j), (dva_p.p[k] - dva_n.p[k]) / (2 * h), 1e-6);
                EXPECT_NEAR(d.dq_dva(k, j), (dva_p.q[k] - dva_n.q[k]) / (2 * h), 1e-6);
            }
        }
    }
}

TEST(NewtonRaphson, ThreeBusFirstExample) {
    const auto net = bundled("epts3_1");
    const auto r = newton_raphson_solve(net);
    EXPECT_EQ(r.iterations, 3u);
    EXPECT_EQ(r.iteration_label(), "3");
    EXPECT_NEAR(vm_of(r.solution, net, 3), 0.9717, 5e-4);
    EXPECT_NEAR(p_of(r.solution, net, 1), 2.1840, 5e-4);
    EXPECT_NEAR(q_of(r.solution, net, 1), 1.4085, 5e-4);
    EXPECT_NEAR(q_of(r.solution, net, 2), 1.4616, 5e-4);
    EXPECT_LT(r.mismatch, 1e-3);
}

TEST(NewtonRaphson, ThreeBusSecondExample) {
    const auto net = bundled("epts3_2");
    const auto r = newton_raphson_solve(net);
    EXPECT_EQ(r.iterations, 3u);
    EXPECT_NEAR(vm_of(r.solution, net, 1), 1.0025, 5e-4);
    EXPECT_NEAR(p_of(r.solution, net, 2), 0.1025, 5e-4);
    EXPECT_NEAR(q_of(r.solution, net, 3), -0.0457, 5e-4);
}

TEST(NewtonRaphson, FourBus) {
    const auto net = bundled("epts4");
    const auto r = newton_raphson_solve(net);
    EXPECT_EQ(r.iterations, 3u);
    EXPECT_NEAR(vm_of(r.solution, net, 2), 0.9824, 5e-4);
    EXPECT_NEAR(vm_of(r.solution, net, 3), 0.9690, 5e-4);
    EXPECT_NEAR(q_of(r.solution, net, 4), 1.3184, 5e-4);
    EXPECT_NEAR(p_of(r.solution, net, 1), 1.3679, 5e-4);
}

TEST(NewtonRaphson, ZeroDemandIsFlat) {
    const auto base = zero_demand(bundled("epts4"));
    auto buses = std::vector<BusRecord>(base.buses().begin(), base.buses().end());
    for (auto& b : buses)
        if (b.v_set) b.v_set = 1.0;
    auto branches = std::vector<BranchRecord>(base.branches().begin(), base.branches().end());
    for (auto& b : branches) b.b_half = 0.0;
    const NetworkCase net(base.bases(), buses, branches);
    const auto r = newton_raphson_solve(net);
    EXPECT_LE(r.iterations, 1u);
    for (const auto& v : r.solution.voltage) EXPECT_NEAR(std::abs(v - Complex(1.0, 0.0)), 0.0, 1e-14);
}

TEST(NewtonRaphson, IterationBudget) {
    const auto net = bundled("epts3_1").scaled_injections(8.0);
    EXPECT_THROW(newton_raphson_solve(net, 1e-3, 30), NumericalError);
}

TEST(Decoupled, CountsAndAgreement) {
    struct Expect {
        const char* name;
        std::size_t dec;
        std::size_t fd;
    };
    for (const Expect& e : {Expect{"epts3_1", 6, 3}, Expect{"epts3_2", 2, 2}, Expect{"epts4", 3, 3}}) {
        const auto net = bundled(e.name);
        const auto nr = newton_raphson_solve(net).solution;
        const auto dec = decoupled_solve(net);
        const auto fd = fast_decoupled_solve(net);
        EXPECT_EQ(dec.p_iterations, e.dec) << e.name;
        EXPECT_EQ(dec.q_iterations, e.dec) << e.name;
        EXPECT_EQ(fd.p_iterations, e.fd) << e.name;
        EXPECT_EQ(fd.q_iterations, e.fd) << e.name;
        EXPECT_TRUE(dec.decoupled);
        for (std::size_t k = 0; k < net.bus_count(); ++k) {
            EXPECT_NEAR(std::abs(dec.solution.voltage[k]), std::abs(nr.voltage[k]), 1e-3) << e.name;
            EXPECT_NEAR(std::arg(fd.solution.voltage[k]), std::arg(nr.voltage[k]), 1e-3) << e.name;
        }
        FastDecoupledOptions no_shunts;
        no_shunts.bus_shunts_in_bpp = false;
        EXPECT_EQ(fast_decoupled_solve(net, 1e-3, 30, no_shunts).p_iterations, e.fd) << e.name;
    }
    EXPECT_EQ(decoupled_solve(bundled("epts3_1")).iteration_label(), "6 Pθ and 6 QV");
}

TEST(Dc, SatisfiesLinearBalance) {
    const auto net = bundled("epts4");
    const auto r = dc_solve(net);
    EXPECT_FALSE(r.iterative);
    EXPECT_FALSE(r.solution.has_magnitudes);
    EXPECT_EQ(r.iteration_label(), "-");
    const auto va = r.solution.angles();
    // B' theta = P at every non-slack bus, B' from 1/x.
    for (std::size_t k = 1; k < net.bus_count(); ++k) {
        double flow = 0.0;
        for (std::size_t b = 0; b < net.branch_count(); ++b) {
            const std::size_t f = net.from_index(b), t = net.to_index(b);
            const double pf = (va[f] - va[t]) / net.branch(b).x;
            if (f == k) flow += pf;
            if (t == k) flow -= pf;
        }
        EXPECT_NEAR(flow, net.bus(k).p_net(), 1e-12);
    }
    double total = 0.0;
    for (double p : r.solution.p_injection) total += p;
    EXPECT_NEAR(total, 0.0, 1e-12);
}

TEST(Dc, KnownAngles) {
    const auto a = dc_solve(bundled("epts3_1")).solution.angles();
    EXPECT_NEAR(std::abs(a[1]), 0.0095, 1e-4);
    EXPECT_NEAR(std::abs(a[2]), 0.0674, 1e-4);
    const auto b = dc_solve(bundled("epts4")).solution.angles();
    EXPECT_NEAR(std::abs(b[1]), 0.0185, 1e-4);
    EXPECT_NEAR(std::abs(b[2]), 0.0355, 1e-4);
    EXPECT_NEAR(std::abs(b[3]), 0.0311, 1e-4);
}

TEST(Dc, Linearity) {
    const auto net = bundled("epts4");
    const auto a = dc_solve(net).solution.angles();
    const auto b = dc_solve(net.scaled_injections(2.5)).solution.angles();
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(b[k], 2.5 * a[k], 1e-12);
}

TEST(DcLosses, LosslessCaseMatchesDc) {
    auto net = bundled("epts4");
    auto br = std::vector<BranchRecord>(net.branches().begin(), net.branches().end());
    for (auto& b : br) b.r = 0.0;
    const auto lossless = net.with_branches(br);
    const auto a = dc_solve(lossless).solution.angles();
    const auto b = dc_losses_solve(lossless).solution.angles();
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-14);
    EXPECT_EQ(dc_losses_solve(lossless).solution.total_loss_kw, 0.0);
}

TEST(DcLosses, SlackCoversLosses) {
    const auto net = bundled("epts3_1");
    const auto dc = dc_solve(net).solution;
    const auto lossy = dc_losses_solve(net).solution;
    EXPECT_NEAR(lossy.p_injection[0], 2.0536, 5e-4);
    EXPECT_GT(lossy.p_injection[0], dc.p_injection[0]);
    EXPECT_GT(lossy.total_loss_kw, 0.0);
    EXPECT_NEAR(lossy.p_injection[1], 1.9727, 5e-4);
    EXPECT_NEAR(lossy.p_injection[2], -4.0495, 5e-4);
    const auto four = dc_losses_solve(bundled("epts4")).solution;
    EXPECT_NEAR(four.p_injection[0], 1.3461, 5e-4);
    EXPECT_NEAR(four.p_injection[1], -1.7070, 5e-4);
    EXPECT_NEAR(std::abs(four.angles()[1]), 0.0192, 1e-4);
}

TEST(Residuals, SmallAtNewtonSolution) {
    for (const char* name : {"epts3_1", "epts3_2", "epts4"}) {
        const auto net = bundled(name);
        const auto y = build_ybus(net);
        const auto sol = newton_raphson_solve(net, 1e-10).solution;
        const Vector x = epts_state_from_solution(sol, net);
        EXPECT_LT(epts_residuals(x, net, y).cwiseAbs().maxCoeff(), 1e-9) << name;
    }
}

TEST(Residuals, FlatStateOnZeroDemand) {
    const auto net = zero_demand(bundled("epts3_1"));
    EptsVariables v = epts_unpack(Vector::Zero(6), net);
    v.vm.setOnes();
    v.va.setZero();
    // Unequal set points drive flows, so use a case whose set points are all 1.
    auto buses = std::vector<BusRecord>(net.buses().begin(), net.buses().end());
    for (auto& b : buses)
        if (b.v_set) b.v_set = 1.0;
    const NetworkCase flat(net.bases(), buses, std::vector<BranchRecord>(net.branches().begin(), net.branches().end()));
    const Vector x = epts_pack(v, flat);
    EXPECT_LT(epts_cost(x, flat, build_ybus(flat)), 1e-24);
}

TEST(Residuals, LayoutAndClosure) {
    const auto net = bundled("epts4");
    const EptsLayout lay(net);
    EXPECT_EQ(lay.pv.size(), 1u);
    EXPECT_EQ(lay.pq.size(), 2u);
    EXPECT_EQ(lay.state_size(), 8u);
    const auto y = build_ybus(net);
    const Vector x = random_state(net, 3);
    const auto v = epts_unpack(x, net);
    EXPECT_EQ(epts_pack(v, net), x);
    const auto s = complex_injection(v.vm, v.va, y);
    const Vector h = epts_residuals(x, net, y);
    // Rows: dP at PV then PQ, dQ at PQ, slack P, slack Q, Q at PV.
    EXPECT_NEAR(h[0], net.bus(lay.pv[0]).p_net() - s[lay.pv[0]].real(), 1e-12);
    EXPECT_NEAR(h[3], net.bus(lay.pq[0]).q_net() - s[lay.pq[0]].imag(), 1e-12);
    EXPECT_NEAR(h[5], v.p_slack - s[0].real(), 1e-12);
    EXPECT_NEAR(h[6], v.q_slack - s[0].imag(), 1e-12);
    EXPECT_NEAR(h[7], v.q_pv[0] - s[lay.pv[0]].imag(), 1e-12);
    EXPECT_NEAR(epts_cost(x, net, y), h.squaredNorm(), 1e-12);
    EXPECT_THROW(epts_residuals(Vector::Zero(3), net, y), InputError);
}

TEST(Jacobian, MatchesFiniteDifferences) {
    for (const char* name : {"epts3_1", "epts3_2", "epts4"}) {
        const auto net = bundled(name);
        const auto y = build_ybus(net);
        const Vector x = random_state(net, 7);
        const Eigen::MatrixXd j = epts_jacobian(x, net, y);
        const double h = 1e-6;
        for (Eigen::Index c = 0; c < x.size(); ++c) {
            Vector xp = x, xm = x;
            xp[c] += h;
            xm[c] -= h;
            const Vector fd = (epts_residuals(xp, net, y) - epts_residuals(xm, net, y)) / (2.0 * h);
            EXPECT_LT((j.col(c) - fd).cwiseAbs().maxCoeff(), 1e-6) << name << " column " << c;
        }
        EXPECT_LT((epts_gradient(x, net, y) - 2.0 * j.transpose() * epts_residuals(x, net, y)).norm(), 1e-12);
    }
}

TEST(Jacobian, ValidAtZeroState) {
    const auto net = bundled("epts4");
    const auto y = build_ybus(net);
    const Vector x = Vector::Zero(8);
    const Eigen::MatrixXd j = epts_jacobian(x, net, y);
    const double h = 1e-6;
    for (Eigen::Index c = 0; c < x.size(); ++c) {
        Vector xp = x, xm = x;
        xp[c] += h;
        xm[c] -= h;
        const Vector fd = (epts_residuals(xp, net, y) - epts_residuals(xm, net, y)) / (2.0 * h);
        EXPECT_LT((j.col(c) - fd).cwiseAbs().maxCoeff(), 1e-6) << "column " << c;
    }
}

TEST(SolveEpts, AgreesWithNewtonRaphson) {
    for (const char* name : {"epts3_1", "epts3_2", "epts4"}) {
        const auto net = bundled(name);
        const auto nr = newton_raphson_solve(net).solution;
        const auto tr = solve_epts(net);
        EXPECT_TRUE(tr.report.converged()) << name;
        EXPECT_LE(tr.report.final_cost, 1e-9) << name;
        EXPECT_LE(tr.report.iterations, 30u) << name;
        for (std::size_t k = 0; k < net.bus_count(); ++k) {
            EXPECT_NEAR(std::abs(tr.solution.voltage[k]), std::abs(nr.voltage[k]), 5e-4) << name;
            EXPECT_NEAR(std::arg(tr.solution.voltage[k]), std::arg(nr.voltage[k]), 5e-4) << name;
            EXPECT_NEAR(tr.solution.p_injection[k], nr.p_injection[k], 5e-4) << name;
            EXPECT_NEAR(tr.solution.q_injection[k], nr.q_injection[k], 5e-4) << name;
        }
        const auto fdh = solve_epts(net, epts_default_config(), HessianMode::FiniteDifference);
        EXPECT_TRUE(fdh.report.converged()) << name;
        EXPECT_LT(std::abs(std::abs(fdh.solution.voltage.back()) - std::abs(tr.solution.voltage.back())), 1e-6);
    }
}

TEST(SolveEpts, SteepestDescentOnWellConditionedCase) {
    const auto net = bundled("epts3_2");
    auto cfg = epts_default_config();
    cfg.max_iters = 5000;
    const auto sd = solve_epts_steepest(net, cfg);
    EXPECT_TRUE(sd.report.converged());
    const auto nr = newton_raphson_solve(net).solution;
    for (std::size_t k = 0; k < net.bus_count(); ++k)
        EXPECT_NEAR(std::abs(sd.solution.voltage[k]), std::abs(nr.voltage[k]), 1e-3);
}

TEST(SolveEpts, MethodsAgreeOnFourBus) {
    const auto net = bundled("epts4");
    const auto nr = newton_raphson_solve(net).solution;
    for (const auto& other : {decoupled_solve(net).solution, fast_decoupled_solve(net).solution, solve_epts(net).solution}) {
        for (std::size_t k = 0; k < net.bus_count(); ++k) {
            EXPECT_NEAR(std::abs(other.voltage[k]), std::abs(nr.voltage[k]), 1e-3);
            EXPECT_NEAR(other.p_injection[k], nr.p_injection[k], 1e-3);
        }
    }
}
