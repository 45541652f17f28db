#include "pflow/flow.hpp"

#include <algorithm>
#include <cmath>

namespace pflow {

std::vector<double> FlowSolution::magnitudes() const {
    std::vector<double> out(voltage.size());
    std::transform(voltage.begin(), voltage.end(), out.begin(), [](Complex v) { return std::abs(v); });
    return out;
}

std::vector<double> FlowSolution::angles() const {
    std::vector<double> out(voltage.size());
    std::transform(voltage.begin(), voltage.end(), out.begin(), [](Complex v) { return std::arg(v); });
    return out;
}

FlowSolution flow_from_voltages(const NetworkCase& net, std::vector<Complex> voltage) {
    const std::size_t n = net.bus_count();
    FlowSolution sol;
    sol.voltage = std::move(voltage);
    std::vector<Complex> injection(n, Complex{});

    for (std::size_t i = 0; i < n; ++i) {
        // Power absorbed by the bus shunt: V conj(j b V) = -j b |V|^2.
        const double vm2 = std::norm(sol.voltage[i]);
        injection[i] += Complex(0.0, -net.bus(i).shunt_b * vm2);
    }
    for (std::size_t k = 0; k < net.branch_count(); ++k) {
        const auto& br = net.branch(k);
        if (!br.active()) continue;
        const std::size_t f = net.from_index(k), t = net.to_index(k);
        const Complex vf = sol.voltage[f], vt = sol.voltage[t];
        const Complex i_series = (vf - vt) / Complex(br.r, br.x);
        const Complex s_from = vf * std::conj(i_series + Complex(0.0, br.b_half) * vf);
        const Complex s_to = vt * std::conj(i_series - Complex(0.0, br.b_half) * vt);
        BranchFlow bf;
        bf.branch = k;
        bf.from = f;
        bf.to = t;
        bf.current = i_series;
        bf.p_from = s_from.real();
        bf.q_from = s_from.imag();
        bf.p_to = s_to.real();
        bf.q_to = s_to.imag();
        bf.loss_kw = br.r * std::norm(i_series) * net.bases().s_base_kva();
        sol.total_loss_kw += bf.loss_kw;
        injection[f] += s_from;
        injection[t] -= s_to;
        sol.branches.push_back(bf);
    }

    sol.p_injection.resize(n);
    sol.q_injection.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        sol.p_injection[i] = injection[i].real();
        sol.q_injection[i] = injection[i].imag();
    }
    sol.substation = injection[NetworkCase::slack_index()];
    auto mags = sol.magnitudes();
    sol.v_min = mags.empty() ? 0.0 : *std::min_element(mags.begin(), mags.end());
    return sol;
}

}  // namespace pflow
