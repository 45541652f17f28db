#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "pflow/network.hpp"

namespace pflow {

using Complex = std::complex<double>;

/// Electrical state of one branch, oriented from `from` to `to` (dense bus
/// indices). `p_to`/`q_to` is the power delivered at the receiving end;
/// `p_from`/`q_from` the power leaving the sending end. Per unit.
struct BranchFlow {
    std::size_t branch = 0;  ///< index into NetworkCase::branches()
    std::size_t from = 0;
    std::size_t to = 0;
    Complex current;         ///< series current, from -> to
    double p_from = 0.0;
    double q_from = 0.0;
    double p_to = 0.0;
    double q_to = 0.0;
    double loss_kw = 0.0;    ///< r |I|^2 in kW
};

/// Physical answer of a power-flow solve, indexed by dense bus index.
struct FlowSolution {
    std::vector<Complex> voltage;
    /// False for methods that only produce angles (DC); magnitudes are then
    /// placeholders and should not be reported.
    bool has_magnitudes = true;
    std::vector<double> p_injection;  ///< net injection, p.u.
    std::vector<double> q_injection;
    std::vector<BranchFlow> branches;  ///< active branches only
    Complex substation;                ///< slack injection, p.u.
    double total_loss_kw = 0.0;
    double v_min = 0.0;

    std::vector<double> magnitudes() const;
    std::vector<double> angles() const;
};

/// Builds a FlowSolution from bus voltages with the pi branch model: series
/// current (V_f - V_t) / (r + jx), half line charging at each end, bus shunts.
FlowSolution flow_from_voltages(const NetworkCase& net, std::vector<Complex> voltage);

}  // namespace pflow
