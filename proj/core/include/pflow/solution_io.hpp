#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pflow/flow.hpp"
#include "pflow/network.hpp"
#include "pflow/solver.hpp"

namespace pflow {

/// Fixed formatting used by every CSV writer ("%.12g"; non-finite values
/// print as an empty cell).
std::string format_number(double v);

/// id,kind,vm_pu,va_rad,p_pu,q_pu. vm_pu is empty when the method produced
/// no magnitudes.
void write_buses_csv(std::ostream& os, const FlowSolution& sol, const NetworkCase& net);

/// from,to,p_from_pu,q_from_pu,p_to_pu,q_to_pu,current_pu,loss_kw (external ids).
void write_branches_csv(std::ostream& os, const FlowSolution& sol, const NetworkCase& net);

/// iteration,cost,grad_norm,seconds. With `record_time` false every time is 0.
void write_convergence_csv(std::ostream& os, const SolveReport& report, bool record_time = true);

/// One line per solve in a run or comparison.
struct SummaryRow {
    std::string method;
    std::string status;  ///< "converged", "not-converged" or an error message
    std::optional<double> loss_kw;
    std::optional<double> final_cost;
    std::optional<double> v_min;
    std::string iterations;
    double seconds = 0.0;
};

void write_summary_header(std::ostream& os);
void write_summary_row(std::ostream& os, const SummaryRow& row);

/// Quotes a CSV cell when it contains a comma, quote or newline.
std::string csv_cell(const std::string& s);

}  // namespace pflow
