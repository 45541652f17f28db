#include "pflow/solution_io.hpp"

#include <cmath>
#include <cstdio>

namespace pflow {

std::string format_number(double v) {
    if (!std::isfinite(v)) return "";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

void write_buses_csv(std::ostream& os, const FlowSolution& sol, const NetworkCase& net) {
    os << "id,kind,vm_pu,va_rad,p_pu,q_pu\n";
    for (std::size_t k = 0; k < net.bus_count(); ++k) {
        const auto& b = net.bus(k);
        const Complex v = sol.voltage.at(k);
        os << b.id << ',' << to_string(b.kind) << ',' << (sol.has_magnitudes ? format_number(std::abs(v)) : "") << ','
           << format_number(std::arg(v)) << ',' << format_number(sol.p_injection.at(k)) << ','
           << format_number(sol.q_injection.at(k)) << '\n';
    }
}

void write_branches_csv(std::ostream& os, const FlowSolution& sol, const NetworkCase& net) {
    os << "from,to,p_from_pu,q_from_pu,p_to_pu,q_to_pu,current_pu,loss_kw\n";
    for (const auto& bf : sol.branches) {
        os << net.bus(bf.from).id << ',' << net.bus(bf.to).id << ',' << format_number(bf.p_from) << ','
           << format_number(bf.q_from) << ',' << format_number(bf.p_to) << ',' << format_number(bf.q_to) << ','
           << format_number(std::abs(bf.current)) << ',' << format_number(bf.loss_kw) << '\n';
    }
}

void write_convergence_csv(std::ostream& os, const SolveReport& report, bool record_time) {
    os << "iteration,cost,grad_norm,seconds\n";
    for (std::size_t i = 0; i < report.history.size(); ++i) {
        const auto& h = report.history[i];
        os << i << ',' << format_number(h.cost) << ',' << format_number(h.grad_norm) << ','
           << (record_time ? format_number(h.seconds) : "0") << '\n';
    }
}

void write_summary_header(std::ostream& os) {
    os << "method,status,loss_kw,final_cost,v_min,iterations,time_s\n";
}

void write_summary_row(std::ostream& os, const SummaryRow& row) {
    auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
    os << csv_cell(row.method) << ',' << csv_cell(row.status) << ',' << opt(row.loss_kw) << ','
       << opt(row.final_cost) << ',' << opt(row.v_min) << ',' << csv_cell(row.iterations) << ','
       << format_number(row.seconds) << '\n';
}

}  // namespace pflow
