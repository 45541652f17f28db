#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "pflow/epds.hpp"
#include "pflow/epts.hpp"
#include "pflow/solution_io.hpp"
#include "test_support.hpp"

using namespace pflow;
using namespace pflow::test;

namespace {

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST(FormatNumber, FixedPrecision) {
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
    EXPECT_EQ(format_number(-2.5e-9), "-2.5e-09");
    EXPECT_EQ(format_number(std::numeric_limits<double>::quiet_NaN()), "");
    EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "");
}

TEST(CsvCell, Quoting) {
    EXPECT_EQ(csv_cell("plain"), "plain");
    EXPECT_EQ(csv_cell("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_cell("say \"hi\""), "\"say \"\"hi\"\"\"");
}

TEST(BusesCsv, SweepSolution) {
    const auto net = bundled("epds14");
    const auto sol = bfs_sweep_solve(net).solution;
    std::ostringstream os;
    write_buses_csv(os, sol, net);
    const auto l = lines(os.str());
    ASSERT_EQ(l.size(), 15u);
    EXPECT_EQ(l[0], "id,kind,vm_pu,va_rad,p_pu,q_pu");
    EXPECT_EQ(l[1].rfind("1,slack,1,0,", 0), 0u) << l[1];
}

TEST(BusesCsv, DcLeavesMagnitudeEmpty) {
    const auto net = bundled("epts3_1");
    std::ostringstream os;
    write_buses_csv(os, dc_solve(net).solution, net);
    const auto l = lines(os.str());
    EXPECT_EQ(l[2].rfind("2,pv,,", 0), 0u) << l[2];
}

TEST(BranchesCsv, UsesExternalIds) {
    const auto net = bundled("epts3_2");
    std::ostringstream os;
    write_branches_csv(os, newton_raphson_solve(net).solution, net);
    const auto l = lines(os.str());
    ASSERT_EQ(l.size(), 4u);
    EXPECT_EQ(l[0], "from,to,p_from_pu,q_from_pu,p_to_pu,q_to_pu,current_pu,loss_kw");
    EXPECT_EQ(l[1].rfind("1,2,", 0), 0u) << l[1];
}

TEST(ConvergenceCsv, TimingCanBeSuppressed) {
    SolveReport rep;
    rep.history = {{2.0, 1.0, 0.5}, {0.5, 0.25, 0.75}};
    std::ostringstream with, without;
    write_convergence_csv(with, rep, true);
    write_convergence_csv(without, rep, false);
    EXPECT_EQ(with.str(), "iteration,cost,grad_norm,seconds\n0,2,1,0.5\n1,0.5,0.25,0.75\n");
    EXPECT_EQ(without.str(), "iteration,cost,grad_norm,seconds\n0,2,1,0\n1,0.5,0.25,0\n");
}

TEST(Summary, RowFormatting) {
    std::ostringstream os;
    write_summary_header(os);
    write_summary_row(os, SummaryRow{"nr", "converged", 12.5, std::nullopt, 0.97, "3", 0.0});
    write_summary_row(os, SummaryRow{"decoupled", "error: x, y", std::nullopt, std::nullopt, std::nullopt, "-", 0.0});
    EXPECT_EQ(os.str(),
              "method,status,loss_kw,final_cost,v_min,iterations,time_s\n"
              "nr,converged,12.5,,0.97,3,0\n"
              "decoupled,\"error: x, y\",,,,-,0\n");
}
