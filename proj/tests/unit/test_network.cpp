#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "pflow/error.hpp"
#include "pflow/network.hpp"
#include "test_support.hpp"

using namespace pflow;
using namespace pflow::test;

namespace {

template <typename Fn>
std::string error_of(Fn fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST(NetworkCase, FourteenBusFeederShape) {
    const auto net = bundled("epds14");
    EXPECT_EQ(net.bus_count(), 14u);
    EXPECT_EQ(net.active_branch_count(), 13u);
    EXPECT_EQ(net.slack().kind, BusKind::Slack);
    EXPECT_EQ(net.slack().id, 1);
    EXPECT_DOUBLE_EQ(net.v_base_kv(), 23.0);

    double pd = 0.0, qd = 0.0;
    for (const auto& b : net.buses()) {
        pd += b.p_demand;
        qd += b.q_demand;
    }
    EXPECT_NEAR(net.bases().pu_to_kw(pd), 28700.0, 1e-9);
    EXPECT_NEAR(net.bases().pu_to_kw(qd), 5900.0, 1e-9);
    EXPECT_TRUE(check_radial(net));
}

TEST(NetworkCase, SlackIsStoredFirst) {
    const auto net = bundled("epts3_2");
    EXPECT_EQ(net.bus(0).id, 2);
    EXPECT_EQ(net.index_of(2), 0u);
    EXPECT_EQ(net.index_of(1), 1u);
    EXPECT_EQ(net.index_of(3), 2u);
    // Branch endpoints map through the dense indices.
    EXPECT_EQ(net.from_index(0), 1u);
    EXPECT_EQ(net.to_index(0), 0u);
}

TEST(NetworkCase, RejectsMultipleSlackBuses) {
    auto msg = error_of([] { NetworkCase(Bases{100, 23}, {slack_bus(1), slack_bus(2)}, {line(1, 2, 0.01, 0.01)}); });
    EXPECT_NE(msg.find("multiple slack buses"), std::string::npos) << msg;
}

TEST(NetworkCase, RejectsMissingSlack) {
    auto msg = error_of([] { NetworkCase(Bases{100, 23}, {pq_bus(1, 0, 0), pq_bus(2, 0, 0)}, {}); });
    EXPECT_NE(msg.find("missing slack"), std::string::npos) << msg;
}

TEST(NetworkCase, RejectsDuplicateIds) {
    auto msg = error_of([] { NetworkCase(Bases{100, 23}, {slack_bus(1), pq_bus(1, 0.1, 0)}, {}); });
    EXPECT_NE(msg.find("duplicate bus id"), std::string::npos) << msg;
}

TEST(NetworkCase, RejectsBranchToUnknownBus) {
    EXPECT_THROW(NetworkCase(Bases{100, 23}, {slack_bus(1), pq_bus(2, 0, 0)}, {line(1, 7, 0.01, 0.01)}), TopologyError);
    auto msg = error_of([] { NetworkCase(Bases{100, 23}, {slack_bus(1)}, {line(1, 7, 0.01, 0.01)}); });
    EXPECT_NE(msg.find("unknown bus 7"), std::string::npos) << msg;
}

TEST(NetworkCase, RejectsNonPositiveBase) {
    EXPECT_THROW(NetworkCase(Bases{0.0, 23}, {slack_bus(1)}, {}), InputError);
    EXPECT_THROW(NetworkCase(Bases{100, -1.0}, {slack_bus(1)}, {}), InputError);
}

TEST(NetworkCase, RejectsBadBranches) {
    const std::vector<BusRecord> buses{slack_bus(1), pq_bus(2, 0, 0)};
    EXPECT_THROW(NetworkCase(Bases{100, 23}, buses, {line(1, 2, 0.0, 0.0)}), InputError);
    EXPECT_THROW(NetworkCase(Bases{100, 23}, buses, {line(1, 2, -0.1, 0.1)}), InputError);
    EXPECT_THROW(NetworkCase(Bases{100, 23}, buses, {line(1, 1, 0.1, 0.1)}), InputError);
    EXPECT_THROW(NetworkCase(Bases{100, 23}, buses, {line(1, 2, 0.1, 0.1, 0.0, 2)}), InputError);
}

TEST(NetworkCase, RejectsVoltageSetpointOnPqBus) {
    auto b = pq_bus(2, 0.1, 0.0);
    b.v_set = 1.0;
    EXPECT_THROW(NetworkCase(Bases{100, 23}, {slack_bus(1), b}, {line(1, 2, 0.1, 0.1)}), InputError);
    EXPECT_THROW(NetworkCase(Bases{100, 23}, {slack_bus(1, 0.0)}, {}), InputError);
}

TEST(NetworkCase, ScaledInjectionsMultipliesDemandAndGeneration) {
    const auto net = bundled("epts4");
    const auto half = net.scaled_injections(0.5);
    for (std::size_t k = 0; k < net.bus_count(); ++k) {
        EXPECT_DOUBLE_EQ(half.bus(k).p_demand, 0.5 * net.bus(k).p_demand);
        EXPECT_DOUBLE_EQ(half.bus(k).p_net(), 0.5 * net.bus(k).p_net());
    }
}

TEST(Bases, PerUnitRoundTrip) {
    const Bases b{10.0, 12.66};
    for (double v : {0.0922, 1.5042, 2.0, 1e-4, 123.456}) {
        EXPECT_NEAR(b.pu_to_ohm(b.ohm_to_pu(v)), v, 1e-12 * v);
        EXPECT_NEAR(b.pu_to_kw(b.kw_to_pu(v)), v, 1e-12 * v);
        EXPECT_NEAR(b.pu_to_mw(b.mw_to_pu(v)), v, 1e-12 * v);
        EXPECT_NEAR(b.pu_to_kv(b.kv_to_pu(v)), v, 1e-12 * v);
        EXPECT_NEAR(b.pu_to_siemens(b.siemens_to_pu(v)), v, 1e-12 * v);
        EXPECT_NEAR(b.pu_to_amp(b.amp_to_pu(v)), v, 1e-12 * v);
    }
    EXPECT_NEAR(b.z_base_ohm(), 12.66 * 12.66 / 10.0, 1e-12);
}

TEST(ReorderBranches, SwapsReversedBranches) {
    const std::vector<BranchEnds> in{{2, 1}, {3, 2}};
    const std::vector<BranchEnds> want{{1, 2}, {2, 3}};
    EXPECT_EQ(reorder_branches(in, 1), want);
}

TEST(ReorderBranches, OrderedInputUnchanged) {
    const std::vector<BranchEnds> in{{1, 2}, {2, 3}};
    EXPECT_EQ(reorder_branches(in, 1), in);
}

TEST(ReorderBranches, DisconnectedGraph) {
    const std::vector<BranchEnds> in{{4, 5}, {1, 2}};
    auto msg = error_of([&] { reorder_branches(in, 1); });
    EXPECT_NE(msg.find("disconnected graph"), std::string::npos) << msg;
    EXPECT_NE(msg.find("bus 4"), std::string::npos) << msg;
}

TEST(ReorderBranches, MovesLateParentsForward) {
    const std::vector<BranchEnds> in{{3, 4}, {2, 3}, {1, 2}};
    const std::vector<BranchEnds> want{{1, 2}, {2, 3}, {3, 4}};
    EXPECT_EQ(reorder_branches(in, 1), want);
}

namespace {

// Random spanning tree on n buses with shuffled list order and random orientation.
std::vector<BranchEnds> random_tree(std::size_t n, std::mt19937_64& rng) {
    std::vector<int> ids(n);
    std::iota(ids.begin(), ids.end(), 1);
    std::shuffle(ids.begin() + 1, ids.end(), rng);
    std::vector<BranchEnds> edges;
    for (std::size_t i = 1; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> parent(0, i - 1);
        BranchEnds e{ids[parent(rng)], ids[i]};
        if (rng() & 1u) std::swap(e.sender, e.receiver);
        edges.push_back(e);
    }
    std::shuffle(edges.begin(), edges.end(), rng);
    return edges;
}

std::multiset<std::pair<int, int>> undirected(const std::vector<BranchEnds>& e) {
    std::multiset<std::pair<int, int>> out;
    for (const auto& b : e) out.emplace(std::min(b.sender, b.receiver), std::max(b.sender, b.receiver));
    return out;
}

}  // namespace

TEST(ReorderBranches, PropertiesOnRandomTrees) {
    std::mt19937_64 rng(20240601);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng() % 60;
        const auto tree = random_tree(n, rng);
        const auto once = reorder_branches(tree, 1);
        ASSERT_EQ(reorder_branches(once, 1), once) << "trial " << trial;
        ASSERT_EQ(undirected(once), undirected(tree));
        std::set<int> reached{1};
        for (const auto& b : once) {
            ASSERT_TRUE(reached.count(b.sender)) << "sender not yet reachable, trial " << trial;
            ASSERT_TRUE(reached.insert(b.receiver).second) << "receiver appears twice, trial " << trial;
        }
    }
}

TEST(CheckRadial, FeederAndVariants) {
    const auto net = bundled("epds33");
    EXPECT_EQ(net.active_branch_count(), 32u);
    EXPECT_TRUE(check_radial(net));

    auto branches = std::vector<BranchRecord>(net.branches().begin(), net.branches().end());
    branches.back().status = 1;  // close one tie switch
    EXPECT_FALSE(check_radial(net.with_branches(branches)));

    EXPECT_TRUE(check_radial(NetworkCase(Bases{100, 23}, {slack_bus(1)}, {})));
}

TEST(CheckRadial, DisconnectedIsNotRadial) {
    const NetworkCase net(Bases{100, 23}, {slack_bus(1), pq_bus(2, 0, 0), pq_bus(3, 0, 0)},
                          {line(1, 2, 0.1, 0.1), line(2, 3, 0.1, 0.1, 0.0, 0)});
    EXPECT_FALSE(check_radial(net));
}
