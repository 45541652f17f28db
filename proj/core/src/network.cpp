#include "pflow/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "pflow/error.hpp"

namespace pflow {

const char* to_string(BusKind kind) {
    switch (kind) {
        case BusKind::Slack: return "slack";
        case BusKind::PV: return "pv";
        case BusKind::PQ: return "pq";
    }
    return "?";
}

double Bases::i_base_amp() const { return s_base_mva * 1e3 / (std::sqrt(3.0) * v_base_kv); }

namespace {

bool finite_opt(const std::optional<double>& v) { return !v || std::isfinite(*v); }

std::string bus_label(int id) { return "bus " + std::to_string(id); }

void validate_bus(const BusRecord& b) {
    if (b.id <= 0) throw InputError("bus id must be positive (got " + std::to_string(b.id) + ")");
    if (!std::isfinite(b.p_demand) || !std::isfinite(b.q_demand) || !std::isfinite(b.shunt_b) ||
        !finite_opt(b.p_gen) || !finite_opt(b.q_gen) || !finite_opt(b.v_set) || !finite_opt(b.theta_set)) {
        throw InputError(bus_label(b.id) + ": non-finite value");
    }
    if (b.kind == BusKind::PQ && b.v_set) throw InputError(bus_label(b.id) + ": PQ bus carries a voltage setpoint");
    if (b.v_set && *b.v_set <= 0.0) throw InputError(bus_label(b.id) + ": v_set must be positive");
}

void validate_branch(const BranchRecord& br) {
    const std::string label = "branch " + std::to_string(br.from_bus) + "-" + std::to_string(br.to_bus);
    if (!std::isfinite(br.r) || !std::isfinite(br.x) || !std::isfinite(br.b_half) || !finite_opt(br.i_max) ||
        !finite_opt(br.i_min)) {
        throw InputError(label + ": non-finite value");
    }
    if (br.from_bus == br.to_bus) throw InputError(label + ": from_bus equals to_bus");
    if (br.r < 0.0) throw InputError(label + ": negative resistance");
    if (br.r == 0.0 && br.x == 0.0) throw InputError(label + ": zero impedance (r = x = 0)");
    if (br.status != 0 && br.status != 1) throw InputError(label + ": status must be 0 or 1");
}

}  // namespace

NetworkCase::NetworkCase(Bases bases, std::vector<BusRecord> buses, std::vector<BranchRecord> branches,
                         std::optional<double> v_min, std::optional<double> v_max, std::string name)
    : bases_(bases), branches_(std::move(branches)), v_min_(v_min), v_max_(v_max), name_(std::move(name)) {
    if (!(bases_.s_base_mva > 0.0) || !std::isfinite(bases_.s_base_mva)) throw InputError("non-positive base: s_base_mva");
    if (!(bases_.v_base_kv > 0.0) || !std::isfinite(bases_.v_base_kv)) throw InputError("non-positive base: v_base_kv");
    if (buses.empty()) throw InputError("case has no buses");

    std::size_t slack_count = 0;
    std::unordered_set<int> seen;
    for (const auto& b : buses) {
        validate_bus(b);
        if (!seen.insert(b.id).second) throw InputError("duplicate bus id " + std::to_string(b.id));
        if (b.kind == BusKind::Slack) ++slack_count;
    }
    if (slack_count == 0) throw InputError("missing slack bus");
    if (slack_count > 1) throw InputError("multiple slack buses");

    // Slack first, everything else in input order.
    auto slack_it = std::find_if(buses.begin(), buses.end(), [](const BusRecord& b) { return b.kind == BusKind::Slack; });
    std::rotate(buses.begin(), slack_it, slack_it + 1);
    buses_ = std::move(buses);
    for (std::size_t i = 0; i < buses_.size(); ++i) index_.emplace(buses_[i].id, i);

    ends_.reserve(branches_.size());
    for (const auto& br : branches_) {
        validate_branch(br);
        auto f = index_.find(br.from_bus);
        auto t = index_.find(br.to_bus);
        if (f == index_.end() || t == index_.end()) {
            throw TopologyError("branch to unknown bus " + std::to_string(f == index_.end() ? br.from_bus : br.to_bus));
        }
        ends_.emplace_back(f->second, t->second);
    }
}

std::size_t NetworkCase::index_of(int bus_id) const {
    auto it = index_.find(bus_id);
    if (it == index_.end()) throw InputError("unknown bus id " + std::to_string(bus_id));
    return it->second;
}

std::size_t NetworkCase::active_branch_count() const {
    return static_cast<std::size_t>(
        std::count_if(branches_.begin(), branches_.end(), [](const BranchRecord& b) { return b.active(); }));
}

NetworkCase NetworkCase::with_branches(std::vector<BranchRecord> branches) const {
    return NetworkCase(bases_, buses_, std::move(branches), v_min_, v_max_, name_);
}

NetworkCase NetworkCase::scaled_injections(double factor) const {
    auto buses = buses_;
    for (auto& b : buses) {
        b.p_demand *= factor;
        b.q_demand *= factor;
        if (b.p_gen) *b.p_gen *= factor;
        if (b.q_gen) *b.q_gen *= factor;
    }
    return NetworkCase(bases_, std::move(buses), branches_, v_min_, v_max_, name_);
}

std::vector<OrderedBranch> branch_order(std::span<const BranchEnds> branches, int slack) {
    std::unordered_set<int> reached{slack};
    std::vector<bool> placed(branches.size(), false);
    std::vector<OrderedBranch> order;
    order.reserve(branches.size());

    // Repeated passes of the sender/receiver swap rule; each pass emits the
    // branches that become attachable, in list order.
    bool progress = true;
    while (progress && order.size() < branches.size()) {
        progress = false;
        for (std::size_t i = 0; i < branches.size(); ++i) {
            if (placed[i]) continue;
            const auto& b = branches[i];
            const bool s_in = reached.contains(b.sender);
            const bool r_in = reached.contains(b.receiver);
            if (s_in == r_in) continue;
            order.push_back({i, r_in});
            reached.insert(s_in ? b.receiver : b.sender);
            placed[i] = true;
            progress = true;
        }
    }
    for (std::size_t i = 0; i < branches.size(); ++i) {
        if (placed[i]) continue;
        const auto& b = branches[i];
        if (!reached.contains(b.sender) || !reached.contains(b.receiver)) {
            const int missing = reached.contains(b.sender) ? b.receiver : b.sender;
            throw TopologyError("disconnected graph (bus " + std::to_string(missing) + " unreachable)");
        }
        order.push_back({i, false});
    }
    return order;
}

std::vector<BranchEnds> reorder_branches(std::span<const BranchEnds> branches, int slack) {
    std::vector<BranchEnds> out;
    out.reserve(branches.size());
    for (const auto& ob : branch_order(branches, slack)) {
        const auto& b = branches[ob.input_index];
        out.push_back(ob.swapped ? BranchEnds{b.receiver, b.sender} : b);
    }
    return out;
}

bool check_radial(const NetworkCase& net) {
    const std::size_t n = net.bus_count();
    if (net.active_branch_count() != n - 1) return false;

    // Union-find: a tree on n nodes with n-1 edges has no cycle.
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    };
    for (std::size_t k = 0; k < net.branch_count(); ++k) {
        if (!net.branch(k).active()) continue;
        auto a = find(net.from_index(k));
        auto b = find(net.to_index(k));
        if (a == b) return false;
        parent[a] = b;
    }
    return true;
}

}  // namespace pflow
