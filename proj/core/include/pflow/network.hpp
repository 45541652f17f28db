#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace pflow {

enum class BusKind { Slack, PV, PQ };

const char* to_string(BusKind kind);

/// One network node. All electrical quantities are per unit on the case bases;
/// angles in radians. Absent generation fields mean "unknown".
struct BusRecord {
    int id = 0;
    BusKind kind = BusKind::PQ;
    double p_demand = 0.0;
    double q_demand = 0.0;
    std::optional<double> p_gen;
    std::optional<double> q_gen;
    std::optional<double> v_set;
    std::optional<double> theta_set;
    double shunt_b = 0.0;

    /// Scheduled net injection (generation minus demand); unknown generation counts as zero.
    double p_net() const { return p_gen.value_or(0.0) - p_demand; }
    double q_net() const { return q_gen.value_or(0.0) - q_demand; }
};

/// Series branch between two buses, addressed by external bus id.
/// `status` is the switch state (1 closed, 0 open).
struct BranchRecord {
    int from_bus = 0;
    int to_bus = 0;
    double r = 0.0;
    double x = 0.0;
    double b_half = 0.0;
    int status = 1;
    std::optional<double> i_max;
    std::optional<double> i_min;

    bool active() const { return status != 0; }
};

/// System bases used for per-unit conversion. Currents use the three-phase
/// convention I_base = S_base / (sqrt(3) V_base).
struct Bases {
    double s_base_mva = 100.0;
    double v_base_kv = 1.0;

    double z_base_ohm() const { return v_base_kv * v_base_kv / s_base_mva; }
    double s_base_kva() const { return s_base_mva * 1000.0; }
    double i_base_amp() const;

    double ohm_to_pu(double ohm) const { return ohm / z_base_ohm(); }
    double pu_to_ohm(double pu) const { return pu * z_base_ohm(); }
    double kw_to_pu(double kw) const { return kw / s_base_kva(); }
    double pu_to_kw(double pu) const { return pu * s_base_kva(); }
    double mw_to_pu(double mw) const { return mw / s_base_mva; }
    double pu_to_mw(double pu) const { return pu * s_base_mva; }
    double kv_to_pu(double kv) const { return kv / v_base_kv; }
    double pu_to_kv(double pu) const { return pu * v_base_kv; }
    double siemens_to_pu(double s) const { return s * z_base_ohm(); }
    double pu_to_siemens(double pu) const { return pu / z_base_ohm(); }
    double amp_to_pu(double a) const { return a / i_base_amp(); }
    double pu_to_amp(double pu) const { return pu * i_base_amp(); }
};

/// Immutable, validated, per-unit network description.
///
/// Buses are stored slack-first; the position of a bus in `buses()` is its
/// dense index, which every solver uses. Branches keep the order (and
/// orientation) they were given in. External ids are preserved for reporting.
class NetworkCase {
  public:
    /// Validates and builds a case. Throws InputError for bad values or a
    /// missing/duplicated slack, TopologyError for unknown endpoints.
    NetworkCase(Bases bases, std::vector<BusRecord> buses, std::vector<BranchRecord> branches,
                std::optional<double> v_min = std::nullopt, std::optional<double> v_max = std::nullopt,
                std::string name = {});

    const Bases& bases() const { return bases_; }
    double s_base_mva() const { return bases_.s_base_mva; }
    double v_base_kv() const { return bases_.v_base_kv; }
    std::optional<double> v_min() const { return v_min_; }
    std::optional<double> v_max() const { return v_max_; }
    const std::string& name() const { return name_; }

    std::span<const BusRecord> buses() const { return buses_; }
    std::span<const BranchRecord> branches() const { return branches_; }
    std::size_t bus_count() const { return buses_.size(); }
    std::size_t branch_count() const { return branches_.size(); }
    const BusRecord& bus(std::size_t index) const { return buses_.at(index); }
    const BranchRecord& branch(std::size_t k) const { return branches_.at(k); }

    /// Dense index of the slack bus; always 0.
    static constexpr std::size_t slack_index() { return 0; }
    const BusRecord& slack() const { return buses_.front(); }
    /// Slack voltage magnitude (v_set, defaulting to 1 p.u.).
    double slack_voltage() const { return buses_.front().v_set.value_or(1.0); }

    std::size_t index_of(int bus_id) const;
    std::size_t from_index(std::size_t branch) const { return ends_.at(branch).first; }
    std::size_t to_index(std::size_t branch) const { return ends_.at(branch).second; }

    std::size_t active_branch_count() const;

    /// Same buses and bases with a new branch list (re-validated).
    NetworkCase with_branches(std::vector<BranchRecord> branches) const;
    /// Same case with demands and scheduled generation multiplied by `factor`.
    NetworkCase scaled_injections(double factor) const;

  private:
    Bases bases_;
    std::vector<BusRecord> buses_;
    std::vector<BranchRecord> branches_;
    std::vector<std::pair<std::size_t, std::size_t>> ends_;
    std::unordered_map<int, std::size_t> index_;
    std::optional<double> v_min_;
    std::optional<double> v_max_;
    std::string name_;
};

/// Branch endpoints as (sender, receiver) bus ids.
struct BranchEnds {
    int sender = 0;
    int receiver = 0;
    friend bool operator==(const BranchEnds&, const BranchEnds&) = default;
};

/// Position of an input branch in the reorganized list and whether its
/// endpoints were swapped.
struct OrderedBranch {
    std::size_t input_index = 0;
    bool swapped = false;
};

/// Orients every branch away from `slack` and orders them so that each
/// branch's sender is reached through earlier branches only. Branches whose
/// both ends are already reached (loops) keep their orientation and go last.
/// Throws TopologyError("disconnected graph") if a bus cannot be reached.
std::vector<OrderedBranch> branch_order(std::span<const BranchEnds> branches, int slack);

std::vector<BranchEnds> reorder_branches(std::span<const BranchEnds> branches, int slack);

/// True iff the active branches form a spanning tree of all buses.
bool check_radial(const NetworkCase& net);

}  // namespace pflow
