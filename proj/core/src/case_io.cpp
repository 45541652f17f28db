#include "pflow/case_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>
#include <variant>

#include <nlohmann/json.hpp>
#include "pflow/error.hpp"

namespace pflow {

namespace {

using json = nlohmann::json;
using Value = std::variant<double, std::string>;

/// One record (a JSON object or a CSV row) whose fields are consumed by name.
/// Whatever is left over after parsing is an unknown field.
class FieldMap {
  public:
    FieldMap(std::string where, std::map<std::string, Value> fields) : where_(std::move(where)), fields_(std::move(fields)) {}

    const std::string& where() const { return where_; }

    std::optional<Value> take(const std::string& key) {
        auto it = fields_.find(key);
        if (it == fields_.end()) return std::nullopt;
        Value v = std::move(it->second);
        fields_.erase(it);
        return v;
    }

    std::optional<double> take_number(const std::string& key) {
        auto v = take(key);
        if (!v) return std::nullopt;
        if (auto d = std::get_if<double>(&*v)) return *d;
        const auto& s = std::get<std::string>(*v);
        double out = 0.0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        if (ec != std::errc{} || ptr != s.data() + s.size()) {
            throw InputError(where_ + ": field '" + key + "' is not a number ('" + s + "')");
        }
        return out;
    }

    std::optional<std::string> take_string(const std::string& key) {
        auto v = take(key);
        if (!v) return std::nullopt;
        if (auto s = std::get_if<std::string>(&*v)) return *s;
        throw InputError(where_ + ": field '" + key + "' must be a string");
    }

    std::optional<int> take_int(const std::string& key) {
        auto d = take_number(key);
        if (!d) return std::nullopt;
        if (std::floor(*d) != *d || std::abs(*d) > 1e9) {
            throw InputError(where_ + ": field '" + key + "' must be an integer");
        }
        return static_cast<int>(*d);
    }

    /// A physical quantity that may be spelled several ways, each with its own
    /// conversion to per unit. At most one spelling may be present.
    std::optional<double> take_quantity(const std::string& base_key,
                                        std::initializer_list<std::pair<const char*, std::function<double(double)>>> units) {
        std::optional<double> result;
        std::string used;
        auto consider = [&](const std::string& key, const std::function<double(double)>& conv) {
            auto v = take_number(key);
            if (!v) return;
            if (result) throw InputError(where_ + ": conflicting fields '" + used + "' and '" + key + "'");
            result = conv ? conv(*v) : *v;
            used = key;
        };
        consider(base_key, nullptr);
        consider(base_key + "_pu", nullptr);
        for (const auto& [suffix, conv] : units) consider(base_key + "_" + suffix, conv);
        return result;
    }

    void require_empty() const {
        if (!fields_.empty()) throw InputError(where_ + ": unknown field '" + fields_.begin()->first + "'");
    }

  private:
    std::string where_;
    std::map<std::string, Value> fields_;
};

FieldMap from_json_object(const json& obj, const std::string& where) {
    if (!obj.is_object()) throw InputError(where + ": expected an object");
    std::map<std::string, Value> fields;
    for (const auto& [key, val] : obj.items()) {
        if (val.is_number()) {
            fields.emplace(key, val.get<double>());
        } else if (val.is_string()) {
            fields.emplace(key, val.get<std::string>());
        } else if (val.is_null()) {
            continue;
        } else {
            throw InputError(where + ": field '" + key + "' has unsupported type");
        }
    }
    return FieldMap(where, std::move(fields));
}

BusKind parse_kind(std::string s, const std::string& where) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (s == "slack") return BusKind::Slack;
    if (s == "pv") return BusKind::PV;
    if (s == "pq") return BusKind::PQ;
    throw InputError(where + ": unknown bus kind '" + s + "'");
}

Bases take_bases(FieldMap& f) {
    auto s = f.take_number("s_base_mva");
    auto v = f.take_number("v_base_kv");
    if (!s) throw InputError(f.where() + ": missing s_base_mva");
    if (!v) throw InputError(f.where() + ": missing v_base_kv");
    if (!(*s > 0.0)) throw InputError("non-positive base: s_base_mva");
    if (!(*v > 0.0)) throw InputError("non-positive base: v_base_kv");
    return Bases{*s, *v};
}

BusRecord build_bus(FieldMap& f, const Bases& base) {
    BusRecord b;
    auto id = f.take_int("id");
    if (!id) throw InputError(f.where() + ": missing bus id");
    b.id = *id;
    auto kind = f.take_string("kind");
    if (!kind) throw InputError(f.where() + ": missing bus kind");
    b.kind = parse_kind(*kind, f.where());

    auto kw = [&](double v) { return base.kw_to_pu(v); };
    auto mw = [&](double v) { return base.mw_to_pu(v); };
    b.p_demand = f.take_quantity("pd", {{"kw", kw}, {"mw", mw}}).value_or(0.0);
    b.q_demand = f.take_quantity("qd", {{"kvar", kw}, {"mvar", mw}}).value_or(0.0);
    b.p_gen = f.take_quantity("pg", {{"kw", kw}, {"mw", mw}});
    b.q_gen = f.take_quantity("qg", {{"kvar", kw}, {"mvar", mw}});
    b.v_set = f.take_quantity("vset", {{"kv", [&](double v) { return base.kv_to_pu(v); }}});
    b.theta_set = f.take_quantity("theta", {{"deg", [](double v) { return v * std::numbers::pi / 180.0; }}});
    b.shunt_b = f.take_quantity("shunt_b", {{"mvar", mw}}).value_or(0.0);
    f.require_empty();
    return b;
}

BranchRecord build_branch(FieldMap& f, const Bases& base) {
    BranchRecord br;
    auto from = f.take_int("from");
    auto to = f.take_int("to");
    if (!from || !to) throw InputError(f.where() + ": missing from/to");
    br.from_bus = *from;
    br.to_bus = *to;
    auto ohm = [&](double v) { return base.ohm_to_pu(v); };
    auto amp = [&](double v) { return base.amp_to_pu(v); };
    auto r = f.take_quantity("r", {{"ohm", ohm}});
    auto x = f.take_quantity("x", {{"ohm", ohm}});
    if (!r || !x) throw InputError(f.where() + ": missing r or x");
    br.r = *r;
    br.x = *x;
    br.b_half = f.take_quantity("b_half", {{"siemens", [&](double v) { return base.siemens_to_pu(v); }}}).value_or(0.0);
    br.status = f.take_int("status").value_or(1);
    br.i_max = f.take_quantity("i_max", {{"a", amp}});
    br.i_min = f.take_quantity("i_min", {{"a", amp}});
    f.require_empty();
    return br;
}

// Minimal CSV: comma separated, optional double-quoted cells, '#' directive lines.
struct CsvTable {
    std::map<std::string, std::string> directives;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) throw InputError("csv: unterminated quote");
    cells.push_back(trim(cur));
    return cells;
}

CsvTable parse_csv(std::string_view text, const std::string& what) {
    CsvTable t;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        auto s = trim(line);
        if (s.empty()) continue;
        if (s.front() == '#') {
            auto colon = s.find(':');
            if (colon != std::string::npos) t.directives[trim(s.substr(1, colon - 1))] = trim(s.substr(colon + 1));
            continue;
        }
        auto cells = split_csv_line(s);
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw InputError(what + ": row " + std::to_string(t.rows.size() + 1) + " has " + std::to_string(cells.size()) +
                             " cells, header has " + std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(cells));
    }
    if (t.header.empty()) throw InputError(what + ": missing header row");
    return t;
}

FieldMap row_fields(const CsvTable& t, std::size_t r, const std::string& what) {
    std::map<std::string, Value> fields;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
        if (t.rows[r][c].empty()) continue;
        fields.emplace(t.header[c], t.rows[r][c]);
    }
    return FieldMap(what + " row " + std::to_string(r + 1), std::move(fields));
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InputError("cannot open case file '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool ends_with(const std::string& s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

NetworkCase parse_case_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw InputError("case document must be a JSON object");

    std::string name;
    std::optional<Bases> bases;
    std::optional<double> v_min, v_max;
    std::vector<BusRecord> buses;
    std::vector<BranchRecord> branches;
    const json* bus_array = nullptr;
    const json* branch_array = nullptr;

    for (const auto& [key, val] : doc.items()) {
        if (key == "name" || key == "description") {
            if (!val.is_string()) throw InputError("field '" + key + "' must be a string");
            if (key == "name") name = val.get<std::string>();
        } else if (key == "base") {
            auto f = from_json_object(val, "base");
            bases = take_bases(f);
            v_min = f.take_number("v_min");
            v_max = f.take_number("v_max");
            f.require_empty();
        } else if (key == "buses") {
            bus_array = &val;
        } else if (key == "branches") {
            branch_array = &val;
        } else {
            throw InputError("unknown field '" + key + "'");
        }
    }
    if (!bases) throw InputError("missing 'base' object");
    if (!bus_array || !bus_array->is_array()) throw InputError("missing 'buses' array");
    if (branch_array && !branch_array->is_array()) throw InputError("'branches' must be an array");

    for (std::size_t i = 0; i < bus_array->size(); ++i) {
        auto f = from_json_object((*bus_array)[i], "buses[" + std::to_string(i) + "]");
        buses.push_back(build_bus(f, *bases));
    }
    if (branch_array) {
        for (std::size_t i = 0; i < branch_array->size(); ++i) {
            auto f = from_json_object((*branch_array)[i], "branches[" + std::to_string(i) + "]");
            branches.push_back(build_branch(f, *bases));
        }
    }
    return NetworkCase(*bases, std::move(buses), std::move(branches), v_min, v_max, std::move(name));
}

NetworkCase parse_case_csv(std::string_view bus_table, std::string_view branch_table) {
    auto buses_csv = parse_csv(bus_table, "bus table");
    auto branches_csv = parse_csv(branch_table, "branch table");

    std::map<std::string, Value> dir;
    std::string name;
    for (const auto& [k, v] : buses_csv.directives) {
        if (k == "name") {
            name = v;
        } else {
            dir.emplace(k, v);
        }
    }
    FieldMap base_fields("bus table directives", std::move(dir));
    Bases bases = take_bases(base_fields);
    auto v_min = base_fields.take_number("v_min");
    auto v_max = base_fields.take_number("v_max");
    base_fields.require_empty();

    std::vector<BusRecord> buses;
    for (std::size_t r = 0; r < buses_csv.rows.size(); ++r) {
        auto f = row_fields(buses_csv, r, "bus table");
        buses.push_back(build_bus(f, bases));
    }
    std::vector<BranchRecord> branches;
    for (std::size_t r = 0; r < branches_csv.rows.size(); ++r) {
        auto f = row_fields(branches_csv, r, "branch table");
        branches.push_back(build_branch(f, bases));
    }
    return NetworkCase(bases, std::move(buses), std::move(branches), v_min, v_max, std::move(name));
}

NetworkCase load_case(const std::filesystem::path& path) {
    const std::string s = path.string();
    if (ends_with(s, ".buses.csv") || ends_with(s, ".branches.csv")) {
        const std::string stem = s.substr(0, s.size() - (ends_with(s, ".buses.csv") ? 10 : 13));
        return parse_case_csv(read_file(stem + ".buses.csv"), read_file(stem + ".branches.csv"));
    }
    return parse_case_json(read_file(path));
}

std::string write_case_json(const NetworkCase& net) {
    json doc;
    if (!net.name().empty()) doc["name"] = net.name();
    doc["base"] = {{"s_base_mva", net.s_base_mva()}, {"v_base_kv", net.v_base_kv()}};
    if (net.v_min()) doc["base"]["v_min"] = *net.v_min();
    if (net.v_max()) doc["base"]["v_max"] = *net.v_max();
    doc["buses"] = json::array();
    for (const auto& b : net.buses()) {
        json j = {{"id", b.id}, {"kind", to_string(b.kind)}};
        if (b.p_demand != 0.0) j["pd"] = b.p_demand;
        if (b.q_demand != 0.0) j["qd"] = b.q_demand;
        if (b.p_gen) j["pg"] = *b.p_gen;
        if (b.q_gen) j["qg"] = *b.q_gen;
        if (b.v_set) j["vset"] = *b.v_set;
        if (b.theta_set) j["theta"] = *b.theta_set;
        if (b.shunt_b != 0.0) j["shunt_b"] = b.shunt_b;
        doc["buses"].push_back(std::move(j));
    }
    doc["branches"] = json::array();
    for (const auto& br : net.branches()) {
        json j = {{"from", br.from_bus}, {"to", br.to_bus}, {"r", br.r}, {"x", br.x}, {"status", br.status}};
        if (br.b_half != 0.0) j["b_half"] = br.b_half;
        if (br.i_max) j["i_max"] = *br.i_max;
        if (br.i_min) j["i_min"] = *br.i_min;
        doc["branches"].push_back(std::move(j));
    }
    return doc.dump(2);
}

}  // namespace pflow
