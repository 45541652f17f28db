#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "pflow/network.hpp"

namespace pflow {

/// Parses the canonical JSON case document:
///
///   {"name": "...",
///    "base": {"s_base_mva": 100, "v_base_kv": 23, "v_min": 0.9, "v_max": 1.1},
///    "buses": [{"id": 1, "kind": "slack|pv|pq", "pd": ..., "qd": ..., "pg": ..., "qg": ...,
///               "vset": ..., "theta": ..., "shunt_b": ...}],
///    "branches": [{"from": 1, "to": 2, "r": ..., "x": ..., "b_half": ..., "status": 1,
///                  "i_max": ..., "i_min": ...}]}
///
/// Bare field names (and the `_pu` spelling) are per unit. Physical units are
/// selected per field with a suffix: pd_kw/pd_mw, qd_kvar/qd_mvar, pg_kw/pg_mw,
/// qg_kvar/qg_mvar, vset_kv, theta_deg, shunt_b_mvar, r_ohm, x_ohm,
/// b_half_siemens, i_max_a, i_min_a. Unknown fields are rejected.
NetworkCase parse_case_json(std::string_view text);

/// Parses a bus table and a branch table with header rows using the same
/// column names as the JSON schema. Bases come from `# key: value` lines at the
/// top of the bus table (s_base_mva, v_base_kv, v_min, v_max, name). Empty
/// cells mean "absent".
NetworkCase parse_case_csv(std::string_view bus_table, std::string_view branch_table);

/// Reads a case file. `*.json` is parsed as JSON; `<stem>.buses.csv` (or the
/// matching `<stem>.branches.csv`) loads the CSV pair.
NetworkCase load_case(const std::filesystem::path& path);

/// Canonical per-unit JSON for a case (inverse of parse_case_json up to
/// number formatting).
std::string write_case_json(const NetworkCase& net);

}  // namespace pflow
