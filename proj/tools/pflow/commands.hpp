#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace pflow::cli {

enum class Family { Epds, Epts };

/// Exit codes shared by every command.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitNotConverged = 2;

struct RunSpec {
    std::filesystem::path case_path;
    std::optional<Family> family;
    std::vector<std::string> methods;
    std::optional<double> tol;
    std::optional<std::size_t> max_iters;
    std::uint64_t seed = 0;
    std::optional<std::filesystem::path> out_dir;
    bool record_time = true;
    /// Test hook: multiplies every analytic gradient handed to checkgrad.
    double gradient_scale = 1.0;
};

Family parse_family(const std::string& s);
const char* to_string(Family f);

/// Method names accepted for a family, in canonical order.
const std::vector<std::string>& methods_for(Family f);

/// Resolves a case argument: the path itself if it exists, otherwise a file
/// (with or without ".json") in $PFLOW_DATA_DIR or the bundled case directory.
std::filesystem::path resolve_case(const std::filesystem::path& p);

int cmd_run(const RunSpec& spec, std::ostream& out, std::ostream& err);
int cmd_compare(const RunSpec& spec, std::ostream& out, std::ostream& err);
int cmd_checkgrad(const RunSpec& spec, std::ostream& out, std::ostream& err);

}  // namespace pflow::cli
