#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fuplab::cli {

enum class ParamType { Int, Real, OptionalReal, Bool, Text, IntList, RealList };

struct Param {
    std::string name;
    ParamType type;
    nlohmann::json default_value;
    std::string help;
};

struct Experiment {
    std::string kind;
    std::string summary;
    std::vector<Param> params;
};

const std::vector<Experiment>& experiments();
const Experiment& find_experiment(const std::string& kind);

// Parses one textual value by parameter type. Lists are comma separated; integer lists
// also accept a..b ranges. OptionalReal accepts "auto".
nlohmann::json parse_value(const Param& p, const std::string& text);

// Fills every default, rejects unknown keys and mistyped values.
nlohmann::json resolve_params(const Experiment& e, const nlohmann::json& given);

struct RunRequest {
    std::string kind;
    nlohmann::json params = nlohmann::json::object();  // user-given subset
    std::string out;            // directory, or a .json/.csv path for the main result
    std::uint64_t seed = 0;
    int threads = 1;
    std::string precision = "double";
    std::string source = "command line";
    bool echo = false;  // also print the main result to stdout
};

// INI-style file: an [experiment] section (kind, out, seed, threads, precision) and one
// section named after the kind holding its parameters.
RunRequest parse_config_file(const std::string& path);

// Environment variable naming the default output root.
inline constexpr const char* kOutputRootEnv = "FUPLAB_OUTPUT_ROOT";

// Returns the process exit code: 0 checks pass, 1 checks fail, 2 configuration error,
// 3 numerical contract violation. Nothing is written for codes 2 and 3.
int run(const RunRequest& request, std::ostream& log);

// JSON description of every experiment and parameter.
nlohmann::json schema();

}  // namespace fuplab::cli
