#pragma once

#include "bgk/dynamics.hpp"
#include "bgk/entropy_dual.hpp"
#include "bgk/kinetics.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace bgk {

struct MaxwellianInit {
    double n = 1.0;
    Vec3 u = Vec3::Zero();
    double T = 1.0;
};

struct TwoMaxwellianInit {
    MaxwellianInit first;
    MaxwellianInit second;
};

/// Distribution read from a snapshot file; relative paths resolve against the config directory.
struct TabulatedInit {
    std::filesystem::path file;
};

using InitialCondition = std::variant<MaxwellianInit, TwoMaxwellianInit, TabulatedInit>;

struct SpeciesSpec {
    std::string name;
    double mass = 1.0;
    InitialCondition initial;
};

/// Frequency entry as written in the config. Tabulated entries are loaded when the run is built.
struct FrequencySpec {
    std::string model = "constant";
    double nu0 = 1.0;
    double gamma = 1.0;
    std::filesystem::path file;
};

struct GridSpec {
    bool automatic = true;
    double c = kDefaultTruncation;
    int n = kDefaultNodesPerAxis;
    Vec3 v_min = Vec3::Zero();
    Vec3 v_max = Vec3::Zero();
    std::array<int, 3> counts{0, 0, 0};
};

struct TimeSpec {
    std::optional<double> dt; ///< empty means 0.1 / max sum_j nu_ij
    double t_final = 1.0;
    TimeScheme scheme = TimeScheme::explicit_euler;
};

struct OutputSpec {
    int interval = 1; ///< steps between rows
    std::filesystem::path timeseries = "timeseries.csv";
    bool snapshot = false;
    std::string snapshot_prefix = "snapshot";
};

struct RunConfig {
    std::vector<SpeciesSpec> species;
    std::vector<FrequencySpec> frequencies; ///< row-major N x N
    GridSpec grid;
    TimeSpec time;
    NewtonConfig newton;
    OutputSpec output;
    std::filesystem::path base_dir; ///< directory of the config file
};

/// Parses and validates a JSON config. Unknown keys, missing frequency pairs and nonpositive
/// physical parameters raise ConfigError before anything is computed.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});

/// Reads and parses a config file; IoError when it cannot be read.
RunConfig load_config(const std::filesystem::path& path);

/// Normalized JSON with every default filled in.
std::string echo_config(const RunConfig& cfg);

/// Builds the grid and initial state. Loads tabulated inputs.
MixtureState build_initial_state(const RunConfig& cfg);

} // namespace bgk
