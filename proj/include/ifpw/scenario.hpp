/*
* Copyright (C) 2026 ifpw authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*/
#ifndef IFPW_SCENARIO_HPP
#define IFPW_SCENARIO_HPP

#include "ifpw/comm_kernel.hpp"
#include "ifpw/lwr_ctm.hpp"
#include "ifpw/queueing.hpp"
#include "ifpw/state.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ifpw
{

inline constexpr const char* version_string = "0.3.0";

enum class KernelMode {
    global, ///< fixed (a, b) for the whole run
    reference, ///< reference-table row for one density (interpolated between rows)
    table, ///< per cell and step from the local total density
};

struct KernelSpec {
    KernelMode mode = KernelMode::global;
    KernelParams params{0.292, 0.499};
    /// reference mode; negative means "use the ambient density"
    double density = -1.0;
};

struct SeedSpec {
    int cell                   = 0;
    double relaying_veh_per_km = 0.0;
};

struct InfoClassSpec {
    std::string name;
    ClassParams queue;
    std::vector<SeedSpec> seeds;
};

enum class OperatorOrder {
    advect_then_react,
    react_then_advect,
};

struct ScenarioConfig {
    std::string name = "scenario";
    GridSpec grid;
    FundamentalDiagram fd;
    TrafficBoundary boundary = TrafficBoundary::periodic;
    double k0_veh_per_km     = 40.0;
    double penetration       = 0.5;
    /// traffic layer is not advanced (pure information dynamics)
    bool frozen_traffic = false;

    double beta_hz           = 2.0;
    double contact_length_km = 0.015;
    KernelSpec kernel;

    std::vector<InfoClassSpec> classes;
    CapacityProfile capacity;

    double horizon_s        = 230.0;
    double snapshot_every_s = 1.0;
    std::uint64_t seed      = 1;
    OperatorOrder order     = OperatorOrder::advect_then_react;

    double sigma() const
    {
        return penetration * k0_veh_per_km;
    }
};

/// Throws ConfigError describing the first violated constraint.
void validate(const ScenarioConfig& cfg);

/// Non-fatal findings: server budget above the reference N_max, clamped kernel lookups.
std::vector<std::string> config_warnings(const ScenarioConfig& cfg);

/// Parses and validates; malformed JSON reports line and column.
ScenarioConfig parse_scenario(const std::string& json_text);
ScenarioConfig load_scenario(const std::filesystem::path& path);

nlohmann::json to_json(const ScenarioConfig& cfg);
ScenarioConfig from_json(const nlohmann::json& j);

/// FNV-1a 64 over the canonical JSON form, as 16 hex digits.
std::string config_hash(const ScenarioConfig& cfg);

/// Kernel used for a fixed-kernel run (global and reference modes).
KernelParams fixed_kernel(const ScenarioConfig& cfg);

std::string to_string(KernelMode m);
std::string to_string(OperatorOrder o);

} // namespace ifpw

#endif // IFPW_SCENARIO_HPP
