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
#ifndef IFPW_RUN_OUTPUT_HPP
#define IFPW_RUN_OUTPUT_HPP

#include "ifpw/coupling.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace ifpw
{

/// Streams snapshots as long-format CSV, one file per class and field
/// (`<class>_S.csv` ... `<class>_E.csv`) plus `traffic_total.csv` and `traffic_unequipped.csv`.
/// Columns: time_s,cell_index,x_km,value.
class RunWriter
{
public:
    RunWriter(const ScenarioConfig& cfg, const std::filesystem::path& dir);
    ~RunWriter();

    void write(const WorldState& world);
    void flush();
    /// File names relative to the output directory.
    std::vector<std::string> files() const;

private:
    struct Stream;
    GridSpec m_grid;
    std::filesystem::path m_dir;
    std::vector<std::unique_ptr<Stream>> m_streams;
};

/// Writes `manifest.json` via a temporary file and rename.
void write_manifest(const std::filesystem::path& dir, const nlohmann::json& manifest);

/// Manifest skeleton: tool, version, command, config and hash, warnings.
nlohmann::json make_manifest(const ScenarioConfig& cfg, const std::string& command);

/// UTC wall-clock timestamp, ISO 8601.
std::string utc_now();

/// Runs a scenario into `dir` (created if missing) and writes the manifest,
/// including an error record when a step fails.
RunSummary run_to_directory(const ScenarioConfig& cfg, const std::filesystem::path& dir,
                              const std::string& command = "run");

/// One long-format field file read back into per-snapshot rows.
struct SpaceTimeField {
    std::vector<double> times;
    std::vector<std::vector<double>> values; ///< values[snapshot][cell]
    std::vector<double> x_km;

    /// Row at time t (to 1e-6 s); ArgumentError if absent.
    const std::vector<double>& at(double t_s) const;
};

SpaceTimeField read_space_time_csv(const std::filesystem::path& path);

} // namespace ifpw

#endif // IFPW_RUN_OUTPUT_HPP
