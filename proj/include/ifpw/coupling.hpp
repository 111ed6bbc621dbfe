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
#ifndef IFPW_COUPLING_HPP
#define IFPW_COUPLING_HPP

#include "ifpw/lwr_ctm.hpp"
#include "ifpw/scenario.hpp"
#include "ifpw/shre_solver.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ifpw
{

/// Both layers share one TrafficState: the class densities are the SHRE compartments.
struct WorldState {
    double time_s = 0.0;
    long step     = 0;
    TrafficState traffic;
};

/// Uniform ambient traffic (k0, penetration) with every class seeded per config.
WorldState initialize(const ScenarioConfig& cfg);

/// Two-layer stepper. Per step: traffic totals, class split, class advection,
/// then the SHRE reaction on the advected densities (order configurable).
class Simulation
{
public:
    explicit Simulation(const ScenarioConfig& cfg);
    ~Simulation();
    Simulation(const Simulation&)            = delete;
    Simulation& operator=(const Simulation&) = delete;

    const ScenarioConfig& config() const
    {
        return m_cfg;
    }
    const TrafficSetup& traffic_setup() const
    {
        return m_setup;
    }

    /// Advances one dt. Layer failures are rethrown as SolverError naming the step.
    void step(WorldState& world);

    long total_steps() const;

private:
    void advect(WorldState& world);
    void react(WorldState& world);

    ScenarioConfig m_cfg;
    TrafficSetup m_setup;
    std::vector<ShreIntegrator> m_integrators;
    std::unique_ptr<FftConvolution> m_fixed;
    std::unique_ptr<VariableKernelConvolution> m_variable;
};

struct RunOptions {
    /// snapshot every cfg.snapshot_every_s in addition to `extra_times`
    bool cadence = true;
    std::vector<double> extra_times;
};

struct RunSummary {
    long total_steps     = 0;
    long steps_completed = 0;
    std::vector<double> snapshot_times;
    bool failed     = false;
    long error_step = -1;
    std::string error;
};

using SnapshotObserver = std::function<void(const WorldState&)>;

/// Runs to the horizon calling `observer` at t = 0, every snapshot time and the final step.
/// A failing step ends the run; the failure is recorded in the summary, not thrown.
RunSummary run(const ScenarioConfig& cfg, const SnapshotObserver& observer, const RunOptions& options = {});

struct RunOutput {
    std::vector<WorldState> snapshots;
    RunSummary summary;

    /// Snapshot taken at t (to 1e-9 s); ArgumentError if none.
    const WorldState& at(double t_s) const;
};

RunOutput run_collect(const ScenarioConfig& cfg, const RunOptions& options = {});

} // namespace ifpw

#endif // IFPW_COUPLING_HPP
