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
#include "ifpw/coupling.hpp"

#include "ifpw/error.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace ifpw
{

WorldState initialize(const ScenarioConfig& cfg)
{
    validate(cfg);
    const auto n = static_cast<std::size_t>(cfg.grid.num_cells);
    WorldState w;
    w.traffic.total.assign(n, cfg.k0_veh_per_km);
    w.traffic.unequipped.assign(n, (1.0 - cfg.penetration) * cfg.k0_veh_per_km);
    for (const auto& c : cfg.classes) {
        ClassState st(n, cfg.sigma());
        for (const auto& s : c.seeds) {
            try {
                st = seed_information(std::move(st), s.cell, s.relaying_veh_per_km);
            }
            catch (const ArgumentError& e) {
                throw ConfigError("class " + c.name + " seed: " + e.what());
            }
        }
        w.traffic.classes.push_back(std::move(st));
    }
    return w;
}

Simulation::Simulation(const ScenarioConfig& cfg)
    : m_cfg(cfg)
{
    validate(m_cfg);
    m_setup.fd                 = m_cfg.fd;
    m_setup.grid               = m_cfg.grid;
    m_setup.boundary           = m_cfg.boundary;
    m_setup.capacity           = m_cfg.capacity;
    m_setup.inflow_density     = m_cfg.k0_veh_per_km;
    m_setup.inflow_penetration = m_cfg.penetration;

    const KernelParams kp = fixed_kernel(m_cfg);
    for (const auto& c : m_cfg.classes) {
        ShreParams p;
        p.beta_hz           = m_cfg.beta_hz;
        p.queue             = c.queue;
        p.kernel            = kp;
        p.contact_length_km = m_cfg.contact_length_km;
        m_integrators.emplace_back(p);
    }
    if (m_cfg.kernel.mode == KernelMode::table) {
        m_variable = std::make_unique<VariableKernelConvolution>(m_cfg.grid);
    }
    else {
        const auto bc = m_cfg.boundary == TrafficBoundary::periodic ? ConvolutionBoundary::periodic
                                                                    : ConvolutionBoundary::zero_padded;
        m_fixed = std::make_unique<FftConvolution>(kp, m_cfg.grid, bc);
    }
}

Simulation::~Simulation() = default;

long Simulation::total_steps() const
{
    return std::lround(m_cfg.horizon_s / m_cfg.grid.dt_s);
}

void Simulation::advect(WorldState& world)
{
    if (!m_cfg.frozen_traffic) {
        advance_traffic(world.traffic, m_setup, world.time_s);
    }
}

void Simulation::react(WorldState& world)
{
    RelayingConvolution* conv = m_fixed.get();
    if (m_variable) {
        std::vector<KernelParams> kernels(world.traffic.size());
        for (std::size_t i = 0; i < kernels.size(); ++i) {
            kernels[i] = reference_kernel_clamped(world.traffic.total[i]);
        }
        m_variable->set_kernels(kernels);
        conv = m_variable.get();
    }
    for (std::size_t j = 0; j < m_integrators.size(); ++j) {
        m_integrators[j].advance(world.traffic.classes[j], *conv, m_cfg.grid.dt_s);
    }
}

void Simulation::step(WorldState& world)
{
    try {
        if (m_cfg.order == OperatorOrder::advect_then_react) {
            advect(world);
            react(world);
        }
        else {
            react(world);
            advect(world);
        }
    }
    catch (const Error& e) {
        std::ostringstream msg;
        msg << "step " << world.step + 1 << " (t = " << world.time_s << " s): " << e.what();
        throw SolverError(msg.str());
    }
    ++world.step;
    world.time_s = world.step * m_cfg.grid.dt_s;
}

RunSummary run(const ScenarioConfig& cfg, const SnapshotObserver& observer, const RunOptions& options)
{
    Simulation sim(cfg);
    WorldState world = initialize(cfg);

    RunSummary summary;
    summary.total_steps = sim.total_steps();
    const long every    = std::max(1L, std::lround(cfg.snapshot_every_s / cfg.grid.dt_s));
    std::set<long> extra;
    for (double t : options.extra_times) {
        extra.insert(std::lround(t / cfg.grid.dt_s));
    }
    auto wanted = [&](long step) {
        return step == 0 || step == summary.total_steps || (options.cadence && step % every == 0) ||
               extra.count(step) > 0;
    };
    auto emit = [&] {
        summary.snapshot_times.push_back(world.time_s);
        if (observer) {
            observer(world);
        }
    };

    emit();
    while (world.step < summary.total_steps) {
        try {
            sim.step(world);
        }
        catch (const Error& e) {
            summary.failed     = true;
            summary.error_step = world.step + 1;
            summary.error      = e.what();
            break;
        }
        summary.steps_completed = world.step;
        if (wanted(world.step)) {
            emit();
        }
    }
    return summary;
}

const WorldState& RunOutput::at(double t_s) const
{
    for (const auto& w : snapshots) {
        if (std::abs(w.time_s - t_s) < 1e-9 + 1e-12 * std::abs(t_s)) {
            return w;
        }
    }
    std::ostringstream msg;
    msg << "no snapshot at t = " << t_s << " s";
    throw ArgumentError(msg.str());
}

RunOutput run_collect(const ScenarioConfig& cfg, const RunOptions& options)
{
    RunOutput out;
    out.summary = run(cfg, [&](const WorldState& w) { out.snapshots.push_back(w); }, options);
    return out;
}

} // namespace ifpw
