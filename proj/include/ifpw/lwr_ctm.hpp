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
#ifndef IFPW_LWR_CTM_HPP
#define IFPW_LWR_CTM_HPP

#include "ifpw/state.hpp"

#include <span>
#include <string>
#include <vector>

namespace ifpw
{

/// Triangular fundamental diagram. Speeds in km/h, flows in veh/h, densities in veh/km.
struct FundamentalDiagram {
    double v_f_kmh         = 108.0;
    double q_max_vph       = 2000.0;
    double k_jam_veh_per_km = 150.0;

    double critical_density() const
    {
        return q_max_vph / v_f_kmh;
    }
    /// Backward wave speed implied by the triangle.
    double wave_speed_kmh() const
    {
        return q_max_vph / (k_jam_veh_per_km - critical_density());
    }
};

/// Throws ConfigError unless all parameters are positive and k_c < k_jam.
void validate(const FundamentalDiagram& fd);

enum class TrafficBoundary {
    periodic,
    open, ///< constant upstream demand, free outflow downstream
    closed,
};

TrafficBoundary parse_traffic_boundary(const std::string& name);
std::string to_string(TrafficBoundary b);

/// Capacity reduction over the inclusive cell range [cell_begin, cell_end] for start_s <= t < end_s.
struct CapacityEvent {
    int cell_begin  = 0;
    int cell_end    = 0;
    double start_s  = 0.0;
    double end_s    = 0.0;
    double factor   = 1.0;
};

struct CapacityProfile {
    std::vector<CapacityEvent> events;

    /// Smallest factor of all active events covering the cell, 1 when none.
    double factor(int cell, double t_s) const;
};

void validate(const CapacityProfile& profile, const GridSpec& grid);

/// min(v_f k, factor q_max) [veh/h]. ArgumentError for k outside [0, k_jam] or factor outside (0, 1].
double sending_flow(double k, const FundamentalDiagram& fd, double capacity_factor = 1.0);
/// min(factor q_max, w_c (k_jam - k)) [veh/h].
double receiving_flow(double k_downstream, const FundamentalDiagram& fd, double capacity_factor = 1.0);

/// Throws ConfigError if max(v_f, w_c) dt > dx.
void check_cfl(const FundamentalDiagram& fd, const GridSpec& grid);

/// Per-interface flows of every density component. Interface i separates cells i-1 and i;
/// vectors hold num_cells + 1 entries [veh/h].
struct ClassFlows {
    std::vector<ClassState> classes;
    std::vector<double> unequipped;
};

struct TrafficSetup {
    FundamentalDiagram fd;
    GridSpec grid;
    TrafficBoundary boundary = TrafficBoundary::periodic;
    CapacityProfile capacity;
    /// Upstream demand density and its equipped share (open boundary only).
    double inflow_density     = 0.0;
    double inflow_penetration = 1.0;
};

/// Interface flows q(x, t) [veh/h] for the total density field.
std::vector<double> interface_flows(std::span<const double> total, const TrafficSetup& setup, double t_s);

/// Conservation update of a single density field with the given interface flows.
std::vector<double> advance_density(std::span<const double> k, std::span<const double> flows, const GridSpec& grid);

/// One step of the total density; returns the new field, flows written to `flows_out` if non-null.
std::vector<double> advance_total(std::span<const double> total, const TrafficSetup& setup, double t_s,
                                  std::vector<double>* flows_out = nullptr);

/// Proportional split of interface flows by upstream-cell composition (pre-update state).
ClassFlows split_class_flows(const TrafficState& state, std::span<const double> flows, const TrafficSetup& setup);

/// Applies per-component conservation laws; `new_total` is the already advanced total field.
/// NumericalError on densities below -1e-9 or a composition that no longer sums to the total.
TrafficState update_class_densities(const TrafficState& state, const ClassFlows& flows,
                                    std::span<const double> new_total, const GridSpec& grid);

/// Full traffic sub-step: total, split, per-class update.
void advance_traffic(TrafficState& state, const TrafficSetup& setup, double t_s);

/// Sum of k dx over the grid [veh].
double vehicle_count(std::span<const double> k, const GridSpec& grid);

} // namespace ifpw

#endif // IFPW_LWR_CTM_HPP
