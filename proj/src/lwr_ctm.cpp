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
#include "ifpw/lwr_ctm.hpp"

#include "ifpw/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ifpw
{

namespace
{

constexpr double seconds_per_hour = 3600.0;
constexpr double density_tolerance = 1e-9;

void check_density(double k, const FundamentalDiagram& fd)
{
    if (!(k >= -density_tolerance) || !(k <= fd.k_jam_veh_per_km * (1.0 + 1e-12) + density_tolerance)) {
        std::ostringstream msg;
        msg << "density " << k << " outside [0, " << fd.k_jam_veh_per_km << "]";
        throw ArgumentError(msg.str());
    }
}

void check_factor(double f)
{
    if (!(f > 0.0) || !(f <= 1.0)) {
        throw ArgumentError("capacity factor must lie in (0, 1]");
    }
}

std::size_t upstream_cell(std::size_t iface, std::size_t n)
{
    return iface == 0 ? n - 1 : iface - 1;
}

} // namespace

void validate(const FundamentalDiagram& fd)
{
    if (!(fd.v_f_kmh > 0.0) || !(fd.q_max_vph > 0.0) || !(fd.k_jam_veh_per_km > 0.0)) {
        throw ConfigError("fundamental diagram parameters must be positive");
    }
    if (!(fd.critical_density() < fd.k_jam_veh_per_km)) {
        throw ConfigError("critical density q_max/v_f must be below jam density");
    }
}

TrafficBoundary parse_traffic_boundary(const std::string& name)
{
    if (name == "periodic") {
        return TrafficBoundary::periodic;
    }
    if (name == "open") {
        return TrafficBoundary::open;
    }
    if (name == "closed") {
        return TrafficBoundary::closed;
    }
    throw ConfigError("unknown boundary '" + name + "' (periodic, open, closed)");
}

std::string to_string(TrafficBoundary b)
{
    switch (b) {
    case TrafficBoundary::periodic:
        return "periodic";
    case TrafficBoundary::open:
        return "open";
    case TrafficBoundary::closed:
        return "closed";
    }
    return "?";
}

double CapacityProfile::factor(int cell, double t_s) const
{
    double f = 1.0;
    for (const auto& ev : events) {
        if (cell >= ev.cell_begin && cell <= ev.cell_end && t_s >= ev.start_s && t_s < ev.end_s) {
            f = std::min(f, ev.factor);
        }
    }
    return f;
}

void validate(const CapacityProfile& profile, const GridSpec& grid)
{
    for (const auto& ev : profile.events) {
        if (ev.cell_begin < 0 || ev.cell_end >= grid.num_cells || ev.cell_begin > ev.cell_end) {
            throw ConfigError("capacity event cell range outside the grid");
        }
        if (!(ev.end_s > ev.start_s)) {
            throw ConfigError("capacity event must end after it starts");
        }
        if (!(ev.factor > 0.0) || !(ev.factor <= 1.0)) {
            throw ConfigError("capacity factor must lie in (0, 1]");
        }
    }
}

double sending_flow(double k, const FundamentalDiagram& fd, double capacity_factor)
{
    check_density(k, fd);
    check_factor(capacity_factor);
    return std::min(fd.v_f_kmh * std::max(k, 0.0), capacity_factor * fd.q_max_vph);
}

double receiving_flow(double k_downstream, const FundamentalDiagram& fd, double capacity_factor)
{
    check_density(k_downstream, fd);
    check_factor(capacity_factor);
    const double room = std::max(fd.k_jam_veh_per_km - k_downstream, 0.0);
    return std::min(capacity_factor * fd.q_max_vph, fd.wave_speed_kmh() * room);
}

void check_cfl(const FundamentalDiagram& fd, const GridSpec& grid)
{
    const double fastest = std::max(fd.v_f_kmh, fd.wave_speed_kmh());
    const double number  = fastest * grid.dt_s / seconds_per_hour / grid.dx_km;
    if (number > 1.0 + 1e-12) {
        std::ostringstream msg;
        msg << "CFL number " << number << " exceeds 1 (max wave speed " << fastest << " km/h, dt " << grid.dt_s
            << " s, dx " << grid.dx_km << " km)";
        throw ConfigError(msg.str());
    }
}

std::vector<double> interface_flows(std::span<const double> total, const TrafficSetup& setup, double t_s)
{
    const auto n = total.size();
    if (n != static_cast<std::size_t>(setup.grid.num_cells)) {
        throw ShapeError("density field does not match the grid");
    }
    const auto& fd = setup.fd;
    auto cap       = [&](std::size_t cell) {
        return setup.capacity.factor(static_cast<int>(cell), t_s);
    };
    std::vector<double> q(n + 1, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        q[i] = std::min(sending_flow(total[i - 1], fd, cap(i - 1)), receiving_flow(total[i], fd, cap(i)));
    }
    switch (setup.boundary) {
    case TrafficBoundary::periodic:
        q[0] = std::min(sending_flow(total[n - 1], fd, cap(n - 1)), receiving_flow(total[0], fd, cap(0)));
        q[n] = q[0];
        break;
    case TrafficBoundary::open:
        q[0] = std::min(sending_flow(setup.inflow_density, fd), receiving_flow(total[0], fd, cap(0)));
        q[n] = sending_flow(total[n - 1], fd, cap(n - 1));
        break;
    case TrafficBoundary::closed:
        break;
    }
    return q;
}

std::vector<double> advance_density(std::span<const double> k, std::span<const double> flows, const GridSpec& grid)
{
    if (flows.size() != k.size() + 1) {
        throw ShapeError("interface flow vector must have num_cells + 1 entries");
    }
    const double ratio = grid.dt_s / seconds_per_hour / grid.dx_km;
    std::vector<double> out(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) {
        out[i] = k[i] + ratio * (flows[i] - flows[i + 1]);
    }
    return out;
}

std::vector<double> advance_total(std::span<const double> total, const TrafficSetup& setup, double t_s,
                                  std::vector<double>* flows_out)
{
    auto q    = interface_flows(total, setup, t_s);
    auto next = advance_density(total, q, setup.grid);
    for (std::size_t i = 0; i < next.size(); ++i) {
        if (next[i] < -density_tolerance) {
            throw NumericalError("negative total density", static_cast<long>(i));
        }
        next[i] = std::clamp(next[i], 0.0, setup.fd.k_jam_veh_per_km);
    }
    if (flows_out) {
        *flows_out = std::move(q);
    }
    return next;
}

ClassFlows split_class_flows(const TrafficState& state, std::span<const double> flows, const TrafficSetup& setup)
{
    const auto n = state.size();
    if (flows.size() != n + 1) {
        throw ShapeError("interface flow vector must have num_cells + 1 entries");
    }
    ClassFlows out;
    out.unequipped.assign(n + 1, 0.0);
    out.classes.assign(state.classes.size(), ClassState(n + 1));

    for (std::size_t iface = 0; iface <= n; ++iface) {
        const double q = flows[iface];
        if (q == 0.0) {
            continue;
        }
        if (iface == 0 && setup.boundary == TrafficBoundary::open) {
            // ambient inflow: unequipped plus all-susceptible equipped vehicles
            const double w = setup.inflow_penetration;
            out.unequipped[0] = (1.0 - w) * q;
            for (auto& c : out.classes) {
                c.s[0] = w * q;
            }
            continue;
        }
        const std::size_t up = iface == n ? n - 1 : upstream_cell(iface, n);
        const double k       = state.total[up];
        if (!(k > 0.0)) {
            continue; // empty cell sends nothing
        }
        out.unequipped[iface] = state.unequipped[up] / k * q;
        for (std::size_t j = 0; j < state.classes.size(); ++j) {
            const auto& c = state.classes[j];
            auto& f       = out.classes[j];
            f.s[iface]    = c.s[up] / k * q;
            f.h[iface]    = c.h[up] / k * q;
            f.r[iface]    = c.r[up] / k * q;
            f.e[iface]    = c.e[up] / k * q;
        }
    }
    return out;
}

TrafficState update_class_densities(const TrafficState& state, const ClassFlows& flows,
                                    std::span<const double> new_total, const GridSpec& grid)
{
    const auto n = state.size();
    if (new_total.size() != n || flows.classes.size() != state.classes.size()) {
        throw ShapeError("class flow layout does not match the state");
    }
    auto finalize = [](std::vector<double>& v, const char* what) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!std::isfinite(v[i]) || v[i] < -density_tolerance) {
                throw NumericalError(std::string("negative ") + what + " density after advection",
                                     static_cast<long>(i));
            }
            if (v[i] < 0.0) {
                v[i] = 0.0;
            }
        }
    };

    TrafficState out;
    out.total      = std::vector<double>(new_total.begin(), new_total.end());
    out.unequipped = advance_density(state.unequipped, flows.unequipped, grid);
    finalize(out.unequipped, "unequipped");
    out.classes.reserve(state.classes.size());
    for (std::size_t j = 0; j < state.classes.size(); ++j) {
        const auto& c = state.classes[j];
        const auto& f = flows.classes[j];
        ClassState next;
        next.s = advance_density(c.s, f.s, grid);
        next.h = advance_density(c.h, f.h, grid);
        next.r = advance_density(c.r, f.r, grid);
        next.e = advance_density(c.e, f.e, grid);
        finalize(next.s, "S");
        finalize(next.h, "H");
        finalize(next.r, "R");
        finalize(next.e, "E");
        for (std::size_t i = 0; i < n; ++i) {
            const double sum = next.equipped(i) + out.unequipped[i];
            if (std::abs(sum - out.total[i]) > 1e-9 * std::max(1.0, out.total[i])) {
                std::ostringstream msg;
                msg << "class " << j << " composition " << sum << " differs from total " << out.total[i];
                throw NumericalError(msg.str(), static_cast<long>(i));
            }
        }
        out.classes.push_back(std::move(next));
    }
    return out;
}

void advance_traffic(TrafficState& state, const TrafficSetup& setup, double t_s)
{
    std::vector<double> q;
    const auto total = advance_total(state.total, setup, t_s, &q);
    const auto split = split_class_flows(state, q, setup);
    state            = update_class_densities(state, split, total, setup.grid);
}

double vehicle_count(std::span<const double> k, const GridSpec& grid)
{
    double sum = 0.0;
    for (double v : k) {
        sum += v;
    }
    return sum * grid.dx_km;
}

} // namespace ifpw
