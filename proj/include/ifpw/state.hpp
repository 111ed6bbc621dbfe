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
#ifndef IFPW_STATE_HPP
#define IFPW_STATE_HPP

#include <cstddef>
#include <vector>

namespace ifpw
{

/// Uniform corridor discretization. Cell i spans [origin + i dx, origin + (i+1) dx).
struct GridSpec {
    double dx_km     = 0.015;
    double dt_s      = 0.5;
    int num_cells    = 2000;
    double origin_km = 0.0;

    double cell_center(int i) const
    {
        return origin_km + (i + 0.5) * dx_km;
    }
    /// Cell whose span contains x (clamped to the grid).
    int cell_of(double x_km) const;
};

/// Throws ConfigError for dx <= 0, dt <= 0 or fewer than 8 cells.
void validate(const GridSpec& grid);

/// Per-cell densities [veh/km] of one information class.
struct ClassState {
    std::vector<double> s; ///< susceptible
    std::vector<double> h; ///< holding (queued)
    std::vector<double> r; ///< relaying
    std::vector<double> e; ///< excluded

    ClassState() = default;
    explicit ClassState(std::size_t cells, double susceptible = 0.0)
        : s(cells, susceptible)
        , h(cells, 0.0)
        , r(cells, 0.0)
        , e(cells, 0.0)
    {
    }

    std::size_t size() const
    {
        return s.size();
    }
    double equipped(std::size_t i) const
    {
        return s[i] + h[i] + r[i] + e[i];
    }
    double informed(std::size_t i) const
    {
        return h[i] + r[i] + e[i];
    }
};

/// Traffic layer state. Each information class partitions the equipped
/// vehicles, so for every class j and cell x: S_j + H_j + R_j + E_j + U = total.
struct TrafficState {
    std::vector<double> total;
    std::vector<double> unequipped;
    std::vector<ClassState> classes;

    std::size_t size() const
    {
        return total.size();
    }
};

} // namespace ifpw

#endif // IFPW_STATE_HPP
