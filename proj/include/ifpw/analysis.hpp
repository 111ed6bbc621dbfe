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
#ifndef IFPW_ANALYSIS_HPP
#define IFPW_ANALYSIS_HPP

#include "ifpw/scenario.hpp"
#include "ifpw/state.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ifpw
{

/// beta * b * sigma / mu. ArgumentError unless all inputs are positive.
double gamma(double beta_hz, double b, double sigma, double mu);

/// gamma of class j under the scenario's contact convention (sigma referred to the contact length).
double scenario_gamma(const ScenarioConfig& cfg, std::size_t class_index);

/// Root of exp(-gamma a) + a - 1 = 0 in (0, 1) for gamma > 1, nothing otherwise.
/// Newton from a = 1 with a bisection bracket; residual below 1e-12.
std::optional<double> asymptotic_spread(double gamma);

bool ifpw_exists(double gamma);

/// sigma * alpha*(gamma); nothing when the wave does not exist.
std::optional<double> asymptotic_informed_density(double sigma, double gamma);

/// Inverse of asymptotic_spread: -ln(1 - alpha) / alpha for alpha in (0, 1).
double gamma_from_spread(double alpha);

struct AsymptoticResult {
    double gamma = 0.0;
    bool exists  = false;
    std::optional<double> alpha_star;
    std::optional<double> informed_density;
};

AsymptoticResult analyze_asymptotics(double gamma, double sigma);

enum class FrontField {
    E,
    R,
    informed, ///< H + R + E
};

FrontField parse_front_field(const std::string& name);
std::string to_string(FrontField f);

std::vector<double> front_field(const ClassState& st, FrontField f);

/// Fractional cell positions of the two fronts where the field crosses `reference`.
struct FrontPosition {
    double backward = 0.0;
    double forward  = 0.0;
};

/// Scans outward from the seed cell (or the cell nearest to it reaching the reference)
/// and interpolates the first crossing on each side. FrontNotFoundError names the side.
FrontPosition locate_fronts(std::span<const double> field, int seed_cell, double reference);

struct WaveSpeedEstimate {
    double c_forward_kmh  = 0.0;
    double c_backward_kmh = 0.0; ///< magnitude
    /// backward front speed, positive when moving upstream
    double backward_upstream_kmh = 0.0;
    double reference_density     = 0.0;
    FrontPosition first;
    FrontPosition second;
};

WaveSpeedEstimate estimate_wave_speeds(std::span<const double> field1, std::span<const double> field2, double t1_s,
                                       double t2_s, double reference, int seed_cell, const GridSpec& grid);

/// Plateau mean of (sigma - S) / sigma over the central half of the informed region
/// (cells reaching half the peak fraction). 0 for an untouched state.
double measured_spread(const ClassState& st, std::span<const double> sigma);
double measured_spread(const ClassState& st);

struct PropagationExtent {
    double upstream_km   = 0.0;
    double downstream_km = 0.0;
};

/// Largest distances from the seed at which the field ever exceeded `threshold`.
PropagationExtent propagation_extent(std::span<const std::vector<double>> trajectory, int seed_cell,
                                     double threshold, const GridSpec& grid);

struct SweepSpec {
    std::vector<int> n_values;
    std::vector<double> mu_values;
    /// empty: keep the base ambient density
    std::vector<double> k0_values;
    double t1_s = 40.0;
    double t2_s = 80.0;
    FrontField field = FrontField::informed;
    /// front reference = fraction * sigma * alpha*; used when > 0
    double reference_fraction = 0.5;
    /// absolute reference density when reference_fraction <= 0
    double reference_density = 10.0;
    unsigned threads         = 0; ///< 0: hardware concurrency
};

struct SweepRow {
    double k0        = 0.0;
    int n_servers    = 0;
    double mu        = 0.0;
    double lambda    = 0.0;
    bool skipped     = false;
    std::string note;
    double gamma           = 0.0;
    double alpha_star      = 0.0; ///< NaN when no wave exists
    double measured_spread = 0.0;
    double c_forward_kmh   = 0.0;
    double c_backward_kmh  = 0.0;
    double xi              = 0.0;
    double mean_wait_s     = 0.0;
};

/// Runs the first class of `base` at every (k0, n, mu) combination. Unstable points are skipped,
/// failing points keep NaN measurements and a note. ArgumentError for an empty grid.
std::vector<SweepRow> sweep(const ScenarioConfig& base, const SweepSpec& spec);

void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepRow> rows);

inline constexpr const char* sweep_csv_header =
    "k0_veh_per_km,n_servers,mu_per_s,lambda_per_s,status,gamma,alpha_star,measured_spread,c_forward_kmh,"
    "c_backward_kmh,xi,mean_wait_s,note";

} // namespace ifpw

#endif // IFPW_ANALYSIS_HPP
