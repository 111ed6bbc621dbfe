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
#ifndef IFPW_MICRO_ORACLE_HPP
#define IFPW_MICRO_ORACLE_HPP

#include "ifpw/comm_kernel.hpp"
#include "ifpw/queueing.hpp"

#include "json.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace ifpw
{

/// Static vehicles on a ring road carrying one tracked packet of one class.
struct MicroConfig {
    int vehicles        = 200;
    double ring_km      = 10.0;
    bool equally_spaced = true; ///< otherwise uniform random positions per replication
    ClassParams queue{1.0, 2, 1.0};
    KernelParams kernel{20.0, 0.07};
    /// when > 0, kernel.b is rescaled so that micro_gamma(cfg) equals this value
    double target_gamma = 2.0;
    double beta_hz        = 5.0;
    double horizon_s      = 30.0;
    double tick_s         = 0.01;
    double record_every_s = 0.1;
    int replications      = 500;
    std::uint64_t seed    = 1;
    int seed_vehicles     = 1;
    /// replications whose final informed fraction reaches this count as a take-off
    double takeoff_fraction = 0.4;
    int histogram_bins      = 20;
    unsigned threads        = 0; ///< 0: hardware concurrency
};

/// beta / mu * sum over other vehicles of K(ring distance), for equally spaced vehicles
/// (for random positions, its expectation). The reproduction number seen by one vehicle.
double micro_gamma(const MicroConfig& cfg);

/// Copy of cfg with kernel.b fixed by target_gamma (unchanged when target_gamma <= 0).
MicroConfig resolve(const MicroConfig& cfg);

/// ConfigError on tick too coarse for the rates, kernel peak above 1, or invalid counts.
void validate(const MicroConfig& cfg);

MicroConfig micro_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MicroConfig& cfg);

enum class VehicleTag : std::uint8_t { susceptible, holding, relaying, excluded };

struct MicroReplication {
    std::vector<double> informed_fraction; ///< per record time
    std::vector<double> relaying_fraction;
    double final_fraction = 0.0;
    bool took_off         = false;
    /// final tags per spatial bin: [bin][S, H, R, E]
    std::vector<std::array<double, 4>> histogram;
};

MicroReplication simulate_replication(const MicroConfig& cfg, std::uint64_t stream);

struct MicroEnsemble {
    std::vector<double> times;
    std::vector<double> mean_informed; ///< over all replications
    std::vector<double> se_informed;
    std::vector<double> mean_informed_takeoff; ///< over take-off replications only
    std::vector<double> se_informed_takeoff;
    std::vector<double> final_fractions;
    int takeoffs                = 0;
    double final_mean_takeoff   = 0.0;
    double final_se_takeoff     = 0.0;
    double final_sd_takeoff     = 0.0;
    /// first record time at which each take-off run reaches half its own final fraction
    std::vector<double> half_spread_times;
    double half_time_mean = 0.0;
    double half_time_sd   = 0.0;
    std::vector<std::array<double, 4>> histogram_mean;
};

/// Replications run concurrently; stream r uses seed_seq{seed, r}, so results
/// do not depend on the thread count.
MicroEnsemble simulate(const MicroConfig& cfg);

/// Continuum counterpart on the same ring: SHRE with one cell per vehicle spacing, contact length
/// 1 km (kernel read as a per-vehicle probability) and the oracle's own weights: K at the shortest
/// ring distance, no self-interaction.
struct ContinuumRing {
    std::vector<double> times;
    std::vector<double> informed_fraction;
    double final_fraction = 0.0;
    double half_time      = 0.0;
};

ContinuumRing continuum_ring(const MicroConfig& cfg);

/// First time a curve reaches half of its last value (linear interpolation); NaN if never.
double half_spread_time(const std::vector<double>& times, const std::vector<double>& curve);

struct QueueValidation {
    std::vector<double> waits; ///< retained (thinned) samples
    double p_wait       = 0.0;
    double p_wait_se    = 0.0;
    double mean_wait    = 0.0;
    double mean_wait_se = 0.0;
    double ks_statistic = 0.0;
    double ks_critical  = 0.0; ///< 1% level
    bool ks_pass        = false;
};

/// FIFO M/M/n discrete-event simulation keeping every `thinning`-th waiting time after a
/// warm-up, so retained samples are close to independent. `num_packets` counts retained samples;
/// ArgumentError below 1e5.
QueueValidation queue_validation(const ClassParams& p, long num_packets, std::uint64_t seed, int thinning = 40);

/// sup |F_n - F| against the Erlang-C waiting-time law (atom 1 - xi at zero).
double ks_statistic_waits(std::vector<double> waits, const ClassParams& p);

void write_micro_outputs(const std::filesystem::path& dir, const MicroConfig& cfg, const MicroEnsemble& ens,
                         const ContinuumRing& continuum);

} // namespace ifpw

#endif // IFPW_MICRO_ORACLE_HPP
