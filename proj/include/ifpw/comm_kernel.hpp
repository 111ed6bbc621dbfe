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
#ifndef IFPW_COMM_KERNEL_HPP
#define IFPW_COMM_KERNEL_HPP

#include "ifpw/error.hpp"

#include <span>
#include <string>
#include <vector>

namespace ifpw
{

/// Gaussian one-hop success kernel K(d) = b / (a sqrt(pi)) * exp(-d^2 / a^2).
struct KernelParams {
    double a = 1.0; ///< decay scale [km]
    double b = 1.0; ///< total mass, dimensionless
};

/// Throws ArgumentError unless a > 0, 0 < b <= 1 and the peak b/(a sqrt(pi)) <= 1.
void validate(const KernelParams& kp);

double kernel_value(const KernelParams& kp, double x, double y);

/// Kernel at separation d (symmetric).
double kernel_at(const KernelParams& kp, double d);

/// Quadrature of the kernel over [-8a, 8a]; equals b to ~1e-12.
double kernel_mass(const KernelParams& kp);

struct CalibrationSample {
    double distance     = 0.0; ///< [km]
    double success_rate = 0.0;
};

/// Gauss-Newton did not converge; carries the best iterate found.
class ConvergenceError : public Error
{
public:
    ConvergenceError(const std::string& what, KernelParams best)
        : Error(what)
        , m_best(best)
    {
    }
    KernelParams best() const
    {
        return m_best;
    }

private:
    KernelParams m_best;
};

struct CalibrationResult {
    KernelParams params;
    double r_squared = 0.0;
    int iterations   = 0;
};

/// Least-squares fit of (a, b) to (distance, success rate) samples.
/// Coarse scan over a with b solved in closed form, then Gauss-Newton.
CalibrationResult calibrate(std::span<const CalibrationSample> samples);

/// Coefficient of determination of kernel predictions against samples.
double r_squared(std::span<const CalibrationSample> samples, const KernelParams& kp);

/// floor(C / (2 k beta R W chi)); C in bit/s, k veh/km, beta Hz, R km, chi bits.
int max_servers(double capacity_bps, double density, double beta_hz, double range_km, double penetration,
                double packet_bits);

struct DensityReferenceRow {
    double density = 0.0; ///< [veh/km]
    double a       = 0.0; ///< [km]
    double b       = 0.0;
    int n_max      = 0;
};

/// Calibrated kernels and server budgets per traffic density (10..100 veh/km).
std::span<const DensityReferenceRow> reference_table();

/// Row for density k in [10, 100]. Nearest row, or a/b interpolated linearly
/// between the bracketing rows when `interpolate` is set (n_max always from the nearest row).
DensityReferenceRow lookup_reference(double k, bool interpolate = false);

/// Kernel for an arbitrary local density: interpolated inside the table, clamped outside it.
KernelParams reference_kernel_clamped(double k);

/// CSV with header `distance_km,success_rate`.
std::vector<CalibrationSample> read_calibration_samples(const std::string& path);
void write_calibration_samples(const std::string& path, std::span<const CalibrationSample> samples);

/// CSV with header `density_veh_per_km,a,b,n_max`.
std::vector<DensityReferenceRow> read_reference_table(const std::string& path);

} // namespace ifpw

#endif // IFPW_COMM_KERNEL_HPP
