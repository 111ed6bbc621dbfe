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
#include "ifpw/comm_kernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace ifpw
{

namespace
{

constexpr std::array<DensityReferenceRow, 10> k_reference{{
    {10.0, 0.362, 0.621, 125},
    {20.0, 0.351, 0.576, 62},
    {30.0, 0.313, 0.531, 41},
    {40.0, 0.292, 0.499, 31},
    {50.0, 0.267, 0.434, 25},
    {60.0, 0.258, 0.392, 21},
    {70.0, 0.216, 0.357, 18},
    {80.0, 0.199, 0.291, 15},
    {90.0, 0.176, 0.268, 14},
    {100.0, 0.153, 0.243, 12},
}};

// Shape of the kernel with unit mass: exp(-d^2/a^2) / (a sqrt(pi)).
double unit_shape(double a, double d)
{
    return std::exp(-(d * d) / (a * a)) / (a * std::sqrt(std::numbers::pi));
}

double sse(std::span<const CalibrationSample> samples, double a, double b)
{
    double s = 0.0;
    for (const auto& smp : samples) {
        const double res = smp.success_rate - b * unit_shape(a, smp.distance);
        s += res * res;
    }
    return s;
}

// Optimal b for fixed a (linear least squares).
double best_mass(std::span<const CalibrationSample> samples, double a)
{
    double num = 0.0;
    double den = 0.0;
    for (const auto& smp : samples) {
        const double g = unit_shape(a, smp.distance);
        num += smp.success_rate * g;
        den += g * g;
    }
    return den > 0.0 ? num / den : 0.0;
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) {
            cell.pop_back();
        }
        out.push_back(cell);
    }
    return out;
}

double parse_number(const std::string& s, const std::string& path, int line_no)
{
    try {
        std::size_t used = 0;
        const double v   = std::stod(s, &used);
        if (used != s.size()) {
            throw std::invalid_argument(s);
        }
        return v;
    }
    catch (const std::exception&) {
        throw ArgumentError(path + ":" + std::to_string(line_no) + ": not a number: '" + s + "'");
    }
}

} // namespace

void validate(const KernelParams& kp)
{
    if (!(kp.a > 0.0) || !(kp.b > 0.0) || kp.b > 1.0) {
        throw ArgumentError("kernel needs a > 0 and 0 < b <= 1");
    }
    if (kp.b > kp.a * std::sqrt(std::numbers::pi) * (1.0 + 1e-12)) {
        throw ArgumentError("kernel peak b/(a sqrt(pi)) exceeds 1");
    }
}

double kernel_at(const KernelParams& kp, double d)
{
    return kp.b * unit_shape(kp.a, d);
}

double kernel_value(const KernelParams& kp, double x, double y)
{
    return kernel_at(kp, x - y);
}

double kernel_mass(const KernelParams& kp)
{
    // composite Simpson on [-8a, 8a]
    constexpr int intervals = 4000;
    const double lo         = -8.0 * kp.a;
    const double h          = 16.0 * kp.a / intervals;
    double acc              = kernel_at(kp, lo) + kernel_at(kp, -lo);
    for (int i = 1; i < intervals; ++i) {
        acc += (i % 2 == 1 ? 4.0 : 2.0) * kernel_at(kp, lo + i * h);
    }
    return acc * h / 3.0;
}

CalibrationResult calibrate(std::span<const CalibrationSample> samples)
{
    if (samples.size() < 3) {
        throw CalibrationError("calibration needs at least 3 samples");
    }
    std::set<double> distinct;
    double max_d = 0.0;
    for (const auto& s : samples) {
        if (!(s.distance >= 0.0) || !(s.success_rate >= 0.0) || s.success_rate > 1.0) {
            throw CalibrationError("calibration sample out of range");
        }
        distinct.insert(s.distance);
        max_d = std::max(max_d, s.distance);
    }
    if (distinct.size() < 2) {
        throw CalibrationError("calibration needs at least 2 distinct distances");
    }

    // coarse log-spaced scan over a; b in closed form
    const double a_lo = std::max(1e-4, max_d * 1e-3);
    const double a_hi = std::max(10.0 * max_d, 1e-2);
    constexpr int scan = 600;
    double a           = a_lo;
    double b           = best_mass(samples, a_lo);
    double best        = sse(samples, a, b);
    for (int i = 1; i <= scan; ++i) {
        const double cand_a = a_lo * std::pow(a_hi / a_lo, static_cast<double>(i) / scan);
        const double cand_b = best_mass(samples, cand_a);
        const double cand   = sse(samples, cand_a, cand_b);
        if (cand < best) {
            best = cand;
            a    = cand_a;
            b    = cand_b;
        }
    }
    if (!(b > 0.0)) {
        throw CalibrationError("samples carry no success signal");
    }

    // Gauss-Newton with step halving
    constexpr int max_iter = 200;
    int iter               = 0;
    bool converged         = false;
    for (; iter < max_iter; ++iter) {
        double jaa = 0.0, jab = 0.0, jbb = 0.0, ga = 0.0, gb = 0.0;
        for (const auto& s : samples) {
            const double g   = unit_shape(a, s.distance);
            const double f   = b * g;
            const double res = s.success_rate - f;
            const double da  = f * (-1.0 / a + 2.0 * s.distance * s.distance / (a * a * a));
            const double db  = g;
            jaa += da * da;
            jab += da * db;
            jbb += db * db;
            ga += da * res;
            gb += db * res;
        }
        const double det = jaa * jbb - jab * jab;
        if (!(std::abs(det) > 0.0)) {
            converged = true; // flat direction: the scan optimum already stands
            break;
        }
        double step_a = (jbb * ga - jab * gb) / det;
        double step_b = (jaa * gb - jab * ga) / det;
        bool improved = false;
        for (int halve = 0; halve < 40; ++halve) {
            const double na = a + step_a;
            const double nb = b + step_b;
            if (na > 0.0 && nb > 0.0) {
                const double cand = sse(samples, na, nb);
                if (cand <= best) {
                    a        = na;
                    b        = nb;
                    best     = cand;
                    improved = true;
                    break;
                }
            }
            step_a *= 0.5;
            step_b *= 0.5;
        }
        if (!improved || std::hypot(step_a, step_b) < 1e-8) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw ConvergenceError("kernel calibration did not converge", {a, b});
    }

    // project onto the admissible set
    b = std::min({b, 1.0, a * std::sqrt(std::numbers::pi)});
    CalibrationResult out;
    out.params     = {a, b};
    out.iterations = iter;
    out.r_squared  = r_squared(samples, out.params);
    return out;
}

double r_squared(std::span<const CalibrationSample> samples, const KernelParams& kp)
{
    if (samples.size() < 2) {
        throw ArgumentError("r_squared needs at least 2 samples");
    }
    double mean = 0.0;
    for (const auto& s : samples) {
        mean += s.success_rate;
    }
    mean /= static_cast<double>(samples.size());
    double ss_tot = 0.0;
    double ss_res = 0.0;
    for (const auto& s : samples) {
        ss_tot += (s.success_rate - mean) * (s.success_rate - mean);
        const double res = s.success_rate - kernel_at(kp, s.distance);
        ss_res += res * res;
    }
    if (!(ss_tot > 0.0)) {
        throw DegenerateDataError("success rates have zero variance");
    }
    return 1.0 - ss_res / ss_tot;
}

int max_servers(double capacity_bps, double density, double beta_hz, double range_km, double penetration,
                double packet_bits)
{
    if (!(capacity_bps > 0.0) || !(density > 0.0) || !(beta_hz > 0.0) || !(range_km > 0.0) ||
        !(penetration > 0.0) || penetration > 1.0 || !(packet_bits > 0.0)) {
        throw ArgumentError("max_servers arguments must be positive, penetration in (0, 1]");
    }
    const double denom = 2.0 * density * beta_hz * range_km * penetration * packet_bits;
    return static_cast<int>(std::floor(capacity_bps / denom));
}

std::span<const DensityReferenceRow> reference_table()
{
    return k_reference;
}

DensityReferenceRow lookup_reference(double k, bool interpolate)
{
    const auto& lo_row = k_reference.front();
    const auto& hi_row = k_reference.back();
    if (!(k >= lo_row.density) || k > hi_row.density) {
        throw RangeError("density " + std::to_string(k) + " veh/km outside the reference range [10, 100]");
    }
    std::size_t nearest = 0;
    for (std::size_t i = 1; i < k_reference.size(); ++i) {
        // ties go to the lower density
        if (std::abs(k_reference[i].density - k) < std::abs(k_reference[nearest].density - k)) {
            nearest = i;
        }
    }
    DensityReferenceRow row = k_reference[nearest];
    if (interpolate) {
        const auto kp = reference_kernel_clamped(k);
        row.density   = k;
        row.a         = kp.a;
        row.b         = kp.b;
    }
    return row;
}

KernelParams reference_kernel_clamped(double k)
{
    if (k <= k_reference.front().density) {
        return {k_reference.front().a, k_reference.front().b};
    }
    if (k >= k_reference.back().density) {
        return {k_reference.back().a, k_reference.back().b};
    }
    std::size_t i = 1;
    while (k_reference[i].density < k) {
        ++i;
    }
    const auto& lo = k_reference[i - 1];
    const auto& hi = k_reference[i];
    const double w = (k - lo.density) / (hi.density - lo.density);
    return {lo.a + w * (hi.a - lo.a), lo.b + w * (hi.b - lo.b)};
}

std::vector<CalibrationSample> read_calibration_samples(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ArgumentError("cannot open sample file " + path);
    }
    std::string line;
    if (!std::getline(in, line) || split_csv_line(line) != std::vector<std::string>{"distance_km", "success_rate"}) {
        throw ArgumentError(path + ": expected header 'distance_km,success_rate'");
    }
    std::vector<CalibrationSample> out;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto cells = split_csv_line(line);
        if (cells.size() != 2) {
            throw ArgumentError(path + ":" + std::to_string(line_no) + ": expected 2 columns");
        }
        out.push_back({parse_number(cells[0], path, line_no), parse_number(cells[1], path, line_no)});
    }
    return out;
}

void write_calibration_samples(const std::string& path, std::span<const CalibrationSample> samples)
{
    std::ofstream out(path);
    if (!out) {
        throw ArgumentError("cannot write " + path);
    }
    out.precision(17);
    out << "distance_km,success_rate\n";
    for (const auto& s : samples) {
        out << s.distance << ',' << s.success_rate << '\n';
    }
}

std::vector<DensityReferenceRow> read_reference_table(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ArgumentError("cannot open reference table " + path);
    }
    std::string line;
    if (!std::getline(in, line) ||
        split_csv_line(line) != std::vector<std::string>{"density_veh_per_km", "a", "b", "n_max"}) {
        throw ArgumentError(path + ": expected header 'density_veh_per_km,a,b,n_max'");
    }
    std::vector<DensityReferenceRow> out;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto cells = split_csv_line(line);
        if (cells.size() != 4) {
            throw ArgumentError(path + ":" + std::to_string(line_no) + ": expected 4 columns");
        }
        DensityReferenceRow row{parse_number(cells[0], path, line_no), parse_number(cells[1], path, line_no),
                                parse_number(cells[2], path, line_no),
                                static_cast<int>(parse_number(cells[3], path, line_no))};
        if (!out.empty() && !(row.density > out.back().density)) {
            throw ArgumentError(path + ":" + std::to_string(line_no) + ": densities must strictly increase");
        }
        out.push_back(row);
    }
    return out;
}

} // namespace ifpw
