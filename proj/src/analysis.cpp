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
#include "ifpw/analysis.hpp"

#include "ifpw/coupling.hpp"
#include "ifpw/error.hpp"
#include "ifpw/queueing.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace ifpw
{

namespace
{

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

double phi(double g, double a)
{
    return std::expm1(-g * a) + a;
}

} // namespace

double gamma(double beta_hz, double b, double sigma, double mu)
{
    if (!(beta_hz > 0.0) || !(b > 0.0) || !(sigma > 0.0) || !(mu > 0.0)) {
        throw ArgumentError("gamma needs positive beta, b, sigma and mu");
    }
    return beta_hz * b * sigma / mu;
}

double scenario_gamma(const ScenarioConfig& cfg, std::size_t class_index)
{
    if (class_index >= cfg.classes.size()) {
        throw ArgumentError("class index out of range");
    }
    const auto kp = fixed_kernel(cfg);
    return gamma(cfg.beta_hz, kp.b, cfg.sigma() * cfg.contact_length_km, cfg.classes[class_index].queue.mu);
}

std::optional<double> asymptotic_spread(double g)
{
    if (!(g > 0.0) || !std::isfinite(g)) {
        throw ArgumentError("gamma must be positive and finite");
    }
    if (g <= 1.0) {
        return std::nullopt;
    }
    double lo = 0.0, hi = 1.0; // phi(lo) <= 0 < phi(hi) once lo is off the trivial root
    // move lo off the trivial root at 0: phi < 0 just right of it since phi'(0) = 1 - g < 0
    lo = std::min(0.5, 1e-3 * (g - 1.0) / g);
    while (phi(g, lo) >= 0.0) {
        lo *= 0.5;
        if (lo < 1e-300) {
            throw SolverError("cannot bracket the spread root");
        }
    }
    double a = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double f = phi(g, a);
        if (std::abs(f) < 1e-13) {
            return a;
        }
        if (f > 0.0) {
            hi = a;
        }
        else {
            lo = a;
        }
        const double d = 1.0 - g * std::exp(-g * a);
        double next    = d != 0.0 ? a - f / d : lo - 1.0;
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        if (std::abs(next - a) < 1e-16) {
            return next;
        }
        a = next;
    }
    throw SolverError("spread root did not converge in 200 iterations");
}

bool ifpw_exists(double g)
{
    return g > 1.0;
}

std::optional<double> asymptotic_informed_density(double sigma, double g)
{
    const auto a = asymptotic_spread(g);
    if (!a) {
        return std::nullopt;
    }
    return sigma * *a;
}

double gamma_from_spread(double alpha)
{
    if (!(alpha > 0.0) || !(alpha < 1.0)) {
        throw ArgumentError("spread must lie in (0, 1)");
    }
    return -std::log1p(-alpha) / alpha;
}

AsymptoticResult analyze_asymptotics(double g, double sigma)
{
    AsymptoticResult r;
    r.gamma      = g;
    r.exists     = ifpw_exists(g);
    r.alpha_star = asymptotic_spread(g);
    if (r.alpha_star) {
        r.informed_density = sigma * *r.alpha_star;
    }
    return r;
}

FrontField parse_front_field(const std::string& name)
{
    if (name == "E") {
        return FrontField::E;
    }
    if (name == "R") {
        return FrontField::R;
    }
    if (name == "informed") {
        return FrontField::informed;
    }
    throw ArgumentError("unknown field '" + name + "' (E, R, informed)");
}

std::string to_string(FrontField f)
{
    switch (f) {
    case FrontField::E:
        return "E";
    case FrontField::R:
        return "R";
    case FrontField::informed:
        return "informed";
    }
    return "?";
}

std::vector<double> front_field(const ClassState& st, FrontField f)
{
    switch (f) {
    case FrontField::E:
        return st.e;
    case FrontField::R:
        return st.r;
    case FrontField::informed: {
        std::vector<double> out(st.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = st.informed(i);
        }
        return out;
    }
    }
    return {};
}

FrontPosition locate_fronts(std::span<const double> field, int seed_cell, double reference)
{
    const int n = static_cast<int>(field.size());
    if (seed_cell < 0 || seed_cell >= n) {
        throw ArgumentError("seed cell outside the field");
    }
    auto at = [&](int i) {
        return field[static_cast<std::size_t>(i)];
    };
    int start = -1;
    for (int d = 0; d < n && start < 0; ++d) {
        if (seed_cell + d < n && at(seed_cell + d) >= reference) {
            start = seed_cell + d;
        }
        else if (seed_cell - d >= 0 && at(seed_cell - d) >= reference) {
            start = seed_cell - d;
        }
    }
    if (start < 0) {
        throw FrontNotFoundError("no cell reaches the reference density (both fronts)");
    }
    FrontPosition pos;
    int i = start;
    while (i + 1 < n && at(i + 1) >= reference) {
        ++i;
    }
    if (i + 1 >= n) {
        throw FrontNotFoundError("forward front left the domain");
    }
    pos.forward = i + (at(i) - reference) / (at(i) - at(i + 1));
    i           = start;
    while (i - 1 >= 0 && at(i - 1) >= reference) {
        --i;
    }
    if (i - 1 < 0) {
        throw FrontNotFoundError("backward front left the domain");
    }
    pos.backward = i - (at(i) - reference) / (at(i) - at(i - 1));
    return pos;
}

WaveSpeedEstimate estimate_wave_speeds(std::span<const double> field1, std::span<const double> field2, double t1_s,
                                       double t2_s, double reference, int seed_cell, const GridSpec& grid)
{
    if (t1_s == t2_s) {
        throw ArgumentError("snapshot times must differ");
    }
    if (field1.size() != field2.size()) {
        throw ShapeError("snapshots differ in size");
    }
    WaveSpeedEstimate w;
    w.reference_density = reference;
    w.first             = locate_fronts(field1, seed_cell, reference);
    w.second            = locate_fronts(field2, seed_cell, reference);
    const double scale  = grid.dx_km / (t2_s - t1_s) * 3600.0;
    w.c_forward_kmh         = (w.second.forward - w.first.forward) * scale;
    w.backward_upstream_kmh = (w.first.backward - w.second.backward) * scale;
    w.c_backward_kmh        = std::abs(w.backward_upstream_kmh);
    return w;
}

double measured_spread(const ClassState& st, std::span<const double> sigma)
{
    const auto n = st.size();
    if (sigma.size() != n) {
        throw ShapeError("sigma field does not match the state");
    }
    std::vector<double> f(n, 0.0);
    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        f[i] = sigma[i] > 0.0 ? std::clamp((sigma[i] - st.s[i]) / sigma[i], 0.0, 1.0) : 0.0;
        peak = std::max(peak, f[i]);
    }
    if (peak <= 0.0) {
        return 0.0;
    }
    std::vector<std::size_t> region;
    for (std::size_t i = 0; i < n; ++i) {
        if (f[i] >= 0.5 * peak) {
            region.push_back(i);
        }
    }
    if (region.size() < 16) {
        throw InsufficientRunError("informed region spans only " + std::to_string(region.size()) +
                                   " cells; run longer before measuring the plateau");
    }
    const std::size_t q = region.size() / 4;
    double sum          = 0.0;
    for (std::size_t k = q; k < region.size() - q; ++k) {
        sum += f[region[k]];
    }
    return sum / static_cast<double>(region.size() - 2 * q);
}

double measured_spread(const ClassState& st)
{
    std::vector<double> sigma(st.size());
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        sigma[i] = st.equipped(i);
    }
    return measured_spread(st, sigma);
}

PropagationExtent propagation_extent(std::span<const std::vector<double>> trajectory, int seed_cell,
                                     double threshold, const GridSpec& grid)
{
    PropagationExtent ext;
    for (const auto& field : trajectory) {
        for (std::size_t i = 0; i < field.size(); ++i) {
            if (field[i] > threshold) {
                const double d = (static_cast<double>(i) - seed_cell) * grid.dx_km;
                if (d >= 0.0) {
                    ext.downstream_km = std::max(ext.downstream_km, d);
                }
                else {
                    ext.upstream_km = std::max(ext.upstream_km, -d);
                }
            }
        }
    }
    return ext;
}

std::vector<SweepRow> sweep(const ScenarioConfig& base, const SweepSpec& spec)
{
    if (base.classes.empty()) {
        throw ArgumentError("sweep needs a base scenario with one class");
    }
    const std::vector<double> k0s = spec.k0_values.empty() ? std::vector<double>{base.k0_veh_per_km} : spec.k0_values;
    if (spec.n_values.empty() || spec.mu_values.empty()) {
        throw ArgumentError("sweep grid is empty");
    }
    if (!(spec.t2_s > spec.t1_s) || spec.t2_s > base.horizon_s) {
        throw ArgumentError("sweep needs t1 < t2 <= horizon");
    }
    const int seed_cell = base.classes[0].seeds.empty() ? base.grid.num_cells / 2 : base.classes[0].seeds[0].cell;

    std::vector<SweepRow> rows;
    for (double k0 : k0s) {
        for (double mu : spec.mu_values) {
            for (int n : spec.n_values) {
                SweepRow r;
                r.k0        = k0;
                r.n_servers = n;
                r.mu        = mu;
                r.lambda    = base.classes[0].queue.lambda;
                rows.push_back(r);
            }
        }
    }

    auto evaluate = [&](SweepRow& row) {
        ScenarioConfig cfg  = base;
        cfg.k0_veh_per_km   = row.k0;
        cfg.classes.resize(1);
        cfg.classes[0].queue = {row.lambda, row.n_servers, row.mu};
        row.alpha_star = row.measured_spread = row.c_forward_kmh = row.c_backward_kmh = nan;
        if (!check_stability(cfg.classes[0].queue)) {
            row.skipped = true;
            row.note    = "unstable: lambda >= n mu";
            return;
        }
        try {
            const auto m    = queue_metrics(cfg.classes[0].queue);
            row.xi          = m.xi;
            row.mean_wait_s = m.mean_wait;
            row.gamma       = scenario_gamma(cfg, 0);
            if (const auto a = asymptotic_spread(row.gamma)) {
                row.alpha_star = *a;
            }
            RunOptions opts;
            opts.cadence     = false;
            opts.extra_times = {spec.t1_s, spec.t2_s};
            const auto out   = run_collect(cfg, opts);
            if (out.summary.failed) {
                row.note = out.summary.error;
                return;
            }
            const auto& final_state = out.snapshots.back().traffic.classes[0];
            std::vector<std::string> notes;
            try {
                row.measured_spread = measured_spread(final_state);
            }
            catch (const Error& e) {
                notes.push_back(e.what());
            }
            const double ref = spec.reference_fraction > 0.0
                                   ? spec.reference_fraction * cfg.sigma() *
                                         (std::isnan(row.alpha_star) ? 1.0 : row.alpha_star)
                                   : spec.reference_density;
            try {
                const auto f1 = front_field(out.at(spec.t1_s).traffic.classes[0], spec.field);
                const auto f2 = front_field(out.at(spec.t2_s).traffic.classes[0], spec.field);
                const auto w  = estimate_wave_speeds(f1, f2, spec.t1_s, spec.t2_s, ref, seed_cell, cfg.grid);
                row.c_forward_kmh  = w.c_forward_kmh;
                row.c_backward_kmh = w.backward_upstream_kmh;
            }
            catch (const Error& e) {
                notes.push_back(e.what());
            }
            for (std::size_t k = 0; k < notes.size(); ++k) {
                row.note += (k ? "; " : "") + notes[k];
            }
        }
        catch (const Error& e) {
            row.note = e.what();
        }
    };

    unsigned threads = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
    threads          = std::min<unsigned>(threads, static_cast<unsigned>(rows.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < rows.size(); k = next++) {
            evaluate(rows[k]);
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& t : pool) {
        t.join();
    }
    return rows;
}

void write_sweep_csv(const std::filesystem::path& path, std::span<const SweepRow> rows)
{
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    if (!f) {
        throw ArgumentError("cannot write " + path.string());
    }
    std::fprintf(f, "%s\n", sweep_csv_header);
    for (const auto& r : rows) {
        std::string note = r.note;
        std::replace(note.begin(), note.end(), ',', ';');
        std::replace(note.begin(), note.end(), '"', '\'');
        std::fprintf(f, "%.6g,%d,%.6g,%.6g,%s,%.10g,%.10g,%.10g,%.8g,%.8g,%.10g,%.10g,\"%s\"\n", r.k0, r.n_servers,
                     r.mu, r.lambda, r.skipped ? "skipped" : (r.note.empty() ? "ok" : "partial"), r.gamma,
                     r.alpha_star, r.measured_spread, r.c_forward_kmh, r.c_backward_kmh, r.xi, r.mean_wait_s,
                     note.c_str());
    }
    std::fclose(f);
}

} // namespace ifpw
