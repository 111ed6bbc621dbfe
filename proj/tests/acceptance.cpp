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
// Acceptance suite: one PASS/FAIL line per criterion. Optional arguments select criteria by number.

#include "ifpw/analysis.hpp"
#include "ifpw/coupling.hpp"
#include "ifpw/error.hpp"
#include "ifpw/lwr_ctm.hpp"
#include "ifpw/micro_oracle.hpp"
#include "ifpw/queueing.hpp"
#include "ifpw/scenario.hpp"
#include "ifpw/shre_solver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace ifpw;

namespace
{

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

ScenarioConfig scenario(const char* file)
{
    return load_scenario(std::string(IFPW_SCENARIO_DIR) + "/" + file);
}

Outcome c1_anchor()
{
    const double a = *asymptotic_spread(3.384);
    const double d = *asymptotic_informed_density(20.0, 3.384);
    return {std::abs(a - 0.9613) <= 5e-4 && std::abs(d - 19.2) <= 0.05,
            fmt("alpha*(3.384) = %.6f, sigma alpha* at 20 veh/km = %.4f veh/km", a, d)};
}

Outcome c2_threshold()
{
    auto roots = [](double g) {
        int changes = 0;
        double prev = 1.0 - 1e-4 - std::exp(-g * 1e-4);
        for (int k = 2; k < 10000; ++k) {
            const double a = k * 1e-4;
            const double f = 1.0 - a - std::exp(-g * a);
            changes += (f > 0) != (prev > 0);
            prev = f;
        }
        return changes;
    };
    bool ok = true;
    std::string d;
    for (double g : {0.5, 0.9, 0.99}) {
        ok = ok && !asymptotic_spread(g) && roots(g) == 0;
    }
    for (double g : {1.01, 2.0, 3.384}) {
        const auto a = asymptotic_spread(g);
        ok           = ok && a && roots(g) == 1 && std::abs(1.0 - *a - std::exp(-g * *a)) < 1e-12;
        d += fmt("alpha*(%g) = %.6f; ", g, a ? *a : -1.0);
    }
    return {ok, d + "no root for 0.5, 0.9, 0.99"};
}

Outcome c3_numeric_vs_analytic()
{
    bool ok = true;
    std::string d;
    for (double k0 : {30.0, 40.0, 50.0}) {
        auto cfg             = scenario("homogeneous.json");
        cfg.k0_veh_per_km    = k0;
        cfg.classes[0].queue = {0.5, 11, 0.05};
        cfg.horizon_s        = 600;
        RunOptions opts;
        opts.cadence    = false;
        const auto out  = run_collect(cfg, opts);
        const double g  = scenario_gamma(cfg, 0);
        const double a  = *asymptotic_spread(g);
        const double m  = measured_spread(out.snapshots.back().traffic.classes[0]);
        const double rel = std::abs(m - a) / a;
        ok = ok && !out.summary.failed && g > 1.0 && rel <= 0.02;
        d += fmt("k0 %.0f: gamma %.3f alpha* %.5f measured %.5f; ", k0, g, a, m);
    }
    return {ok, d};
}

Outcome c4_wave_speeds()
{
    const auto cfg = scenario("homogeneous.json");
    RunOptions opts;
    opts.cadence     = false;
    opts.extra_times = {150.0, 230.0};
    const auto out   = run_collect(cfg, opts);
    const auto f1    = front_field(out.at(150.0).traffic.classes[0], FrontField::E);
    const auto f2    = front_field(out.at(230.0).traffic.classes[0], FrontField::E);
    const auto w = estimate_wave_speeds(f1, f2, 150.0, 230.0, 10.0, cfg.classes[0].seeds[0].cell, cfg.grid);
    const double half = 0.5 * (w.c_forward_kmh - w.c_backward_kmh);
    const bool ok     = std::abs(half - cfg.fd.v_f_kmh) <= 0.1 * cfg.fd.v_f_kmh && w.c_forward_kmh >= 100.0 &&
                    w.c_backward_kmh >= 100.0;
    return {ok, fmt("c_F %.1f km/h, c_B %.1f km/h, (c_F - c_B)/2 = %.2f km/h", w.c_forward_kmh, w.c_backward_kmh,
                    half)};
}

Outcome c5_local()
{
    const auto cfg = scenario("local_propagation.json");
    std::vector<std::vector<std::vector<double>>> traj(cfg.classes.size());
    const auto summary = run(cfg, [&](const WorldState& w) {
        for (std::size_t j = 0; j < traj.size(); ++j) {
            traj[j].push_back(w.traffic.classes[j].r);
        }
    });
    bool ok = !summary.failed;
    std::vector<double> extent;
    std::string d;
    for (std::size_t j = 0; j < traj.size(); ++j) {
        const double g = scenario_gamma(cfg, j);
        double final_max = 0.0;
        for (double r : traj[j].back()) {
            final_max = std::max(final_max, r);
        }
        const auto e = propagation_extent(traj[j], cfg.classes[j].seeds[0].cell, 0.1, cfg.grid);
        extent.push_back(e.upstream_km + e.downstream_km);
        ok = ok && g < 1.0 && final_max < 1e-3;
        d += fmt("u %.3f: gamma %.3f, extent %.3f km (up %.3f, down %.3f), final max R %.1e; ",
                 cfg.classes[j].queue.mu, g, extent.back(), e.upstream_km, e.downstream_km, final_max);
    }
    ok = ok && extent.size() == 2 && cfg.classes[0].queue.mu < cfg.classes[1].queue.mu && extent[0] > extent[1];
    return {ok, d};
}

Outcome c6_sweep()
{
    const auto cfg = scenario("sweep_base.json");
    SweepSpec spec;
    spec.n_values  = {21, 22, 23, 24, 25};
    spec.mu_values = {0.05, 0.10, 0.15, 0.20, 0.25};
    const auto rows = sweep(cfg, spec);
    auto at         = [&](int n, double mu) -> const SweepRow& {
        for (const auto& r : rows) {
            if (r.n_servers == n && std::abs(r.mu - mu) < 1e-12) {
                return r;
            }
        }
        throw ArgumentError("missing sweep point");
    };
    bool speed_mono = true, spread_mono = true, n_invariant = true, complete = true;
    for (const auto& r : rows) {
        complete = complete && !r.skipped && std::isfinite(r.c_forward_kmh) && std::isfinite(r.measured_spread);
    }
    for (double mu : spec.mu_values) {
        for (std::size_t k = 1; k < spec.n_values.size(); ++k) {
            const auto& lo = at(spec.n_values[k - 1], mu);
            const auto& hi = at(spec.n_values[k], mu);
            speed_mono     = speed_mono && hi.c_forward_kmh >= lo.c_forward_kmh;
            n_invariant    = n_invariant && std::abs(hi.measured_spread - at(spec.n_values[0], mu).measured_spread) <=
                                              0.01 * at(spec.n_values[0], mu).measured_spread;
        }
    }
    for (int n : spec.n_values) {
        for (std::size_t k = 1; k < spec.mu_values.size(); ++k) {
            spread_mono = spread_mono && at(n, spec.mu_values[k]).measured_spread <
                                             at(n, spec.mu_values[k - 1]).measured_spread;
        }
    }
    std::string d = fmt("c_F(n) non-decreasing: %s; spread decreasing in u: %s; spread n-invariant (1%%): %s; ",
                        speed_mono ? "yes" : "no", spread_mono ? "yes" : "no", n_invariant ? "yes" : "no");
    for (double mu : spec.mu_values) {
        d += fmt("u %.2f: spread %.4f c_F %.0f..%.0f; ", mu, at(21, mu).measured_spread, at(21, mu).c_forward_kmh,
                 at(25, mu).c_forward_kmh);
    }
    return {complete && speed_mono && spread_mono && n_invariant, d};
}

Outcome c7_queueing()
{
    bool ok = true;
    double worst = 0.0;
    for (double rho : {0.1, 0.5, 0.9}) {
        worst = std::max(worst, std::abs(wait_probability({rho, 1, 1.0}) - rho));
    }
    ok = ok && worst <= 1e-12;
    const double xi = wait_probability({1.0, 2, 1.0});
    ok              = ok && std::abs(xi - 1.0 / 3.0) <= 1e-12;
    const auto v    = queue_validation({1.0, 2, 1.0}, 100000, 17);
    ok              = ok && v.ks_pass;
    return {ok, fmt("|xi - rho| max %.1e, Erlang-C xi %.15f, KS D = %.4f vs 1%% critical %.4f (%zu samples)", worst,
                    xi, v.ks_statistic, v.ks_critical, v.waits.size())};
}

Outcome c8_conservation()
{
    // FFT against direct summation
    GridSpec g;
    g.num_cells = 4096;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 20.0);
    std::vector<double> r(4096), fast(4096), direct(4096);
    for (auto& x : r) {
        x = u(rng);
    }
    const KernelParams kp{0.292, 0.499};
    FftConvolution conv(kp, g);
    conv.apply(r, fast);
    direct = convolve_relaying_direct(r, kp, g);
    double rel = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        rel = std::max(rel, std::abs(fast[i] - direct[i]) / std::abs(direct[i]));
    }

    // frozen traffic: S + H + R + E per cell
    auto cfg           = scenario("homogeneous.json");
    cfg.grid.num_cells = 1000;
    cfg.frozen_traffic = true;
    Simulation sim(cfg);
    auto w                = initialize(cfg);
    const auto equipped0 = w.traffic.classes[0];
    for (int k = 0; k < 10000; ++k) {
        sim.step(w);
    }
    double drift = 0.0;
    for (std::size_t i = 0; i < equipped0.size(); ++i) {
        drift = std::max(drift, std::abs(w.traffic.classes[0].equipped(i) - equipped0.equipped(i)));
    }

    // closed-boundary vehicle count
    TrafficSetup s;
    s.grid.num_cells = 500;
    s.boundary       = TrafficBoundary::closed;
    std::vector<double> k(500);
    std::uniform_real_distribution<double> uk(0.0, s.fd.k_jam_veh_per_km);
    for (auto& x : k) {
        x = uk(rng);
    }
    const double n0 = vehicle_count(k, s.grid);
    for (int n = 0; n < 10000; ++n) {
        k = advance_total(k, s, n * s.grid.dt_s);
    }
    const double veh_rel = std::abs(vehicle_count(k, s.grid) - n0) / n0;

    // Riemann shock: free upstream, congested downstream
    TrafficSetup rs;
    rs.grid.num_cells = 1000;
    rs.boundary       = TrafficBoundary::open;
    const double kl = 10.0, kr = 120.0;
    rs.inflow_density = kl;
    std::vector<double> q(1000, kl);
    std::fill(q.begin() + 500, q.end(), kr);
    auto flow = [&](double x) {
        return std::min(rs.fd.v_f_kmh * x, rs.fd.wave_speed_kmh() * (rs.fd.k_jam_veh_per_km - x));
    };
    const double shock_kmh = (flow(kr) - flow(kl)) / (kr - kl);
    const int steps        = 2000;
    for (int n = 0; n < steps; ++n) {
        q = advance_total(q, rs, n * rs.grid.dt_s);
    }
    const double mid = 0.5 * (kl + kr);
    double front     = -1.0;
    for (std::size_t i = 1; i < q.size(); ++i) {
        if (q[i - 1] < mid && q[i] >= mid) {
            front = (i - 1) + (mid - q[i - 1]) / (q[i] - q[i - 1]) + 0.5;
            break;
        }
    }
    const double expected = 500.0 + shock_kmh * steps * rs.grid.dt_s / 3600.0 / rs.grid.dx_km;
    const double shock_err = std::abs(front - expected);

    const bool ok = rel <= 1e-9 && drift < 1e-8 && veh_rel <= 1e-9 && shock_err <= steps / 100.0;
    return {ok, fmt("FFT/direct rel %.1e; S+H+R+E drift %.1e veh/km over 1e4 steps; closed vehicle rel %.1e; shock "
                    "at cell %.2f vs %.2f (RH %.2f km/h)",
                    rel, drift, veh_rel, front, expected, shock_kmh)};
}

Outcome c9_micro()
{
    std::ifstream in(std::string(IFPW_SCENARIO_DIR) + "/oracle_micro.json");
    const auto cfg = resolve(micro_config_from_json(nlohmann::json::parse(in)));
    const auto ens  = simulate(cfg);
    const auto cont = continuum_ring(cfg);
    const double a  = *asymptotic_spread(2.0);
    const double z  = (ens.final_mean_takeoff - a) / ens.final_se_takeoff;
    const bool mean_ok = cfg.vehicles == 200 && cfg.replications == 500 &&
                         std::abs(micro_gamma(cfg) - 2.0) < 1e-12 && std::abs(z) <= 3.0;
    const bool half_ok = std::abs(cont.half_time - ens.half_time_mean) <= 3.0 * ens.half_time_sd;
    return {mean_ok && half_ok,
            fmt("final informed %.5f +- %.5f over %d take-offs vs alpha*(2) %.5f (z = %.2f); half-spread SHRE %.3f s "
                "vs ensemble %.3f +- %.3f s",
                ens.final_mean_takeoff, ens.final_se_takeoff, ens.takeoffs, a, z, cont.half_time,
                ens.half_time_mean, ens.half_time_sd)};
}

// Per-cell arrival of the informed fraction at `level`, with the traffic state at that moment.
struct Arrivals {
    std::vector<std::vector<double>> time;     ///< [class][cell], NaN if never
    std::vector<std::vector<char>> congested;  ///< [class][cell] at arrival
};

double regress_speed_kmh(const std::vector<double>& t, int lo, int hi, const GridSpec& grid)
{
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (int i = lo; i <= hi; ++i) {
        if (!std::isfinite(t[i])) {
            continue;
        }
        const double x = i * grid.dx_km;
        sx += t[i];
        sy += x;
        sxx += t[i] * t[i];
        sxy += t[i] * x;
        ++n;
    }
    if (n < 5) {
        return std::nan("");
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx); // km/s
    return slope * 3600.0;
}

Outcome c10_incident()
{
    const auto cfg  = scenario("incident.json");
    const double kc = cfg.fd.critical_density();
    const double level = 0.25;
    const int cells    = cfg.grid.num_cells;
    const std::size_t nc = cfg.classes.size();
    Arrivals arr;
    arr.time.assign(nc, std::vector<double>(cells, std::nan("")));
    arr.congested.assign(nc, std::vector<char>(cells, 0));
    std::vector<std::vector<double>> prev(nc, std::vector<double>(cells, 0.0));
    double prev_t = 0.0;
    WorldState final_state;
    const auto summary = run(cfg, [&](const WorldState& w) {
        for (std::size_t j = 0; j < nc; ++j) {
            const auto& c = w.traffic.classes[j];
            for (int i = 0; i < cells; ++i) {
                const double eq = c.equipped(i);
                const double f  = eq > 0.0 ? c.informed(i) / eq : 0.0;
                if (std::isnan(arr.time[j][i]) && f >= level) {
                    const double p = prev[j][i];
                    arr.time[j][i] = w.time_s > 0.0 ? prev_t + (level - p) / (f - p) * (w.time_s - prev_t) : 0.0;
                    arr.congested[j][i] = w.traffic.total[i] > kc;
                }
                prev[j][i] = f;
            }
        }
        prev_t      = w.time_s;
        final_state = w;
    });
    if (summary.failed) {
        return {false, "run failed: " + summary.error};
    }
    const int seed       = cfg.classes[0].seeds[0].cell;
    const int inc_begin  = cfg.capacity.events[0].cell_begin;
    const int inc_end    = cfg.capacity.events[0].cell_end;
    bool ok              = true;
    std::string d;
    for (std::size_t j = 0; j < nc; ++j) {
        int tail = inc_begin;
        while (tail > seed && arr.congested[j][tail - 1]) {
            --tail;
        }
        const double v_free = regress_speed_kmh(arr.time[j], seed + 50, std::max(seed + 60, tail - 20), cfg.grid);
        const double v_cong = regress_speed_kmh(arr.time[j], tail + 5, inc_begin - 5, cfg.grid);
        const double v_down = regress_speed_kmh(arr.time[j], inc_end + 20, inc_end + 200, cfg.grid);
        const bool this_ok  = tail < inc_begin - 20 && v_cong < v_free && v_down > v_cong;
        ok                  = ok && this_ok;
        d += fmt("%s: free %.0f, congested %.0f (cells %d-%d), downstream %.0f km/h; ", cfg.classes[j].name.c_str(),
                 v_free, v_cong, tail, inc_begin - 1, v_down);
    }
    auto index = [&](const std::string& name) {
        for (std::size_t j = 0; j < nc; ++j) {
            if (cfg.classes[j].name == name) {
                return j;
            }
        }
        throw ArgumentError("incident scenario lacks class " + name);
    };
    const int probe   = inc_end + 200;
    const auto n5     = index("n5_u015");
    const auto n10    = index("n10_u015");
    const auto n10slow = index("n10_u006");
    const double t5   = arr.time[n5][probe];
    const double t10  = arr.time[n10][probe];
    ok                = ok && std::isfinite(t10) && (!std::isfinite(t5) || t10 < t5);
    const double s15  = measured_spread(final_state.traffic.classes[n10]);
    const double s06  = measured_spread(final_state.traffic.classes[n10slow]);
    ok                = ok && s06 > s15;
    d += fmt("probe cell %d arrival n10 %.1f s vs n5 %.1f s; spread u 0.06 %.4f vs u 0.15 %.4f", probe, t10, t5, s06,
             s15);
    return {ok, d};
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"final-spread anchor", c1_anchor},
        {"existence threshold", c2_threshold},
        {"analytic/numeric agreement", c3_numeric_vs_analytic},
        {"wave-speed anchor", c4_wave_speeds},
        {"local propagation", c5_local},
        {"control monotonicities", c6_sweep},
        {"queueing identities", c7_queueing},
        {"conservation suite", c8_conservation},
        {"continuum vs micro oracle", c9_micro},
        {"incident scenario", c10_incident},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        only.insert(std::atoi(argv[i]));
    }
    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (!only.empty() && !only.count(id)) {
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        }
        catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += o.pass ? 0 : 1;
        std::printf("%s criterion %2d (%s) [%.1f s]: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first, secs,
                    o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
