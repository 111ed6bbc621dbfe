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
#include "ifpw/comm_kernel.hpp"
#include "ifpw/coupling.hpp"
#include "ifpw/error.hpp"
#include "ifpw/micro_oracle.hpp"
#include "ifpw/queueing.hpp"
#include "ifpw/run_output.hpp"
#include "ifpw/scenario.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ifpw;

namespace
{

constexpr int exit_ok     = 0;
constexpr int exit_domain = 1;
constexpr int exit_config = 2;

std::string joined_args(int argc, char** argv)
{
    std::string s;
    for (int i = 0; i < argc; ++i) {
        s += (i ? " " : "") + std::string(argv[i]);
    }
    return s;
}

ScenarioConfig load_with_seed(const std::string& path, std::optional<std::uint64_t> seed)
{
    auto cfg = load_scenario(path);
    if (seed) {
        cfg.seed = *seed;
    }
    return cfg;
}

void print_warnings(const ScenarioConfig& cfg)
{
    for (const auto& w : config_warnings(cfg)) {
        std::cerr << "warning: " << w << '\n';
    }
}

int cmd_run(const std::string& config, const std::string& out, std::optional<std::uint64_t> seed,
            const std::string& command)
{
    const auto cfg = load_with_seed(config, seed);
    print_warnings(cfg);
    const auto summary = run_to_directory(cfg, out, command);
    if (summary.failed) {
        std::cerr << "error: " << summary.error << " (partial outputs in " << out << ")\n";
        return exit_domain;
    }
    std::printf("run %s: %ld steps, %zu snapshots -> %s\n", cfg.name.c_str(), summary.steps_completed,
                summary.snapshot_times.size(), out.c_str());
    for (std::size_t j = 0; j < cfg.classes.size(); ++j) {
        const double g = scenario_gamma(cfg, j);
        const auto a   = asymptotic_spread(g);
        std::printf("  class %s: gamma %.4f, alpha* %s\n", cfg.classes[j].name.c_str(), g,
                    a ? std::to_string(*a).c_str() : "none (IFPW does not exist)");
    }
    return exit_ok;
}

struct AnalyzeArgs {
    double beta = 0, b = 0, sigma = 0, mu = 0;
    std::optional<double> lambda;
    std::optional<int> n;
};

int cmd_analyze(const AnalyzeArgs& a)
{
    if (a.lambda.has_value() != a.n.has_value()) {
        throw ArgumentError("--lambda and --n go together");
    }
    std::optional<QueueMetrics> qm;
    if (a.lambda) {
        const ClassParams p{*a.lambda, *a.n, a.mu};
        require_stable(p);
        qm = queue_metrics(p);
    }
    const auto r = analyze_asymptotics(gamma(a.beta, a.b, a.sigma, a.mu), a.sigma);
    std::printf("gamma            %.10g\n", r.gamma);
    if (r.exists) {
        std::printf("IFPW exists      yes\n");
        std::printf("alpha*           %.10f\n", *r.alpha_star);
        std::printf("sigma * alpha*   %.10g\n", *r.informed_density);
    }
    else {
        std::printf("IFPW does not exist (gamma <= 1)\n");
    }
    if (qm) {
        std::printf("xi               %.10g\n", qm->xi);
        std::printf("mean wait        %.10g s\n", qm->mean_wait);
        std::printf("utilization      %.10g\n", qm->rho);
    }
    return exit_ok;
}

int cmd_calibrate(const std::string& samples_path, const std::string& out)
{
    const auto samples = read_calibration_samples(samples_path);
    const auto res     = calibrate(samples);
    std::printf("a %.10g km\nb %.10g\nR2 %.10g\n", res.params.a, res.params.b, res.r_squared);
    if (!out.empty()) {
        fs::create_directories(out);
        json j{{"tool", "ifpw"},
               {"version", version_string},
               {"command", "calibrate"},
               {"samples", samples_path},
               {"a_km", res.params.a},
               {"b", res.params.b},
               {"r_squared", res.r_squared},
               {"iterations", res.iterations},
               {"started_utc", utc_now()}};
        std::ofstream f(fs::path(out) / "kernel.json");
        f << j.dump(2) << '\n';
    }
    return exit_ok;
}

struct SpeedArgs {
    std::string run_dir;
    std::string class_name;
    double t1 = 0, t2 = 0, reference = 0;
    std::string field = "E";
    std::optional<int> seed_cell;
};

std::vector<double> field_from_run(const fs::path& dir, const std::string& cls, FrontField f, double t,
                                   double* x0 = nullptr)
{
    auto row = [&](const char* suffix) {
        const auto st = read_space_time_csv(dir / (cls + "_" + suffix + ".csv"));
        if (x0) {
            *x0 = st.x_km.empty() ? 0.0 : st.x_km.front();
        }
        return st.at(t);
    };
    switch (f) {
    case FrontField::E:
        return row("E");
    case FrontField::R:
        return row("R");
    case FrontField::informed: {
        auto v       = row("H");
        const auto r = row("R");
        const auto e = row("E");
        for (std::size_t i = 0; i < v.size(); ++i) {
            v[i] += r[i] + e[i];
        }
        return v;
    }
    }
    throw ArgumentError("unknown field");
}

int cmd_speed(const SpeedArgs& a)
{
    const fs::path dir(a.run_dir);
    std::ifstream mf(dir / "manifest.json");
    if (!mf) {
        throw ArgumentError("no manifest.json in " + a.run_dir);
    }
    const auto cfg = from_json(json::parse(mf).at("config"));
    const InfoClassSpec* cls = nullptr;
    for (const auto& c : cfg.classes) {
        if (a.class_name.empty() || c.name == a.class_name) {
            cls = &c;
            break;
        }
    }
    if (!cls) {
        throw ArgumentError("no class named '" + a.class_name + "' in the run");
    }
    int seed = a.seed_cell.value_or(cls->seeds.empty() ? cfg.grid.num_cells / 2 : cls->seeds.front().cell);
    const auto f = parse_front_field(a.field);
    const auto f1 = field_from_run(dir, cls->name, f, a.t1);
    const auto f2 = field_from_run(dir, cls->name, f, a.t2);
    const auto w  = estimate_wave_speeds(f1, f2, a.t1, a.t2, a.reference, seed, cfg.grid);
    std::printf("class %s, field %s, reference %.6g veh/km\n", cls->name.c_str(), a.field.c_str(), a.reference);
    const double edge = cfg.grid.origin_km;
    auto km           = [&](double cell) { return edge + (cell + 0.5) * cfg.grid.dx_km; };
    std::printf("fronts t=%g: backward %.3f km, forward %.3f km\n", a.t1, km(w.first.backward), km(w.first.forward));
    std::printf("fronts t=%g: backward %.3f km, forward %.3f km\n", a.t2, km(w.second.backward), km(w.second.forward));
    std::printf("c_F %.4f km/h\nc_B %.4f km/h\n", w.c_forward_kmh, w.c_backward_kmh);
    return exit_ok;
}

struct SweepArgs {
    std::string config, out;
    std::vector<int> n;
    std::vector<double> mu, k0;
    double t1 = 40, t2 = 80;
    std::string field = "informed";
    double reference_fraction = 0.5;
    unsigned threads = 0;
};

int cmd_sweep(const SweepArgs& a, std::optional<std::uint64_t> seed, const std::string& command)
{
    const auto cfg = load_with_seed(a.config, seed);
    SweepSpec spec;
    spec.n_values           = a.n;
    spec.mu_values          = a.mu;
    spec.k0_values          = a.k0;
    spec.t1_s               = a.t1;
    spec.t2_s               = a.t2;
    spec.field              = parse_front_field(a.field);
    spec.reference_fraction = a.reference_fraction;
    spec.threads            = a.threads;
    auto manifest           = make_manifest(cfg, command);
    manifest["started_utc"] = utc_now();
    const auto rows = sweep(cfg, spec);
    fs::create_directories(a.out);
    write_sweep_csv(fs::path(a.out) / "sweep.csv", rows);

    int ran = 0;
    for (const auto& r : rows) {
        ran += r.skipped ? 0 : 1;
        std::printf("k0 %5.1f n %3d mu %.4f  %s gamma %.4f alpha* %.5f spread %.5f c_F %.2f c_B %.2f%s%s\n", r.k0,
                    r.n_servers, r.mu, r.skipped ? "SKIP" : "    ", r.gamma, r.alpha_star, r.measured_spread,
                    r.c_forward_kmh, r.c_backward_kmh, r.note.empty() ? "" : "  # ", r.note.c_str());
    }
    manifest["finished_utc"] = utc_now();
    manifest["sweep"] = {{"n_values", a.n},   {"mu_values", a.mu},   {"k0_values", a.k0},
                         {"t1_s", a.t1},      {"t2_s", a.t2},        {"field", a.field},
                         {"reference_fraction", a.reference_fraction}};
    manifest["outputs"] = {"sweep.csv"};
    manifest["status"]  = ran ? "ok" : "failed";
    write_manifest(a.out, manifest);
    if (ran == 0) {
        std::cerr << "error: every sweep point is unstable (lambda >= n mu)\n";
        return exit_domain;
    }
    return exit_ok;
}

int cmd_oracle(const std::string& config, const std::string& out, std::optional<std::uint64_t> seed,
               unsigned threads, std::optional<int> replications, const std::string& command)
{
    MicroConfig cfg;
    if (!config.empty()) {
        std::ifstream in(config);
        if (!in) {
            throw ConfigError("cannot read " + config);
        }
        json j;
        try {
            j = json::parse(in);
        }
        catch (const json::parse_error& e) {
            throw ConfigError(config + ": " + e.what());
        }
        cfg = micro_config_from_json(j);
    }
    if (seed) {
        cfg.seed = *seed;
    }
    if (replications) {
        cfg.replications = *replications;
    }
    cfg.threads = threads;
    const auto resolved = resolve(cfg);
    validate(resolved);

    json manifest;
    manifest["tool"]        = "ifpw";
    manifest["version"]     = version_string;
    manifest["command"]     = command;
    manifest["config"]      = to_json(resolved);
    manifest["started_utc"] = utc_now();
    const auto ens  = simulate(resolved);
    const auto cont = continuum_ring(resolved);
    write_micro_outputs(out, resolved, ens, cont);

    const double g     = micro_gamma(resolved);
    const auto a       = asymptotic_spread(g);
    const double alpha = a ? *a : 0.0;
    const double z     = ens.final_se_takeoff > 0 ? (ens.final_mean_takeoff - alpha) / ens.final_se_takeoff : 0.0;
    manifest["finished_utc"] = utc_now();
    manifest["outputs"]      = {"oracle_timeseries.csv", "oracle_histogram.csv", "oracle_final.csv"};
    manifest["summary"]      = {{"gamma", g},
                                {"alpha_star", alpha},
                                {"takeoffs", ens.takeoffs},
                                {"final_mean_takeoff", ens.final_mean_takeoff},
                                {"final_se_takeoff", ens.final_se_takeoff},
                                {"z", z},
                                {"half_time_mean_s", ens.half_time_mean},
                                {"half_time_sd_s", ens.half_time_sd},
                                {"shre_half_time_s", cont.half_time},
                                {"shre_final_fraction", cont.final_fraction}};
    manifest["status"] = "ok";
    write_manifest(out, manifest);

    std::printf("gamma %.6f, b %.6g, alpha* %.6f\n", g, resolved.kernel.b, alpha);
    std::printf("takeoffs %d / %d, final informed %.5f +- %.5f (z = %.2f)\n", ens.takeoffs, resolved.replications,
                ens.final_mean_takeoff, ens.final_se_takeoff, z);
    std::printf("half-spread time: ensemble %.3f +- %.3f s, SHRE %.3f s\n", ens.half_time_mean, ens.half_time_sd,
                cont.half_time);
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Information flow propagation waves on a traffic corridor"};
    app.set_version_flag("--version", std::string(version_string));
    app.require_subcommand(1);

    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    app.add_option("--seed", seed, "Random seed (recorded in manifests; drives the oracle)");
    app.add_option("--threads", threads, "Worker threads for sweep and oracle (0: all cores)");

    std::string config, out;
    auto* run = app.add_subcommand("run", "Run a scenario and write space-time CSVs plus manifest.json");
    run->add_option("--config", config, "Scenario JSON")->required();
    run->add_option("--out", out, "Output directory")->required();

    AnalyzeArgs an;
    auto* analyze = app.add_subcommand("analyze", "Asymptotic spread and existence for one class");
    analyze->add_option("--beta", an.beta, "Transmission rate [1/s]")->required();
    analyze->add_option("--b", an.b, "Kernel mass")->required();
    analyze->add_option("--sigma", an.sigma, "Equipped density in contact units")->required();
    analyze->add_option("--mu", an.mu, "Per-server release rate u [1/s]")->required();
    analyze->add_option("--lambda", an.lambda, "Packet arrival rate [1/s]");
    analyze->add_option("--n", an.n, "Communication servers");

    std::string samples;
    auto* cal = app.add_subcommand("calibrate", "Fit kernel (a, b) to distance / success-rate samples");
    cal->add_option("--samples", samples, "CSV with distance_km,success_rate")->required();
    cal->add_option("--out", out, "Directory for kernel.json");

    SpeedArgs sp;
    auto* speed = app.add_subcommand("speed", "Front speeds between two snapshots of a run directory");
    speed->add_option("--run", sp.run_dir, "Run output directory")->required();
    speed->add_option("--t1", sp.t1, "First snapshot [s]")->required();
    speed->add_option("--t2", sp.t2, "Second snapshot [s]")->required();
    speed->add_option("--reference", sp.reference, "Reference density [veh/km]")->required();
    speed->add_option("--field", sp.field, "E, R or informed")->capture_default_str();
    speed->add_option("--class", sp.class_name, "Class name (default: first)");
    speed->add_option("--seed-cell", sp.seed_cell, "Cell the fronts are scanned from (default: class seed)");

    SweepArgs sw;
    auto* swp = app.add_subcommand("sweep", "Sweep servers, release rate and density for the first class");
    swp->add_option("--config", sw.config, "Base scenario JSON")->required();
    swp->add_option("--out", sw.out, "Output directory")->required();
    swp->add_option("--n", sw.n, "Server counts")->delimiter(',')->required();
    swp->add_option("--mu", sw.mu, "Release rates [1/s]")->delimiter(',')->required();
    swp->add_option("--k0", sw.k0, "Ambient densities [veh/km]")->delimiter(',');
    swp->add_option("--t1", sw.t1, "First speed snapshot [s]")->capture_default_str();
    swp->add_option("--t2", sw.t2, "Second speed snapshot [s]")->capture_default_str();
    swp->add_option("--field", sw.field, "Front field")->capture_default_str();
    swp->add_option("--reference-fraction", sw.reference_fraction, "Front level as a fraction of sigma alpha*")
        ->capture_default_str();

    std::optional<int> reps;
    auto* orc = app.add_subcommand("oracle", "Agent-based ring ensemble against the continuum");
    orc->add_option("--config", config, "Oracle JSON (defaults when omitted)");
    orc->add_option("--out", out, "Output directory")->required();
    orc->add_option("--replications", reps, "Override the replication count");

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_domain;
    }

    const std::string command = joined_args(argc, argv);
    try {
        if (*run) {
            return cmd_run(config, out, seed, command);
        }
        if (*analyze) {
            return cmd_analyze(an);
        }
        if (*cal) {
            return cmd_calibrate(samples, out);
        }
        if (*speed) {
            return cmd_speed(sp);
        }
        if (*swp) {
            sw.threads = threads;
            return cmd_sweep(sw, seed, command);
        }
        if (*orc) {
            return cmd_oracle(config, out, seed, threads, reps, command);
        }
    }
    catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return exit_config;
    }
    catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_domain;
    }
    catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_domain;
    }
    return exit_domain;
}
