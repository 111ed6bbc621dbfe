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
#include "ifpw/scenario.hpp"

#include "ifpw/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numeric>
#include <set>
#include <sstream>

namespace ifpw
{

using nlohmann::json;

namespace
{

[[noreturn]] void fail(const std::string& path, const std::string& msg)
{
    throw ConfigError(path + ": " + msg);
}

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> allowed)
{
    if (!obj.is_object()) {
        fail(path, "expected an object");
    }
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!ok.count(it.key())) {
            fail(path + "." + it.key(), "unknown key");
        }
    }
}

double get_number(const json& obj, const std::string& path, const char* key, double fallback, bool required = false)
{
    if (!obj.contains(key)) {
        if (required) {
            fail(path + "." + key, "missing required number");
        }
        return fallback;
    }
    const auto& v = obj.at(key);
    if (!v.is_number()) {
        fail(path + "." + key, "expected a number");
    }
    return v.get<double>();
}

long get_integer(const json& obj, const std::string& path, const char* key, long fallback, bool required = false)
{
    if (!obj.contains(key)) {
        if (required) {
            fail(path + "." + key, "missing required integer");
        }
        return fallback;
    }
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) {
        fail(path + "." + key, "expected an integer");
    }
    return v.get<long>();
}

std::string get_string(const json& obj, const std::string& path, const char* key, const std::string& fallback)
{
    if (!obj.contains(key)) {
        return fallback;
    }
    const auto& v = obj.at(key);
    if (!v.is_string()) {
        fail(path + "." + key, "expected a string");
    }
    return v.get<std::string>();
}

bool get_bool(const json& obj, const std::string& path, const char* key, bool fallback)
{
    if (!obj.contains(key)) {
        return fallback;
    }
    const auto& v = obj.at(key);
    if (!v.is_boolean()) {
        fail(path + "." + key, "expected true or false");
    }
    return v.get<bool>();
}

const json& section(const json& root, const char* key)
{
    static const json empty = json::object();
    return root.contains(key) ? root.at(key) : empty;
}

KernelMode parse_kernel_mode(const std::string& s, const std::string& path)
{
    if (s == "global") {
        return KernelMode::global;
    }
    if (s == "reference") {
        return KernelMode::reference;
    }
    if (s == "table") {
        return KernelMode::table;
    }
    fail(path, "unknown kernel mode '" + s + "' (global, reference, table)");
}

OperatorOrder parse_order(const std::string& s, const std::string& path)
{
    if (s == "advect_then_react") {
        return OperatorOrder::advect_then_react;
    }
    if (s == "react_then_advect") {
        return OperatorOrder::react_then_advect;
    }
    fail(path, "unknown operator order '" + s + "'");
}

std::pair<long, long> line_column(const std::string& text, std::size_t byte)
{
    long line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        }
        else {
            ++col;
        }
    }
    return {line, col};
}

} // namespace

std::string to_string(KernelMode m)
{
    switch (m) {
    case KernelMode::global:
        return "global";
    case KernelMode::reference:
        return "reference";
    case KernelMode::table:
        return "table";
    }
    return "?";
}

std::string to_string(OperatorOrder o)
{
    return o == OperatorOrder::advect_then_react ? "advect_then_react" : "react_then_advect";
}

KernelParams fixed_kernel(const ScenarioConfig& cfg)
{
    switch (cfg.kernel.mode) {
    case KernelMode::global:
        return cfg.kernel.params;
    case KernelMode::reference: {
        const double k = cfg.kernel.density < 0.0 ? cfg.k0_veh_per_km : cfg.kernel.density;
        try {
            const auto row = lookup_reference(k, true);
            return {row.a, row.b};
        }
        catch (const RangeError& e) {
            throw ConfigError(std::string("communication.kernel: ") + e.what());
        }
    }
    case KernelMode::table:
        return reference_kernel_clamped(cfg.k0_veh_per_km);
    }
    return cfg.kernel.params;
}

void validate(const ScenarioConfig& cfg)
{
    validate(cfg.grid);
    validate(cfg.fd);
    check_cfl(cfg.fd, cfg.grid);
    validate(cfg.capacity, cfg.grid);
    if (!(cfg.k0_veh_per_km >= 0.0) || !(cfg.k0_veh_per_km <= cfg.fd.k_jam_veh_per_km)) {
        throw ConfigError("traffic.k0_veh_per_km must lie in [0, k_jam]");
    }
    if (!(cfg.penetration > 0.0) || !(cfg.penetration <= 1.0)) {
        throw ConfigError("traffic.penetration must lie in (0, 1]");
    }
    if (!(cfg.beta_hz > 0.0) || !(cfg.contact_length_km > 0.0)) {
        throw ConfigError("communication.beta_hz and contact_length_km must be positive");
    }
    if (cfg.kernel.mode == KernelMode::global) {
        try {
            validate(cfg.kernel.params);
        }
        catch (const Error& e) {
            throw ConfigError(std::string("communication.kernel: ") + e.what());
        }
    }
    else {
        (void)fixed_kernel(cfg);
    }
    if (cfg.kernel.mode == KernelMode::table && cfg.boundary == TrafficBoundary::periodic) {
        throw ConfigError("communication.kernel: table mode needs an open or closed traffic boundary");
    }
    if (cfg.classes.empty()) {
        throw ConfigError("classes: at least one information class is required");
    }
    std::set<std::string> names;
    for (std::size_t j = 0; j < cfg.classes.size(); ++j) {
        const auto& c         = cfg.classes[j];
        const std::string pfx = "classes[" + std::to_string(j) + "]";
        if (c.name.empty() || !names.insert(c.name).second) {
            throw ConfigError(pfx + ".name must be non-empty and unique");
        }
        if (c.name.find_first_of("/\\ ") != std::string::npos) {
            throw ConfigError(pfx + ".name must not contain spaces or path separators");
        }
        if (!(c.queue.lambda > 0.0) || c.queue.n_servers < 1 || !(c.queue.mu > 0.0)) {
            throw ConfigError(pfx + ": lambda_per_s, n_servers, mu_per_s must be positive");
        }
        if (!check_stability(c.queue)) {
            throw ConfigError(pfx + ": unstable queue (lambda >= n mu)");
        }
        for (const auto& s : c.seeds) {
            if (s.cell < 0 || s.cell >= cfg.grid.num_cells) {
                throw ConfigError(pfx + ".seeds: cell outside the grid");
            }
            if (!(s.relaying_veh_per_km >= 0.0) || s.relaying_veh_per_km > cfg.sigma() * (1.0 + 1e-12)) {
                throw ConfigError(pfx + ".seeds: relaying density must lie in [0, penetration * k0]");
            }
        }
    }
    if (!(cfg.horizon_s >= 0.0) || !(cfg.snapshot_every_s > 0.0)) {
        throw ConfigError("run: horizon_s must be >= 0 and snapshot_every_s > 0");
    }
}

std::vector<std::string> config_warnings(const ScenarioConfig& cfg)
{
    std::vector<std::string> out;
    const double k = cfg.k0_veh_per_km;
    const auto& table = reference_table();
    if (k >= table.front().density && k <= table.back().density) {
        const auto row = lookup_reference(k);
        int total      = 0;
        for (const auto& c : cfg.classes) {
            total += c.queue.n_servers;
        }
        if (total > row.n_max) {
            std::ostringstream msg;
            msg << "server budget " << total << " exceeds N_max " << row.n_max << " at " << row.density << " veh/km";
            out.push_back(msg.str());
        }
    }
    if (cfg.kernel.mode == KernelMode::table) {
        out.push_back("table kernel mode: densities outside [" + std::to_string(table.front().density) + ", " +
                      std::to_string(table.back().density) + "] veh/km use the nearest end row");
    }
    return out;
}

ScenarioConfig from_json(const json& root)
{
    reject_unknown(root, "$", {"name", "grid", "traffic", "communication", "classes", "incident", "run"});
    ScenarioConfig cfg;
    cfg.name = get_string(root, "$", "name", cfg.name);

    const auto& g = section(root, "grid");
    reject_unknown(g, "grid", {"num_cells", "dx_km", "dt_s", "origin_km"});
    cfg.grid.num_cells = static_cast<int>(get_integer(g, "grid", "num_cells", cfg.grid.num_cells));
    cfg.grid.dx_km     = get_number(g, "grid", "dx_km", cfg.grid.dx_km);
    cfg.grid.dt_s      = get_number(g, "grid", "dt_s", cfg.grid.dt_s);
    cfg.grid.origin_km = get_number(g, "grid", "origin_km", cfg.grid.origin_km);

    const auto& t = section(root, "traffic");
    reject_unknown(t, "traffic",
                   {"v_f_kmh", "q_max_vph", "k_jam_veh_per_km", "boundary", "k0_veh_per_km", "penetration", "frozen"});
    cfg.fd.v_f_kmh          = get_number(t, "traffic", "v_f_kmh", cfg.fd.v_f_kmh);
    cfg.fd.q_max_vph        = get_number(t, "traffic", "q_max_vph", cfg.fd.q_max_vph);
    cfg.fd.k_jam_veh_per_km = get_number(t, "traffic", "k_jam_veh_per_km", cfg.fd.k_jam_veh_per_km);
    cfg.boundary            = parse_traffic_boundary(get_string(t, "traffic", "boundary", "periodic"));
    cfg.k0_veh_per_km       = get_number(t, "traffic", "k0_veh_per_km", cfg.k0_veh_per_km);
    cfg.penetration         = get_number(t, "traffic", "penetration", cfg.penetration);
    cfg.frozen_traffic      = get_bool(t, "traffic", "frozen", false);

    const auto& c = section(root, "communication");
    reject_unknown(c, "communication", {"beta_hz", "contact_length_km", "kernel"});
    cfg.beta_hz           = get_number(c, "communication", "beta_hz", cfg.beta_hz);
    cfg.contact_length_km = get_number(c, "communication", "contact_length_km", cfg.contact_length_km);
    const auto& k         = section(c, "kernel");
    reject_unknown(k, "communication.kernel", {"mode", "a_km", "b", "density_veh_per_km"});
    cfg.kernel.mode     = parse_kernel_mode(get_string(k, "communication.kernel", "mode", "global"),
                                            "communication.kernel.mode");
    cfg.kernel.params.a = get_number(k, "communication.kernel", "a_km", cfg.kernel.params.a);
    cfg.kernel.params.b = get_number(k, "communication.kernel", "b", cfg.kernel.params.b);
    cfg.kernel.density  = get_number(k, "communication.kernel", "density_veh_per_km", -1.0);

    if (!root.contains("classes") || !root.at("classes").is_array()) {
        fail("classes", "expected an array of information classes");
    }
    const auto& classes = root.at("classes");
    for (std::size_t j = 0; j < classes.size(); ++j) {
        const std::string p = "classes[" + std::to_string(j) + "]";
        const auto& cj      = classes[j];
        reject_unknown(cj, p, {"name", "lambda_per_s", "n_servers", "mu_per_s", "seeds"});
        InfoClassSpec spec;
        spec.name            = get_string(cj, p, "name", "class" + std::to_string(j + 1));
        spec.queue.lambda    = get_number(cj, p, "lambda_per_s", 0.0, true);
        spec.queue.n_servers = static_cast<int>(get_integer(cj, p, "n_servers", 0, true));
        spec.queue.mu        = get_number(cj, p, "mu_per_s", 0.0, true);
        if (cj.contains("seeds")) {
            if (!cj.at("seeds").is_array()) {
                fail(p + ".seeds", "expected an array");
            }
            for (std::size_t s = 0; s < cj.at("seeds").size(); ++s) {
                const std::string sp = p + ".seeds[" + std::to_string(s) + "]";
                const auto& sj       = cj.at("seeds")[s];
                reject_unknown(sj, sp, {"cell", "relaying_veh_per_km"});
                spec.seeds.push_back({static_cast<int>(get_integer(sj, sp, "cell", 0, true)),
                                      get_number(sj, sp, "relaying_veh_per_km", 0.0, true)});
            }
        }
        cfg.classes.push_back(std::move(spec));
    }

    if (root.contains("incident")) {
        const auto& inc = root.at("incident");
        if (!inc.is_array()) {
            fail("incident", "expected an array of capacity events");
        }
        for (std::size_t e = 0; e < inc.size(); ++e) {
            const std::string p = "incident[" + std::to_string(e) + "]";
            reject_unknown(inc[e], p, {"cell_begin", "cell_end", "start_s", "end_s", "capacity_factor"});
            CapacityEvent ev;
            ev.cell_begin = static_cast<int>(get_integer(inc[e], p, "cell_begin", 0, true));
            ev.cell_end   = static_cast<int>(get_integer(inc[e], p, "cell_end", ev.cell_begin));
            ev.start_s    = get_number(inc[e], p, "start_s", 0.0, true);
            ev.end_s      = get_number(inc[e], p, "end_s", 0.0, true);
            ev.factor     = get_number(inc[e], p, "capacity_factor", 0.0, true);
            cfg.capacity.events.push_back(ev);
        }
    }

    const auto& r = section(root, "run");
    reject_unknown(r, "run", {"horizon_s", "snapshot_every_s", "seed", "operator_order"});
    cfg.horizon_s        = get_number(r, "run", "horizon_s", cfg.horizon_s);
    cfg.snapshot_every_s = get_number(r, "run", "snapshot_every_s", cfg.snapshot_every_s);
    const long seed      = get_integer(r, "run", "seed", 1);
    if (seed < 0) {
        fail("run.seed", "must be non-negative");
    }
    cfg.seed  = static_cast<std::uint64_t>(seed);
    cfg.order = parse_order(get_string(r, "run", "operator_order", "advect_then_react"), "run.operator_order");

    validate(cfg);
    return cfg;
}

json to_json(const ScenarioConfig& cfg)
{
    json j;
    j["name"] = cfg.name;
    j["grid"] = {{"num_cells", cfg.grid.num_cells},
                 {"dx_km", cfg.grid.dx_km},
                 {"dt_s", cfg.grid.dt_s},
                 {"origin_km", cfg.grid.origin_km}};
    j["traffic"] = {{"v_f_kmh", cfg.fd.v_f_kmh},
                    {"q_max_vph", cfg.fd.q_max_vph},
                    {"k_jam_veh_per_km", cfg.fd.k_jam_veh_per_km},
                    {"boundary", to_string(cfg.boundary)},
                    {"k0_veh_per_km", cfg.k0_veh_per_km},
                    {"penetration", cfg.penetration},
                    {"frozen", cfg.frozen_traffic}};
    json kernel = {{"mode", to_string(cfg.kernel.mode)}};
    if (cfg.kernel.mode == KernelMode::global) {
        kernel["a_km"] = cfg.kernel.params.a;
        kernel["b"]    = cfg.kernel.params.b;
    }
    if (cfg.kernel.mode == KernelMode::reference && cfg.kernel.density >= 0.0) {
        kernel["density_veh_per_km"] = cfg.kernel.density;
    }
    j["communication"] = {
        {"beta_hz", cfg.beta_hz}, {"contact_length_km", cfg.contact_length_km}, {"kernel", kernel}};
    j["classes"] = json::array();
    for (const auto& c : cfg.classes) {
        json seeds = json::array();
        for (const auto& s : c.seeds) {
            seeds.push_back({{"cell", s.cell}, {"relaying_veh_per_km", s.relaying_veh_per_km}});
        }
        j["classes"].push_back({{"name", c.name},
                                {"lambda_per_s", c.queue.lambda},
                                {"n_servers", c.queue.n_servers},
                                {"mu_per_s", c.queue.mu},
                                {"seeds", seeds}});
    }
    j["incident"] = json::array();
    for (const auto& ev : cfg.capacity.events) {
        j["incident"].push_back({{"cell_begin", ev.cell_begin},
                                 {"cell_end", ev.cell_end},
                                 {"start_s", ev.start_s},
                                 {"end_s", ev.end_s},
                                 {"capacity_factor", ev.factor}});
    }
    j["run"] = {{"horizon_s", cfg.horizon_s},
                {"snapshot_every_s", cfg.snapshot_every_s},
                {"seed", cfg.seed},
                {"operator_order", to_string(cfg.order)}};
    return j;
}

ScenarioConfig parse_scenario(const std::string& json_text)
{
    json root;
    try {
        root = json::parse(json_text);
    }
    catch (const json::parse_error& e) {
        const auto [line, col] = line_column(json_text, e.byte == 0 ? 0 : e.byte - 1);
        std::ostringstream msg;
        msg << "malformed JSON at line " << line << ", column " << col << ": " << e.what();
        throw ConfigError(msg.str());
    }
    return from_json(root);
}

ScenarioConfig load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read scenario file " + path.string());
    }
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_scenario(text);
}

std::string config_hash(const ScenarioConfig& cfg)
{
    const std::string text = to_json(cfg).dump();
    std::uint64_t h        = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace ifpw
