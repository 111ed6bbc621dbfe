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
#include "ifpw/run_output.hpp"

#include "ifpw/error.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <sstream>

namespace ifpw
{

using nlohmann::json;

struct RunWriter::Stream {
    std::string name;
    std::FILE* file = nullptr;
    ~Stream()
    {
        if (file) {
            std::fclose(file);
        }
    }
};

RunWriter::RunWriter(const ScenarioConfig& cfg, const std::filesystem::path& dir)
    : m_grid(cfg.grid)
    , m_dir(dir)
{
    std::filesystem::create_directories(dir);
    auto open = [&](const std::string& name) {
        auto s  = std::make_unique<Stream>();
        s->name = name;
        s->file = std::fopen((dir / name).string().c_str(), "w");
        if (!s->file) {
            throw ArgumentError("cannot write " + (dir / name).string());
        }
        std::fputs("time_s,cell_index,x_km,value\n", s->file);
        m_streams.push_back(std::move(s));
    };
    for (const auto& c : cfg.classes) {
        for (const char* f : {"S", "H", "R", "E"}) {
            open(c.name + "_" + f + ".csv");
        }
    }
    open("traffic_total.csv");
    open("traffic_unequipped.csv");
}

RunWriter::~RunWriter() = default;

void RunWriter::write(const WorldState& world)
{
    auto dump = [&](std::FILE* f, const std::vector<double>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            std::fprintf(f, "%.6f,%zu,%.6f,%.12g\n", world.time_s, i, m_grid.cell_center(static_cast<int>(i)), v[i]);
        }
    };
    std::size_t k = 0;
    for (const auto& c : world.traffic.classes) {
        dump(m_streams[k++]->file, c.s);
        dump(m_streams[k++]->file, c.h);
        dump(m_streams[k++]->file, c.r);
        dump(m_streams[k++]->file, c.e);
    }
    dump(m_streams[k++]->file, world.traffic.total);
    dump(m_streams[k++]->file, world.traffic.unequipped);
}

void RunWriter::flush()
{
    for (auto& s : m_streams) {
        std::fflush(s->file);
    }
}

std::vector<std::string> RunWriter::files() const
{
    std::vector<std::string> out;
    for (const auto& s : m_streams) {
        out.push_back(s->name);
    }
    return out;
}

std::string utc_now()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_manifest(const std::filesystem::path& dir, const json& manifest)
{
    std::filesystem::create_directories(dir);
    const auto tmp = dir / "manifest.json.tmp";
    {
        std::ofstream out(tmp);
        if (!out) {
            throw ArgumentError("cannot write " + tmp.string());
        }
        out << manifest.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, dir / "manifest.json");
}

json make_manifest(const ScenarioConfig& cfg, const std::string& command)
{
    json m;
    m["tool"]        = "ifpw";
    m["version"]     = version_string;
    m["command"]     = command;
    m["config_hash"] = config_hash(cfg);
    m["config"]      = to_json(cfg);
    m["warnings"]    = config_warnings(cfg);
    return m;
}

RunSummary run_to_directory(const ScenarioConfig& cfg, const std::filesystem::path& dir, const std::string& command)
{
    auto manifest          = make_manifest(cfg, command);
    manifest["started_utc"] = utc_now();
    RunWriter writer(cfg, dir);
    const auto summary = run(cfg, [&](const WorldState& w) { writer.write(w); });
    writer.flush();
    manifest["finished_utc"]   = utc_now();
    manifest["status"]         = summary.failed ? "failed" : "ok";
    manifest["steps"]          = summary.steps_completed;
    manifest["total_steps"]    = summary.total_steps;
    manifest["snapshot_times"] = summary.snapshot_times;
    manifest["outputs"]        = writer.files();
    manifest["csv_columns"]    = {"time_s", "cell_index", "x_km", "value"};
    if (summary.failed) {
        manifest["error"] = {{"step", summary.error_step}, {"message", summary.error}};
    }
    write_manifest(dir, manifest);
    return summary;
}

const std::vector<double>& SpaceTimeField::at(double t_s) const
{
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (std::abs(times[k] - t_s) < 1e-6) {
            return values[k];
        }
    }
    std::ostringstream msg;
    msg << "no snapshot at t = " << t_s << " s";
    throw ArgumentError(msg.str());
}

SpaceTimeField read_space_time_csv(const std::filesystem::path& path)
{
    std::FILE* f = std::fopen(path.string().c_str(), "r");
    if (!f) {
        throw ArgumentError("cannot read " + path.string());
    }
    SpaceTimeField out;
    char line[256];
    if (!std::fgets(line, sizeof line, f) || std::string(line).rfind("time_s,cell_index,x_km,value", 0) != 0) {
        std::fclose(f);
        throw ArgumentError(path.string() + ": expected header time_s,cell_index,x_km,value");
    }
    long lineno = 1;
    while (std::fgets(line, sizeof line, f)) {
        ++lineno;
        double t, x, v;
        long cell;
        if (std::sscanf(line, "%lf,%ld,%lf,%lf", &t, &cell, &x, &v) != 4) {
            if (line[0] == '\n' || line[0] == '\0') {
                continue;
            }
            std::fclose(f);
            throw ArgumentError(path.string() + ": malformed row " + std::to_string(lineno));
        }
        if (cell == 0) {
            out.times.push_back(t);
            out.values.emplace_back();
        }
        if (out.values.empty() || static_cast<long>(out.values.back().size()) != cell) {
            std::fclose(f);
            throw ArgumentError(path.string() + ": cells out of order at row " + std::to_string(lineno));
        }
        out.values.back().push_back(v);
        if (out.times.size() == 1) {
            out.x_km.push_back(x);
        }
    }
    std::fclose(f);
    return out;
}

} // namespace ifpw
