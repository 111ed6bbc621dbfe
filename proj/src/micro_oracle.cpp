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
#include "ifpw/micro_oracle.hpp"

#include "ifpw/error.hpp"
#include "ifpw/shre_solver.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <numeric>
#include <queue>
#include <random>
#include <thread>

namespace ifpw
{

using nlohmann::json;

namespace
{

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

struct Vehicle {
    double x         = 0.0;
    VehicleTag tag   = VehicleTag::susceptible;
    double next_time = std::numeric_limits<double>::infinity();
};

void transition(Vehicle& v, VehicleTag to)
{
    // legal moves only: S->H, S->R, H->R, R->E
    const bool ok = (v.tag == VehicleTag::susceptible && (to == VehicleTag::holding || to == VehicleTag::relaying)) ||
                    (v.tag == VehicleTag::holding && to == VehicleTag::relaying) ||
                    (v.tag == VehicleTag::relaying && to == VehicleTag::excluded);
    if (!ok) {
        throw SolverError("illegal vehicle state transition");
    }
    v.tag = to;
}

double mean_of(const std::vector<double>& v)
{
    return v.empty() ? nan : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v)
{
    if (v.size() < 2) {
        return 0.0;
    }
    const double m = mean_of(v);
    double ss      = 0.0;
    for (double x : v) {
        ss += (x - m) * (x - m);
    }
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double ring_distance(double x, double y, double ring)
{
    const double d = std::abs(x - y);
    return std::min(d, ring - d);
}

// Direct convolution with the oracle's pairwise weights on the ring.
class MinImageRing : public RelayingConvolution
{
public:
    MinImageRing(const KernelParams& kp, int cells, double ring_km)
        : m_weights(static_cast<std::size_t>(cells), 0.0)
        , m_mass(kp.b)
    {
        const double dx = ring_km / cells;
        for (int k = 1; k < cells; ++k) {
            m_weights[static_cast<std::size_t>(k)] = kernel_at(kp, ring_distance(0.0, k * dx, ring_km)) * dx;
        }
    }
    void apply(std::span<const double> r, std::span<double> out) override
    {
        const std::size_t n = r.size();
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                acc += m_weights[(i + n - j) % n] * r[j];
            }
            out[i] = acc;
        }
    }
    double max_mass() const override
    {
        return m_mass;
    }

private:
    std::vector<double> m_weights;
    double m_mass;
};

} // namespace

double micro_gamma(const MicroConfig& cfg)
{
    double sum = 0.0;
    if (cfg.equally_spaced) {
        const double spacing = cfg.ring_km / cfg.vehicles;
        for (int k = 1; k < cfg.vehicles; ++k) {
            sum += kernel_at(cfg.kernel, ring_distance(0.0, k * spacing, cfg.ring_km));
        }
    }
    else {
        // (N - 1) / L times the kernel integral over the half ring on either side
        const int steps = 4000;
        const double h  = 0.5 * cfg.ring_km / steps;
        double integral = 0.0;
        for (int s = 0; s < steps; ++s) {
            integral += 2.0 * kernel_at(cfg.kernel, (s + 0.5) * h) * h;
        }
        sum = (cfg.vehicles - 1) / cfg.ring_km * integral;
    }
    return cfg.beta_hz * sum / cfg.queue.mu;
}

MicroConfig resolve(const MicroConfig& cfg)
{
    MicroConfig out = cfg;
    if (cfg.target_gamma > 0.0) {
        out.kernel.b = 1.0;
        out.kernel.b = cfg.target_gamma / micro_gamma(out);
    }
    return out;
}

void validate(const MicroConfig& cfg)
{
    if (cfg.vehicles < 1 || !(cfg.ring_km > 0.0) || cfg.replications < 1 || cfg.seed_vehicles < 1 ||
        cfg.seed_vehicles > cfg.vehicles || cfg.histogram_bins < 1) {
        throw ConfigError("micro oracle: vehicles, ring length, replications, seeds and bins must be positive");
    }
    if (!(cfg.beta_hz > 0.0) || !(cfg.horizon_s >= 0.0) || !(cfg.tick_s > 0.0) || !(cfg.record_every_s > 0.0)) {
        throw ConfigError("micro oracle: beta, tick and record interval must be positive");
    }
    if (!check_stability(cfg.queue) || !(cfg.queue.lambda > 0.0)) {
        throw ConfigError("micro oracle: class queue must be stable with positive rates");
    }
    try {
        // b = 0 switches communication off
        if (!(cfg.kernel.b == 0.0 && cfg.kernel.a > 0.0)) {
            validate(cfg.kernel);
        }
    }
    catch (const Error& e) {
        throw ConfigError(std::string("micro oracle kernel: ") + e.what());
    }
    if (kernel_at(cfg.kernel, 0.0) > 1.0) {
        throw ConfigError("micro oracle: kernel peak exceeds 1, not a reception probability");
    }
    const double limit = 0.1 * std::min({1.0 / cfg.queue.mu, 1.0 / cfg.queue.lambda, 1.0 / cfg.beta_hz});
    if (cfg.tick_s > limit * (1.0 + 1e-12)) {
        throw ConfigError("micro oracle: tick must not exceed 0.1 min(1/mu, 1/lambda, 1/beta)");
    }
}

MicroConfig micro_config_from_json(const json& j)
{
    MicroConfig c;
    try {
        static const char* known[] = {"vehicles",  "ring_km",          "equally_spaced", "lambda_per_s", "n_servers",
                                      "mu_per_s",  "a_km",             "b",              "beta_hz",      "horizon_s",
                                      "tick_s",    "record_every_s",   "replications",   "seed",         "seed_vehicles",
                                      "takeoff_fraction", "histogram_bins", "target_gamma"};
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (std::find(std::begin(known), std::end(known), it.key()) == std::end(known)) {
                throw ConfigError("oracle config: unknown key '" + it.key() + "'");
            }
        }
        c.vehicles         = j.value("vehicles", c.vehicles);
        c.ring_km          = j.value("ring_km", c.ring_km);
        c.equally_spaced   = j.value("equally_spaced", c.equally_spaced);
        c.queue.lambda     = j.value("lambda_per_s", c.queue.lambda);
        c.queue.n_servers  = j.value("n_servers", c.queue.n_servers);
        c.queue.mu         = j.value("mu_per_s", c.queue.mu);
        c.kernel.a         = j.value("a_km", c.kernel.a);
        c.kernel.b         = j.value("b", c.kernel.b);
        c.beta_hz          = j.value("beta_hz", c.beta_hz);
        c.horizon_s        = j.value("horizon_s", c.horizon_s);
        c.tick_s           = j.value("tick_s", c.tick_s);
        c.record_every_s   = j.value("record_every_s", c.record_every_s);
        c.replications     = j.value("replications", c.replications);
        c.seed             = j.value("seed", c.seed);
        c.seed_vehicles    = j.value("seed_vehicles", c.seed_vehicles);
        c.takeoff_fraction = j.value("takeoff_fraction", c.takeoff_fraction);
        c.histogram_bins   = j.value("histogram_bins", c.histogram_bins);
        c.target_gamma     = j.value("target_gamma", c.target_gamma);
    }
    catch (const json::exception& e) {
        throw ConfigError(std::string("oracle config: ") + e.what());
    }
    validate(resolve(c));
    return c;
}

json to_json(const MicroConfig& c)
{
    return {{"vehicles", c.vehicles},
            {"ring_km", c.ring_km},
            {"equally_spaced", c.equally_spaced},
            {"lambda_per_s", c.queue.lambda},
            {"n_servers", c.queue.n_servers},
            {"mu_per_s", c.queue.mu},
            {"a_km", c.kernel.a},
            {"b", c.kernel.b},
            {"beta_hz", c.beta_hz},
            {"horizon_s", c.horizon_s},
            {"tick_s", c.tick_s},
            {"record_every_s", c.record_every_s},
            {"replications", c.replications},
            {"seed", c.seed},
            {"seed_vehicles", c.seed_vehicles},
            {"takeoff_fraction", c.takeoff_fraction},
            {"histogram_bins", c.histogram_bins},
            {"target_gamma", c.target_gamma}};
}

MicroReplication simulate_replication(const MicroConfig& raw, std::uint64_t stream)
{
    const MicroConfig cfg = resolve(raw);
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::exponential_distribution<double> service(cfg.queue.mu);

    const auto metrics  = queue_metrics(cfg.queue);
    const double rho    = metrics.rho;
    const double n_mu   = cfg.queue.n_servers * cfg.queue.mu;
    const int n         = cfg.vehicles;
    const double spacing = cfg.ring_km / n;

    std::vector<Vehicle> cars(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        cars[static_cast<std::size_t>(i)].x = cfg.equally_spaced ? i * spacing : unif(rng) * cfg.ring_km;
    }

    // Waiting time of a packet arriving to the stationary queue: with probability xi all
    // servers are busy and q >= 0 further packets wait (geometric), each departure at rate n mu.
    auto arrival_wait = [&]() {
        if (unif(rng) >= metrics.xi) {
            return 0.0;
        }
        std::geometric_distribution<long> ahead(1.0 - rho);
        std::gamma_distribution<double> wait(static_cast<double>(ahead(rng) + 1), 1.0 / n_mu);
        return wait(rng);
    };
    auto receive = [&](Vehicle& v, double t) {
        const double w = arrival_wait();
        if (w > 0.0) {
            transition(v, VehicleTag::holding);
            v.next_time = t + w;
        }
        else {
            transition(v, VehicleTag::relaying);
            v.next_time = t + service(rng);
        }
    };

    // seeds: the vehicles nearest to position 0 start relaying
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        auto d = [&](int i) {
            const double x = cars[static_cast<std::size_t>(i)].x;
            return std::min(x, cfg.ring_km - x);
        };
        return d(a) < d(b);
    });
    for (int s = 0; s < cfg.seed_vehicles; ++s) {
        auto& v = cars[static_cast<std::size_t>(order[static_cast<std::size_t>(s)])];
        transition(v, VehicleTag::relaying);
        v.next_time = service(rng);
    }

    const long ticks        = std::lround(cfg.horizon_s / cfg.tick_s);
    const long record_every = std::max(1L, std::lround(cfg.record_every_s / cfg.tick_s));
    std::poisson_distribution<int> transmissions(cfg.beta_hz * cfg.tick_s);

    MicroReplication rep;
    auto record = [&]() {
        int informed = 0, relaying = 0;
        for (const auto& v : cars) {
            informed += v.tag != VehicleTag::susceptible;
            relaying += v.tag == VehicleTag::relaying;
        }
        rep.informed_fraction.push_back(static_cast<double>(informed) / n);
        rep.relaying_fraction.push_back(static_cast<double>(relaying) / n);
    };

    std::vector<int> senders;
    bool active = true;
    for (long k = 0; k <= ticks; ++k) {
        const double t = k * cfg.tick_s;
        if (active) {
            for (auto& v : cars) {
                if (v.tag == VehicleTag::holding && v.next_time <= t) {
                    transition(v, VehicleTag::relaying);
                    v.next_time += service(rng);
                }
                if (v.tag == VehicleTag::relaying && v.next_time <= t) {
                    transition(v, VehicleTag::excluded);
                    v.next_time = std::numeric_limits<double>::infinity();
                }
            }
        }
        if (k % record_every == 0) {
            record();
        }
        if (!active || k == ticks) {
            continue;
        }
        senders.clear();
        bool pending = false;
        for (int i = 0; i < n; ++i) {
            const auto tag = cars[static_cast<std::size_t>(i)].tag;
            if (tag == VehicleTag::relaying) {
                senders.push_back(i);
            }
            pending = pending || tag == VehicleTag::holding || tag == VehicleTag::relaying;
        }
        active = pending;
        for (int s : senders) {
            const int m = transmissions(rng);
            for (int rep_tx = 0; rep_tx < m; ++rep_tx) {
                const double xs = cars[static_cast<std::size_t>(s)].x;
                for (auto& v : cars) {
                    if (v.tag != VehicleTag::susceptible) {
                        continue;
                    }
                    const double d = ring_distance(v.x, xs, cfg.ring_km);
                    if (unif(rng) < std::min(1.0, kernel_at(cfg.kernel, d))) {
                        receive(v, t);
                    }
                }
            }
        }
    }
    rep.final_fraction = rep.informed_fraction.back();
    rep.took_off       = rep.final_fraction >= cfg.takeoff_fraction;
    rep.histogram.assign(static_cast<std::size_t>(cfg.histogram_bins), {0.0, 0.0, 0.0, 0.0});
    for (const auto& v : cars) {
        auto bin = static_cast<std::size_t>(v.x / cfg.ring_km * cfg.histogram_bins);
        bin      = std::min(bin, rep.histogram.size() - 1);
        rep.histogram[bin][static_cast<std::size_t>(v.tag)] += 1.0;
    }
    return rep;
}

double half_spread_time(const std::vector<double>& times, const std::vector<double>& curve)
{
    if (curve.empty() || !(curve.back() > 0.0)) {
        return nan;
    }
    const double target = 0.5 * curve.back();
    for (std::size_t k = 0; k < curve.size(); ++k) {
        if (curve[k] >= target) {
            if (k == 0) {
                return times[0];
            }
            const double f = (target - curve[k - 1]) / (curve[k] - curve[k - 1]);
            return times[k - 1] + f * (times[k] - times[k - 1]);
        }
    }
    return nan;
}

MicroEnsemble simulate(const MicroConfig& raw)
{
    const MicroConfig cfg = resolve(raw);
    validate(cfg);
    const auto reps = static_cast<std::size_t>(cfg.replications);
    std::vector<MicroReplication> runs(reps);
    unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    threads          = std::min<unsigned>(threads, static_cast<unsigned>(reps));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t r = next++; r < reps; r = next++) {
            try {
                runs[r] = simulate_replication(cfg, r);
            }
            catch (...) {
                std::lock_guard lock(failure_mutex);
                failure = std::current_exception();
            }
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
    if (failure) {
        std::rethrow_exception(failure);
    }

    MicroEnsemble ens;
    const std::size_t records = runs[0].informed_fraction.size();
    const long every          = std::max(1L, std::lround(cfg.record_every_s / cfg.tick_s));
    for (std::size_t k = 0; k < records; ++k) {
        ens.times.push_back(static_cast<double>(k) * every * cfg.tick_s);
    }
    ens.mean_informed.assign(records, 0.0);
    ens.se_informed.assign(records, 0.0);
    ens.mean_informed_takeoff.assign(records, nan);
    ens.se_informed_takeoff.assign(records, nan);
    ens.histogram_mean.assign(static_cast<std::size_t>(cfg.histogram_bins), {0.0, 0.0, 0.0, 0.0});

    std::vector<double> column, column_takeoff, finals_takeoff;
    for (std::size_t k = 0; k < records; ++k) {
        column.clear();
        column_takeoff.clear();
        for (const auto& r : runs) {
            column.push_back(r.informed_fraction[k]);
            if (r.took_off) {
                column_takeoff.push_back(r.informed_fraction[k]);
            }
        }
        ens.mean_informed[k] = mean_of(column);
        ens.se_informed[k]   = sd_of(column) / std::sqrt(static_cast<double>(column.size()));
        if (!column_takeoff.empty()) {
            ens.mean_informed_takeoff[k] = mean_of(column_takeoff);
            ens.se_informed_takeoff[k] = sd_of(column_takeoff) / std::sqrt(static_cast<double>(column_takeoff.size()));
        }
    }
    for (const auto& r : runs) {
        ens.final_fractions.push_back(r.final_fraction);
        for (std::size_t b = 0; b < ens.histogram_mean.size(); ++b) {
            for (std::size_t s = 0; s < 4; ++s) {
                ens.histogram_mean[b][s] += r.histogram[b][s] / static_cast<double>(reps);
            }
        }
        if (r.took_off) {
            ++ens.takeoffs;
            finals_takeoff.push_back(r.final_fraction);
            ens.half_spread_times.push_back(half_spread_time(ens.times, r.informed_fraction));
        }
    }
    ens.final_mean_takeoff = mean_of(finals_takeoff);
    ens.final_sd_takeoff   = sd_of(finals_takeoff);
    ens.final_se_takeoff =
        finals_takeoff.empty() ? nan : ens.final_sd_takeoff / std::sqrt(static_cast<double>(finals_takeoff.size()));
    ens.half_time_mean = mean_of(ens.half_spread_times);
    ens.half_time_sd   = sd_of(ens.half_spread_times);
    return ens;
}

ContinuumRing continuum_ring(const MicroConfig& raw)
{
    const MicroConfig cfg = resolve(raw);
    validate(cfg);
    GridSpec grid;
    grid.num_cells = cfg.vehicles;
    grid.dx_km     = cfg.ring_km / cfg.vehicles;
    grid.dt_s      = cfg.record_every_s;
    const double sigma = cfg.vehicles / cfg.ring_km;

    ShreParams p;
    p.beta_hz           = cfg.beta_hz;
    p.queue             = cfg.queue;
    p.kernel            = cfg.kernel;
    p.contact_length_km = 1.0;

    ClassState st(static_cast<std::size_t>(cfg.vehicles), sigma);
    // seed vehicles occupy the cells around position 0
    for (int s = 0; s < cfg.seed_vehicles; ++s) {
        const int cell = (s % 2 == 0) ? s / 2 : cfg.vehicles - (s + 1) / 2;
        st             = seed_information(std::move(st), cell, sigma);
    }
    MinImageRing conv(cfg.kernel, cfg.vehicles, cfg.ring_km);
    ShreIntegrator integ(p);

    ContinuumRing out;
    auto record = [&](double t) {
        double informed = 0.0;
        for (std::size_t i = 0; i < st.size(); ++i) {
            informed += st.informed(i);
        }
        out.times.push_back(t);
        out.informed_fraction.push_back(informed / (sigma * cfg.vehicles));
    };
    const long steps = std::lround(cfg.horizon_s / grid.dt_s);
    record(0.0);
    for (long k = 1; k <= steps; ++k) {
        integ.advance(st, conv, grid.dt_s);
        record(k * grid.dt_s);
    }
    out.final_fraction = out.informed_fraction.back();
    out.half_time      = half_spread_time(out.times, out.informed_fraction);
    return out;
}

double ks_statistic_waits(std::vector<double> waits, const ClassParams& p)
{
    if (waits.empty()) {
        throw ArgumentError("no waiting-time samples");
    }
    std::sort(waits.begin(), waits.end());
    const double xi   = wait_probability(p);
    const double rate = p.n_servers * p.mu - p.lambda;
    auto cdf          = [&](double w) {
        return w < 0.0 ? 0.0 : 1.0 - xi * std::exp(-rate * w);
    };
    const double n = static_cast<double>(waits.size());
    double d       = 0.0;
    std::size_t i  = 0;
    while (i < waits.size()) {
        // group ties (the atom at zero) so the empirical CDF jumps once per distinct value
        std::size_t j = i;
        while (j < waits.size() && waits[j] == waits[i]) {
            ++j;
        }
        const double before = static_cast<double>(i) / n;
        const double after  = static_cast<double>(j) / n;
        const double f      = cdf(waits[i]);
        const double f_left = waits[i] > 0.0 ? f : 0.0;
        d                   = std::max({d, std::abs(after - f), std::abs(before - f_left)});
        i                   = j;
    }
    return d;
}

QueueValidation queue_validation(const ClassParams& p, long num_packets, std::uint64_t seed, int thinning)
{
    require_stable(p);
    if (num_packets < 100000) {
        throw ArgumentError("queue validation needs at least 1e5 packets");
    }
    if (thinning < 1) {
        throw ArgumentError("thinning must be positive");
    }
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> inter(p.lambda), service(p.mu);
    // earliest time each server becomes free (min-heap); FIFO start = max(arrival, earliest free)
    std::priority_queue<double, std::vector<double>, std::greater<>> free_at;
    for (int s = 0; s < p.n_servers; ++s) {
        free_at.push(0.0);
    }
    const long warmup = 10000;
    QueueValidation out;
    out.waits.reserve(static_cast<std::size_t>(num_packets));
    double t = 0.0;
    for (long k = 0; static_cast<long>(out.waits.size()) < num_packets; ++k) {
        t += inter(rng);
        const double start = std::max(t, free_at.top());
        free_at.pop();
        free_at.push(start + service(rng));
        if (k >= warmup && (k - warmup) % thinning == 0) {
            out.waits.push_back(start - t);
        }
    }
    const double n = static_cast<double>(out.waits.size());
    double waited = 0.0, sum = 0.0, sum2 = 0.0;
    for (double w : out.waits) {
        waited += w > 0.0;
        sum += w;
        sum2 += w * w;
    }
    out.p_wait       = waited / n;
    out.p_wait_se    = std::sqrt(out.p_wait * (1.0 - out.p_wait) / n);
    out.mean_wait    = sum / n;
    out.mean_wait_se = std::sqrt(std::max(0.0, sum2 / n - out.mean_wait * out.mean_wait) / n);
    out.ks_statistic = ks_statistic_waits(out.waits, p);
    out.ks_critical  = 1.628 / std::sqrt(n);
    out.ks_pass      = out.ks_statistic < out.ks_critical;
    return out;
}

void write_micro_outputs(const std::filesystem::path& dir, const MicroConfig& cfg, const MicroEnsemble& ens,
                         const ContinuumRing& continuum)
{
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::FILE* f = std::fopen((dir / name).string().c_str(), "w");
        if (!f) {
            throw ArgumentError("cannot write " + (dir / name).string());
        }
        return f;
    };
    std::FILE* ts = open("oracle_timeseries.csv");
    std::fprintf(ts, "time_s,mean_informed,se_informed,mean_informed_takeoff,se_informed_takeoff,shre_informed\n");
    for (std::size_t k = 0; k < ens.times.size(); ++k) {
        const double shre = k < continuum.informed_fraction.size() ? continuum.informed_fraction[k] : nan;
        std::fprintf(ts, "%.6f,%.10g,%.10g,%.10g,%.10g,%.10g\n", ens.times[k], ens.mean_informed[k],
                     ens.se_informed[k], ens.mean_informed_takeoff[k], ens.se_informed_takeoff[k], shre);
    }
    std::fclose(ts);

    std::FILE* hist = open("oracle_histogram.csv");
    std::fprintf(hist, "bin,x_begin_km,x_end_km,mean_S,mean_H,mean_R,mean_E\n");
    const double w = cfg.ring_km / cfg.histogram_bins;
    for (std::size_t b = 0; b < ens.histogram_mean.size(); ++b) {
        const auto& h = ens.histogram_mean[b];
        std::fprintf(hist, "%zu,%.6f,%.6f,%.10g,%.10g,%.10g,%.10g\n", b, b * w, (b + 1) * w, h[0], h[1], h[2], h[3]);
    }
    std::fclose(hist);

    std::FILE* fin = open("oracle_final.csv");
    std::fprintf(fin, "replication,final_informed_fraction,took_off\n");
    for (std::size_t r = 0; r < ens.final_fractions.size(); ++r) {
        std::fprintf(fin, "%zu,%.10g,%d\n", r, ens.final_fractions[r],
                     ens.final_fractions[r] >= cfg.takeoff_fraction ? 1 : 0);
    }
    std::fclose(fin);
}

} // namespace ifpw
