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
#include "ifpw/queueing.hpp"
#include "ifpw/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace ifpw
{

namespace
{

struct ErlangTerms {
    double p0;
    double xi;
};

// Terms r^l/l! (l < n) and r^n/(n!(1-rho)) are summed in log space; r^n/n!
// overflows doubles well before n = 150.
ErlangTerms erlang_terms(const ClassParams& p)
{
    require_stable(p);
    const int n        = p.n_servers;
    const double r     = p.lambda / p.mu;
    const double rho   = r / n;
    const double log_r = std::log(r);

    std::vector<double> logs(static_cast<std::size_t>(n) + 1);
    for (int l = 0; l < n; ++l) {
        logs[static_cast<std::size_t>(l)] = (l == 0 ? 0.0 : l * log_r) - std::lgamma(l + 1.0);
    }
    const double log_last = n * log_r - std::lgamma(n + 1.0) - std::log1p(-rho);
    logs.back()           = log_last;

    const double peak = *std::max_element(logs.begin(), logs.end());
    double scaled_sum = 0.0;
    for (double v : logs) {
        scaled_sum += std::exp(v - peak);
    }
    const double log_total = peak + std::log(scaled_sum);
    return {std::exp(-log_total), std::exp(log_last - log_total)};
}

} // namespace

bool check_stability(const ClassParams& p)
{
    return p.lambda < p.n_servers * p.mu;
}

void require_stable(const ClassParams& p)
{
    if (!(p.lambda > 0.0) || !(p.mu > 0.0) || p.n_servers < 1 || !std::isfinite(p.lambda) ||
        !std::isfinite(p.mu)) {
        throw ArgumentError("class parameters need lambda > 0, mu > 0, n_servers >= 1");
    }
    if (!check_stability(p)) {
        throw StabilityError("unstable queue: lambda=" + std::to_string(p.lambda) + " >= n*mu=" +
                             std::to_string(p.n_servers * p.mu));
    }
}

double empty_system_probability(const ClassParams& p)
{
    return erlang_terms(p).p0;
}

double wait_probability(const ClassParams& p)
{
    return erlang_terms(p).xi;
}

double waiting_time_ccdf(const ClassParams& p, double v)
{
    if (!(v >= 0.0)) {
        throw ArgumentError("waiting time must be non-negative");
    }
    const double xi = wait_probability(p);
    return xi * std::exp(-(p.n_servers * p.mu - p.lambda) * v);
}

double service_time_ccdf(const ClassParams& p, double t)
{
    if (!(t >= 0.0)) {
        throw ArgumentError("service time must be non-negative");
    }
    if (!(p.mu > 0.0)) {
        throw ArgumentError("service rate must be positive");
    }
    return std::exp(-p.mu * t);
}

double mean_waiting_time(const ClassParams& p)
{
    return wait_probability(p) / (p.n_servers * p.mu - p.lambda);
}

QueueMetrics queue_metrics(const ClassParams& p)
{
    const auto terms = erlang_terms(p);
    QueueMetrics m;
    m.r         = p.lambda / p.mu;
    m.rho       = m.r / p.n_servers;
    m.p0        = terms.p0;
    m.xi        = terms.xi;
    m.mean_wait = terms.xi / (p.n_servers * p.mu - p.lambda);
    return m;
}

} // namespace ifpw
