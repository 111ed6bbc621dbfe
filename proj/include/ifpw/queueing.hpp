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
#ifndef IFPW_QUEUEING_HPP
#define IFPW_QUEUEING_HPP

namespace ifpw
{

/// Per-class queue control: Poisson arrivals, n exponential servers.
struct ClassParams {
    double lambda = 0.0; ///< packet arrival rate [1/s]
    int n_servers = 1;
    double mu = 0.0; ///< mean service rate per server [1/s]
};

struct QueueMetrics {
    double rho = 0.0; ///< lambda / (n mu)
    double r   = 0.0; ///< lambda / mu
    double p0  = 0.0; ///< probability the class queue is empty
    double xi  = 0.0; ///< probability an arriving packet waits
    double mean_wait = 0.0; ///< [s]
};

/// true iff lambda < n * mu (equality is unstable).
bool check_stability(const ClassParams& p);

/// Throws StabilityError / ArgumentError for invalid or unstable parameters.
void require_stable(const ClassParams& p);

double empty_system_probability(const ClassParams& p);

/// Erlang-C delay probability.
double wait_probability(const ClassParams& p);

/// P(T_q > v) = xi * exp(-(n mu - lambda) v).
double waiting_time_ccdf(const ClassParams& p, double v);

/// P(service time > t) = exp(-mu t). Only mu is used.
double service_time_ccdf(const ClassParams& p, double t);

double mean_waiting_time(const ClassParams& p);

QueueMetrics queue_metrics(const ClassParams& p);

} // namespace ifpw

#endif // IFPW_QUEUEING_HPP
