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
#include "ifpw/error.hpp"
#include "ifpw/queueing.hpp"

#include "doctest.h"

#include <cmath>
#include <random>

using namespace ifpw;

namespace
{

// Plain-space Erlang-C summation, valid for small n.
double direct_p0(double lambda, int n, double mu)
{
    const double r   = lambda / mu;
    const double rho = r / n;
    double sum       = 0.0;
    double term      = 1.0;
    for (int l = 0; l < n; ++l) {
        sum += term;
        term *= r / (l + 1);
    }
    return 1.0 / (sum + term / (1.0 - rho));
}

double direct_xi(double lambda, int n, double mu)
{
    const double r = lambda / mu;
    double fact    = 1.0;
    for (int l = 2; l <= n; ++l) {
        fact *= l;
    }
    return std::pow(r, n) * direct_p0(lambda, n, mu) / (fact * (1.0 - r / n));
}

} // namespace

TEST_CASE("M/M/1 reduces to P0 = 1 - rho and xi = rho")
{
    const ClassParams p{0.5, 1, 1.0};
    CHECK(empty_system_probability(p) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(wait_probability(p) == doctest::Approx(0.5).epsilon(1e-15));
    for (double rho : {0.01, 0.3, 0.77, 0.999}) {
        const ClassParams q{rho * 2.0, 1, 2.0};
        CHECK(std::abs(wait_probability(q) - rho) < 1e-12);
        CHECK(std::abs(empty_system_probability(q) - (1.0 - rho)) < 1e-12);
    }
}

TEST_CASE("Erlang-C point lambda=1, n=2, mu=1")
{
    const ClassParams p{1.0, 2, 1.0};
    CHECK(std::abs(empty_system_probability(p) - 1.0 / 3.0) < 1e-12);
    CHECK(std::abs(wait_probability(p) - 1.0 / 3.0) < 1e-12);
    CHECK(std::abs(mean_waiting_time(p) - 1.0 / 3.0) < 1e-12);
    CHECK(std::abs(waiting_time_ccdf(p, 1.0) - std::exp(-1.0) / 3.0) < 1e-14);
}

TEST_CASE("log-space terms agree with the direct sum")
{
    for (int n = 1; n <= 30; ++n) {
        for (double rho : {0.1, 0.5, 0.9, 0.99}) {
            const double mu     = 0.05;
            const double lambda = rho * n * mu;
            const ClassParams p{lambda, n, mu};
            CHECK(empty_system_probability(p) == doctest::Approx(direct_p0(lambda, n, mu)).epsilon(1e-11));
            CHECK(wait_probability(p) == doctest::Approx(direct_xi(lambda, n, mu)).epsilon(1e-11));
        }
    }
}

TEST_CASE("high-precision reference values")
{
    // mpmath, 40 digits
    const ClassParams p{0.5, 11, 0.05};
    CHECK(empty_system_probability(p) == doctest::Approx(2.475270541176652e-05).epsilon(1e-11));
    CHECK(wait_probability(p) == doctest::Approx(0.6821182046893322).epsilon(1e-12));
    CHECK(mean_waiting_time(p) == doctest::Approx(13.64236409378663).epsilon(1e-12));
    CHECK(mean_waiting_time(p) == doctest::Approx(wait_probability(p) / 0.05).epsilon(1e-14));

    const ClassParams q{0.5, 20, 0.03};
    CHECK(wait_probability(q) == doctest::Approx(0.3381247679264428).epsilon(1e-12));
}

TEST_CASE("large server counts stay finite")
{
    for (int n : {60, 125, 150}) {
        const ClassParams p{0.95 * n * 0.2, n, 0.2};
        const auto m = queue_metrics(p);
        CHECK(std::isfinite(m.p0));
        CHECK(m.p0 > 0.0);
        CHECK(m.xi > 0.0);
        CHECK(m.xi < 1.0);
    }
}

TEST_CASE("xi tends to 0 for vanishing load and to 1 as rho -> 1")
{
    CHECK(wait_probability(ClassParams{1e-9, 3, 1.0}) < 1e-20);
    CHECK(mean_waiting_time(ClassParams{1e-9, 1, 1.0}) < 1e-8);
    double prev = 0.0;
    for (double rho : {0.9, 0.99, 0.999, 0.99999}) {
        const double xi = wait_probability(ClassParams{rho * 4.0, 4, 1.0});
        CHECK(xi > prev);
        prev = xi;
    }
    CHECK(prev > 0.999);
}

TEST_CASE("stability")
{
    CHECK(check_stability(ClassParams{0.5, 11, 0.05}));
    CHECK_FALSE(check_stability(ClassParams{1.0, 2, 0.5}));
    CHECK(check_stability(ClassParams{2.0, 20, 0.323}));
    CHECK_THROWS_AS(wait_probability(ClassParams{1.0, 2, 0.5}), StabilityError);
    CHECK_THROWS_AS(empty_system_probability(ClassParams{3.0, 2, 1.0}), StabilityError);
    CHECK_THROWS_AS(mean_waiting_time(ClassParams{1.0, 1, 1.0}), StabilityError);
    CHECK_THROWS_AS(wait_probability(ClassParams{1.0, 0, 1.0}), ArgumentError);
}

TEST_CASE("waiting and service CCDFs")
{
    const ClassParams p{1.0, 3, 0.7};
    CHECK(waiting_time_ccdf(p, 0.0) == doctest::Approx(wait_probability(p)).epsilon(1e-15));
    CHECK(waiting_time_ccdf(p, 1e4) < 1e-300);
    double prev = 1.0;
    for (double v = 0.0; v < 20.0; v += 0.25) {
        const double c = waiting_time_ccdf(p, v);
        CHECK(c <= prev);
        prev = c;
    }
    CHECK_THROWS_AS(waiting_time_ccdf(p, -1.0), ArgumentError);

    const ClassParams s{0.01, 1, 0.05};
    CHECK(service_time_ccdf(s, 0.0) == 1.0);
    CHECK(service_time_ccdf(s, 20.0) == doctest::Approx(0.36787944117144233).epsilon(1e-14));
    CHECK(service_time_ccdf(ClassParams{0.1, 1, 1.0}, std::log(2.0)) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(service_time_ccdf(s, -0.1), ArgumentError);
}

TEST_CASE("waiting CCDF integrates to the mean wait")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u01(0.05, 0.95);
    for (int trial = 0; trial < 20; ++trial) {
        const int n      = 1 + trial % 9;
        const double mu  = 0.1 + trial * 0.05;
        const ClassParams p{u01(rng) * n * mu, n, mu};
        // Simpson on [0, T] with T covering 60 decay lengths
        const double rate = n * mu - p.lambda;
        const double t    = 60.0 / rate;
        const int m       = 20000;
        const double h    = t / m;
        double acc        = waiting_time_ccdf(p, 0.0) + waiting_time_ccdf(p, t);
        for (int i = 1; i < m; ++i) {
            acc += (i % 2 ? 4.0 : 2.0) * waiting_time_ccdf(p, i * h);
        }
        const double integral = acc * h / 3.0;
        CHECK(integral == doctest::Approx(mean_waiting_time(p)).epsilon(1e-8));
    }
}
