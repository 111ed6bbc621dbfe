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
#include "ifpw/shre_solver.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

using namespace ifpw;

namespace
{

GridSpec grid_of(int cells, double dx = 0.015, double dt = 0.5)
{
    GridSpec g;
    g.num_cells = cells;
    g.dx_km     = dx;
    g.dt_s      = dt;
    g.origin_km = 0.0;
    return g;
}

double max_abs(const std::vector<double>& v)
{
    double m = 0.0;
    for (double x : v) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

ClassState bump_state(int cells, double sigma, double peak_r, double width_cells)
{
    ClassState st(static_cast<std::size_t>(cells), sigma);
    for (int i = 0; i < cells; ++i) {
        const double z = (i - cells / 2.0) / width_cells;
        const double r = peak_r * std::exp(-z * z);
        st.s[static_cast<std::size_t>(i)] -= r;
        st.r[static_cast<std::size_t>(i)] = r;
    }
    return st;
}

ShreParams default_params()
{
    ShreParams p;
    p.beta_hz           = 2.0;
    p.queue             = {0.5, 20, 0.03};
    p.kernel            = {0.292, 0.499};
    p.contact_length_km = 0.015;
    return p;
}

// Test-local three-compartment (S, R, E) integrator with its own RK4 and
// convolution loop; shares no code with the solver.
struct SreReference {
    double contact, mu;
    std::vector<double> weights; // K(m dx) dx
    void conv(const std::vector<double>& r, std::vector<double>& out) const
    {
        const int n = static_cast<int>(r.size());
        const int m = static_cast<int>(weights.size()) - 1;
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) {
                const int d = std::abs(i - j);
                if (d <= m) {
                    acc += weights[static_cast<std::size_t>(d)] * r[static_cast<std::size_t>(j)];
                }
            }
            out[static_cast<std::size_t>(i)] = acc;
        }
    }
    void rhs(const std::vector<double>& s, const std::vector<double>& r, std::vector<double>& ds,
             std::vector<double>& dr, std::vector<double>& de) const
    {
        std::vector<double> c(r.size());
        conv(r, c);
        for (std::size_t i = 0; i < r.size(); ++i) {
            const double inf = contact * s[i] * c[i];
            ds[i]            = -inf;
            dr[i]            = inf - mu * r[i];
            de[i]            = mu * r[i];
        }
    }
    void step(std::vector<double>& s, std::vector<double>& r, std::vector<double>& e, double dt) const
    {
        const std::size_t n = s.size();
        std::vector<double> ks[4], kr[4], ke[4];
        for (auto* group : {ks, kr, ke}) {
            for (int k = 0; k < 4; ++k) {
                group[k].assign(n, 0.0);
            }
        }
        std::vector<double> ts(n), tr(n);
        const double frac[4] = {0.0, 0.5, 0.5, 1.0};
        for (int k = 0; k < 4; ++k) {
            for (std::size_t i = 0; i < n; ++i) {
                ts[i] = s[i] + (k ? frac[k] * dt * ks[k - 1][i] : 0.0);
                tr[i] = r[i] + (k ? frac[k] * dt * kr[k - 1][i] : 0.0);
            }
            rhs(ts, tr, ks[k], kr[k], ke[k]);
        }
        for (std::size_t i = 0; i < n; ++i) {
            s[i] += dt / 6.0 * (ks[0][i] + 2 * ks[1][i] + 2 * ks[2][i] + ks[3][i]);
            r[i] += dt / 6.0 * (kr[0][i] + 2 * kr[1][i] + 2 * kr[2][i] + kr[3][i]);
            e[i] += dt / 6.0 * (ke[0][i] + 2 * ke[1][i] + 2 * ke[2][i] + ke[3][i]);
        }
    }
};

} // namespace

TEST_CASE("convolution of a zero field is zero")
{
    const auto g = grid_of(64);
    const std::vector<double> zero(64, 0.0);
    CHECK(max_abs(convolve_relaying(zero, {0.292, 0.499}, g)) < 1e-300);
}

TEST_CASE("convolution of a spike samples the kernel")
{
    const auto g        = grid_of(400);
    const KernelParams kp{0.292, 0.499};
    const double mass   = 2.5; // vehicles
    std::vector<double> r(400, 0.0);
    r[150]          = mass / g.dx_km;
    const auto conv = convolve_relaying(r, kp, g);
    for (int j = 0; j < 400; ++j) {
        const double expected = mass * kernel_value(kp, g.cell_center(j), g.cell_center(150));
        CHECK(std::abs(conv[static_cast<std::size_t>(j)] - expected) <= 1e-12 * mass * 2.0);
    }
}

TEST_CASE("constant field returns c * b away from the ends")
{
    const auto g = grid_of(2000);
    const KernelParams kp{0.292, 0.499};
    const std::vector<double> c(2000, 7.0);
    const auto conv = convolve_relaying(c, kp, g);
    for (int j = 300; j < 1700; ++j) {
        CHECK(conv[static_cast<std::size_t>(j)] == doctest::Approx(7.0 * 0.499).epsilon(1e-9));
    }
    // half the kernel falls off the end
    CHECK(conv[0] == doctest::Approx(0.5 * 7.0 * 0.499).epsilon(0.02));
}

TEST_CASE("FFT and direct summation agree")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 20.0);
    for (int n : {8, 100, 1000, 4096}) {
        for (const KernelParams kp : {KernelParams{0.292, 0.499}, KernelParams{0.153, 0.243}, KernelParams{0.05, 0.08}}) {
            const auto g = grid_of(n);
            std::vector<double> r(static_cast<std::size_t>(n));
            for (auto& v : r) {
                v = u(rng);
            }
            for (auto bc : {ConvolutionBoundary::zero_padded, ConvolutionBoundary::periodic}) {
                FftConvolution fft(kp, g, bc);
                std::vector<double> a(r.size());
                fft.apply(r, a);
                const auto d    = convolve_relaying_direct(r, kp, g, bc);
                const double sc = max_abs(d);
                for (std::size_t i = 0; i < r.size(); ++i) {
                    CHECK(std::abs(a[i] - d[i]) <= 1e-9 * sc);
                }
            }
        }
    }
}

TEST_CASE("periodic convolution wraps around")
{
    const auto g = grid_of(100);
    const KernelParams kp{0.292, 0.499};
    const std::vector<double> c(100, 3.0);
    const auto conv = convolve_relaying_direct(c, kp, g, ConvolutionBoundary::periodic);
    for (double v : conv) {
        CHECK(v == doctest::Approx(3.0 * 0.499).epsilon(1e-9));
    }
}

TEST_CASE("variable-kernel convolution reduces to the fixed kernel")
{
    const auto g = grid_of(500);
    const KernelParams kp{0.267, 0.434};
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    std::vector<double> r(500);
    for (auto& v : r) {
        v = u(rng);
    }
    VariableKernelConvolution var(g);
    std::vector<KernelParams> kernels(500, kp);
    var.set_kernels(kernels);
    std::vector<double> out(500);
    var.apply(r, out);
    const auto ref = convolve_relaying_direct(r, kp, g);
    for (std::size_t i = 0; i < r.size(); ++i) {
        CHECK(out[i] == doctest::Approx(ref[i]).epsilon(1e-11));
    }
}

TEST_CASE("convolution shape errors")
{
    const auto g = grid_of(50);
    std::vector<double> r(49, 0.0);
    CHECK_THROWS_AS(convolve_relaying(r, {0.3, 0.5}, g), ShapeError);
    CHECK_THROWS_AS(convolve_relaying_direct(r, {0.3, 0.5}, g), ShapeError);
}

TEST_CASE("rhs special cases")
{
    const auto g = grid_of(64);
    auto p       = default_params();

    ClassState idle(64, 20.0);
    const auto d0 = shre_rhs(idle, p, g);
    CHECK(max_abs(d0.s) == 0.0);
    CHECK(max_abs(d0.h) == 0.0);
    CHECK(max_abs(d0.r) == 0.0);
    CHECK(max_abs(d0.e) == 0.0);

    ClassState decay(64, 0.0);
    for (std::size_t i = 0; i < 64; ++i) {
        decay.r[i] = 1.0 + 0.1 * static_cast<double>(i);
    }
    const auto dd = shre_rhs(decay, p, g);
    for (std::size_t i = 0; i < 64; ++i) {
        CHECK(dd.s[i] == 0.0);
        CHECK(dd.h[i] == 0.0);
        CHECK(dd.r[i] == doctest::Approx(-p.queue.mu * decay.r[i]));
        CHECK(dd.e[i] == doctest::Approx(p.queue.mu * decay.r[i]));
    }

    p.queue = {3.0, 3, 1.0};
    CHECK_THROWS_AS(shre_rhs(idle, p, g), StabilityError);
}

TEST_CASE("rhs conserves total density pointwise")
{
    const auto g = grid_of(300);
    auto st      = bump_state(300, 20.0, 11.0, 10.0);
    for (std::size_t i = 0; i < 300; ++i) {
        st.h[i] = 0.3 * st.r[i];
        st.s[i] -= st.h[i];
    }
    const auto d = shre_rhs(st, default_params(), g);
    for (std::size_t i = 0; i < 300; ++i) {
        const double sum   = d.s[i] + d.h[i] + d.r[i] + d.e[i];
        const double scale = std::abs(d.s[i]) + std::abs(d.h[i]) + std::abs(d.r[i]) + std::abs(d.e[i]) + 1e-300;
        CHECK(std::abs(sum) <= 1e-12 * std::max(scale, 1.0));
    }
}

TEST_CASE("rk4: stationary state is unchanged")
{
    const auto g = grid_of(64);
    ClassState idle(64, 20.0);
    const auto next = rk4_step(idle, default_params(), g);
    CHECK(next.s == idle.s);
    CHECK(next.r == idle.r);
}

TEST_CASE("rk4: pure decay follows the exponential")
{
    const auto g = grid_of(16, 0.015, 0.5);
    auto p       = default_params();
    p.queue      = {0.5, 20, 0.3};
    ClassState st(16, 0.0);
    std::fill(st.r.begin(), st.r.end(), 5.0);
    const auto next    = rk4_step(st, p, g);
    const double z     = p.queue.mu * g.dt_s;
    const double exact = 5.0 * std::exp(-z);
    for (std::size_t i = 0; i < 16; ++i) {
        CHECK(std::abs(next.r[i] - exact) <= 5.0 * std::pow(z, 5) / 120.0 * 1.1);
        CHECK(next.r[i] + next.e[i] == doctest::Approx(5.0).epsilon(1e-15));
    }
}

TEST_CASE("rk4: fourth-order convergence on a smooth state")
{
    const auto g0  = grid_of(200, 0.015, 1.0);
    auto p         = default_params();
    p.queue        = {0.5, 3, 0.4};
    p.contact_length_km = 0.05;
    const auto st0 = bump_state(200, 20.0, 8.0, 15.0);
    const double horizon = 4.0;

    auto run = [&](int steps) {
        ClassState st = st0;
        const auto rates = ShreRates::from(p);
        FftConvolution conv(p.kernel, g0);
        for (int k = 0; k < steps; ++k) {
            rk4_step(st, rates, conv, horizon / steps);
        }
        return st;
    };
    const auto ref = run(512);
    auto err       = [&](const ClassState& st) {
        double m = 0.0;
        for (std::size_t i = 0; i < st.size(); ++i) {
            m = std::max({m, std::abs(st.s[i] - ref.s[i]), std::abs(st.h[i] - ref.h[i]),
                          std::abs(st.r[i] - ref.r[i])});
        }
        return m;
    };
    const double e1 = err(run(4));
    const double e2 = err(run(8));
    MESSAGE("errors " << e1 << " " << e2 << " ratio " << e1 / e2);
    CHECK(e1 / e2 > 12.0);
    CHECK(e1 / e2 < 20.0);
}

TEST_CASE("seed_information")
{
    ClassState st(10, 20.0);
    const auto seeded = seed_information(st, 3, 11.0);
    CHECK(seeded.r[3] == 11.0);
    CHECK(seeded.s[3] == 9.0);
    CHECK(seeded.s[2] == 20.0);
    CHECK(seeded.r[4] == 0.0);
    const auto same = seed_information(st, 3, 0.0);
    CHECK(same.s == st.s);
    CHECK(same.r == st.r);
    const auto all = seed_information(st, 0, 20.0);
    CHECK(all.s[0] == 0.0);
    CHECK_THROWS_AS(seed_information(st, 3, 20.5), ArgumentError);
    CHECK_THROWS_AS(seed_information(st, 10, 1.0), ArgumentError);
}

TEST_CASE("frozen evolution conserves, S falls and E rises")
{
    const auto g = grid_of(400);
    auto p       = default_params();
    ClassState st(400, 20.0);
    st = seed_information(st, 200, 11.0);
    FftConvolution conv(p.kernel, g);
    ShreIntegrator integ(p);
    std::vector<double> total(400);
    for (std::size_t i = 0; i < 400; ++i) {
        total[i] = st.equipped(i);
    }
    for (int step = 0; step < 600; ++step) {
        const auto prev = st;
        integ.advance(st, conv, g.dt_s);
        for (std::size_t i = 0; i < 400; ++i) {
            REQUIRE(st.s[i] <= prev.s[i]);
            REQUIRE(st.e[i] >= prev.e[i]);
            REQUIRE(std::abs(st.equipped(i) - total[i]) < 1e-10);
        }
    }
    CHECK(st.e[200] > 15.0);
}

TEST_CASE("stiff release rate is handled by substeps")
{
    const auto g = grid_of(200);
    auto p       = default_params();
    p.queue      = {2.0, 20, 0.9}; // release rate 16/s, dt 0.5
    const auto rates = ShreRates::from(p);
    CHECK(base_substeps(rates, g.dt_s) == 8);
    ClassState st(200, 20.0);
    st = seed_information(st, 100, 11.0);
    for (std::size_t i = 0; i < 200; ++i) {
        st.h[i] = 0.2;
        st.s[i] -= 0.2;
    }
    FftConvolution conv(p.kernel, g);
    ShreIntegrator integ(p);
    for (int step = 0; step < 100; ++step) {
        integ.advance(st, conv, g.dt_s);
    }
    for (std::size_t i = 0; i < 200; ++i) {
        CHECK(st.h[i] >= 0.0);
        CHECK(st.equipped(i) == doctest::Approx(20.0).epsilon(1e-12));
    }
}

TEST_CASE("negative densities beyond tolerance raise a step-size error")
{
    const auto g = grid_of(16);
    auto p       = default_params();
    p.queue      = {2.0, 20, 0.9};
    const auto rates = ShreRates::from(p);
    FftConvolution conv(p.kernel, g);
    ClassState st(16, 10.0);
    st.h[5] = 1.0;
    // one unsplit RK4 step at release*dt = 8 overshoots
    CHECK_THROWS_AS(rk4_step(st, rates, conv, 0.5), StepSizeError);
}

TEST_CASE("xi -> 0 reduces to the three-compartment model")
{
    const auto g = grid_of(240);
    auto p       = default_params();
    p.queue      = {1e-12, 1, 0.1};
    ClassState st(240, 20.0);
    st = seed_information(st, 120, 11.0);

    SreReference ref;
    ref.contact = p.beta_hz * p.contact_length_km;
    ref.mu      = p.queue.mu;
    for (int m = 0; m * g.dx_km <= 8.0 * p.kernel.a; ++m) {
        ref.weights.push_back(kernel_at(p.kernel, m * g.dx_km) * g.dx_km);
    }
    auto s = st.s, r = st.r, e = st.e;

    const auto rates = ShreRates::from(p);
    FftConvolution conv(p.kernel, g);
    for (int step = 0; step < 120; ++step) {
        rk4_step(st, rates, conv, g.dt_s);
        ref.step(s, r, e, g.dt_s);
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < 240; ++i) {
        worst = std::max({worst, std::abs(st.s[i] - s[i]), std::abs(st.r[i] + st.h[i] - r[i]),
                          std::abs(st.e[i] - e[i])});
    }
    CHECK(worst < 1e-6);
}
