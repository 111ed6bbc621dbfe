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
#include "ifpw/shre_solver.hpp"
#include "ifpw/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <string>

namespace ifpw
{

namespace
{

// FFTW's planner is not reentrant.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

int half_width(const KernelParams& kp, double dx)
{
    return static_cast<int>(std::ceil(8.0 * kp.a / dx));
}

// w[m] = K(m dx) dx for m = 0..M
std::vector<double> kernel_weights(const KernelParams& kp, double dx)
{
    const int m = half_width(kp, dx);
    std::vector<double> w(static_cast<std::size_t>(m) + 1);
    for (int i = 0; i <= m; ++i) {
        w[static_cast<std::size_t>(i)] = kernel_at(kp, i * dx) * dx;
    }
    return w;
}

// Kernel folded onto a ring of n cells.
std::vector<double> periodic_weights(const KernelParams& kp, double dx, int n)
{
    const auto w = kernel_weights(kp, dx);
    const int m  = static_cast<int>(w.size()) - 1;
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (int k = -m; k <= m; ++k) {
        const int idx = ((k % n) + n) % n;
        out[static_cast<std::size_t>(idx)] += w[static_cast<std::size_t>(std::abs(k))];
    }
    return out;
}

std::size_t next_pow2(std::size_t n)
{
    std::size_t p = 1;
    while (p < n) {
        p <<= 1;
    }
    return p;
}

void check_shape(std::size_t got, int want)
{
    if (got != static_cast<std::size_t>(want)) {
        throw ShapeError("field has " + std::to_string(got) + " cells, grid has " + std::to_string(want));
    }
}

} // namespace

int GridSpec::cell_of(double x_km) const
{
    const int i = static_cast<int>(std::floor((x_km - origin_km) / dx_km));
    return std::clamp(i, 0, num_cells - 1);
}

void validate(const GridSpec& grid)
{
    if (!(grid.dx_km > 0.0) || !(grid.dt_s > 0.0) || grid.num_cells < 8) {
        throw ConfigError("grid needs dx > 0, dt > 0 and at least 8 cells");
    }
}

// ---------------------------------------------------------------------------

struct FftConvolution::Impl {
    std::size_t size = 0;
    double* real     = nullptr;
    fftw_complex* spec = nullptr;
    std::vector<std::complex<double>> kernel_spec;
    fftw_plan forward  = nullptr;
    fftw_plan backward = nullptr;

    // exact fallback for values near the transform's round-off floor
    int cells    = 0;
    int reach    = 0; ///< taps span offsets [-reach, reach]; reach < 0 means the whole ring
    bool ring    = false;
    double peak  = 0.0; ///< largest single weight
    std::vector<double> taps; ///< taps[k + reach] (or folded ring line when reach < 0)
    std::vector<int> nonzero_prefix;

    void exact_tails(std::span<const double> r, std::span<double> out);

    ~Impl()
    {
        std::lock_guard lock(planner_mutex());
        if (forward) {
            fftw_destroy_plan(forward);
        }
        if (backward) {
            fftw_destroy_plan(backward);
        }
        fftw_free(real);
        fftw_free(spec);
    }
};

FftConvolution::FftConvolution(const KernelParams& kp, const GridSpec& grid, ConvolutionBoundary boundary)
    : m_impl(std::make_unique<Impl>())
    , m_kernel(kp)
    , m_cells(grid.num_cells)
{
    validate(grid);
    const int n = grid.num_cells;
    std::vector<double> kernel_line;
    if (boundary == ConvolutionBoundary::periodic) {
        m_impl->size = static_cast<std::size_t>(n);
        kernel_line  = periodic_weights(kp, grid.dx_km, n);
    }
    else {
        const auto w   = kernel_weights(kp, grid.dx_km);
        const auto m   = w.size() - 1;
        m_impl->size   = next_pow2(static_cast<std::size_t>(n) + m + 1);
        kernel_line.assign(m_impl->size, 0.0);
        kernel_line[0] = w[0];
        for (std::size_t k = 1; k <= m; ++k) {
            kernel_line[k]                = w[k];
            kernel_line[m_impl->size - k] = w[k];
        }
    }
    const std::size_t len  = m_impl->size;
    const std::size_t half = len / 2 + 1;
    {
        std::lock_guard lock(planner_mutex());
        m_impl->real     = fftw_alloc_real(len);
        m_impl->spec     = fftw_alloc_complex(half);
        m_impl->forward  = fftw_plan_dft_r2c_1d(static_cast<int>(len), m_impl->real, m_impl->spec, FFTW_ESTIMATE);
        m_impl->backward = fftw_plan_dft_c2r_1d(static_cast<int>(len), m_impl->spec, m_impl->real, FFTW_ESTIMATE);
    }
    {
        const auto w = kernel_weights(kp, grid.dx_km);
        const int m  = static_cast<int>(w.size()) - 1;
        auto& im     = *m_impl;
        im.cells     = n;
        im.ring      = boundary == ConvolutionBoundary::periodic;
        im.peak      = w[0];
        if (im.ring && 2 * m + 1 >= n) {
            im.reach = -1;
            im.taps  = periodic_weights(kp, grid.dx_km, n);
        }
        else {
            im.reach = m;
            im.taps.resize(static_cast<std::size_t>(2 * m + 1));
            for (int k = -m; k <= m; ++k) {
                im.taps[static_cast<std::size_t>(k + m)] = w[static_cast<std::size_t>(std::abs(k))];
            }
        }
    }
    std::copy(kernel_line.begin(), kernel_line.end(), m_impl->real);
    fftw_execute(m_impl->forward);
    m_impl->kernel_spec.resize(half);
    for (std::size_t k = 0; k < half; ++k) {
        // fold the 1/len normalization of the inverse transform into the kernel
        m_impl->kernel_spec[k] =
            std::complex<double>(m_impl->spec[k][0], m_impl->spec[k][1]) / static_cast<double>(len);
    }
}

FftConvolution::~FftConvolution() = default;

std::size_t FftConvolution::transform_size() const
{
    return m_impl->size;
}

void FftConvolution::apply(std::span<const double> r, std::span<double> out)
{
    check_shape(r.size(), m_cells);
    check_shape(out.size(), m_cells);
    auto& im = *m_impl;
    std::fill(im.real, im.real + im.size, 0.0);
    std::copy(r.begin(), r.end(), im.real);
    fftw_execute(im.forward);
    const std::size_t half = im.size / 2 + 1;
    for (std::size_t k = 0; k < half; ++k) {
        const std::complex<double> v = std::complex<double>(im.spec[k][0], im.spec[k][1]) * im.kernel_spec[k];
        im.spec[k][0] = v.real();
        im.spec[k][1] = v.imag();
    }
    fftw_execute(im.backward);
    std::copy(im.real, im.real + m_cells, out.begin());
    im.exact_tails(r, out);
}

// The transform's error is absolute (about eps * sum|r| * peak weight), so small outputs are
// dominated by round-off that the growth dynamics would amplify into spurious fronts.
// Outputs below a relative floor are recomputed by direct summation; windows without any
// relaying density are exactly zero.
void FftConvolution::Impl::exact_tails(std::span<const double> r, std::span<double> out)
{
    constexpr double relative_floor = 1e-6;
    const int n = cells;
    nonzero_prefix.resize(static_cast<std::size_t>(n) + 1);
    nonzero_prefix[0] = 0;
    double mass       = 0.0;
    for (int j = 0; j < n; ++j) {
        const double v = r[static_cast<std::size_t>(j)];
        nonzero_prefix[static_cast<std::size_t>(j) + 1] = nonzero_prefix[static_cast<std::size_t>(j)] + (v != 0.0);
        mass += std::abs(v);
    }
    const double floor_value = relative_floor * mass * peak;
    auto count = [&](int lo, int hi) { // nonzeros in [lo, hi], 0 <= lo, hi < n
        return lo > hi ? 0 : nonzero_prefix[static_cast<std::size_t>(hi) + 1] - nonzero_prefix[static_cast<std::size_t>(lo)];
    };
    for (int i = 0; i < n; ++i) {
        double& o = out[static_cast<std::size_t>(i)];
        if (std::abs(o) >= floor_value) {
            continue;
        }
        if (reach < 0) {
            if (count(0, n - 1) == 0) {
                o = 0.0;
                continue;
            }
            double acc = 0.0;
            for (int j = 0; j < n; ++j) {
                acc += taps[static_cast<std::size_t>(((i - j) % n + n) % n)] * r[static_cast<std::size_t>(j)];
            }
            o = acc;
            continue;
        }
        int nz = 0;
        if (ring) {
            const int lo = i - reach, hi = i + reach;
            nz = lo < 0 ? count(0, hi) + count(lo + n, n - 1)
                        : (hi >= n ? count(lo, n - 1) + count(0, hi - n) : count(lo, hi));
        }
        else {
            nz = count(std::max(0, i - reach), std::min(n - 1, i + reach));
        }
        if (nz == 0) {
            o = 0.0;
            continue;
        }
        double acc = 0.0;
        for (int k = -reach; k <= reach; ++k) {
            int j = i - k;
            if (ring) {
                j = (j % n + n) % n;
            }
            else if (j < 0 || j >= n) {
                continue;
            }
            acc += taps[static_cast<std::size_t>(k + reach)] * r[static_cast<std::size_t>(j)];
        }
        o = acc;
    }
}

// ---------------------------------------------------------------------------

VariableKernelConvolution::VariableKernelConvolution(const GridSpec& grid)
    : m_dx(grid.dx_km)
    , m_cells(grid.num_cells)
{
    validate(grid);
}

void VariableKernelConvolution::set_kernels(std::span<const KernelParams> per_cell)
{
    check_shape(per_cell.size(), m_cells);
    m_half_width.resize(per_cell.size());
    m_offset.resize(per_cell.size());
    m_weights.clear();
    m_max_mass = 0.0;
    for (std::size_t i = 0; i < per_cell.size(); ++i) {
        const auto& kp = per_cell[i];
        const int m    = half_width(kp, m_dx);
        m_half_width[i] = m;
        m_offset[i]     = m_weights.size();
        // exp(-(k dx / a)^2) by the recurrence q^{k^2} = q^{(k-1)^2} * q^{2k-1}
        const double q   = std::exp(-(m_dx * m_dx) / (kp.a * kp.a));
        const double q2  = q * q;
        double term      = kp.b / (kp.a * std::sqrt(std::numbers::pi)) * m_dx;
        double ratio     = q;
        for (int k = 0; k <= m; ++k) {
            m_weights.push_back(term);
            term *= ratio;
            ratio *= q2;
        }
        m_max_mass = std::max(m_max_mass, kp.b);
    }
}

void VariableKernelConvolution::apply(std::span<const double> r, std::span<double> out)
{
    check_shape(r.size(), m_cells);
    check_shape(out.size(), m_cells);
    if (m_half_width.size() != static_cast<std::size_t>(m_cells)) {
        throw ShapeError("per-cell kernels not set");
    }
    for (int i = 0; i < m_cells; ++i) {
        const int m      = m_half_width[static_cast<std::size_t>(i)];
        const double* w  = m_weights.data() + m_offset[static_cast<std::size_t>(i)];
        double acc       = w[0] * r[static_cast<std::size_t>(i)];
        const int lo     = std::max(0, i - m);
        const int hi     = std::min(m_cells - 1, i + m);
        for (int j = lo; j < i; ++j) {
            acc += w[i - j] * r[static_cast<std::size_t>(j)];
        }
        for (int j = i + 1; j <= hi; ++j) {
            acc += w[j - i] * r[static_cast<std::size_t>(j)];
        }
        out[static_cast<std::size_t>(i)] = acc;
    }
}

// ---------------------------------------------------------------------------

std::vector<double> convolve_relaying(std::span<const double> r, const KernelParams& kp, const GridSpec& grid)
{
    FftConvolution conv(kp, grid);
    std::vector<double> out(r.size());
    conv.apply(r, out);
    return out;
}

std::vector<double> convolve_relaying_direct(std::span<const double> r, const KernelParams& kp, const GridSpec& grid,
                                             ConvolutionBoundary boundary)
{
    check_shape(r.size(), grid.num_cells);
    const int n = grid.num_cells;
    std::vector<double> out(r.size(), 0.0);
    if (boundary == ConvolutionBoundary::periodic) {
        const auto w = periodic_weights(kp, grid.dx_km, n);
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) {
                acc += w[static_cast<std::size_t>(((i - j) % n + n) % n)] * r[static_cast<std::size_t>(j)];
            }
            out[static_cast<std::size_t>(i)] = acc;
        }
        return out;
    }
    const auto w = kernel_weights(kp, grid.dx_km);
    const int m  = static_cast<int>(w.size()) - 1;
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = std::max(0, i - m); j <= std::min(n - 1, i + m); ++j) {
            acc += w[static_cast<std::size_t>(std::abs(i - j))] * r[static_cast<std::size_t>(j)];
        }
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

namespace
{

// Direct summation wrapped as a RelayingConvolution for the one-shot free functions.
class DirectConvolution : public RelayingConvolution
{
public:
    DirectConvolution(const KernelParams& kp, const GridSpec& grid)
        : m_kernel(kp)
        , m_grid(grid)
    {
    }
    void apply(std::span<const double> r, std::span<double> out) override
    {
        const auto v = convolve_relaying_direct(r, m_kernel, m_grid);
        check_shape(out.size(), m_grid.num_cells);
        std::copy(v.begin(), v.end(), out.begin());
    }
    double max_mass() const override
    {
        return m_kernel.b;
    }

private:
    KernelParams m_kernel;
    GridSpec m_grid;
};

} // namespace

// ---------------------------------------------------------------------------

ShreRates ShreRates::from(const ShreParams& p)
{
    if (!(p.beta_hz > 0.0) || !(p.contact_length_km > 0.0)) {
        throw ArgumentError("beta and contact length must be positive");
    }
    require_stable(p.queue);
    ShreRates rates;
    rates.contact = p.beta_hz * p.contact_length_km;
    rates.xi      = wait_probability(p.queue);
    rates.release = p.queue.n_servers * p.queue.mu - p.queue.lambda;
    rates.mu      = p.queue.mu;
    return rates;
}

void shre_derivative(const ClassState& state, std::span<const double> conv, const ShreRates& rates,
                     ClassState& out)
{
    const std::size_t n = state.size();
    out.s.resize(n);
    out.h.resize(n);
    out.r.resize(n);
    out.e.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double phi = rates.contact * state.s[i] * conv[i];
        const double hr  = rates.release * state.h[i];
        const double re  = rates.mu * state.r[i];
        out.s[i]         = -phi;
        out.h[i]         = rates.xi * phi - hr;
        out.r[i]         = (1.0 - rates.xi) * phi + hr - re;
        out.e[i]         = re;
    }
}

ClassState shre_rhs(const ClassState& state, const ShreParams& p, const GridSpec& grid)
{
    check_shape(state.size(), grid.num_cells);
    const auto rates = ShreRates::from(p);
    const auto conv  = convolve_relaying_direct(state.r, p.kernel, grid);
    ClassState out;
    shre_derivative(state, conv, rates, out);
    return out;
}

namespace
{

struct Rk4Workspace {
    ClassState k1, k2, k3, k4, stage;
    std::vector<double> conv;
};

void axpy_state(const ClassState& base, const ClassState& slope, double h, ClassState& out)
{
    const std::size_t n = base.size();
    out.s.resize(n);
    out.h.resize(n);
    out.r.resize(n);
    out.e.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.s[i] = base.s[i] + h * slope.s[i];
        out.h[i] = base.h[i] + h * slope.h[i];
        out.r[i] = base.r[i] + h * slope.r[i];
        out.e[i] = base.e[i] + h * slope.e[i];
    }
}

double finalize(double v, std::size_t cell, const char* field)
{
    if (!std::isfinite(v)) {
        throw NumericalError(std::string("non-finite ") + field + " density in cell " + std::to_string(cell),
                             static_cast<long>(cell));
    }
    if (v < 0.0) {
        if (v < -1e-9) {
            throw StepSizeError(std::string("negative ") + field + " density " + std::to_string(v) + " in cell " +
                                    std::to_string(cell),
                                static_cast<long>(cell));
        }
        return 0.0;
    }
    // flush values that would otherwise descend into slow subnormal arithmetic
    return v < 1e-250 ? 0.0 : v;
}

} // namespace

void rk4_step(ClassState& state, const ShreRates& rates, RelayingConvolution& conv, double dt)
{
    thread_local Rk4Workspace ws;
    const std::size_t n = state.size();
    ws.conv.resize(n);

    conv.apply(state.r, ws.conv);
    shre_derivative(state, ws.conv, rates, ws.k1);
    axpy_state(state, ws.k1, 0.5 * dt, ws.stage);
    conv.apply(ws.stage.r, ws.conv);
    shre_derivative(ws.stage, ws.conv, rates, ws.k2);
    axpy_state(state, ws.k2, 0.5 * dt, ws.stage);
    conv.apply(ws.stage.r, ws.conv);
    shre_derivative(ws.stage, ws.conv, rates, ws.k3);
    axpy_state(state, ws.k3, dt, ws.stage);
    conv.apply(ws.stage.r, ws.conv);
    shre_derivative(ws.stage, ws.conv, rates, ws.k4);

    const double w = dt / 6.0;
    ClassState next(n);
    for (std::size_t i = 0; i < n; ++i) {
        next.s[i] = finalize(state.s[i] + w * (ws.k1.s[i] + 2.0 * ws.k2.s[i] + 2.0 * ws.k3.s[i] + ws.k4.s[i]), i, "S");
        next.h[i] = finalize(state.h[i] + w * (ws.k1.h[i] + 2.0 * ws.k2.h[i] + 2.0 * ws.k3.h[i] + ws.k4.h[i]), i, "H");
        next.r[i] = finalize(state.r[i] + w * (ws.k1.r[i] + 2.0 * ws.k2.r[i] + 2.0 * ws.k3.r[i] + ws.k4.r[i]), i, "R");
        next.e[i] = finalize(state.e[i] + w * (ws.k1.e[i] + 2.0 * ws.k2.e[i] + 2.0 * ws.k3.e[i] + ws.k4.e[i]), i, "E");
    }
    state = std::move(next);
}

ClassState rk4_step(const ClassState& state, const ShreParams& p, const GridSpec& grid)
{
    check_shape(state.size(), grid.num_cells);
    const auto rates = ShreRates::from(p);
    DirectConvolution conv(p.kernel, grid);
    ClassState out = state;
    rk4_step(out, rates, conv, grid.dt_s);
    return out;
}

ClassState seed_information(ClassState state, int cell_index, double relaying_density)
{
    if (cell_index < 0 || static_cast<std::size_t>(cell_index) >= state.size()) {
        throw ArgumentError("seed cell " + std::to_string(cell_index) + " outside the grid");
    }
    if (!(relaying_density >= 0.0)) {
        throw ArgumentError("seed density must be non-negative");
    }
    auto& s = state.s[static_cast<std::size_t>(cell_index)];
    if (relaying_density > s * (1.0 + 1e-12)) {
        throw ArgumentError("seed density " + std::to_string(relaying_density) + " exceeds susceptible density " +
                            std::to_string(s));
    }
    s = std::max(0.0, s - relaying_density);
    state.r[static_cast<std::size_t>(cell_index)] += relaying_density;
    return state;
}

// ---------------------------------------------------------------------------

int base_substeps(const ShreRates& rates, double dt, double peak_contact_rate)
{
    const double stiff = std::max({rates.release, rates.mu, peak_contact_rate});
    int n              = 1;
    while (dt * stiff / n > 1.0 && n < (1 << 12)) {
        n *= 2;
    }
    return n;
}

ShreIntegrator::ShreIntegrator(const ShreParams& p)
    : m_rates(ShreRates::from(p))
{
}

int ShreIntegrator::advance(ClassState& state, RelayingConvolution& conv, double dt)
{
    const double peak_r = state.r.empty() ? 0.0 : *std::max_element(state.r.begin(), state.r.end());
    int substeps        = base_substeps(m_rates, dt, m_rates.contact * conv.max_mass() * peak_r);
    for (int attempt = 0;; ++attempt) {
        ClassState trial = state;
        try {
            const double h = dt / substeps;
            for (int k = 0; k < substeps; ++k) {
                rk4_step(trial, m_rates, conv, h);
            }
            state = std::move(trial);
            return substeps;
        }
        catch (const NumericalError&) {
            if (attempt >= max_halvings) {
                throw;
            }
            substeps *= 2;
        }
    }
}

} // namespace ifpw
