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
#ifndef IFPW_SHRE_SOLVER_HPP
#define IFPW_SHRE_SOLVER_HPP

#include "ifpw/comm_kernel.hpp"
#include "ifpw/queueing.hpp"
#include "ifpw/state.hpp"

#include <memory>
#include <span>
#include <vector>

namespace ifpw
{

enum class ConvolutionBoundary {
    zero_padded, ///< nothing is relayed across the corridor ends
    periodic, ///< ring road
};

/// Discrete relaying field: out[i] = sum_j K(x_i - x_j) dx r[j].
class RelayingConvolution
{
public:
    virtual ~RelayingConvolution() = default;
    virtual void apply(std::span<const double> r, std::span<double> out) = 0;
    /// Largest kernel mass currently in use.
    virtual double max_mass() const = 0;
};

/// Fixed-kernel convolution through FFTW (linear, zero-padded to avoid wrap-around,
/// or circular for periodic domains). Kernel truncated at |x - y| > 8a. Outputs below 1e-6 of the
/// largest possible value are recomputed by direct summation.
class FftConvolution : public RelayingConvolution
{
public:
    FftConvolution(const KernelParams& kp, const GridSpec& grid,
                   ConvolutionBoundary boundary = ConvolutionBoundary::zero_padded);
    ~FftConvolution() override;
    FftConvolution(const FftConvolution&)            = delete;
    FftConvolution& operator=(const FftConvolution&) = delete;

    void apply(std::span<const double> r, std::span<double> out) override;
    double max_mass() const override
    {
        return m_kernel.b;
    }
    std::size_t transform_size() const;

private:
    struct Impl;
    std::unique_ptr<Impl> m_impl;
    KernelParams m_kernel;
    int m_cells;
};

/// Direct summation with one kernel per receiving cell (density-dependent mode).
/// Each row is truncated at 8 a of that row.
class VariableKernelConvolution : public RelayingConvolution
{
public:
    explicit VariableKernelConvolution(const GridSpec& grid);
    void set_kernels(std::span<const KernelParams> per_cell);
    void apply(std::span<const double> r, std::span<double> out) override;
    double max_mass() const override
    {
        return m_max_mass;
    }

private:
    double m_dx;
    int m_cells;
    std::vector<int> m_half_width;
    std::vector<std::size_t> m_offset;
    std::vector<double> m_weights; // row i: offsets 0..m_half_width[i]
    double m_max_mass = 0.0;
};

/// Convolution via FFT (fixed kernel, zero padded).
std::vector<double> convolve_relaying(std::span<const double> r, const KernelParams& kp, const GridSpec& grid);

/// Direct O(N M) summation of the same discretization; the FFT path's oracle.
std::vector<double> convolve_relaying_direct(std::span<const double> r, const KernelParams& kp, const GridSpec& grid,
                                             ConvolutionBoundary boundary = ConvolutionBoundary::zero_padded);

struct ShreParams {
    double beta_hz = 2.0;
    ClassParams queue;
    KernelParams kernel;
    /// Length [km] the equipped density is referred to in the contact rate:
    /// infection rate = beta * contact_length * S * (K * R).
    double contact_length_km = 0.015;
};

/// Rates of the SHRE right-hand side, derived once per class.
struct ShreRates {
    double contact = 0.0; ///< beta * contact_length
    double xi      = 0.0;
    double release = 0.0; ///< n mu - lambda: holding -> relaying
    double mu      = 0.0; ///< relaying -> excluded

    static ShreRates from(const ShreParams& p);
};

/// d/dt of (S, H, R, E) given the relaying field conv = K * R.
void shre_derivative(const ClassState& state, std::span<const double> conv, const ShreRates& rates,
                     ClassState& out);

/// Right-hand side using a direct-summation convolution of p.kernel.
ClassState shre_rhs(const ClassState& state, const ShreParams& p, const GridSpec& grid);

/// One classical RK4 step of length dt. Values in (-1e-9, 0) are clamped to 0;
/// anything more negative raises StepSizeError, NaN/inf raises NumericalError.
void rk4_step(ClassState& state, const ShreRates& rates, RelayingConvolution& conv, double dt);

/// rk4_step with grid.dt_s and a direct convolution of p.kernel.
ClassState rk4_step(const ClassState& state, const ShreParams& p, const GridSpec& grid);

/// Moves `relaying_density` from S to R in one cell.
ClassState seed_information(ClassState state, int cell_index, double relaying_density);

/// Reaction stepper for one class: RK4 over dt split into substeps chosen from
/// the stiffest linear rate, halving up to 4 more times when a step fails.
class ShreIntegrator
{
public:
    explicit ShreIntegrator(const ShreParams& p);

    /// Advances `state` by dt; returns the number of substeps used.
    int advance(ClassState& state, RelayingConvolution& conv, double dt);

    const ShreRates& rates() const
    {
        return m_rates;
    }

    static constexpr int max_halvings = 4;

private:
    ShreRates m_rates;
};

/// Substeps so that dt * max(release, mu, contact * peak relaying) stays <= 1.
int base_substeps(const ShreRates& rates, double dt, double peak_contact_rate = 0.0);

} // namespace ifpw

#endif // IFPW_SHRE_SOLVER_HPP
