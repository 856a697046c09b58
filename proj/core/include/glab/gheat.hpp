#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "glab/model.hpp"

namespace glab {

// Values of a function on a uniform state grid at one time level.
struct GridFunction {
    std::vector<double> x;
    std::vector<double> values;
    double time = 0.0;

    std::size_t size() const noexcept { return x.size(); }
    double dx() const noexcept { return x.size() > 1 ? x[1] - x[0] : 0.0; }
    // Linear interpolation; throws std::out_of_range outside [x.front(), x.back()].
    double at(double state) const;
};

// CSV with header `x,u`, one row per node.
void write_csv(const GridFunction& u, std::ostream& out);

enum class BoundaryRule {
    // Ghost node u_{-1} = 2 u_0 - u_1: zero second difference and one-sided
    // first difference at the two end nodes.
    linear_extrapolation,
};

struct PdeConfig {
    double x_min = -8.0;
    double x_max = 8.0;
    int n_space = 801;
    double cfl_safety = 0.9;
    BoundaryRule boundary_rule = BoundaryRule::linear_extrapolation;

    double dx() const noexcept { return (x_max - x_min) / (n_space - 1); }
    // Same domain with (roughly) twice the spacing; used for two-grid error estimates.
    PdeConfig coarsened() const;
    void validate() const;
};

// [x_ref - r, x_ref + r] with r = max(6 * upper * sqrt(T), requested_half_width).
Interval padded_domain(double x_ref, const VolatilityBand& band, double horizon, double requested_half_width);

struct SolveOptions {
    // u(t, .) is recorded at the time level closest to each requested t.
    std::vector<double> snapshot_times;
};

struct PdeSolution {
    GridFunction u0;
    std::vector<GridFunction> snapshots;  // same order as SolveOptions::snapshot_times
    double dt = 0.0;
    int n_time_steps = 0;
    // min f <= u <= max f over the grid (up to rounding).
    bool comparison_ok = true;
    double comparison_excess = 0.0;
};

// Backward explicit monotone scheme for
//   u_t + b u_x + G(2 h u_x + sigma^2 u_xx) = 0,  u(T, .) = f,
// with b u_x upwinded and the G argument built from central differences.
// dt = cfl_safety / max_i(upper^2 sigma_i^2 / dx^2 + |b_i| / dx), rounded so
// that T/dt is an integer. Throws std::invalid_argument on an unbounded
// payoff, invalid coefficients on the grid, or a configuration for which the
// scheme cannot be monotone.
PdeSolution solve_g_hjb(const ModelCoefficients& coeffs, const VolatilityBand& band, const Payoff& payoff,
                        double horizon, const PdeConfig& cfg, const SolveOptions& options = {});

// u_t + G(u_xx) = 0: the G-heat equation, so u(0, x) = E[phi(x + B_T)].
PdeSolution solve_g_heat(const Payoff& payoff, const VolatilityBand& band, double horizon, const PdeConfig& cfg,
                         const SolveOptions& options = {});

// Argument a_i = 2 h D1 u + sigma^2 D2 u of G at every node of u.
std::vector<double> hamiltonian_argument(const GridFunction& u, const ModelCoefficients& coeffs);

// Maximizing volatility of the scenario Hamiltonian: upper where a_i >= 0 up to rounding
// (ties go up), lower elsewhere.
std::vector<double> feedback_optimal_control(const GridFunction& u, const ModelCoefficients& coeffs,
                                             const VolatilityBand& band);

// Point value on the fine grid with the fine/coarse discrepancy as tolerance.
struct PdeEstimate {
    double value = 0.0;
    double coarse = 0.0;
    double tolerance = 0.0;
};
PdeEstimate two_grid_estimate(const GridFunction& fine, const GridFunction& coarse, double state);

}  // namespace glab
