#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "glab/gheat.hpp"
#include "glab/model.hpp"

namespace glab {

// Piecewise-constant volatility path h on a time grid; h_j applies on
// [t_j, t_{j+1}). Each one labels a scenario measure P_h.
class ScenarioControl {
public:
    ScenarioControl(TimeGrid grid, std::vector<double> levels, const VolatilityBand& band);
    static ScenarioControl constant(const TimeGrid& grid, double level, const VolatilityBand& band);

    const TimeGrid& grid() const noexcept { return grid_; }
    const std::vector<double>& levels() const noexcept { return levels_; }
    double level(int step) const noexcept { return levels_[static_cast<std::size_t>(step)]; }

private:
    TimeGrid grid_;
    std::vector<double> levels_;
};

// State-feedback volatility read off the PDE value function: on step j the
// level is the Hamiltonian maximizer of u(t_{j+1}, .) at the nearest node.
class FeedbackControl {
public:
    static FeedbackControl from_pde(const ModelCoefficients& coeffs, const VolatilityBand& band,
                                    const Payoff& payoff, const TimeGrid& grid, const PdeConfig& cfg);

    const TimeGrid& grid() const noexcept { return grid_; }
    double level(int step, double state) const noexcept;

private:
    FeedbackControl(TimeGrid grid, double x0, double dx, std::vector<std::vector<double>> levels)
        : grid_(grid), x0_(x0), dx_(dx), levels_(std::move(levels)) {}

    TimeGrid grid_;
    double x0_;
    double dx_;
    std::vector<std::vector<double>> levels_;  // [step][node]
};

using ControlPolicy = std::variant<ScenarioControl, FeedbackControl>;

double control_level(const ControlPolicy& control, int step, double state) noexcept;
const TimeGrid& control_grid(const ControlPolicy& control) noexcept;

enum class ControlStrategy { constants, bang_bang, random, feedback };

ControlStrategy parse_control_strategy(const std::string& name);
std::string to_string(ControlStrategy strategy);

// Finite sub-family of admissible controls.
//  constants: `count` evenly spaced levels including both band endpoints.
//  bang_bang: control k switches once at T (k+1)/(count+1); even k go
//             lower -> upper, odd k upper -> lower.
//  random:    i.i.d. uniform level per step (counter-based on seed).
//  feedback:  `feedback` first, then count-1 evenly spaced constants.
// A degenerate band always yields the single control h = lower.
std::vector<ControlPolicy> sample_controls(ControlStrategy strategy, const VolatilityBand& band,
                                           const TimeGrid& grid, int count, std::uint64_t seed,
                                           const FeedbackControl* feedback = nullptr);

struct GBMPath {
    TimeGrid grid{1.0, 1};
    std::vector<double> w_increments;  // sqrt(dt) * N(0,1)
    std::vector<double> levels;        // realized h_j
    std::vector<double> b_path;        // B_{t_j}
    std::vector<double> qv_path;       // <B>_{t_j}

    double terminal() const noexcept { return b_path.back(); }
};

// B_{j+1} = B_j + h_j dW_j, <B>_{j+1} = <B>_j + h_j^2 dt. The increments of
// path `path_id` depend only on (seed, path_id, step), never on the control.
GBMPath simulate_gbm(const ControlPolicy& control, std::uint64_t seed, std::uint64_t path_id = 0);

struct EstimateWithError {
    double value = 0.0;
    double std_error = 0.0;
    int n_paths = 0;
    int n_controls = 0;
    int best_control_id = 0;
    std::vector<double> control_means;
    std::vector<double> control_std_errors;
};

using PathFunctional = std::function<double(const GBMPath&)>;
using PathEvent = std::function<bool(const GBMPath&)>;

// max over controls of the Monte Carlo mean (common random numbers across
// controls). Biased low as an estimate of the sublinear expectation since
// the control family is finite. Requires n_paths >= 100.
EstimateWithError upper_expectation_mc(const PathFunctional& functional, const std::vector<ControlPolicy>& controls,
                                       int n_paths, std::uint64_t seed, unsigned threads = 1);

// Capacity of an event: the upper expectation of its indicator.
EstimateWithError capacity_mc(const PathEvent& event, const std::vector<ControlPolicy>& controls, int n_paths,
                              std::uint64_t seed, unsigned threads = 1);

// Header `quantity,value,std_error,n_paths,n_controls,best_control_id,method,x`.
// For method pde the std_error column carries the two-grid tolerance and the
// count columns are 0.
void write_estimates_header(std::ostream& out);
void write_estimate_row(std::ostream& out, const std::string& quantity, double x, const EstimateWithError& e);
void write_estimate_row(std::ostream& out, const std::string& quantity, double x, const PdeEstimate& e);

// Random variables on a finite outcome space under a finite family of
// scenario measures: values[k][i] is the value on outcome i seen under
// scenario k, weights[k][i] its probability (uniform when weights is empty).
struct ScenarioTable {
    std::vector<std::vector<double>> values;
    std::vector<std::vector<double>> weights;
};

struct YoungSlack {
    double lhs = 0.0;          // sup_k E_k[g1 g2]
    double entropy = 0.0;      // sup_k E_k[g1 log g1]
    double log_exp = 0.0;      // log sup_k E_k[exp g2]
    double rhs = 0.0;
    double slack = 0.0;        // rhs - lhs
    bool pass = false;         // slack >= -1e-12
};

// Sublinear Young inequality E[g1 g2] <= E[g1 log g1] + log E[exp g2] for
// g1 > 0 with E_k[g1] = 1 under every scenario k. Throws
// std::invalid_argument on nonpositive or unnormalized g1 and shape mismatch.
YoungSlack young_check(const ScenarioTable& g1, const ScenarioTable& g2);

}  // namespace glab
