#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "glab/model.hpp"
#include "glab/scenario.hpp"

namespace glab {

// K (2 + K + 2 / lower^2).
double coupling_rate_constant(double lipschitz, double sigma_lower) noexcept;

enum class ScheduleForm {
    closed_form,  // requires K > 0
    limit,        // K -> 0 limit: lambda_t = (2 k1^2/k2^2 - alpha) lower^2 (T - t)
};

// Weight schedule of the coupling drift,
//   lambda_t = (2 k1^2/k2^2 - alpha) / c_K * (1 - exp(lower^2 c_K (t - T))),
// the solution of 2 k1^2/k2^2 - c_K lambda + lambda' / lower^2 = alpha with
// lambda_T = 0. Strictly positive and decreasing on [0, T).
class CouplingSchedule {
public:
    static CouplingSchedule make(double alpha, const ModelCoefficients& coeffs, const VolatilityBand& band,
                                 double horizon, ScheduleForm form = ScheduleForm::closed_form);

    double alpha() const noexcept { return alpha_; }
    double alpha_max() const noexcept { return alpha_max_; }
    double rate_constant() const noexcept { return c_k_; }
    double sigma_lower() const noexcept { return sigma_lower_; }
    double horizon() const noexcept { return horizon_; }
    ScheduleForm form() const noexcept { return form_; }

    double lambda(double t) const noexcept;
    double lambda_derivative(double t) const noexcept;
    double lambda0() const noexcept { return lambda(0.0); }

    // Left side minus alpha of the defining identity, with the analytic derivative.
    double identity_residual(double t) const noexcept;

private:
    CouplingSchedule() = default;

    double alpha_ = 0.0;
    double alpha_max_ = 0.0;
    double c_k_ = 0.0;
    double sigma_lower_ = 0.0;
    double horizon_ = 0.0;
    ScheduleForm form_ = ScheduleForm::closed_form;
};

// Upper end 2 k1^2 / k2^2 of the admissible alpha interval.
double alpha_upper_limit(double kappa1, double kappa2) noexcept;

inline CouplingSchedule make_schedule(double alpha, const ModelCoefficients& coeffs, const VolatilityBand& band,
                                      double horizon, ScheduleForm form = ScheduleForm::closed_form) {
    return CouplingSchedule::make(alpha, coeffs, band, horizon, form);
}

struct CouplingOptions {
    double clip_epsilon = 0.01;
    double stiffness_limit = 1e3;  // bound on |g| * step
    int max_halvings = 10;
};

// One coupled path. Index j of x/y/m/log_m is node t_j; index j of g/db/dqv/
// dbhat is step [t_j, t_{j+1}).
struct PathBundle {
    TimeGrid grid{1.0, 1};
    std::vector<double> levels;
    std::vector<double> x_path;
    std::vector<double> y_path;
    std::vector<double> g_path;
    std::vector<double> m_path;
    std::vector<double> log_m_path;
    std::vector<double> db;     // B increments
    std::vector<double> dqv;    // <B> increments
    std::vector<double> dbhat;  // B increments shifted by g d<B>
    int clip_index = 0;
    int max_halving_depth = 0;
    bool stiff = false;
};

// Euler-Maruyama for the pair
//   dX = b dt + h d<B> + sigma(X) dB,
//   dY = b dt + h d<B> + sigma(Y) dB + sigma(Y) g d<B>,  g = (X - Y) / (lambda sigma(X)),
// with log M -= g dB + g^2 d<B> / 2, up to the last node <= T - clip_epsilon.
// Past the clip g = 0 and both processes share the noise. A step with
// |g| dt above the stiffness limit is split by Brownian bridge refinement;
// a path still stiff after max_halvings is flagged.
PathBundle simulate_coupled(const ModelCoefficients& coeffs, const CouplingSchedule& schedule, double x0, double y0,
                            const ScenarioControl& control, std::uint64_t seed, std::uint64_t path_id,
                            const CouplingOptions& options);

struct ShiftedQvReport {
    double discrepancy = 0.0;  // |sum dbhat^2 - sum db^2| over the coupled range
    double tolerance = 0.0;
    bool pass = false;
};

// The shifted driver keeps the quadratic variation of B: the realized QV of
// dbhat = db + g dqv matches that of db up to O(dt) in total. Tolerance is
// 10 dt per unit time scaled by max(1, max_j (g_j * level_j^2)^2).
ShiftedQvReport girsanov_shifted_qv_check(const PathBundle& bundle);

struct SlackReport {
    double estimate = 0.0;
    double std_error = 0.0;
    double bound = 0.0;
    double slack = 0.0;       // bound - estimate
    bool pass = false;
    int best_control_id = 0;
    int n_paths = 0;
    int n_controls = 0;
    int excluded_stiff = 0;
    double observation_time = 0.0;
    double exponent = 0.0;    // moment check: the a in M^{1+a}
};

// sup_controls mean(M_s log M_s) at s = last node <= T - eps against
// |x-y|^2 / (2 alpha k1^2 lambda_0). Passes if slack >= -3 std_error.
SlackReport entropy_bound_check(const ModelCoefficients& coeffs, const CouplingSchedule& schedule, double x0,
                                double y0, const std::vector<ScenarioControl>& controls, int n_paths,
                                std::uint64_t seed, const CouplingOptions& options, unsigned threads = 1);

// a = alpha^2 k1^2 / (4 (k2-k1)^2 + 4 alpha (k2-k1) k1).
double moment_exponent(double alpha, double kappa1, double kappa2);
// Right side of the (1+a)-moment bound, exp(alpha (alpha k1 + 2 d) |x-y|^2 /
// (4 d^2 (2 alpha k1 + 2 d) lambda_0)) with d = k2 - k1, in its printed form.
double moment_bound(const CouplingSchedule& schedule, double kappa1, double kappa2, double distance);
double entropy_bound(const CouplingSchedule& schedule, double kappa1, double distance);

// sup_controls mean(M_s^{1+a}); passes if estimate <= bound (1 + 3 std_error / estimate).
// Throws std::invalid_argument when kappa1 == kappa2.
SlackReport moment_bound_check(const ModelCoefficients& coeffs, const CouplingSchedule& schedule, double x0,
                               double y0, const std::vector<ScenarioControl>& controls, int n_paths,
                               std::uint64_t seed, const CouplingOptions& options, unsigned threads = 1);

struct ClipStatistics {
    double epsilon = 0.0;
    double clip_time = 0.0;
    double lambda = 0.0;
    double weighted_mean_gap = 0.0;  // sup over controls of mean(M |X - Y|)
    double weighted_std_error = 0.0;
    double median_gap = 0.0;         // sup over controls of median |X - Y|
    std::vector<double> control_weighted_means;
    std::vector<double> control_medians;
};

struct CouplingSuccessReport {
    std::vector<ClipStatistics> sweep;  // in the given epsilon order
    double fitted_constant = 0.0;       // from the two largest epsilons
    bool strictly_decreasing = false;
    bool bounded = false;
    int excluded_stiff = 0;
    bool pass() const noexcept { return strictly_decreasing && bounded; }
};

// Statistics of the gap at T - eps for each eps (given in decreasing order).
// The fitted constant C = max mean/sqrt(lambda) over the two largest eps; the
// remaining points must satisfy mean <= C sqrt(lambda) + 3 std_error.
CouplingSuccessReport coupling_success_check(const ModelCoefficients& coeffs, const CouplingSchedule& schedule,
                                             double x0, double y0, const std::vector<ScenarioControl>& controls,
                                             int n_paths, std::uint64_t seed, const std::vector<double>& epsilons,
                                             unsigned threads = 1);

struct DensityMeanReport {
    std::vector<double> times;
    std::vector<std::vector<double>> means;       // [control][time]
    std::vector<std::vector<double>> std_errors;  // [control][time]
    bool pass = false;                            // |mean - 1| <= 3 se everywhere
};

// Per-control mean of M at the given times (each mapped to the last node at or before it).
DensityMeanReport density_mean_check(const ModelCoefficients& coeffs, const CouplingSchedule& schedule, double x0,
                                     double y0, const std::vector<ScenarioControl>& controls, int n_paths,
                                     std::uint64_t seed, const CouplingOptions& options,
                                     const std::vector<double>& times, unsigned threads = 1);

// Header `control_id,path_id,clip_time,x,y,abs_gap,m,log_m`; one row per bundle at its clip node.
void write_bundle_header(std::ostream& out);
void write_bundle_row(std::ostream& out, int control_id, std::uint64_t path_id, const PathBundle& bundle);

}  // namespace glab
