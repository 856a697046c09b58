#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "glab/coupling.hpp"
#include "glab/gheat.hpp"
#include "glab/model.hpp"

namespace glab {

enum class HarnackKind { log, power, gradient, lipschitz };
enum class CheckMethod { pde, mc };

std::string to_string(HarnackKind kind);
std::string to_string(CheckMethod method);

// Both sides of one inequality. slack = rhs - lhs; pass iff slack >= -tolerance.
// Fields that do not apply to a kind are NaN.
struct HarnackReport {
    HarnackKind kind = HarnackKind::log;
    CheckMethod method = CheckMethod::pde;
    double x = 0.0;
    double y = 0.0;
    double horizon = 0.0;
    double p = 0.0;          // power
    double a = 0.0;          // power: moment exponent at the proof's alpha, equals 1/(p-1)
    double q = 0.0;          // power: conjugate p/(p-1)
    double C = 0.0;          // power: constant in the bracket, kappa2 - kappa1
    double alpha = 0.0;      // alpha used (log: k1^2/k2^2; power: proof choice; gradient: envelope argmin)
    double constant = 0.0;   // log: additive penalty; power: exponent as printed; gradient: rhs / ||f||
    double alt_constant = 0.0;  // log: generic-alpha form; power: exponent derived from the moment lemma
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

// c_K / (1 - exp(-lower^2 c_K T)), continued by 1/(lower^2 T) at K = 0.
double rate_over_decay(double lipschitz, double sigma_lower, double horizon);

// K (2 + K + 2/lower^2) |x-y|^2 / (2 (k1^6/k2^4) (1 - exp(-lower^2 c_K T))).
double log_harnack_constant(const ModelCoefficients& coeffs, const VolatilityBand& band, double horizon,
                            double distance);
// |x-y|^2 / (2 alpha k1^2 lambda_0) for a general admissible alpha.
double log_harnack_constant(const ModelCoefficients& coeffs, const VolatilityBand& band, double horizon,
                            double distance, double alpha);

// (1 + (k2^3 - k1 k2^2) / k1^3)^2.
double power_harnack_threshold(double kappa1, double kappa2);
// alpha = 2 (k2 - k1) / (k1 (sqrt p - 1)).
double power_harnack_alpha(double p, double kappa1, double kappa2);
// sqrt p (sqrt p - 1) c_K |x-y|^2 / (4 (k2-k1) [k1 (sqrt p - 1) - C] (1 - exp(...))), C = k2 - k1.
double power_harnack_exponent(const ModelCoefficients& coeffs, const VolatilityBand& band, double horizon,
                              double distance, double p);
// (p - 1) times the log of the moment bound at the proof's alpha.
double power_harnack_lemma_exponent(const ModelCoefficients& coeffs, const VolatilityBand& band, double horizon,
                                    double distance, double p);

// 33 points spanning 1% .. 99% of (0, 2 k1^2/k2^2).
std::vector<double> default_alpha_grid(double kappa1, double kappa2, int n = 33);

// Closed form when K > 0, the K -> 0 limit otherwise.
CouplingSchedule schedule_for(double alpha, const ModelCoefficients& coeffs, const VolatilityBand& band,
                              double horizon);

// P log f(y) <= log P f(x) + constant. Requires K > 0 and f >= declared positive
// lower bound. tolerance = sum over both sides of |fine - coarse|.
HarnackReport check_log_harnack(const ModelCoefficients& coeffs, const VolatilityBand& band, const Payoff& payoff,
                                double x, double y, double horizon, const PdeConfig& cfg);

// The same check for every (x, y) pair, sharing the four PDE solves.
std::vector<HarnackReport> check_log_harnack_grid(const ModelCoefficients& coeffs, const VolatilityBand& band,
                                                  const Payoff& payoff, const std::vector<double>& xs,
                                                  const std::vector<double>& ys, double horizon,
                                                  const PdeConfig& cfg);

// (P f(y))^p <= P f^p(x) exp(exponent). Rejects kappa1 == kappa2, p at or
// below the threshold, and negative payoffs.
HarnackReport check_power_harnack(const ModelCoefficients& coeffs, const VolatilityBand& band, const Payoff& payoff,
                                  double x, double y, double horizon, double p, const PdeConfig& cfg);
std::vector<HarnackReport> check_power_harnack_grid(const ModelCoefficients& coeffs, const VolatilityBand& band,
                                                    const Payoff& payoff, const std::vector<double>& xs,
                                                    const std::vector<double>& ys, double horizon, double p,
                                                    const PdeConfig& cfg);

// max interior |central difference of P f| against
// min_alpha ||f|| 2 / (k1 sqrt(alpha lambda_0)).
HarnackReport check_gradient_estimate(const ModelCoefficients& coeffs, const VolatilityBand& band,
                                      const Payoff& payoff, double horizon, const PdeConfig& cfg,
                                      const std::vector<double>& alpha_grid);

// |P f(y) - P f(x)| against min_alpha ||f|| (2|x-y| / (k1 sqrt(alpha lambda_0)) + |x-y|^2 / (alpha k1^2 lambda_0)).
HarnackReport lipschitz_transport_check(const ModelCoefficients& coeffs, const VolatilityBand& band,
                                        const Payoff& payoff, double x, double y, double horizon,
                                        const PdeConfig& cfg, const std::vector<double>& alpha_grid);
std::vector<HarnackReport> lipschitz_transport_grid(const ModelCoefficients& coeffs, const VolatilityBand& band,
                                                    const Payoff& payoff, const std::vector<double>& xs,
                                                    const std::vector<double>& ys, double horizon,
                                                    const PdeConfig& cfg, const std::vector<double>& alpha_grid);

// Header `kind,x,y,T,p,lhs,rhs,slack,tolerance,pass`.
void write_report_header(std::ostream& out);
void write_report_row(std::ostream& out, const HarnackReport& r);

}  // namespace glab
