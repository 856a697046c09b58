#include "glab/harnack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "glab/io.hpp"

namespace glab {

std::string to_string(HarnackKind kind) {
    switch (kind) {
        case HarnackKind::log: return "log";
        case HarnackKind::power: return "power";
        case HarnackKind::gradient: return "gradient";
        case HarnackKind::lipschitz: return "lipschitz";
    }
    return "unknown";
}

std::string to_string(CheckMethod method) { return method == CheckMethod::pde ? "pde" : "mc"; }

double rate_over_decay(double lipschitz, double sigma_lower, double horizon) {
    const double lo_sq = sigma_lower * sigma_lower;
    if (lipschitz == 0.0) return 1.0 / (lo_sq * horizon);
    const double c_k = coupling_rate_constant(lipschitz, sigma_lower);
    return c_k / -std::expm1(-lo_sq * c_k * horizon);
}

double log_harnack_constant(const ModelCoefficients& coeffs, const VolatilityBand& band, double horizon,
                            double distance) {
    const double k1 = coeffs.kappa1();
    const double k2 = coeffs.kappa2();
    const double k_ratio = std::pow(k1, 6) / std::pow(k2, 4);
    return rate_over_decay(coeffs.lipschitz(), band.lower(), horizon) * distance * distance / (2.0 * k_ratio);
}

double log_harnack_constant(const ModelCoefficients& coeffs, const VolatilityBand& band, double horizon,
                            double distance, double alpha) {
    const auto schedule = schedule_for(alpha, coeffs, band, horizon);
    return entropy_bound(schedule, coeffs.kappa1(), distance);
}

double power_harnack_threshold(double kappa1, double kappa2) {
    const double base = 1.0 + (kappa2 * kappa2 * kappa2 - kappa1 * kappa2 * kappa2) / (kappa1 * kappa1 * kappa1);
    return base * base;
}

double power_harnack_alpha(double p, double kappa1, double kappa2) {
    return 2.0 * (kappa2 - kappa1) / (kappa1 * (std::sqrt(p) - 1.0));
}

namespace {

void require_power_admissible(const ModelCoefficients& coeffs, double p) {
    const double k1 = coeffs.kappa1();
    const double k2 = coeffs.kappa2();
    if (!(k2 > k1)) {
        throw std::invalid_argument(
            "power-Harnack needs kappa2 > kappa1 (the constant divides by kappa2 - kappa1); "
            "use the log-Harnack check when kappa1 == kappa2");
    }
    const double threshold = power_harnack_threshold(k1, k2);
    if (!(p > threshold)) {
        std::ostringstream msg;
        msg << "p=" << p << " must exceed the power-Harnack threshold " << threshold;
        throw std::invalid_argument(msg.str());
    }
}

}  // namespace

double power_harnack_exponent(const ModelCoefficients& coeffs, const VolatilityBand& band, double horizon,
                              double distance, double p) {
    require_power_admissible(coeffs, p);
    const double k1 = coeffs.kappa1();
    const double d = coeffs.kappa2() - k1;
    const double c = d;
    const double r = std::sqrt(p) - 1.0;
    return std::sqrt(p) * r * rate_over_decay(coeffs.lipschitz(), band.lower(), horizon) * distance * distance /
           (4.0 * d * (k1 * r - c));
}

double power_harnack_lemma_exponent(const ModelCoefficients& coeffs, const VolatilityBand& band, double horizon,
                                    double distance, double p) {
    require_power_admissible(coeffs, p);
    const double alpha = power_harnack_alpha(p, coeffs.kappa1(), coeffs.kappa2());
    const auto schedule = schedule_for(alpha, coeffs, band, horizon);
    return (p - 1.0) * std::log(moment_bound(schedule, coeffs.kappa1(), coeffs.kappa2(), distance));
}

std::vector<double> default_alpha_grid(double kappa1, double kappa2, int n) {
    if (n < 2) throw std::invalid_argument("alpha grid needs at least 2 points");
    const double top = alpha_upper_limit(kappa1, kappa2);
    std::vector<double> out;
    for (int i = 0; i < n; ++i) out.push_back(top * (0.01 + 0.98 * i / (n - 1)));
    return out;
}

CouplingSchedule schedule_for(double alpha, const ModelCoefficients& coeffs, const VolatilityBand& band,
                              double horizon) {
    return make_schedule(alpha, coeffs, band, horizon,
                         coeffs.lipschitz() > 0.0 ? ScheduleForm::closed_form : ScheduleForm::limit);
}

namespace {

struct TwoGrid {
    GridFunction fine;
    GridFunction coarse;
};

TwoGrid solve_two_grid(const ModelCoefficients& coeffs, const VolatilityBand& band, const Payoff& payoff,
                       double horizon, const PdeConfig& cfg) {
    return {solve_g_hjb(coeffs, band, payoff, horizon, cfg).u0,
            solve_g_hjb(coeffs, band, payoff, horizon, cfg.coarsened()).u0};
}

void finish(HarnackReport& r) {
    r.slack = r.rhs - r.lhs;
    r.pass = r.slack >= -r.tolerance;
}

HarnackReport blank(HarnackKind kind, double x, double y, double horizon) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    HarnackReport r;
    r.kind = kind;
    r.x = x;
    r.y = y;
    r.horizon = horizon;
    r.p = r.a = r.q = r.C = r.alpha = r.constant = r.alt_constant = nan;
    return r;
}

void require_log_preconditions(const ModelCoefficients& coeffs, const Payoff& payoff) {
    if (!(coeffs.lipschitz() > 0.0)) throw std::invalid_argument("log-Harnack check needs K > 0");
    if (!payoff.strictly_positive || !(payoff.lower_bound > 0.0)) {
        throw std::invalid_argument("log-Harnack check needs a payoff with a declared positive lower bound");
    }
}

HarnackReport log_report(const ModelCoefficients& coeffs, const VolatilityBand& band, const TwoGrid& f,
                         const TwoGrid& log_f, double x, double y, double horizon) {
    auto r = blank(HarnackKind::log, x, y, horizon);
    const double distance = std::abs(x - y);
    r.alpha = coeffs.kappa1() * coeffs.kappa1() / (coeffs.kappa2() * coeffs.kappa2());
    r.constant = log_harnack_constant(coeffs, band, horizon, distance);
    r.alt_constant = log_harnack_constant(coeffs, band, horizon, distance, r.alpha);
    const auto lhs = two_grid_estimate(log_f.fine, log_f.coarse, y);
    const auto pf = two_grid_estimate(f.fine, f.coarse, x);
    r.lhs = lhs.value;
    r.rhs = std::log(pf.value) + r.constant;
    r.tolerance = lhs.tolerance + std::abs(std::log(pf.value) - std::log(pf.coarse));
    finish(r);
    return r;
}

}  // namespace

HarnackReport check_log_harnack(const ModelCoefficients& coeffs, const VolatilityBand& band, const Payoff& payoff,
                                double x, double y, double horizon, const PdeConfig& cfg) {
    return check_log_harnack_grid(coeffs, band, payoff, {x}, {y}, horizon, cfg).front();
}

std::vector<HarnackReport> check_log_harnack_grid(const ModelCoefficients& coeffs, const VolatilityBand& band,
                                                  const Payoff& payoff, const std::vector<double>& xs,
                                                  const std::vector<double>& ys, double horizon,
                                                  const PdeConfig& cfg) {
    require_log_preconditions(coeffs, payoff);
    const auto f = solve_two_grid(coeffs, band, payoff, horizon, cfg);
    const auto log_f = solve_two_grid(coeffs, band, log_payoff(payoff), horizon, cfg);
    std::vector<HarnackReport> out;
    for (double x : xs) {
        for (double y : ys) out.push_back(log_report(coeffs, band, f, log_f, x, y, horizon));
    }
    return out;
}

HarnackReport check_power_harnack(const ModelCoefficients& coeffs, const VolatilityBand& band, const Payoff& payoff,
                                  double x, double y, double horizon, double p, const PdeConfig& cfg) {
    return check_power_harnack_grid(coeffs, band, payoff, {x}, {y}, horizon, p, cfg).front();
}

std::vector<HarnackReport> check_power_harnack_grid(const ModelCoefficients& coeffs, const VolatilityBand& band,
                                                    const Payoff& payoff, const std::vector<double>& xs,
                                                    const std::vector<double>& ys, double horizon, double p,
                                                    const PdeConfig& cfg) {
    require_power_admissible(coeffs, p);
    if (payoff.lower_bound < 0.0) throw std::invalid_argument("power-Harnack check needs a nonnegative payoff");
    const auto f = solve_two_grid(coeffs, band, payoff, horizon, cfg);
    const auto f_p = solve_two_grid(coeffs, band, power_payoff(payoff, p), horizon, cfg);
    std::vector<HarnackReport> out;
    for (double x : xs) {
        for (double y : ys) {
            auto r = blank(HarnackKind::power, x, y, horizon);
            const double distance = std::abs(x - y);
            r.p = p;
            r.q = p / (p - 1.0);
            r.C = coeffs.kappa2() - coeffs.kappa1();
            r.alpha = power_harnack_alpha(p, coeffs.kappa1(), coeffs.kappa2());
            r.a = moment_exponent(r.alpha, coeffs.kappa1(), coeffs.kappa2());
            r.constant = power_harnack_exponent(coeffs, band, horizon, distance, p);
            r.alt_constant = power_harnack_lemma_exponent(coeffs, band, horizon, distance, p);
            const auto pf = two_grid_estimate(f.fine, f.coarse, y);
            const auto pfp = two_grid_estimate(f_p.fine, f_p.coarse, x);
            const double factor = std::exp(r.constant);
            r.lhs = std::pow(pf.value, p);
            r.rhs = pfp.value * factor;
            r.tolerance = std::abs(r.lhs - std::pow(pf.coarse, p)) + factor * pfp.tolerance;
            finish(r);
            out.push_back(r);
        }
    }
    return out;
}

namespace {

double max_central_gradient(const GridFunction& u) {
    double best = 0.0;
    const double dx = u.dx();
    for (std::size_t i = 1; i + 1 < u.size(); ++i) {
        best = std::max(best, std::abs(u.values[i + 1] - u.values[i - 1]) / (2.0 * dx));
    }
    return best;
}

}  // namespace

HarnackReport check_gradient_estimate(const ModelCoefficients& coeffs, const VolatilityBand& band,
                                      const Payoff& payoff, double horizon, const PdeConfig& cfg,
                                      const std::vector<double>& alpha_grid) {
    require_bounded(payoff);
    if (alpha_grid.empty()) throw std::invalid_argument("gradient check needs a nonempty alpha grid");
    auto r = blank(HarnackKind::gradient, std::numeric_limits<double>::quiet_NaN(),
                   std::numeric_limits<double>::quiet_NaN(), horizon);
    r.constant = std::numeric_limits<double>::infinity();
    for (double alpha : alpha_grid) {
        const auto schedule = schedule_for(alpha, coeffs, band, horizon);
        const double c = 2.0 / (coeffs.kappa1() * std::sqrt(alpha * schedule.lambda0()));
        if (c < r.constant) {
            r.constant = c;
            r.alpha = alpha;
        }
    }
    const auto u = solve_two_grid(coeffs, band, payoff, horizon, cfg);
    r.lhs = max_central_gradient(u.fine);
    r.rhs = payoff.sup_norm() * r.constant;
    r.tolerance = std::abs(r.lhs - max_central_gradient(u.coarse));
    finish(r);
    return r;
}

HarnackReport lipschitz_transport_check(const ModelCoefficients& coeffs, const VolatilityBand& band,
                                        const Payoff& payoff, double x, double y, double horizon,
                                        const PdeConfig& cfg, const std::vector<double>& alpha_grid) {
    return lipschitz_transport_grid(coeffs, band, payoff, {x}, {y}, horizon, cfg, alpha_grid).front();
}

std::vector<HarnackReport> lipschitz_transport_grid(const ModelCoefficients& coeffs, const VolatilityBand& band,
                                                    const Payoff& payoff, const std::vector<double>& xs,
                                                    const std::vector<double>& ys, double horizon,
                                                    const PdeConfig& cfg, const std::vector<double>& alpha_grid) {
    require_bounded(payoff);
    if (alpha_grid.empty()) throw std::invalid_argument("Lipschitz transport check needs a nonempty alpha grid");
    const double k1 = coeffs.kappa1();
    std::vector<double> lambda0;
    for (double alpha : alpha_grid) lambda0.push_back(schedule_for(alpha, coeffs, band, horizon).lambda0());
    const auto u = solve_two_grid(coeffs, band, payoff, horizon, cfg);
    std::vector<HarnackReport> out;
    for (double x : xs) {
        for (double y : ys) {
            auto r = blank(HarnackKind::lipschitz, x, y, horizon);
            const double distance = std::abs(x - y);
            r.constant = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < alpha_grid.size(); ++k) {
                const double alpha = alpha_grid[k];
                const double c = 2.0 * distance / (k1 * std::sqrt(alpha * lambda0[k])) +
                                 distance * distance / (alpha * k1 * k1 * lambda0[k]);
                if (c < r.constant) {
                    r.constant = c;
                    r.alpha = alpha;
                }
            }
            const auto at_x = two_grid_estimate(u.fine, u.coarse, x);
            const auto at_y = two_grid_estimate(u.fine, u.coarse, y);
            r.lhs = std::abs(at_y.value - at_x.value);
            r.rhs = payoff.sup_norm() * r.constant;
            r.tolerance = at_x.tolerance + at_y.tolerance;
            finish(r);
            out.push_back(r);
        }
    }
    return out;
}

void write_report_header(std::ostream& out) { out << "kind,x,y,T,p,lhs,rhs,slack,tolerance,pass\n"; }

void write_report_row(std::ostream& out, const HarnackReport& r) {
    out << to_string(r.kind) << ',' << format_double(r.x) << ',' << format_double(r.y) << ','
        << format_double(r.horizon) << ',' << format_double(r.p) << ',' << format_double(r.lhs) << ','
        << format_double(r.rhs) << ',' << format_double(r.slack) << ',' << format_double(r.tolerance) << ','
        << (r.pass ? "true" : "false") << '\n';
}

}  // namespace glab
