#include <doctest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "glab/harnack.hpp"
#include "oracles.hpp"

using namespace glab;

namespace {

ModelCoefficients example_model() {
    return {Expression::affine(-0.5, 0.0), Expression::constant(0.0), Expression::tanh(0.95, 0.05), 1.0, 0.9, 1.0};
}

ModelCoefficients model4() {
    return {Expression::affine(-1, 0), Expression::sine(0, 0.05), Expression::tanh(0.95, 0.05), 1.1, 0.9, 1.0};
}

ModelCoefficients ou() {
    return {Expression::affine(-1, 0), Expression::constant(0), Expression::constant(1), 1.0, 1.0, 1.0};
}

PdeConfig default_grid() { return {}; }

Payoff payoff(const Expression& e) { return make_payoff(e, {-8.0, 8.0}); }

}  // namespace

TEST_CASE("Harnack constants") {
    const VolatilityBand unit(1.0, 1.0);
    CHECK(power_harnack_threshold(0.9, 1.0) == doctest::Approx(1.293165187).epsilon(1e-9));
    CHECK(power_harnack_threshold(0.9, 1.0) == doctest::Approx(std::pow(1.0 + 0.1 / 0.729, 2)).epsilon(1e-15));
    CHECK(power_harnack_threshold(1.0, 1.0) == 1.0);

    CHECK(rate_over_decay(1.0, 1.0, 1.0) == doctest::Approx(5.0 / (1.0 - std::exp(-5.0))));
    CHECK(rate_over_decay(0.0, 0.8, 2.0) == doctest::Approx(1.0 / (0.64 * 2.0)));
    CHECK(rate_over_decay(1e-9, 0.8, 2.0) == doctest::Approx(1.0 / (0.64 * 2.0)).epsilon(1e-6));

    const auto m = example_model();
    const double k16 = std::pow(0.9, 6) / std::pow(1.0, 4);
    CHECK(log_harnack_constant(m, unit, 1.0, 0.5) ==
          doctest::Approx(5.0 * 0.25 / (2.0 * k16 * (1.0 - std::exp(-5.0)))).epsilon(1e-13));
    // at the printed alpha both forms agree
    CHECK(log_harnack_constant(m, unit, 1.0, 0.5, 0.81) ==
          doctest::Approx(log_harnack_constant(m, unit, 1.0, 0.5)).epsilon(1e-12));

    const auto s = schedule_for(0.81, m, unit, 1.0);
    CHECK(2.0 / (0.9 * std::sqrt(0.81 * s.lambda0())) == doctest::Approx(6.155389617).epsilon(1e-9));

    for (double p : {1.5, 2.0, 4.0}) {
        const double alpha = power_harnack_alpha(p, 0.9, 1.0);
        CHECK(alpha == doctest::Approx(0.2 / (0.9 * (std::sqrt(p) - 1.0))));
        CHECK(moment_exponent(alpha, 0.9, 1.0) == doctest::Approx(1.0 / (p - 1.0)).epsilon(1e-12));
        const double rp = std::sqrt(p);
        const double expected = rp * (rp - 1.0) * rate_over_decay(1.0, 1.0, 1.0) * 0.25 /
                                (4.0 * 0.1 * (0.9 * (rp - 1.0) - 0.1));
        CHECK(power_harnack_exponent(m, unit, 1.0, 0.5, p) == doctest::Approx(expected).epsilon(1e-12));
        if (alpha < alpha_upper_limit(0.9, 1.0)) {
            const auto sp = schedule_for(alpha, m, unit, 1.0);
            CHECK(power_harnack_lemma_exponent(m, unit, 1.0, 0.5, p) ==
                  doctest::Approx((p - 1.0) * std::log(moment_bound(sp, 0.9, 1.0, 0.5))).epsilon(1e-12));
        }
    }

    const auto grid = default_alpha_grid(0.9, 1.0);
    REQUIRE(grid.size() == 33);
    CHECK(grid.front() == doctest::Approx(0.01 * 1.62));
    CHECK(grid.back() == doctest::Approx(0.99 * 1.62));
    CHECK(grid[16] == doctest::Approx(0.81));
}

TEST_CASE("log-Harnack") {
    const VolatilityBand band(0.9, 1.1);
    const auto cfg = default_grid();
    const auto f = payoff(Expression::bump(0.1, 1.0, 0.0, 1.0));

    SUBCASE("x = y leaves Jensen's gap") {
        for (double x : {-1.0, 0.0, 0.5}) {
            const auto r = check_log_harnack(model4(), band, f, x, x, 1.0, cfg);
            CHECK(r.constant == 0.0);
            CHECK(r.slack >= 0.0);
            CHECK(r.pass);
        }
    }
    SUBCASE("constant payoff gives slack equal to the penalty") {
        const auto r = check_log_harnack(model4(), band, payoff(Expression::constant(2.0)), 0.0, 0.5, 1.0, cfg);
        CHECK(r.lhs == doctest::Approx(std::log(2.0)).epsilon(1e-13));
        CHECK(r.slack == doctest::Approx(r.constant).epsilon(1e-12));
    }
    SUBCASE("Ornstein-Uhlenbeck against closed-form expectations") {
        const VolatilityBand unit(1.0, 1.0);
        auto g = [](double x) { return 0.1 + std::exp(-x * x); };
        const auto r = check_log_harnack(ou(), unit, f, 0.0, 0.5, 1.0, cfg);
        const double lhs = oracle::ou_expectation([&](double x) { return std::log(g(x)); }, 0.5, 1.0);
        const double pf = oracle::ou_expectation(g, 0.0, 1.0);
        const double penalty = 5.0 * 0.25 / (2.0 * (1.0 - std::exp(-5.0)));
        CHECK(r.constant == doctest::Approx(penalty).epsilon(1e-13));
        CHECK(std::abs(r.lhs - lhs) <= 1.5 * r.tolerance + 1e-6);
        CHECK(std::abs(r.rhs - (std::log(pf) + penalty)) <= 1.5 * r.tolerance + 1e-6);
        CHECK(r.pass);
    }
    SUBCASE("grid variant matches single checks") {
        const auto all = check_log_harnack_grid(model4(), band, f, {-0.5, 0.5}, {0.0, 0.25}, 1.0, cfg);
        REQUIRE(all.size() == 4);
        const auto one = check_log_harnack(model4(), band, f, 0.5, 0.25, 1.0, cfg);
        CHECK(all[3].lhs == one.lhs);
        CHECK(all[3].rhs == one.rhs);
        for (const auto& r : all) CHECK(r.pass);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(check_log_harnack(ModelCoefficients::g_brownian(), band, f, 0, 0.5, 1.0, cfg),
                        std::invalid_argument);
        CHECK_THROWS_AS(check_log_harnack(model4(), band, payoff(Expression::sine(0, 1)), 0, 0.5, 1.0, cfg),
                        std::invalid_argument);
    }
}

TEST_CASE("power-Harnack") {
    const VolatilityBand band(0.9, 1.1);
    const auto cfg = default_grid();
    const auto f = payoff(Expression::bump(0.1, 1.0, 0.0, 1.0));
    for (double p : {4.0, 2.0, 1.5}) {
        const auto r = check_power_harnack(model4(), band, f, 0.0, 0.5, 1.0, p, cfg);
        CHECK(r.pass);
        CHECK(r.q == doctest::Approx(p / (p - 1.0)));
        CHECK(r.a == doctest::Approx(1.0 / (p - 1.0)));
        CHECK(r.C == doctest::Approx(0.1));
    }
    // the exponent is not monotone in p overall, but blows up at the threshold
    double previous_rhs = 0.0;
    double previous_constant = 0.0;
    for (double p : {1.6, 1.5, 1.4, 1.3}) {
        const auto r = check_power_harnack(model4(), band, f, 0.0, 0.5, 1.0, p, cfg);
        CHECK(r.rhs > previous_rhs);
        CHECK(r.constant > previous_constant);
        previous_rhs = r.rhs;
        previous_constant = r.constant;
    }
    const auto same = check_power_harnack(model4(), band, f, 0.3, 0.3, 1.0, 2.0, cfg);
    CHECK(same.constant == 0.0);
    CHECK(same.slack >= 0.0);

    CHECK_THROWS_AS(check_power_harnack(model4(), band, f, 0.0, 0.5, 1.0, 1.2, cfg), std::invalid_argument);
    CHECK_THROWS_AS(check_power_harnack(model4(), band, f, 0.0, 0.5, 1.0, power_harnack_threshold(0.9, 1.0), cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(check_power_harnack(ou(), VolatilityBand(1, 1), f, 0.0, 0.5, 1.0, 2.0, cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(check_power_harnack(model4(), band, payoff(Expression::sine(0, 1)), 0.0, 0.5, 1.0, 2.0, cfg),
                    std::invalid_argument);
    CHECK(check_power_harnack_grid(model4(), band, f, {0.0, 1.0}, {0.5}, 1.0, 2.0, cfg).size() == 2);
}

TEST_CASE("gradient estimate") {
    const auto alphas_unit = default_alpha_grid(1.0, 1.0);
    const auto cfg = default_grid();
    SUBCASE("constant payoff has no gradient") {
        const auto r = check_gradient_estimate(model4(), VolatilityBand(0.9, 1.1), payoff(Expression::constant(0.7)),
                                               1.0, cfg, default_alpha_grid(0.9, 1.0));
        CHECK(r.lhs == 0.0);
        CHECK(r.pass);
    }
    SUBCASE("classical heat kernel") {
        const VolatilityBand unit(1.0, 1.0);
        for (double w : {0.5, 1.0, 4.0}) {
            const double T = 1.0;
            const auto r = check_gradient_estimate(ModelCoefficients::g_brownian(), unit,
                                                   payoff(Expression::bump(0.0, 1.0, 0.0, w)), T, cfg, alphas_unit);
            const double exact = std::sqrt(w / (w + 2 * T)) * std::sqrt(2.0 / (w + 2 * T)) * std::exp(-0.5);
            CHECK(std::abs(r.lhs - exact) <= r.tolerance + 1e-4);
            CHECK(r.pass);
            // limit schedule: lambda_0 = (2 - alpha) T, minimised over the grid
            double best = 1e300;
            for (double a : alphas_unit) best = std::min(best, 2.0 / std::sqrt(a * (2.0 - a) * T));
            CHECK(r.rhs == doctest::Approx(best));
        }
    }
    SUBCASE("worked example constant is on the grid") {
        const VolatilityBand unit(1.0, 1.0);
        const auto r = check_gradient_estimate(example_model(), unit, payoff(Expression::bump(0.0, 1.0)), 1.0, cfg,
                                               default_alpha_grid(0.9, 1.0));
        CHECK(r.constant <= 6.155389617 + 1e-9);
        CHECK(r.pass);
    }
    SUBCASE("resolution") {
        const VolatilityBand band(0.9, 1.1);
        const auto f = payoff(Expression::bump(0.1, 1.0, 0.0, 1.0));
        PdeConfig fine = cfg;
        fine.n_space = 2 * cfg.n_space - 1;
        const auto a = check_gradient_estimate(model4(), band, f, 1.0, cfg, default_alpha_grid(0.9, 1.0));
        const auto b = check_gradient_estimate(model4(), band, f, 1.0, fine, default_alpha_grid(0.9, 1.0));
        CHECK(std::abs(a.lhs - b.lhs) <= a.tolerance);
    }
}

TEST_CASE("Lipschitz transport") {
    const auto cfg = default_grid();
    const VolatilityBand unit(1.0, 1.0);
    const auto alphas = default_alpha_grid(1.0, 1.0);
    const auto f = payoff(Expression::bump(0.1, 1.0, 0.0, 1.0));
    const auto ab = lipschitz_transport_check(model4(), VolatilityBand(0.9, 1.1), f, -0.3, 0.6, 1.0, cfg,
                                              default_alpha_grid(0.9, 1.0));
    const auto ba = lipschitz_transport_check(model4(), VolatilityBand(0.9, 1.1), f, 0.6, -0.3, 1.0, cfg,
                                              default_alpha_grid(0.9, 1.0));
    CHECK(ab.lhs == ba.lhs);
    CHECK(ab.rhs == ba.rhs);
    auto g = [](double x) { return 0.1 + std::exp(-x * x); };
    for (double d : {0.1, 0.5, 1.0}) {
        const auto r = lipschitz_transport_check(ou(), unit, f, 0.0, d, 1.0, cfg, alphas);
        const double exact = std::abs(oracle::ou_expectation(g, d, 1.0) - oracle::ou_expectation(g, 0.0, 1.0));
        CHECK(std::abs(r.lhs - exact) <= 1.5 * r.tolerance + 1e-6);
        CHECK(r.pass);
        CHECK(r.slack > 0.0);
    }
}

TEST_CASE("report rows") {
    std::ostringstream out;
    write_report_header(out);
    HarnackReport r;
    r.kind = HarnackKind::power;
    r.x = 0;
    r.y = 0.5;
    r.horizon = 1;
    r.p = 2;
    r.lhs = 0.25;
    r.rhs = 0.5;
    r.slack = 0.25;
    r.tolerance = 0.001;
    r.pass = true;
    write_report_row(out, r);
    CHECK(out.str() == "kind,x,y,T,p,lhs,rhs,slack,tolerance,pass\npower,0,0.5,1,2,0.25,0.5,0.25,0.001,true\n");
    CHECK(to_string(HarnackKind::lipschitz) == "lipschitz");
    CHECK(to_string(CheckMethod::mc) == "mc");
}
