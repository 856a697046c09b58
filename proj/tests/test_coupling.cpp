#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "glab/coupling.hpp"
#include "oracles.hpp"

using namespace glab;

namespace {

// Lipschitz constant 1 with sigma in [0.9, 1]; matches the worked examples.
ModelCoefficients example_model() {
    return {Expression::affine(-0.5, 0.0), Expression::constant(0.0), Expression::tanh(0.95, 0.05), 1.0, 0.9, 1.0};
}

ModelCoefficients model4() {
    return {Expression::affine(-1, 0), Expression::sine(0, 0.05), Expression::tanh(0.95, 0.05), 1.1, 0.9, 1.0};
}

ModelCoefficients ou() {
    return {Expression::affine(-1, 0), Expression::constant(0), Expression::constant(1), 1.0, 1.0, 1.0};
}

std::vector<ScenarioControl> open_loop(ControlStrategy s, const VolatilityBand& band, const TimeGrid& grid, int n) {
    std::vector<ScenarioControl> out;
    for (auto& c : sample_controls(s, band, grid, n, 3)) out.push_back(std::get<ScenarioControl>(c));
    return out;
}

}  // namespace

TEST_CASE("coupling schedule") {
    const VolatilityBand unit(1.0, 1.0);
    const auto s = make_schedule(0.81, example_model(), unit, 1.0);
    CHECK(s.rate_constant() == doctest::Approx(5.0));
    CHECK(s.alpha_max() == doctest::Approx(1.62));
    CHECK(s.lambda0() == doctest::Approx(oracle::lambda0(1.0, 1.0, 0.9, 1.0, 0.81, 1.0)).epsilon(1e-13));
    CHECK(s.lambda0() == doctest::Approx(0.160908452586).epsilon(1e-11));
    CHECK(s.lambda(1.0) == 0.0);

    const VolatilityBand band(0.9, 1.1);
    for (double alpha : {0.05, 0.81, 1.5}) {
        const auto sch = make_schedule(alpha, model4(), band, 2.0);
        double previous = sch.lambda0();
        for (int i = 1; i <= 1000; ++i) {
            const double t = 2.0 * i / 1000.0;
            const double lam = sch.lambda(t);
            if (i < 1000) CHECK(lam > 0.0);
            CHECK(lam < previous);
            previous = lam;
            CHECK(std::abs(sch.identity_residual(t)) <= 1e-8);
            if (i < 1000) {
                const double h = 1e-6 * 2.0;
                const double fd = (sch.lambda(t + h) - sch.lambda(t - h)) / (2.0 * h);
                CHECK(fd == doctest::Approx(sch.lambda_derivative(t)).epsilon(1e-6));
            }
        }
    }

    SUBCASE("limit form") {
        const ModelCoefficients bm = ModelCoefficients::g_brownian();
        const auto lim = make_schedule(1.0, bm, band, 1.0, ScheduleForm::limit);
        CHECK(lim.lambda0() == doctest::Approx(1.0 * 0.81));
        CHECK(std::abs(lim.identity_residual(0.3)) <= 1e-14);
        const ModelCoefficients tiny{Expression::constant(0), Expression::constant(0), Expression::constant(1), 1e-9,
                                     1.0, 1.0};
        const auto near = make_schedule(1.0, tiny, band, 1.0);
        CHECK(near.lambda0() == doctest::Approx(lim.lambda0()).epsilon(1e-6));
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(make_schedule(0.5, ModelCoefficients::g_brownian(), band, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(make_schedule(0.0, model4(), band, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(make_schedule(1.62, model4(), band, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(make_schedule(-1.0, model4(), band, 1.0), std::invalid_argument);
    }
}

TEST_CASE("entropy and moment bounds") {
    const VolatilityBand unit(1.0, 1.0);
    const auto s = make_schedule(0.81, example_model(), unit, 1.0);
    const double lam = oracle::lambda0(1.0, 1.0, 0.9, 1.0, 0.81, 1.0);
    CHECK(entropy_bound(s, 0.9, 0.5) == doctest::Approx(0.25 / (2.0 * 0.81 * 0.81 * lam)).epsilon(1e-13));
    CHECK(entropy_bound(s, 0.9, 0.5) == doctest::Approx(1.184025667).epsilon(1e-9));
    CHECK(entropy_bound(s, 0.9, 1.0) == doctest::Approx(4.0 * entropy_bound(s, 0.9, 0.5)).epsilon(1e-14));
    CHECK(entropy_bound(s, 0.9, -0.5) == entropy_bound(s, 0.9, 0.5));

    CHECK(moment_exponent(0.81, 0.9, 1.0) == doctest::Approx(0.81 * 0.81 * 0.81 / (0.04 + 4 * 0.81 * 0.09)));
    CHECK(moment_exponent(0.81, 0.9, 1.0) == doctest::Approx(1.602656815).epsilon(1e-9));
    CHECK_THROWS_AS(moment_exponent(0.81, 1.0, 1.0), std::invalid_argument);

    const double d = 0.1;
    const double direct = std::exp(0.81 * (0.81 * 0.9 + 2 * d) * 0.25 / (4 * d * d * (2 * 0.81 * 0.9 + 2 * d) * lam));
    CHECK(moment_bound(s, 0.9, 1.0, 0.5) == doctest::Approx(direct).epsilon(1e-12));
    double previous = 1.0;
    for (double dist : {0.1, 0.2, 0.4, 0.8}) {
        const double b = moment_bound(s, 0.9, 1.0, dist);
        CHECK(b > previous);
        previous = b;
    }
    CHECK(moment_bound(s, 0.9, 1.0, 0.0) == 1.0);
}

TEST_CASE("coupled paths") {
    const VolatilityBand band(0.9, 1.1);
    const TimeGrid grid(1.0, 200);
    const auto coeffs = model4();
    const auto s = make_schedule(0.81, coeffs, band, 1.0);
    const auto controls = open_loop(ControlStrategy::bang_bang, band, grid, 3);
    CouplingOptions options;

    SUBCASE("identical starts never move the density") {
        for (std::uint64_t path = 0; path < 20; ++path) {
            const auto b = simulate_coupled(coeffs, s, 0.3, 0.3, controls[1], 5, path, options);
            for (double g : b.g_path) CHECK(g == 0.0);
            for (double m : b.m_path) CHECK(m == 1.0);
            CHECK(b.x_path == b.y_path);
            const auto qv = girsanov_shifted_qv_check(b);
            CHECK(qv.discrepancy == 0.0);
            CHECK(qv.pass);
        }
        const auto e = entropy_bound_check(coeffs, s, 0.3, 0.3, controls, 200, 5, options);
        CHECK(e.estimate == 0.0);
        CHECK(e.bound == 0.0);
        CHECK(e.pass);
    }
    SUBCASE("clip node and drift bound") {
        for (std::uint64_t path = 0; path < 50; ++path) {
            const auto b = simulate_coupled(coeffs, s, -0.25, 0.5, controls[path % 3], 8, path, options);
            CHECK(b.clip_index == grid.last_node_at_or_before(1.0 - options.clip_epsilon));
            CHECK(b.m_path[0] == 1.0);
            for (int j = 0; j < b.clip_index; ++j) {
                const double bound = std::abs(b.x_path[j] - b.y_path[j]) / (s.lambda(grid.node(j)) * 0.9);
                REQUIRE(std::abs(b.g_path[j]) <= bound * (1.0 + 1e-12));
            }
            for (int j = b.clip_index; j < grid.n_steps(); ++j) CHECK(b.g_path[j] == 0.0);
            for (std::size_t j = 0; j < b.m_path.size(); ++j) {
                CHECK(b.m_path[j] == doctest::Approx(std::exp(b.log_m_path[j])));
            }
            CHECK(girsanov_shifted_qv_check(b).pass);
        }
    }
    SUBCASE("shifted quadratic variation converges with the step") {
        auto mean_discrepancy = [&](int n_steps) {
            const TimeGrid g(1.0, n_steps);
            const auto c = ScenarioControl::constant(g, 1.1, band);
            double total = 0.0;
            for (std::uint64_t path = 0; path < 200; ++path) {
                total += girsanov_shifted_qv_check(simulate_coupled(coeffs, s, 0.0, 0.5, c, 2, path, options)).discrepancy;
            }
            return total / 200.0;
        };
        const double coarse = mean_discrepancy(100);
        const double fine = mean_discrepancy(400);
        CHECK(fine < 0.6 * coarse);
    }
    SUBCASE("bridge refinement near the horizon") {
        CouplingOptions tight;
        tight.clip_epsilon = 1e-3;
        tight.stiffness_limit = 0.05;
        const TimeGrid g(1.0, 50);
        const auto c = ScenarioControl::constant(g, 1.0, band);
        const auto b = simulate_coupled(coeffs, s, -1.0, 1.0, c, 3, 0, tight);
        CHECK(b.max_halving_depth > 0);
        CHECK(std::isfinite(b.log_m_path[b.clip_index]));
    }
}

TEST_CASE("ensemble checks") {
    const VolatilityBand band(0.9, 1.1);
    const TimeGrid grid(1.0, 200);
    const auto coeffs = model4();
    const auto s = make_schedule(0.81, coeffs, band, 1.0);
    const auto controls = open_loop(ControlStrategy::constants, band, grid, 3);
    CouplingOptions options;

    const auto e = entropy_bound_check(coeffs, s, 0.0, 0.5, controls, 400, 11, options);
    CHECK(e.pass);
    CHECK(e.estimate > 0.0);
    CHECK(e.bound == doctest::Approx(entropy_bound(s, 0.9, 0.5)));
    CHECK(e.n_paths == 400);
    CHECK(e.n_controls == 3);
    CHECK(e.observation_time == doctest::Approx(0.99));

    const auto threaded = entropy_bound_check(coeffs, s, 0.0, 0.5, controls, 400, 11, options, 3);
    CHECK(threaded.estimate == e.estimate);
    CHECK(threaded.std_error == e.std_error);

    const auto m = moment_bound_check(coeffs, s, 0.0, 0.5, controls, 400, 11, options);
    CHECK(m.pass);
    CHECK(m.exponent == doctest::Approx(1.602656815));
    CHECK(m.estimate >= 1.0 - 3.0 * m.std_error);

    const auto dm = density_mean_check(coeffs, s, 0.0, 0.5, controls, 2000, 11, options, {0.25, 0.5, 0.75, 0.99});
    CHECK(dm.pass);
    REQUIRE(dm.means.size() == 3);
    for (const auto& row : dm.means) CHECK(row.size() == 4);

    const ModelCoefficients flat{Expression::affine(-1, 0), Expression::constant(0), Expression::constant(1), 1.0,
                                 1.0, 1.0};
    const auto fs = make_schedule(1.0, flat, band, 1.0);
    CHECK_THROWS_AS(moment_bound_check(flat, fs, 0.0, 0.5, controls, 200, 1, options), std::invalid_argument);
    CHECK_THROWS_AS(entropy_bound_check(coeffs, s, 0.0, 0.5, {}, 200, 1, options), std::invalid_argument);
}

TEST_CASE("coupling success on an Ornstein-Uhlenbeck pair") {
    const VolatilityBand unit(1.0, 1.0);
    const TimeGrid grid(1.0, 400);
    const auto s = make_schedule(1.0, ou(), unit, 1.0);
    const auto controls = open_loop(ControlStrategy::constants, unit, grid, 1);
    const auto r = coupling_success_check(ou(), s, 0.0, 0.5, controls, 2000, 4, {0.2, 0.1, 0.05});
    REQUIRE(r.sweep.size() == 3);
    CHECK(r.sweep[0].median_gap > r.sweep[1].median_gap);
    CHECK(r.sweep[1].median_gap > r.sweep[2].median_gap);
    CHECK(r.sweep[0].lambda > r.sweep[2].lambda);
    CHECK(r.pass());
    CHECK_THROWS_AS(coupling_success_check(ou(), s, 0.0, 0.5, controls, 200, 4, {0.1}), std::invalid_argument);
    CHECK_THROWS_AS(coupling_success_check(ou(), s, 0.0, 0.5, controls, 200, 4, {0.1, 0.2}), std::invalid_argument);
}

TEST_CASE("bundle rows") {
    const VolatilityBand unit(1.0, 1.0);
    const TimeGrid grid(1.0, 10);
    const auto s = make_schedule(1.0, ou(), unit, 1.0);
    const auto b = simulate_coupled(ou(), s, 0.0, 0.0, ScenarioControl::constant(grid, 1.0, unit), 1, 0, {});
    std::ostringstream out;
    write_bundle_header(out);
    write_bundle_row(out, 2, 7, b);
    const std::string text = out.str();
    CHECK(text.rfind("control_id,path_id,clip_time,x,y,abs_gap,m,log_m\n", 0) == 0);
    CHECK(text.find("\n2,7,0.9,") != std::string::npos);
}
