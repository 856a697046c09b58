#include "run.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "config.hpp"
#include "glab/coupling.hpp"
#include "glab/gheat.hpp"
#include "glab/harnack.hpp"
#include "glab/io.hpp"
#include "glab/rng.hpp"
#include "glab/scenario.hpp"

namespace glab::cli {

namespace {

using json = nlohmann::ordered_json;

constexpr int kPathsPerControlInCsv = 32;

struct Outputs {
    json reports = json::array();
    std::ostringstream estimates;
    std::ostringstream paths;
    std::string grid_u;
    bool violation = false;

    Outputs() { write_estimates_header(estimates); }

    void add(json report) {
        if (!report.at("pass").get<bool>()) violation = true;
        reports.push_back(std::move(report));
    }
};

struct Context {
    const RunConfig& config;
    unsigned threads;
    Outputs& out;
    std::ostream& log;

    Interval domain() const { return {config.pde.x_min, config.pde.x_max}; }
    Payoff payoff() const { return make_payoff(config.payoff, domain()); }
};

json to_json(const HarnackReport& r) {
    return {{"kind", to_string(r.kind)},
            {"method", to_string(r.method)},
            {"x", r.x},
            {"y", r.y},
            {"T", r.horizon},
            {"p", r.p},
            {"a", r.a},
            {"q", r.q},
            {"C", r.C},
            {"alpha", r.alpha},
            {"constant", r.constant},
            {"alt_constant", r.alt_constant},
            {"lhs", r.lhs},
            {"rhs", r.rhs},
            {"slack", r.slack},
            {"tolerance", r.tolerance},
            {"pass", r.pass}};
}

json to_json(const char* kind, const SlackReport& r) {
    return {{"kind", kind},
            {"method", "mc"},
            {"estimate", r.estimate},
            {"std_error", r.std_error},
            {"bound", r.bound},
            {"slack", r.slack},
            {"exponent", r.exponent},
            {"observation_time", r.observation_time},
            {"best_control_id", r.best_control_id},
            {"n_paths", r.n_paths},
            {"n_controls", r.n_controls},
            {"excluded_stiff", r.excluded_stiff},
            {"pass", r.pass}};
}

std::string render(const GridFunction& u) {
    std::ostringstream s;
    write_csv(u, s);
    return s.str();
}

void run_gheat(Context& ctx) {
    const auto& c = ctx.config;
    const auto band = c.band();
    const auto payoff = ctx.payoff();
    const auto fine = solve_g_heat(payoff, band, c.horizon, c.pde).u0;
    const auto coarse = solve_g_heat(payoff, band, c.horizon, c.pde.coarsened()).u0;
    ctx.out.grid_u = render(fine);
    for (double x : c.xs) write_estimate_row(ctx.out.estimates, "gheat", x, two_grid_estimate(fine, coarse, x));

    // E[B_T^2] = upper^2 T and -E[-B_T^2] = lower^2 T.
    for (const bool upper : {true, false}) {
        const double sign = upper ? 1.0 : -1.0;
        const auto square = make_payoff(Expression::quadratic(sign), ctx.domain());
        const double value = sign * solve_g_heat(square, band, c.horizon, c.pde).u0.at(0.0) / c.horizon;
        const double level = upper ? c.sigma_upper : c.sigma_lower;
        const double expected = level * level;
        const double rel = std::abs(value - expected) / expected;
        ctx.out.add({{"kind", "g_variance"},
                     {"method", "pde"},
                     {"side", upper ? "upper" : "lower"},
                     {"value", value},
                     {"expected", expected},
                     {"relative_error", rel},
                     {"tolerance", 0.01},
                     {"pass", rel <= 0.01}});
    }
}

void run_semigroup(Context& ctx) {
    const auto& c = ctx.config;
    const auto coeffs = c.coefficients();
    const auto payoff = ctx.payoff();
    const auto fine = solve_g_hjb(coeffs, c.band(), payoff, c.horizon, c.pde);
    const auto coarse = solve_g_hjb(coeffs, c.band(), payoff, c.horizon, c.pde.coarsened()).u0;
    ctx.out.grid_u = render(fine.u0);
    for (double x : c.xs) write_estimate_row(ctx.out.estimates, "semigroup", x, two_grid_estimate(fine.u0, coarse, x));
    ctx.out.add({{"kind", "comparison"},
                 {"method", "pde"},
                 {"lower", payoff.lower_bound},
                 {"upper", payoff.upper_bound},
                 {"excess", fine.comparison_excess},
                 {"dt", fine.dt},
                 {"n_time_steps", fine.n_time_steps},
                 {"pass", fine.comparison_ok}});
}

// Random finite-scenario tables with g1 > 0 normalized under every scenario.
YoungSlack young_trial(const NormalSource& rng, std::uint64_t trial) {
    std::uint32_t draw = 0;
    auto uniform = [&] { return rng.uniform({trial, draw++, 7}); };
    auto normal = [&] { return rng({trial, draw++, 7}); };
    const int n_scenarios = 1 + static_cast<int>(uniform() * 4.0);
    const int n_outcomes = 2 + static_cast<int>(uniform() * 19.0);
    ScenarioTable g1;
    ScenarioTable g2;
    for (int k = 0; k < n_scenarios; ++k) {
        std::vector<double> w(static_cast<std::size_t>(n_outcomes));
        std::vector<double> a(w.size());
        std::vector<double> b(w.size());
        double w_sum = 0.0;
        for (auto& v : w) w_sum += (v = 0.05 + uniform());
        for (auto& v : w) v /= w_sum;
        double mass = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = std::exp(normal());
            mass += w[i] * a[i];
        }
        for (auto& v : a) v /= mass;
        for (auto& v : b) v = 2.0 * normal();
        g1.values.push_back(std::move(a));
        g1.weights.push_back(std::move(w));
        g2.values.push_back(std::move(b));
    }
    g2.weights = g1.weights;
    return young_check(g1, g2);
}

void run_scenario(Context& ctx) {
    const auto& c = ctx.config;
    const auto band = c.band();
    const auto grid = c.grid();
    const auto payoff = ctx.payoff();
    const auto pde = two_grid_estimate(solve_g_heat(payoff, band, c.horizon, c.pde).u0,
                                       solve_g_heat(payoff, band, c.horizon, c.pde.coarsened()).u0, 0.0);
    const auto feedback = FeedbackControl::from_pde(ModelCoefficients::g_brownian(), band, payoff, grid, c.pde);
    const auto controls = sample_controls(ControlStrategy::feedback, band, grid, c.n_controls, c.seed, &feedback);
    const auto mc = upper_expectation_mc([&](const GBMPath& p) { return payoff(p.terminal()); }, controls, c.n_paths,
                                         c.seed, ctx.threads);
    write_estimate_row(ctx.out.estimates, "upper_expectation", 0.0, mc);
    write_estimate_row(ctx.out.estimates, "upper_expectation", 0.0, pde);

    const double band_width = 3.0 * mc.std_error + pde.tolerance;
    const bool two_sided = payoff.convex || payoff.concave;
    const bool pass = mc.value <= pde.value + band_width && (!two_sided || mc.value >= pde.value - band_width);
    ctx.out.add({{"kind", "oracle"},
                 {"method", "mc"},
                 {"payoff", payoff.name},
                 {"mc", mc.value},
                 {"std_error", mc.std_error},
                 {"pde", pde.value},
                 {"pde_tolerance", pde.tolerance},
                 {"two_sided", two_sided},
                 {"best_control_id", mc.best_control_id},
                 {"n_paths", mc.n_paths},
                 {"n_controls", mc.n_controls},
                 {"pass", pass}});

    const NormalSource rng(c.seed);
    double min_slack = std::numeric_limits<double>::infinity();
    for (int t = 0; t < c.young_trials; ++t) {
        min_slack = std::min(min_slack, young_trial(rng, static_cast<std::uint64_t>(t)).slack);
    }
    ctx.out.add({{"kind", "young"},
                 {"method", "exact"},
                 {"trials", c.young_trials},
                 {"min_slack", min_slack},
                 {"tolerance", 1e-12},
                 {"pass", min_slack >= -1e-12}});
}

void run_coupling(Context& ctx) {
    const auto& c = ctx.config;
    const auto coeffs = c.coefficients();
    const auto band = c.band();
    const auto grid = c.grid();
    const auto schedule = schedule_for(c.resolved_alpha(), coeffs, band, c.horizon);
    std::vector<ScenarioControl> controls;
    for (auto& p : sample_controls(c.strategy, band, grid, c.n_controls, c.seed)) {
        controls.push_back(std::get<ScenarioControl>(p));
    }
    CouplingOptions options;
    options.clip_epsilon = c.clip_epsilon;

    const auto entropy =
        entropy_bound_check(coeffs, schedule, c.x0, c.y0, controls, c.n_paths, c.seed, options, ctx.threads);
    ctx.out.add(to_json("entropy", entropy));
    if (c.kappa2 > c.kappa1) {
        const auto moment =
            moment_bound_check(coeffs, schedule, c.x0, c.y0, controls, c.n_paths, c.seed, options, ctx.threads);
        ctx.out.add(to_json("moment", moment));
    }

    std::vector<double> epsilons;
    for (double e : c.clip_sweep) epsilons.push_back(e * c.horizon);
    const auto success =
        coupling_success_check(coeffs, schedule, c.x0, c.y0, controls, c.n_paths, c.seed, epsilons, ctx.threads);
    json sweep = json::array();
    for (const auto& s : success.sweep) {
        sweep.push_back({{"epsilon", s.epsilon},
                         {"clip_time", s.clip_time},
                         {"lambda", s.lambda},
                         {"weighted_mean_gap", s.weighted_mean_gap},
                         {"std_error", s.weighted_std_error},
                         {"median_gap", s.median_gap}});
    }
    ctx.out.add({{"kind", "coupling_success"},
                 {"method", "mc"},
                 {"fitted_constant", success.fitted_constant},
                 {"strictly_decreasing", success.strictly_decreasing},
                 {"bounded", success.bounded},
                 {"excluded_stiff", success.excluded_stiff},
                 {"sweep", sweep},
                 {"pass", success.pass()}});

    const std::vector<double> times{0.25 * c.horizon, 0.5 * c.horizon, 0.75 * c.horizon, c.horizon - c.clip_epsilon};
    const auto density =
        density_mean_check(coeffs, schedule, c.x0, c.y0, controls, c.n_paths, c.seed, options, times, ctx.threads);
    ctx.out.add({{"kind", "density_mean"},
                 {"method", "mc"},
                 {"times", density.times},
                 {"means", density.means},
                 {"std_errors", density.std_errors},
                 {"pass", density.pass}});

    write_bundle_header(ctx.out.paths);
    double worst_ratio = 0.0;
    bool qv_pass = true;
    const int shown = std::min(c.n_paths, kPathsPerControlInCsv);
    for (std::size_t k = 0; k < controls.size(); ++k) {
        for (int p = 0; p < shown; ++p) {
            const auto bundle = simulate_coupled(coeffs, schedule, c.x0, c.y0, controls[k], c.seed,
                                                 static_cast<std::uint64_t>(p), options);
            write_bundle_row(ctx.out.paths, static_cast<int>(k), static_cast<std::uint64_t>(p), bundle);
            const auto qv = girsanov_shifted_qv_check(bundle);
            worst_ratio = std::max(worst_ratio, qv.discrepancy / qv.tolerance);
            qv_pass = qv_pass && qv.pass;
        }
    }
    ctx.out.add({{"kind", "shifted_qv"},
                 {"method", "mc"},
                 {"n_bundles", shown * static_cast<int>(controls.size())},
                 {"worst_discrepancy_over_tolerance", worst_ratio},
                 {"pass", qv_pass}});
    EstimateWithError e;
    e.value = entropy.estimate;
    e.std_error = entropy.std_error;
    e.n_paths = entropy.n_paths;
    e.n_controls = entropy.n_controls;
    e.best_control_id = entropy.best_control_id;
    write_estimate_row(ctx.out.estimates, "entropy_sup_mean", c.x0, e);
}

void run_harnack(Context& ctx) {
    const auto& c = ctx.config;
    const auto coeffs = c.coefficients();
    const auto band = c.band();
    const auto payoff = ctx.payoff();
    for (const auto& r : check_log_harnack_grid(coeffs, band, payoff, c.xs, c.ys, c.horizon, c.pde)) {
        ctx.out.add(to_json(r));
    }
    for (double p : c.ps) {
        for (const auto& r : check_power_harnack_grid(coeffs, band, payoff, c.xs, c.ys, c.horizon, p, c.pde)) {
            ctx.out.add(to_json(r));
        }
    }
}

void run_gradient(Context& ctx) {
    const auto& c = ctx.config;
    const auto coeffs = c.coefficients();
    const auto band = c.band();
    const auto payoff = ctx.payoff();
    const auto alphas = default_alpha_grid(c.kappa1, c.kappa2, c.alpha_grid_size);
    ctx.out.add(to_json(check_gradient_estimate(coeffs, band, payoff, c.horizon, c.pde, alphas)));
    for (const auto& r : lipschitz_transport_grid(coeffs, band, payoff, c.xs, c.ys, c.horizon, c.pde, alphas)) {
        ctx.out.add(to_json(r));
    }
}

const std::map<std::string, std::function<void(Context&)>>& commands() {
    static const std::map<std::string, std::function<void(Context&)>> table{
        {"gheat", run_gheat},     {"semigroup", run_semigroup}, {"scenario", run_scenario},
        {"coupling", run_coupling}, {"harnack", run_harnack},   {"gradient", run_gradient},
    };
    return table;
}

void write_outputs(const std::filesystem::path& dir, const Outputs& out) {
    std::filesystem::create_directories(dir);
    write_file_atomically(dir / "report.json", out.reports.dump(2) + "\n");
    write_file_atomically(dir / "estimates.csv", out.estimates.str());
    if (!out.paths.str().empty()) write_file_atomically(dir / "paths.csv", out.paths.str());
    if (!out.grid_u.empty()) write_file_atomically(dir / "grid_u.csv", out.grid_u);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Numerical checks for G-expectations, G-SDE couplings and Harnack inequalities", "glab"};
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    const std::vector<std::string> names{"gheat", "semigroup", "scenario", "coupling", "harnack", "gradient", "suite"};
    for (const auto& name : names) {
        auto* sub = app.add_subcommand(name, name == "suite" ? "run every check" : "run the " + name + " checks");
        sub->add_option("--config", config_path, "configuration file")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "overrides the config seed");
        sub->add_option("--threads", threads, "worker threads, 0 = hardware concurrency");
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_pass;
    } catch (const CLI::ParseError& e) {
        err << "glab: " << e.what() << '\n';
        return exit_config_error;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        auto config = load_config(config_path);
        if (seed) config.seed = *seed;
        Outputs outputs;
        Context ctx{config, threads, outputs, out};
        if (command == "suite") {
            for (const auto& name : {"gheat", "semigroup", "scenario", "coupling", "harnack", "gradient"}) {
                commands().at(name)(ctx);
            }
        } else {
            commands().at(command)(ctx);
        }
        write_outputs(out_dir, outputs);
        for (const auto& r : outputs.reports) {
            if (!r.at("pass").get<bool>()) err << "glab: violated: " << r.dump() << '\n';
        }
        out << command << ": " << outputs.reports.size() << " checks, "
            << (outputs.violation ? "violation found" : "all pass") << '\n';
        return outputs.violation ? exit_violation : exit_pass;
    } catch (const ConfigError& e) {
        err << "glab: config error: " << e.what() << '\n';
    } catch (const std::invalid_argument& e) {
        err << "glab: invalid input: " << e.what() << '\n';
    } catch (const std::exception& e) {
        err << "glab: error: " << e.what() << '\n';
    }
    return exit_config_error;
}

}  // namespace glab::cli
