#include "glab/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "glab/io.hpp"
#include "glab/parallel.hpp"
#include "glab/rng.hpp"

namespace glab {

namespace {

constexpr std::uint32_t kIncrementLane = 0;
constexpr std::uint32_t kRandomControlLane = 11;

std::vector<double> even_levels(const VolatilityBand& band, int count) {
    std::vector<double> out;
    if (count == 1) {
        out.push_back(band.upper());
        return out;
    }
    for (int k = 0; k < count; ++k) {
        out.push_back(k + 1 == count ? band.upper()
                                     : band.lower() + (band.upper() - band.lower()) * k / (count - 1));
    }
    return out;
}

}  // namespace

ScenarioControl::ScenarioControl(TimeGrid grid, std::vector<double> levels, const VolatilityBand& band)
    : grid_(grid), levels_(std::move(levels)) {
    if (static_cast<int>(levels_.size()) != grid_.n_steps()) {
        throw std::invalid_argument("scenario control needs one level per time step");
    }
    for (double v : levels_) {
        if (!band.contains(v)) {
            std::ostringstream msg;
            msg << "control level " << v << " outside band [" << band.lower() << ", " << band.upper() << "]";
            throw std::invalid_argument(msg.str());
        }
    }
}

ScenarioControl ScenarioControl::constant(const TimeGrid& grid, double level, const VolatilityBand& band) {
    return {grid, std::vector<double>(static_cast<std::size_t>(grid.n_steps()), level), band};
}

FeedbackControl FeedbackControl::from_pde(const ModelCoefficients& coeffs, const VolatilityBand& band,
                                          const Payoff& payoff, const TimeGrid& grid, const PdeConfig& cfg) {
    SolveOptions options;
    for (int j = 1; j <= grid.n_steps(); ++j) options.snapshot_times.push_back(grid.node(j));
    const auto solution = solve_g_hjb(coeffs, band, payoff, grid.horizon(), cfg, options);
    std::vector<std::vector<double>> levels;
    levels.reserve(solution.snapshots.size());
    for (const auto& u : solution.snapshots) levels.push_back(feedback_optimal_control(u, coeffs, band));
    return {grid, cfg.x_min, cfg.dx(), std::move(levels)};
}

double FeedbackControl::level(int step, double state) const noexcept {
    const auto& row = levels_[static_cast<std::size_t>(step)];
    const double pos = std::round((state - x0_) / dx_);
    const auto last = static_cast<double>(row.size() - 1);
    const auto i = static_cast<std::size_t>(std::clamp(pos, 0.0, last));
    return row[i];
}

double control_level(const ControlPolicy& control, int step, double state) noexcept {
    if (const auto* open_loop = std::get_if<ScenarioControl>(&control)) return open_loop->level(step);
    return std::get<FeedbackControl>(control).level(step, state);
}

const TimeGrid& control_grid(const ControlPolicy& control) noexcept {
    return std::visit([](const auto& c) -> const TimeGrid& { return c.grid(); }, control);
}

ControlStrategy parse_control_strategy(const std::string& name) {
    if (name == "constants") return ControlStrategy::constants;
    if (name == "bang_bang") return ControlStrategy::bang_bang;
    if (name == "random") return ControlStrategy::random;
    if (name == "feedback") return ControlStrategy::feedback;
    throw std::invalid_argument("unknown control strategy '" + name + "'");
}

std::string to_string(ControlStrategy strategy) {
    switch (strategy) {
        case ControlStrategy::constants: return "constants";
        case ControlStrategy::bang_bang: return "bang_bang";
        case ControlStrategy::random: return "random";
        case ControlStrategy::feedback: return "feedback";
    }
    return "unknown";
}

std::vector<ControlPolicy> sample_controls(ControlStrategy strategy, const VolatilityBand& band,
                                           const TimeGrid& grid, int count, std::uint64_t seed,
                                           const FeedbackControl* feedback) {
    if (count < 1) throw std::invalid_argument("sample_controls needs count >= 1");
    std::vector<ControlPolicy> out;
    if (band.degenerate()) {
        out.emplace_back(ScenarioControl::constant(grid, band.lower(), band));
        return out;
    }
    const auto n = static_cast<std::size_t>(grid.n_steps());
    switch (strategy) {
        case ControlStrategy::constants:
            for (double level : even_levels(band, count)) out.emplace_back(ScenarioControl::constant(grid, level, band));
            break;
        case ControlStrategy::bang_bang:
            for (int k = 0; k < count; ++k) {
                const double switch_time = grid.horizon() * (k + 1) / (count + 1);
                const bool rising = k % 2 == 0;
                std::vector<double> levels(n);
                for (std::size_t j = 0; j < n; ++j) {
                    const bool before = grid.node(static_cast<int>(j)) < switch_time * (1.0 - 1e-12);
                    levels[j] = before == rising ? band.lower() : band.upper();
                }
                out.emplace_back(ScenarioControl(grid, std::move(levels), band));
            }
            break;
        case ControlStrategy::random: {
            const NormalSource rng(seed);
            for (int k = 0; k < count; ++k) {
                std::vector<double> levels(n);
                for (std::size_t j = 0; j < n; ++j) {
                    const double u = rng.uniform({static_cast<std::uint64_t>(k), static_cast<std::uint32_t>(j),
                                                  kRandomControlLane});
                    levels[j] = std::clamp(band.lower() + (band.upper() - band.lower()) * u, band.lower(), band.upper());
                }
                out.emplace_back(ScenarioControl(grid, std::move(levels), band));
            }
            break;
        }
        case ControlStrategy::feedback:
            if (feedback == nullptr) throw std::invalid_argument("feedback strategy needs a FeedbackControl");
            if (feedback->grid().n_steps() != grid.n_steps() || feedback->grid().horizon() != grid.horizon()) {
                throw std::invalid_argument("feedback control grid does not match the simulation grid");
            }
            out.emplace_back(*feedback);
            if (count > 1) {
                for (double level : even_levels(band, count - 1)) {
                    out.emplace_back(ScenarioControl::constant(grid, level, band));
                }
            }
            break;
    }
    return out;
}

GBMPath simulate_gbm(const ControlPolicy& control, std::uint64_t seed, std::uint64_t path_id) {
    const TimeGrid& grid = control_grid(control);
    const auto n = static_cast<std::size_t>(grid.n_steps());
    const double dt = grid.dt();
    const double sqrt_dt = std::sqrt(dt);
    const NormalSource rng(seed);

    GBMPath path;
    path.grid = grid;
    path.w_increments.resize(n);
    path.levels.resize(n);
    path.b_path.assign(n + 1, 0.0);
    path.qv_path.assign(n + 1, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const double dw = sqrt_dt * rng({path_id, static_cast<std::uint32_t>(j), kIncrementLane});
        const double level = control_level(control, static_cast<int>(j), path.b_path[j]);
        path.w_increments[j] = dw;
        path.levels[j] = level;
        path.b_path[j + 1] = path.b_path[j] + level * dw;
        path.qv_path[j + 1] = path.qv_path[j] + level * level * dt;
    }
    return path;
}

EstimateWithError upper_expectation_mc(const PathFunctional& functional, const std::vector<ControlPolicy>& controls,
                                       int n_paths, std::uint64_t seed, unsigned threads) {
    if (n_paths < 100) throw std::invalid_argument("upper_expectation_mc needs n_paths >= 100");
    if (controls.empty()) throw std::invalid_argument("upper_expectation_mc needs at least one control");

    const std::size_t n_controls = controls.size();
    const auto paths = static_cast<std::size_t>(n_paths);
    std::vector<double> samples(n_controls * paths);
    parallel_for(n_controls * paths, threads, [&](std::size_t idx) {
        const std::size_t c = idx / paths;
        const std::size_t p = idx % paths;
        samples[idx] = functional(simulate_gbm(controls[c], seed, p));
    });

    EstimateWithError out;
    out.n_paths = n_paths;
    out.n_controls = static_cast<int>(n_controls);
    out.value = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n_controls; ++c) {
        const auto m = sample_moments(std::span<const double>(samples).subspan(c * paths, paths));
        out.control_means.push_back(m.mean);
        out.control_std_errors.push_back(m.std_error);
        if (m.mean > out.value) {
            out.value = m.mean;
            out.std_error = m.std_error;
            out.best_control_id = static_cast<int>(c);
        }
    }
    return out;
}

EstimateWithError capacity_mc(const PathEvent& event, const std::vector<ControlPolicy>& controls, int n_paths,
                              std::uint64_t seed, unsigned threads) {
    return upper_expectation_mc([&event](const GBMPath& p) { return event(p) ? 1.0 : 0.0; }, controls, n_paths,
                                seed, threads);
}

void write_estimates_header(std::ostream& out) {
    out << "quantity,value,std_error,n_paths,n_controls,best_control_id,method,x\n";
}

void write_estimate_row(std::ostream& out, const std::string& quantity, double x, const EstimateWithError& e) {
    out << quantity << ',' << format_double(e.value) << ',' << format_double(e.std_error) << ',' << e.n_paths << ','
        << e.n_controls << ',' << e.best_control_id << ",mc," << format_double(x) << '\n';
}

void write_estimate_row(std::ostream& out, const std::string& quantity, double x, const PdeEstimate& e) {
    out << quantity << ',' << format_double(e.value) << ',' << format_double(e.tolerance) << ",0,0,0,pde,"
        << format_double(x) << '\n';
}

YoungSlack young_check(const ScenarioTable& g1, const ScenarioTable& g2) {
    const std::size_t n_scenarios = g1.values.size();
    if (n_scenarios == 0 || g2.values.size() != n_scenarios) {
        throw std::invalid_argument("young_check: g1 and g2 need the same nonzero number of scenarios");
    }
    if (!g1.weights.empty() && g1.weights.size() != n_scenarios) {
        throw std::invalid_argument("young_check: one weight row per scenario required");
    }

    YoungSlack out;
    out.lhs = -std::numeric_limits<double>::infinity();
    out.entropy = -std::numeric_limits<double>::infinity();
    out.log_exp = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n_scenarios; ++k) {
        const auto& a = g1.values[k];
        const auto& b = g2.values[k];
        if (a.empty() || a.size() != b.size()) throw std::invalid_argument("young_check: row shape mismatch");
        std::vector<double> w;
        if (g1.weights.empty()) {
            w.assign(a.size(), 1.0 / static_cast<double>(a.size()));
        } else {
            w = g1.weights[k];
            if (w.size() != a.size()) throw std::invalid_argument("young_check: weight row shape mismatch");
        }

        std::vector<double> terms(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (!(a[i] > 0.0)) throw std::invalid_argument("young_check: g1 must be strictly positive");
            if (w[i] < 0.0) throw std::invalid_argument("young_check: negative scenario weight");
            terms[i] = w[i] * a[i];
        }
        const double mass = pairwise_sum(terms);
        if (std::abs(mass - 1.0) > 1e-9) {
            std::ostringstream msg;
            msg << "young_check: g1 has mean " << mass << " under scenario " << k << ", expected 1";
            throw std::invalid_argument(msg.str());
        }

        for (std::size_t i = 0; i < a.size(); ++i) terms[i] = w[i] * a[i] * b[i];
        out.lhs = std::max(out.lhs, pairwise_sum(terms));
        for (std::size_t i = 0; i < a.size(); ++i) terms[i] = w[i] * a[i] * std::log(a[i]);
        out.entropy = std::max(out.entropy, pairwise_sum(terms));

        const double peak = *std::max_element(b.begin(), b.end());
        for (std::size_t i = 0; i < a.size(); ++i) terms[i] = w[i] * std::exp(b[i] - peak);
        out.log_exp = std::max(out.log_exp, peak + std::log(pairwise_sum(terms)));
    }
    out.rhs = out.entropy + out.log_exp;
    out.slack = out.rhs - out.lhs;
    out.pass = out.slack >= -1e-12;
    return out;
}

}  // namespace glab
