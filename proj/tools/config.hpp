#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "glab/gheat.hpp"
#include "glab/model.hpp"
#include "glab/scenario.hpp"

namespace glab::cli {

// Malformed or inconsistent configuration; the message names the offending
// section/field (or line, for syntax errors).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    // [model]
    Expression drift;
    Expression qv_drift;
    Expression diffusion;
    double lipschitz = 0.0;
    double kappa1 = 1.0;
    double kappa2 = 1.0;
    // [band]
    double sigma_lower = 1.0;
    double sigma_upper = 1.0;
    // [payoff]
    Expression payoff;
    // [grid]
    double horizon = 1.0;
    int n_steps = 200;
    PdeConfig pde;
    // [coupling]
    std::optional<double> alpha;  // empty = auto, k1^2/k2^2
    double clip_epsilon = 0.01;
    int n_paths = 1024;
    int n_controls = 5;
    ControlStrategy strategy = ControlStrategy::constants;
    double x0 = 0.0;
    double y0 = 0.5;
    std::vector<double> clip_sweep{0.2, 0.1, 0.05, 0.025};
    // [check]
    std::vector<double> xs{0.0};
    std::vector<double> ys{0.5};
    std::vector<double> ps;
    int alpha_grid_size = 33;
    int young_trials = 1000;
    // top level
    std::uint64_t seed = 1;

    VolatilityBand band() const { return {sigma_lower, sigma_upper}; }
    ModelCoefficients coefficients() const {
        return {drift, qv_drift, diffusion, lipschitz, kappa1, kappa2};
    }
    TimeGrid grid() const { return {horizon, n_steps}; }
    double resolved_alpha() const { return alpha ? *alpha : kappa1 * kappa1 / (kappa2 * kappa2); }
};

// Parses and cross-validates. Throws ConfigError.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text);

}  // namespace glab::cli
