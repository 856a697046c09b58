#include "config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "glab/coupling.hpp"
#include "glab/harnack.hpp"

namespace glab::cli {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"model", {"b", "h", "sigma", "K", "kappa1", "kappa2"}},
        {"band", {"lower", "upper"}},
        {"payoff", {"f"}},
        {"grid", {"T", "n_steps", "x_min", "x_max", "n_space", "cfl_safety"}},
        {"coupling", {"alpha", "clip_epsilon", "clip_sweep", "n_paths", "n_controls", "strategy", "x", "y"}},
        {"check", {"x", "y", "p", "alpha_grid", "young_trials"}},
    };
    return keys;
}

std::string field(const std::string& section, const std::string& key) { return "[" + section + "] " + key; }

[[noreturn]] void fail(const std::string& where, const std::string& what) { throw ConfigError(where + ": " + what); }

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double to_double(const std::string& text, const std::string& where) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) fail(where, "'" + text + "' is not a number");
    if (!std::isfinite(v)) fail(where, "must be finite");
    return v;
}

template <class Int>
Int to_integer(const std::string& text, const std::string& where) {
    const std::string t = trim(text);
    Int v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) fail(where, "'" + text + "' is not an integer");
    return v;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

std::vector<double> to_doubles(const std::string& text, const std::string& where) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(to_double(item, where));
    if (out.empty()) fail(where, "empty list");
    return out;
}

class Reader {
public:
    explicit Reader(const pt::ptree& tree) : tree_(tree) {}

    std::optional<std::string> raw(const std::string& section, const std::string& key) const {
        const auto s = tree_.get_child_optional(section);
        if (!s) return std::nullopt;
        const auto v = s->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
        if (!v) return std::nullopt;
        return *v;
    }

    std::string text(const std::string& section, const std::string& key, const std::string& fallback) const {
        return raw(section, key).value_or(fallback);
    }
    double number(const std::string& section, const std::string& key, double fallback) const {
        const auto v = raw(section, key);
        return v ? to_double(*v, field(section, key)) : fallback;
    }
    int integer(const std::string& section, const std::string& key, int fallback) const {
        const auto v = raw(section, key);
        return v ? to_integer<int>(*v, field(section, key)) : fallback;
    }
    std::vector<double> numbers(const std::string& section, const std::string& key,
                                std::vector<double> fallback) const {
        const auto v = raw(section, key);
        return v ? to_doubles(*v, field(section, key)) : fallback;
    }
    Expression expression(const std::string& section, const std::string& key, const std::string& fallback) const {
        const std::string t = text(section, key, fallback);
        try {
            return Expression::parse(t);
        } catch (const std::invalid_argument& e) {
            fail(field(section, key), e.what());
        }
    }

private:
    const pt::ptree& tree_;
};

void check_keys(const pt::ptree& tree) {
    for (const auto& [name, node] : tree) {
        if (node.empty()) {
            if (name != "seed") fail(name, "unknown top-level key");
            continue;
        }
        const auto it = known_keys().find(name);
        if (it == known_keys().end()) fail("[" + name + "]", "unknown section");
        for (const auto& [key, value] : node) {
            if (!value.empty() || it->second.count(key) == 0) fail(field(name, key), "unknown key");
        }
    }
}

void validate(RunConfig& c) {
    if (!(c.lipschitz >= 0.0)) fail(field("model", "K"), "must be nonnegative");
    if (!(c.kappa1 > 0.0)) fail(field("model", "kappa1"), "must be positive");
    if (c.kappa1 > c.kappa2) {
        std::ostringstream msg;
        msg << "kappa1 = " << c.kappa1 << " exceeds kappa2 = " << c.kappa2;
        fail(field("model", "kappa1"), msg.str());
    }
    if (!(c.sigma_lower > 0.0)) fail(field("band", "lower"), "must be positive");
    if (c.sigma_lower > c.sigma_upper) fail(field("band", "lower"), "exceeds [band] upper");
    if (!(c.horizon > 0.0)) fail(field("grid", "T"), "must be positive");
    if (c.n_steps < 1) fail(field("grid", "n_steps"), "must be at least 1");
    try {
        c.pde.validate();
    } catch (const std::invalid_argument& e) {
        fail("[grid]", e.what());
    }

    const auto coeffs = c.coefficients();
    const auto band = c.band();
    const auto report = validate_coefficients(
        coeffs, default_validation_domain(0.0, band, c.horizon, c.lipschitz), c.grid(), 2049);
    if (report.lipschitz_violation) {
        std::ostringstream msg;
        msg << "declared K = " << c.lipschitz << " is below the sampled Lipschitz quotient "
            << report.max_lipschitz_quotient;
        fail(field("model", "K"), msg.str());
    }
    if (report.sigma_violation) fail(field("model", "sigma"), "leaves [kappa1, kappa2] on the validation domain");

    const double top = alpha_upper_limit(c.kappa1, c.kappa2);
    const double alpha = c.resolved_alpha();
    if (!(alpha > 0.0 && alpha < top)) {
        std::ostringstream msg;
        msg << "alpha = " << alpha << " outside (0, 2 kappa1^2/kappa2^2) = (0, " << top << ")";
        fail(field("coupling", "alpha"), msg.str());
    }
    if (!(c.clip_epsilon > 0.0 && c.clip_epsilon <= c.horizon / 10.0)) {
        fail(field("coupling", "clip_epsilon"), "must lie in (0, T/10]");
    }
    for (std::size_t k = 0; k < c.clip_sweep.size(); ++k) {
        if (!(c.clip_sweep[k] > 0.0 && c.clip_sweep[k] < 1.0)) {
            fail(field("coupling", "clip_sweep"), "entries are fractions of T and must lie in (0, 1)");
        }
        if (k > 0 && !(c.clip_sweep[k] < c.clip_sweep[k - 1])) {
            fail(field("coupling", "clip_sweep"), "must be strictly decreasing");
        }
    }
    if (c.clip_sweep.size() < 2) fail(field("coupling", "clip_sweep"), "needs at least two entries");
    if (c.n_paths < 100) fail(field("coupling", "n_paths"), "must be at least 100");
    if (c.n_controls < 1) fail(field("coupling", "n_controls"), "must be at least 1");
    if (c.alpha_grid_size < 2) fail(field("check", "alpha_grid"), "must be at least 2");
    if (c.young_trials < 1) fail(field("check", "young_trials"), "must be at least 1");
    if (!c.ps.empty()) {
        if (!(c.kappa2 > c.kappa1)) {
            fail(field("check", "p"), "power-Harnack needs kappa2 > kappa1; use the log-Harnack check instead");
        }
        const double threshold = power_harnack_threshold(c.kappa1, c.kappa2);
        for (double p : c.ps) {
            if (!(p > threshold)) {
                std::ostringstream msg;
                msg << "p = " << p << " is not above the threshold " << threshold;
                fail(field("check", "p"), msg.str());
            }
        }
    }
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("line " + std::to_string(e.line()) + ": " + e.message());
    }
    check_keys(tree);
    const Reader r(tree);

    RunConfig c;
    c.drift = r.expression("model", "b", "constant(0)");
    c.qv_drift = r.expression("model", "h", "constant(0)");
    c.diffusion = r.expression("model", "sigma", "constant(1)");
    c.lipschitz = r.number("model", "K", 0.0);
    c.kappa1 = r.number("model", "kappa1", 1.0);
    c.kappa2 = r.number("model", "kappa2", 1.0);
    c.sigma_lower = r.number("band", "lower", 1.0);
    c.sigma_upper = r.number("band", "upper", 1.0);
    c.payoff = r.expression("payoff", "f", "bump(0.1, 1, 0, 1)");
    c.horizon = r.number("grid", "T", 1.0);
    c.n_steps = r.integer("grid", "n_steps", 200);
    c.pde.x_min = r.number("grid", "x_min", c.pde.x_min);
    c.pde.x_max = r.number("grid", "x_max", c.pde.x_max);
    c.pde.n_space = r.integer("grid", "n_space", c.pde.n_space);
    c.pde.cfl_safety = r.number("grid", "cfl_safety", c.pde.cfl_safety);

    const std::string alpha = trim(r.text("coupling", "alpha", "auto"));
    if (alpha != "auto") c.alpha = to_double(alpha, field("coupling", "alpha"));
    c.clip_epsilon = r.number("coupling", "clip_epsilon", c.clip_epsilon);
    c.clip_sweep = r.numbers("coupling", "clip_sweep", c.clip_sweep);
    c.n_paths = r.integer("coupling", "n_paths", c.n_paths);
    c.n_controls = r.integer("coupling", "n_controls", c.n_controls);
    try {
        c.strategy = parse_control_strategy(trim(r.text("coupling", "strategy", "constants")));
    } catch (const std::invalid_argument& e) {
        fail(field("coupling", "strategy"), e.what());
    }
    if (c.strategy == ControlStrategy::feedback) {
        fail(field("coupling", "strategy"), "the coupled simulation needs open-loop controls, not feedback");
    }
    c.x0 = r.number("coupling", "x", c.x0);
    c.y0 = r.number("coupling", "y", c.y0);

    c.xs = r.numbers("check", "x", c.xs);
    c.ys = r.numbers("check", "y", c.ys);
    if (const auto p = r.raw("check", "p"); p && !trim(*p).empty()) c.ps = to_doubles(*p, field("check", "p"));
    c.alpha_grid_size = r.integer("check", "alpha_grid", c.alpha_grid_size);
    c.young_trials = r.integer("check", "young_trials", c.young_trials);

    if (const auto seed = tree.get_optional<std::string>("seed")) c.seed = to_integer<std::uint64_t>(*seed, "seed");

    validate(c);
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

}  // namespace glab::cli
