#include "glab/expression.hpp"

#include "glab/io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace glab {

namespace {

struct CatalogEntry {
    const char* name;
    Expression::Kind kind;
    std::size_t min_args;
    std::size_t max_args;
    std::vector<double> defaults;  // for trailing optional args
};

const std::vector<CatalogEntry>& catalog() {
    static const std::vector<CatalogEntry> entries = {
        {"constant", Expression::Kind::constant, 1, 1, {}},
        {"affine", Expression::Kind::affine, 2, 2, {}},
        {"quadratic", Expression::Kind::quadratic, 1, 1, {}},
        {"quartic", Expression::Kind::quartic, 1, 1, {}},
        {"sin", Expression::Kind::sine, 2, 3, {1.0}},
        {"cos", Expression::Kind::cosine, 2, 3, {1.0}},
        {"tanh", Expression::Kind::tanh, 2, 3, {1.0}},
        {"logistic", Expression::Kind::logistic, 2, 3, {1.0}},
        {"bump", Expression::Kind::bump, 2, 4, {0.0, 1.0}},
        {"call", Expression::Kind::call, 1, 1, {}},
        {"put", Expression::Kind::put, 1, 1, {}},
    };
    return entries;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

double parse_number(std::string_view token, std::string_view whole) {
    token = trim(token);
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    double value = 0.0;
    const auto* end = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(token.data(), end, value);
    if (token.empty() || ec != std::errc{} || ptr != end || !std::isfinite(value)) {
        throw std::invalid_argument("bad number '" + std::string(token) + "' in expression '" +
                                    std::string(whole) + "'");
    }
    return value;
}

}  // namespace

Expression Expression::constant(double c) { return {Kind::constant, {c}}; }
Expression Expression::affine(double slope, double intercept) { return {Kind::affine, {slope, intercept}}; }
Expression Expression::quadratic(double scale) { return {Kind::quadratic, {scale}}; }
Expression Expression::quartic(double scale) { return {Kind::quartic, {scale}}; }
Expression Expression::sine(double o, double a, double f) { return {Kind::sine, {o, a, f}}; }
Expression Expression::cosine(double o, double a, double f) { return {Kind::cosine, {o, a, f}}; }
Expression Expression::tanh(double o, double a, double f) { return {Kind::tanh, {o, a, f}}; }
Expression Expression::logistic(double o, double a, double s) { return {Kind::logistic, {o, a, s}}; }
Expression Expression::bump(double base, double amp, double center, double width) {
    if (!(width > 0.0)) throw std::invalid_argument("bump width must be positive");
    return {Kind::bump, {base, amp, center, width}};
}
Expression Expression::call(double strike) { return {Kind::call, {strike}}; }
Expression Expression::put(double strike) { return {Kind::put, {strike}}; }

Expression Expression::parse(std::string_view text) {
    const std::string_view whole = trim(text);
    const auto open = whole.find('(');
    if (open == std::string_view::npos || whole.back() != ')') {
        throw std::invalid_argument("expression '" + std::string(whole) + "' must look like name(args)");
    }
    const std::string_view name = trim(whole.substr(0, open));
    std::string_view inner = whole.substr(open + 1, whole.size() - open - 2);

    std::vector<double> args;
    if (!trim(inner).empty()) {
        while (true) {
            const auto comma = inner.find(',');
            args.push_back(parse_number(inner.substr(0, comma), whole));
            if (comma == std::string_view::npos) break;
            inner.remove_prefix(comma + 1);
        }
    }

    for (const auto& entry : catalog()) {
        if (name != entry.name) continue;
        if (args.size() < entry.min_args || args.size() > entry.max_args) {
            std::ostringstream msg;
            msg << "expression '" << whole << "': " << entry.name << " takes " << entry.min_args;
            if (entry.max_args != entry.min_args) msg << " to " << entry.max_args;
            msg << " arguments, got " << args.size();
            throw std::invalid_argument(msg.str());
        }
        for (std::size_t i = args.size(); i < entry.max_args; ++i) {
            args.push_back(entry.defaults[i - entry.min_args]);
        }
        if (entry.kind == Kind::bump) return bump(args[0], args[1], args[2], args[3]);
        return {entry.kind, std::move(args)};
    }
    throw std::invalid_argument("unknown expression '" + std::string(name) + "'");
}

double Expression::operator()(double x) const noexcept {
    const auto& p = params_;
    switch (kind_) {
        case Kind::constant: return p[0];
        case Kind::affine: return p[0] * x + p[1];
        case Kind::quadratic: return p[0] * x * x;
        case Kind::quartic: return p[0] * (x * x) * (x * x);
        case Kind::sine: return p[0] + p[1] * std::sin(p[2] * x);
        case Kind::cosine: return p[0] + p[1] * std::cos(p[2] * x);
        case Kind::tanh: return p[0] + p[1] * std::tanh(p[2] * x);
        case Kind::logistic: return p[0] + p[1] / (1.0 + std::exp(-p[2] * x));
        case Kind::bump: {
            const double d = x - p[2];
            return p[0] + p[1] * std::exp(-d * d / p[3]);
        }
        case Kind::call: return x > p[0] ? x - p[0] : 0.0;
        case Kind::put: return x < p[0] ? p[0] - x : 0.0;
    }
    return 0.0;
}

double Expression::lipschitz_constant() const noexcept {
    const auto& p = params_;
    switch (kind_) {
        case Kind::constant: return 0.0;
        case Kind::affine: return std::abs(p[0]);
        case Kind::sine:
        case Kind::cosine:
        case Kind::tanh: return std::abs(p[1] * p[2]);
        case Kind::logistic: return std::abs(p[1] * p[2]) / 4.0;
        // max |d/dx exp(-d^2/w)| = sqrt(2/w) * exp(-1/2)
        case Kind::bump: return std::abs(p[1]) * std::sqrt(2.0 / p[3]) * std::exp(-0.5);
        case Kind::call:
        case Kind::put: return 1.0;
        case Kind::quadratic:
        case Kind::quartic: return p[0] == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return std::numeric_limits<double>::infinity();
}

bool Expression::bounded_on_line() const noexcept {
    switch (kind_) {
        case Kind::constant:
        case Kind::sine:
        case Kind::cosine:
        case Kind::tanh:
        case Kind::logistic:
        case Kind::bump: return true;
        case Kind::affine:
        case Kind::quadratic:
        case Kind::quartic: return params_[0] == 0.0;
        case Kind::call:
        case Kind::put: return false;
    }
    return false;
}

bool Expression::convex() const noexcept {
    switch (kind_) {
        case Kind::constant:
        case Kind::affine:
        case Kind::call:
        case Kind::put: return true;
        case Kind::quadratic:
        case Kind::quartic: return params_[0] >= 0.0;
        default: return params_[1] == 0.0;
    }
}

bool Expression::concave() const noexcept {
    switch (kind_) {
        case Kind::constant:
        case Kind::affine: return true;
        case Kind::quadratic:
        case Kind::quartic: return params_[0] <= 0.0;
        case Kind::call:
        case Kind::put: return false;
        default: return params_[1] == 0.0;
    }
}

std::string Expression::to_string() const {
    std::ostringstream out;
    for (const auto& entry : catalog()) {
        if (entry.kind != kind_) continue;
        out << entry.name << '(';
        for (std::size_t i = 0; i < params_.size(); ++i) {
            if (i) out << ", ";
            out << format_double(params_[i]);
        }
        out << ')';
        break;
    }
    return out.str();
}

}  // namespace glab
