#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace glab {

// Closed-form scalar expression of the state variable drawn from a small
// catalog. Coefficients of the model and terminal payoffs are both built from
// it so that every run is fully described by text.
//
//   constant(c)                         c
//   affine(slope, intercept)            slope*x + intercept
//   quadratic(scale)                    scale*x^2
//   quartic(scale)                      scale*x^4
//   sin(offset, amp[, freq])            offset + amp*sin(freq*x)
//   cos(offset, amp[, freq])            offset + amp*cos(freq*x)
//   tanh(offset, amp[, freq])           offset + amp*tanh(freq*x)
//   logistic(offset, amp[, slope])      offset + amp/(1+exp(-slope*x))
//   bump(base, amp[, center, width])    base + amp*exp(-(x-center)^2/width)
//   call(strike)                        max(x-strike, 0)
//   put(strike)                         max(strike-x, 0)
class Expression {
public:
    enum class Kind { constant, affine, quadratic, quartic, sine, cosine, tanh, logistic, bump, call, put };

    Expression() = default;

    static Expression constant(double c);
    static Expression affine(double slope, double intercept);
    static Expression quadratic(double scale);
    static Expression quartic(double scale);
    static Expression sine(double offset, double amplitude, double frequency = 1.0);
    static Expression cosine(double offset, double amplitude, double frequency = 1.0);
    static Expression tanh(double offset, double amplitude, double frequency = 1.0);
    static Expression logistic(double offset, double amplitude, double slope = 1.0);
    static Expression bump(double base, double amplitude, double center = 0.0, double width = 1.0);
    static Expression call(double strike);
    static Expression put(double strike);

    // Parses "name(a, b, ...)"; throws std::invalid_argument with the offending
    // text on malformed input or wrong arity.
    static Expression parse(std::string_view text);

    double operator()(double x) const noexcept;
    double operator()(double /*t*/, double x) const noexcept { return (*this)(x); }

    // Supremum of |f'| over the real line; infinity for super-linear kinds.
    double lipschitz_constant() const noexcept;

    bool is_constant() const noexcept { return kind_ == Kind::constant; }
    bool bounded_on_line() const noexcept;
    bool convex() const noexcept;
    bool concave() const noexcept;

    Kind kind() const noexcept { return kind_; }
    const std::vector<double>& params() const noexcept { return params_; }
    std::string to_string() const;

private:
    Expression(Kind kind, std::vector<double> params) : kind_(kind), params_(std::move(params)) {}

    Kind kind_ = Kind::constant;
    std::vector<double> params_{0.0};
};

}  // namespace glab
