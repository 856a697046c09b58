#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "glab/expression.hpp"

using glab::Expression;

TEST_CASE("parse round-trips the catalog") {
    CHECK(Expression::parse("constant(2)")(3.0) == 2.0);
    CHECK(Expression::parse("affine(-1, 0.5)")(2.0) == -1.5);
    CHECK(Expression::parse(" quadratic( 2 ) ")(3.0) == 18.0);
    CHECK(Expression::parse("quartic(1)")(2.0) == 16.0);
    CHECK(Expression::parse("sin(0.95, 0.05)")(0.3) == doctest::Approx(0.95 + 0.05 * std::sin(0.3)));
    CHECK(Expression::parse("cos(0, 1, 2)")(0.3) == doctest::Approx(std::cos(0.6)));
    CHECK(Expression::parse("tanh(0.95, 0.05)")(1.0) == doctest::Approx(0.95 + 0.05 * std::tanh(1.0)));
    CHECK(Expression::parse("logistic(0, 1)")(0.0) == doctest::Approx(0.5));
    CHECK(Expression::parse("bump(0.1, 1)")(0.0) == doctest::Approx(1.1));
    CHECK(Expression::parse("bump(0.1, 1, 1, 2)")(2.0) == doctest::Approx(0.1 + std::exp(-0.5)));
    CHECK(Expression::parse("call(1)")(3.0) == 2.0);
    CHECK(Expression::parse("put(1)")(3.0) == 0.0);

    const auto e = Expression::sine(0.2, 0.3, 1.5);
    const auto back = Expression::parse(e.to_string());
    for (double x : {-2.0, 0.0, 0.7}) CHECK(back(x) == e(x));
}

TEST_CASE("parse rejects malformed text with the offending input") {
    CHECK_THROWS_AS(Expression::parse("sin(1)"), std::invalid_argument);
    CHECK_THROWS_AS(Expression::parse("affine(1, 2, 3)"), std::invalid_argument);
    CHECK_THROWS_AS(Expression::parse("wiggle(1)"), std::invalid_argument);
    CHECK_THROWS_AS(Expression::parse("constant(abc)"), std::invalid_argument);
    CHECK_THROWS_AS(Expression::parse("constant(1"), std::invalid_argument);
    try {
        Expression::parse("wiggle(1)");
    } catch (const std::invalid_argument& err) {
        CHECK(std::string(err.what()).find("wiggle") != std::string::npos);
    }
}

TEST_CASE("declared Lipschitz constants dominate sampled difference quotients") {
    const Expression shapes[] = {Expression::affine(-1.3, 0.0),     Expression::sine(0, 0.4, 2.0),
                                 Expression::cosine(1, -0.2, 3.0),  Expression::tanh(0.95, 0.05),
                                 Expression::logistic(0, 2.0, 1.5), Expression::bump(0.1, 1.0, 0.3, 0.5),
                                 Expression::call(0.2),             Expression::put(-0.1)};
    for (const auto& e : shapes) {
        double worst = 0.0;
        for (int i = 0; i < 4000; ++i) {
            const double x = -6.0 + 12.0 * i / 4000.0;
            const double y = x + 1e-4;
            worst = std::max(worst, std::abs(e(y) - e(x)) / 1e-4);
        }
        CHECK(worst <= e.lipschitz_constant() * (1.0 + 1e-6));
        // and not wildly loose for smooth shapes
        CHECK(worst >= 0.9 * e.lipschitz_constant());
    }
    CHECK(Expression::quadratic(1).lipschitz_constant() == std::numeric_limits<double>::infinity());
    CHECK(Expression::constant(3).lipschitz_constant() == 0.0);
}

TEST_CASE("shape flags") {
    CHECK(Expression::quadratic(1).convex());
    CHECK_FALSE(Expression::quadratic(1).concave());
    CHECK(Expression::quadratic(-1).concave());
    CHECK(Expression::call(0).convex());
    CHECK_FALSE(Expression::bump(0, 1).convex());
    CHECK(Expression::bump(0, 1).bounded_on_line());
    CHECK_FALSE(Expression::call(0).bounded_on_line());
}
