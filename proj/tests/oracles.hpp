#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library.

#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

// E[f(m + s Z)], Z standard normal, by composite Simpson on m +- 12 s.
inline double gaussian_expectation(const std::function<double(double)>& f, double mean, double sd, int n = 8000) {
    if (sd == 0.0) return f(mean);
    const double a = -12.0;
    const double h = 24.0 / n;
    double sum = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double z = a + i * h;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        sum += w * f(mean + sd * z) * std::exp(-0.5 * z * z);
    }
    return sum * h / 3.0 / std::sqrt(2.0 * std::numbers::pi);
}

// Ornstein-Uhlenbeck dX = -X dt + dW started at x: mean x e^{-T}, variance (1 - e^{-2T})/2.
inline double ou_expectation(const std::function<double(double)>& f, double x, double horizon) {
    return gaussian_expectation(f, x * std::exp(-horizon), std::sqrt(0.5 * (1.0 - std::exp(-2.0 * horizon))));
}

// lambda_0 from the closed-form schedule, written out longhand.
inline double lambda0(double K, double lower, double k1, double k2, double alpha, double T) {
    const double c = K * (2.0 + K + 2.0 / (lower * lower));
    return (2.0 * k1 * k1 / (k2 * k2) - alpha) / c * (1.0 - std::exp(-lower * lower * c * T));
}

}  // namespace oracle
