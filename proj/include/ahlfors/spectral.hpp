#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace ahlfors::spectral {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    std::size_t n = 0;
};

LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

// Least-squares sinusoid scan. Power at period P is the fraction of variance
// of y - mean(y) explained by a + b cos(2 pi x / P) + c sin(2 pi x / P).
// Trial frequencies are uniform in 1/P over [1/p_max, 1/p_min].
struct Periodogram {
    std::vector<double> periods;
    std::vector<double> powers;
    std::optional<double> best_period;
    double peak_power = 0.0;
    double median_power = 0.0;
};

Periodogram sinusoid_scan(std::span<const double> x, std::span<const double> y, double p_min,
                          double p_max, std::size_t trials = 400);

}  // namespace ahlfors::spectral
