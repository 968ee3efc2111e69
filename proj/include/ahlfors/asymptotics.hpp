#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ahlfors/counting.hpp"
#include "ahlfors/geometry.hpp"

namespace ahlfors::asymptotics {

using counting::Function;
using counting::Mode;
using geometry::PointCloud;

// eps_max * 10^(-i / points_per_decade) down to eps_min (inclusive up to 1e-9 in log).
std::vector<double> geometric_grid(double eps_max, double eps_min, std::size_t points_per_decade);

struct CountingCurve {
    Function function = Function::Separated;
    std::vector<double> eps;  // strictly decreasing
    std::vector<double> values;
    std::string provenance;
    // positions i where values[i + 1] < values[i], i.e. (C1) fails
    std::vector<std::size_t> c1_violations;
};

// Mode applies to S, P, C; Minkowski uses the default voxel size per eps.
CountingCurve counting_curve(const PointCloud& cloud, Function f, double eps_max, double eps_min,
                             std::size_t points_per_decade = 40, Mode mode = Mode::Greedy);
CountingCurve counting_curve(const PointCloud& cloud, Function f, const std::vector<double>& grid,
                             Mode mode = Mode::Greedy);

struct DimensionFit {
    double s_hat = 0.0;
    double stderr_ = 0.0;
    double intercept = 0.0;
    std::size_t points = 0;
};

// log value against log(1/eps); needs >= 10 points over >= 1.5 decades
DimensionFit dimension_fit(const CountingCurve& curve);

enum class Verdict { Converging, Oscillating, Inconclusive };
std::string to_string(Verdict v);

struct LimitConfig {
    double window_decades = 1.0;
    double converge_amplitude = 0.02;
    double oscillate_amplitude = 0.05;
    double peak_ratio = 5.0;  // dominant peak: power above this multiple of the median
    // and a fitted swing (peak-to-peak over mean) of at least this much
    double peak_floor = 0.01;
    std::size_t trials = 2000;
};

struct LimitDiagnostic {
    double s = 0.0;
    double window_lo = 0.0, window_hi = 0.0;  // eps range of the final window
    std::size_t window_points = 0;
    double mean = 0.0;
    double amplitude = 0.0;
    std::optional<double> period;  // in log(1/eps)
    double peak_power = 0.0;
    double median_power = 0.0;
    double peak_swing = 0.0;  // 2 * fitted sinusoid amplitude / mean
    bool dominant_peak = false;
    Verdict verdict = Verdict::Inconclusive;
    LimitConfig config;
    std::vector<double> scaled;  // eps^s N(eps) over the whole curve
};

LimitDiagnostic limit_diagnostic(const CountingCurve& curve, double s, const LimitConfig& cfg = {});

struct GridSpec {
    double eps_max = 0.1;
    double eps_min = 0.001;
    std::size_t points_per_decade = 40;
};

struct ImageInvariance {
    PointCloud original;
    PointCloud image;
    CountingCurve curve;
    CountingCurve image_curve;
    DimensionFit fit;
    DimensionFit image_fit;
    LimitDiagnostic diagnostic;
    LimitDiagnostic image_diagnostic;
    // |s_hat - s_hat'| <= sqrt(se^2 + se'^2)
    bool dimensions_agree = false;
};

// Samples K at resolution delta, maps it and runs both curves on one grid.
ImageInvariance image_invariance_experiment(const geometry::Ifs& ifs, const geometry::ConformalMap& map,
                                            Function f, const GridSpec& grid, double delta, double s,
                                            const LimitConfig& cfg = {});

struct MeasurabilityResult {
    CountingCurve curve;  // eM(eps)
    LimitDiagnostic diagnostic;
};

MeasurabilityResult minkowski_measurability_experiment(const PointCloud& cloud, double s, const GridSpec& grid,
                                                       const LimitConfig& cfg = {});

}  // namespace ahlfors::asymptotics
