#include "ahlfors/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ahlfors/error.hpp"
#include "ahlfors/parallel.hpp"
#include "ahlfors/spectral.hpp"

namespace ahlfors::asymptotics {

std::vector<double> geometric_grid(double eps_max, double eps_min, std::size_t points_per_decade) {
    if (!(eps_max > 0) || !(eps_min > 0) || !(eps_min <= eps_max) || points_per_decade == 0)
        throw DomainError("geometric_grid: need 0 < eps_min <= eps_max and points_per_decade >= 1");
    const double decades = std::log10(eps_max / eps_min);
    const auto steps = std::size_t(std::floor(decades * double(points_per_decade) + 1e-9));
    std::vector<double> g;
    g.reserve(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) g.push_back(eps_max * std::pow(10.0, -double(i) / double(points_per_decade)));
    return g;
}

CountingCurve counting_curve(const PointCloud& cloud, Function f, const std::vector<double>& grid, Mode mode) {
    if (grid.empty()) throw DomainError("counting_curve: empty grid");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] < grid[i - 1])) throw DomainError("counting_curve: grid must strictly decrease");
    for (double e : grid) counting::require_adequate(cloud, e, "counting_curve");

    CountingCurve c;
    c.function = f;
    c.eps = grid;
    c.values.assign(grid.size(), 0.0);
    parallel_for(grid.size(), [&](std::size_t i) { c.values[i] = counting::evaluate(f, cloud, grid[i], mode); });
    for (std::size_t i = 0; i + 1 < c.values.size(); ++i)
        if (c.values[i + 1] < c.values[i]) c.c1_violations.push_back(i);
    std::ostringstream os;
    os.precision(17);
    os << "n=" << cloud.size() << " dim=" << cloud.dim() << " delta=" << cloud.resolution()
       << " mode=" << counting::to_string(mode);
    c.provenance = os.str();
    return c;
}

CountingCurve counting_curve(const PointCloud& cloud, Function f, double eps_max, double eps_min,
                             std::size_t points_per_decade, Mode mode) {
    return counting_curve(cloud, f, geometric_grid(eps_max, eps_min, points_per_decade), mode);
}

DimensionFit dimension_fit(const CountingCurve& curve) {
    const std::size_t n = curve.eps.size();
    if (n < 10) throw DomainError("dimension_fit: need at least 10 curve points");
    double hi = *std::max_element(curve.eps.begin(), curve.eps.end());
    double lo = *std::min_element(curve.eps.begin(), curve.eps.end());
    if (std::log10(hi / lo) < 1.5 - 1e-9) throw DomainError("dimension_fit: curve spans less than 1.5 decades");
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(curve.values[i] > 0)) throw DomainError("dimension_fit: nonpositive curve value");
        x[i] = std::log(1.0 / curve.eps[i]);
        y[i] = std::log(curve.values[i]);
    }
    auto lf = spectral::linear_fit(x, y);
    return {lf.slope, lf.slope_stderr, lf.intercept, n};
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Converging: return "converging";
        case Verdict::Oscillating: return "oscillating";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

LimitDiagnostic limit_diagnostic(const CountingCurve& curve, double s, const LimitConfig& cfg) {
    if (curve.eps.empty()) throw DomainError("limit_diagnostic: empty curve");
    LimitDiagnostic d;
    d.s = s;
    d.config = cfg;
    const std::size_t n = curve.eps.size();
    d.scaled.resize(n);
    for (std::size_t i = 0; i < n; ++i) d.scaled[i] = std::pow(curve.eps[i], s) * curve.values[i];

    const double eps_min = *std::min_element(curve.eps.begin(), curve.eps.end());
    const double cut = eps_min * std::pow(10.0, cfg.window_decades) * (1 + 1e-12);
    std::vector<double> x, y;
    for (std::size_t i = 0; i < n; ++i)
        if (curve.eps[i] <= cut) {
            x.push_back(std::log(1.0 / curve.eps[i]));
            y.push_back(d.scaled[i]);
        }
    d.window_points = y.size();
    d.window_lo = eps_min;
    d.window_hi = std::exp(-*std::min_element(x.begin(), x.end()));
    double lo = *std::min_element(y.begin(), y.end()), hi = *std::max_element(y.begin(), y.end());
    double sum = 0;
    for (double v : y) sum += v;
    d.mean = sum / double(y.size());
    d.amplitude = d.mean > 0 ? (hi - lo) / d.mean : 0.0;

    // remove the linear trend in log(1/eps), then scan periods up to the window span
    if (y.size() >= 8 && hi > lo) {
        auto lf = spectral::linear_fit(x, y);
        std::vector<double> r(y.size());
        double var = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            r[i] = y[i] - (lf.intercept + lf.slope * x[i]);
            var += r[i] * r[i];
        }
        var /= double(r.size());
        std::vector<double> steps;
        for (std::size_t i = 1; i < x.size(); ++i) steps.push_back(std::abs(x[i] - x[i - 1]));
        std::nth_element(steps.begin(), steps.begin() + long(steps.size() / 2), steps.end());
        double span = *std::max_element(x.begin(), x.end()) - *std::min_element(x.begin(), x.end());
        double p_min = 2.0 * steps[steps.size() / 2];
        if (span > p_min) {
            auto pg = spectral::sinusoid_scan(x, r, p_min, span, cfg.trials);
            d.period = pg.best_period;
            d.peak_power = pg.peak_power;
            d.median_power = pg.median_power;
            // a sinusoid of amplitude A has variance A^2 / 2
            d.peak_swing = d.mean > 0 ? 2.0 * std::sqrt(2.0 * pg.peak_power * var) / d.mean : 0.0;
            d.dominant_peak = pg.best_period.has_value() && pg.peak_power > cfg.peak_ratio * pg.median_power &&
                              d.peak_swing >= cfg.peak_floor;
        }
    }
    if (d.amplitude < cfg.converge_amplitude && !d.dominant_peak)
        d.verdict = Verdict::Converging;
    else if (d.amplitude > cfg.oscillate_amplitude && d.dominant_peak)
        d.verdict = Verdict::Oscillating;
    else
        d.verdict = Verdict::Inconclusive;
    return d;
}

ImageInvariance image_invariance_experiment(const geometry::Ifs& ifs, const geometry::ConformalMap& map, Function f,
                                            const GridSpec& grid, double delta, double s, const LimitConfig& cfg) {
    auto K = geometry::sample_attractor(ifs, delta);
    auto img = geometry::apply_map(map, K);
    auto g = geometric_grid(grid.eps_max, grid.eps_min, grid.points_per_decade);
    ImageInvariance out{K, img, {}, {}, {}, {}, {}, {}, false};
    out.curve = counting_curve(K, f, g);
    out.image_curve = counting_curve(img, f, g);
    out.fit = dimension_fit(out.curve);
    out.image_fit = dimension_fit(out.image_curve);
    out.diagnostic = limit_diagnostic(out.curve, s, cfg);
    out.image_diagnostic = limit_diagnostic(out.image_curve, s, cfg);
    double joint = std::hypot(out.fit.stderr_, out.image_fit.stderr_);
    out.dimensions_agree = std::abs(out.fit.s_hat - out.image_fit.s_hat) <= joint;
    return out;
}

MeasurabilityResult minkowski_measurability_experiment(const PointCloud& cloud, double s, const GridSpec& grid,
                                                       const LimitConfig& cfg) {
    MeasurabilityResult r;
    r.curve = counting_curve(cloud, Function::Minkowski, grid.eps_max, grid.eps_min, grid.points_per_decade);
    r.diagnostic = limit_diagnostic(r.curve, s, cfg);
    return r;
}

}  // namespace ahlfors::asymptotics
