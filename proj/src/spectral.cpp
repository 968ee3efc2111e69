#include "ahlfors/spectral.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "ahlfors/error.hpp"

namespace ahlfors::spectral {

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DomainError("linear_fit: size mismatch");
    const std::size_t n = x.size();
    if (n < 2) throw DomainError("linear_fit: need at least 2 points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= double(n);
    my /= double(n);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0) throw DomainError("linear_fit: x values are all equal");
    LinearFit fit;
    fit.n = n;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (n > 2) {
        double rss = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double r = y[i] - fit.intercept - fit.slope * x[i];
            rss += r * r;
        }
        fit.slope_stderr = std::sqrt(rss / double(n - 2) / sxx);
    }
    return fit;
}

Periodogram sinusoid_scan(std::span<const double> x, std::span<const double> y, double p_min,
                          double p_max, std::size_t trials) {
    if (x.size() != y.size()) throw DomainError("sinusoid_scan: size mismatch");
    if (!(p_min > 0) || !(p_max > p_min) || trials < 2)
        throw DomainError("sinusoid_scan: bad period range");
    Periodogram out;
    const std::size_t n = x.size();
    if (n < 4) return out;

    double mean = 0;
    for (double v : y) mean += v;
    mean /= double(n);
    Eigen::VectorXd r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = y[i] - mean;
    double tss = r.squaredNorm();

    out.periods.reserve(trials);
    out.powers.reserve(trials);
    const double f_lo = 1.0 / p_max, f_hi = 1.0 / p_min;
    Eigen::MatrixXd design(n, 3);
    for (std::size_t k = 0; k < trials; ++k) {
        double f = f_lo + (f_hi - f_lo) * double(k) / double(trials - 1);
        double w = 2.0 * std::numbers::pi * f;
        for (std::size_t i = 0; i < n; ++i) {
            design(i, 0) = 1.0;
            design(i, 1) = std::cos(w * x[i]);
            design(i, 2) = std::sin(w * x[i]);
        }
        double power = 0.0;
        if (tss > 0) {
            Eigen::VectorXd coef = design.colPivHouseholderQr().solve(r);
            double rss = (r - design * coef).squaredNorm();
            power = std::clamp(1.0 - rss / tss, 0.0, 1.0);
        }
        out.periods.push_back(1.0 / f);
        out.powers.push_back(power);
    }
    auto it = std::max_element(out.powers.begin(), out.powers.end());
    out.peak_power = *it;
    if (tss > 0) out.best_period = out.periods[std::size_t(it - out.powers.begin())];
    std::vector<double> sorted = out.powers;
    std::nth_element(sorted.begin(), sorted.begin() + long(sorted.size() / 2), sorted.end());
    out.median_power = sorted[sorted.size() / 2];
    return out;
}

}  // namespace ahlfors::spectral
