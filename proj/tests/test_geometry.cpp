#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "ahlfors/error.hpp"
#include "ahlfors/geometry.hpp"
#include "doctest.h"

using namespace ahlfors;
using namespace ahlfors::geometry;

namespace {

Vector v1(double x) { return Vector::Constant(1, x); }
Vector v2(double x, double y) {
    Vector v(2);
    v << x, y;
    return v;
}

Box box1(double lo, double hi) { return Box{v1(lo), v1(hi)}; }

Ifs cantor() {
    return Ifs({Similarity::scaling(1.0 / 3, v1(0)), Similarity::scaling(1.0 / 3, v1(2.0 / 3))},
               OpenSet({box1(0, 1)}));
}

Ifs right_gasket() {
    return Ifs({Similarity::scaling(0.5, v2(0, 0)), Similarity::scaling(0.5, v2(0.5, 0)),
                Similarity::scaling(0.5, v2(0, 0.5))},
               OpenSet({Box{v2(0, 0), v2(1, 1)}}));
}

Ifs equilateral_gasket() {
    const double h = std::sqrt(3.0) / 2;
    return Ifs({Similarity::scaling(0.5, v2(0, 0)), Similarity::scaling(0.5, v2(0.5, 0)),
                Similarity::scaling(0.5, v2(0.25, h / 2))});
}

// independent oracle: every word of length n applied to x0
std::vector<double> words_of_length(const std::vector<std::pair<double, double>>& maps, double x0, int n) {
    std::vector<double> pts{x0};
    for (int k = 0; k < n; ++k) {
        std::vector<double> next;
        for (double x : pts)
            for (auto [r, t] : maps) next.push_back(r * x + t);
        pts = std::move(next);
    }
    std::sort(pts.begin(), pts.end());
    return pts;
}

}  // namespace

TEST_CASE("similarity basics") {
    auto s = Similarity::planar(0.5, std::numbers::pi / 2, v2(1, 0));
    Vector y = s(v2(1, 0));
    CHECK(y[0] == doctest::Approx(1.0));
    CHECK(y[1] == doctest::Approx(0.5));
    Vector p = s.fixed_point();
    CHECK((s(p) - p).norm() < 1e-12);
    auto c = s.compose(Similarity::scaling(0.25, v2(0.1, 0.2)));
    CHECK(c.ratio() == doctest::Approx(0.125));
    Vector z = v2(0.3, -0.7);
    CHECK((c(z) - s(Similarity::scaling(0.25, v2(0.1, 0.2))(z))).norm() < 1e-14);
    CHECK_THROWS_AS(Similarity::scaling(1.0, v1(0)), DomainError);
    CHECK_THROWS_AS(Similarity(0.5, Matrix::Constant(2, 2, 1.0), v2(0, 0)), DomainError);
}

TEST_CASE("moran dimension") {
    std::vector<double> a{0.5, 0.5}, b{0.5, 0.5, 0.5}, c{0.5, 1.0 / 3};
    CHECK(moran_dimension(a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(moran_dimension(b) == doctest::Approx(std::log(3.0) / std::log(2.0)).epsilon(1e-12));
    double s = moran_dimension(c);
    CHECK(std::pow(0.5, s) + std::pow(1.0 / 3, s) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s == doctest::Approx(0.7879).epsilon(1e-4));
    std::vector<double> empty, bad{0.5, 1.2};
    CHECK_THROWS_AS(moran_dimension(empty), DomainError);
    CHECK_THROWS_AS(moran_dimension(bad), DomainError);
}

TEST_CASE("open set condition") {
    auto r = check_osc(cantor());
    CHECK(r.status == OscStatus::Certified);
    CHECK(check_osc(right_gasket()).status == OscStatus::Certified);

    Ifs overlap({Similarity::scaling(0.6, v1(0)), Similarity::scaling(0.6, v1(0.4))}, OpenSet({box1(0, 1)}));
    auto o = check_osc(overlap);
    CHECK(o.status == OscStatus::Violated);
    REQUIRE(o.violating_pair);
    CHECK(o.violating_pair->first == 0);
    CHECK(o.violating_pair->second == 1);

    CHECK(check_osc(equilateral_gasket()).status == OscStatus::NotCertifiable);
    CHECK(to_string(OscStatus::Certified) == "certified");
}

TEST_CASE("open set inner distance") {
    OpenSet u({box1(0, 1)});
    CHECK(u.contains(v1(0.5)));
    CHECK_FALSE(u.contains(v1(1.0)));
    CHECK(u.inner_distance(v1(0.2)) == doctest::Approx(0.2));
    CHECK(u.diameter() == doctest::Approx(1.0));
    OpenSet ball({Ball{v2(0, 0), 2.0}});
    CHECK(ball.inner_distance(v2(1, 0)) == doctest::Approx(1.0));
    CHECK(ball.inner_distance(v2(3, 0)) == 0.0);
}

TEST_CASE("attractor sampling: Cantor cut rule") {
    auto K = sample_attractor(cantor(), 1.0 / 27);
    CHECK(K.size() == 8);
    auto pts = K.coords();
    std::sort(pts.begin(), pts.end());
    auto oracle = words_of_length({{1.0 / 3, 0}, {1.0 / 3, 2.0 / 3}}, 0.0, 3);
    REQUIRE(pts.size() == oracle.size());
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK(pts[i] == doctest::Approx(oracle[i]).epsilon(1e-14));
    CHECK(sample_attractor(cantor(), 1.0).size() == 1);
    CHECK(sample_attractor(cantor(), 5.0).size() == 1);
    CHECK_THROWS_AS(sample_attractor(cantor(), 0.0), DomainError);
    CHECK_THROWS_AS(sample_attractor(cantor(), -1.0), DomainError);
}

TEST_CASE("attractor sampling: point count equals words cut at the first admissible length") {
    // unequal ratios: count words I with r_I <= delta < r_{I-} by direct recursion
    std::vector<double> rs{0.5, 1.0 / 3};
    Ifs ifs({Similarity::scaling(0.5, v1(0)), Similarity::scaling(1.0 / 3, v1(2.0 / 3))}, OpenSet({box1(0, 1)}));
    for (double delta : {0.2, 0.05, 0.01, 0.003}) {
        std::function<std::size_t(double)> count = [&](double r) -> std::size_t {
            if (r <= delta * (1 + 1e-9)) return 1;
            std::size_t c = 0;
            for (double q : rs) c += count(r * q);
            return c;
        };
        CHECK(sample_attractor(ifs, delta).size() == count(1.0));
    }
}

TEST_CASE("attractor sampling: gaskets") {
    CHECK(attractor_diameter_bound(equilateral_gasket()) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sample_attractor(equilateral_gasket(), std::pow(2.0, -10)).size() == 59049);
    // the right-angle gasket has diameter sqrt 2, so one more level is needed
    CHECK(attractor_diameter_bound(right_gasket()) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(sample_attractor(right_gasket(), std::pow(2.0, -10)).size() == 177147);
    CHECK(sample_attractor(right_gasket(), 0.5 * std::sqrt(2.0)).size() == 3);
}

TEST_CASE("attractor sampling: budget and invariance") {
    SampleOptions opt;
    opt.max_points = 100;
    CHECK_THROWS_AS(sample_attractor(cantor(), 1e-4, opt), BudgetError);
    // every sample point lies in the attractor: for Cantor, base-3 digits avoid 1
    auto K = sample_attractor(cantor(), 1e-4);
    for (double x : K.coords()) {
        double y = x;
        for (int k = 0; k < 9; ++k) {
            y *= 3;
            int digit = int(std::floor(y + 1e-9));
            CHECK(digit != 1);
            y -= digit;
        }
    }
}

TEST_CASE("attractor point in witness") {
    auto p = attractor_point_in_witness(cantor());
    REQUIRE(p);
    CHECK(cantor().witness()->contains(*p));
}

TEST_CASE("point cloud") {
    PointCloud c(2, 0.1, {0, 0, 3, 4, 1, 1});
    CHECK(c.size() == 3);
    CHECK(c.diameter() == doctest::Approx(5.0));
    auto [lo, hi] = c.bounding_box();
    CHECK(lo[1] == 0.0);
    CHECK(hi[0] == 3.0);
    std::vector<std::size_t> idx{2};
    CHECK(c.subset(idx).size() == 1);
    CHECK(c.merged(c).size() == 6);
    CHECK_THROWS_AS(PointCloud(2, 0.1, {1, 2, 3}), DomainError);
    CHECK_THROWS_AS(PointCloud(1, -1, {1}), DomainError);
    CHECK_THROWS_AS(PointCloud(1, 0, {}), DomainError);
}

TEST_CASE("conformal maps: derivative norms against closed forms") {
    auto inv = ConformalMap::inversion(v2(2, 0), 1.0);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(0, 1);
    for (int k = 0; k < 50; ++k) {
        Vector x = v2(U(rng), U(rng));
        double expect = 1.0 / (x - v2(2, 0)).squaredNorm();
        CHECK(inv.derivative_norm(x) == doctest::Approx(expect).epsilon(1e-12));
        // finite-difference check of the conformal factor
        Vector h = v2(1e-6, 0);
        double fd = (inv(x + h) - inv(x - h)).norm() / (2 * h.norm());
        CHECK(fd == doctest::Approx(expect).epsilon(1e-6));
        CHECK((inv(inv(x)) - x).norm() < 1e-12);
    }
    std::complex<double> a(1, 1), b(0.5, 0), c(0.2, -0.1), d(2, 0);
    auto mob = ConformalMap::mobius(a, b, c, d);
    std::complex<double> z(0.3, 0.4);
    double expect = std::abs(a * d - b * c) / std::norm(c * z + d);
    CHECK(mob.derivative_norm(v2(0.3, 0.4)) == doctest::Approx(expect).epsilon(1e-12));
    Vector w = mob(v2(0.3, 0.4));
    std::complex<double> fz = (a * z + b) / (c * z + d);
    CHECK(w[0] == doctest::Approx(fz.real()));
    CHECK(w[1] == doctest::Approx(fz.imag()));
    auto back = mob.inverse()(w);
    CHECK((back - v2(0.3, 0.4)).norm() < 1e-12);
}

TEST_CASE("apply map") {
    auto K = sample_attractor(cantor(), 1e-3);
    auto same = apply_map(ConformalMap::identity(1), K);
    CHECK(same.coords() == K.coords());

    auto K2 = sample_attractor(right_gasket(), 1.0 / 64);
    auto img = apply_map(ConformalMap::inversion(v2(2, 0), 1.0), K2);
    CHECK(img.size() == K2.size());
    for (double x : img.coords()) CHECK(std::isfinite(x));
    CHECK_THROWS_AS(apply_map(ConformalMap::inversion(v2(0.25, 0.25), 1.0), K2), DomainError);
}

TEST_CASE("almost similarity estimates") {
    auto K = sample_attractor(right_gasket(), 1.0 / 32);
    auto sc = ConformalMap::affine(3.0, Matrix::Identity(2, 2), v2(1, 1));
    auto e = estimate_almost_similarity(sc, K, 0.5, 1.0);
    CHECK(e.c_k == doctest::Approx(3.0));
    CHECK(e.deviation == 1.0);
    auto id = estimate_almost_similarity(ConformalMap::identity(2), K, 0.5, 1.0);
    CHECK(id.c_k == doctest::Approx(1.0));
    CHECK(id.deviation == 1.0);
    CHECK_THROWS_AS(estimate_almost_similarity(sc, PointCloud(2, 0, {0, 0}), 0, 1), DomainError);

    // small cells near x0: C_K -> |lambda_x0| and deviation - 1 shrinks linearly in diam
    auto inv = ConformalMap::inversion(v1(2), 1.0);
    auto cells = sample_attractor(cantor(), 1e-6);
    double prev = 1e9;
    for (int k = 2; k <= 6; ++k) {
        std::vector<double> pts;
        for (double x : cells.coords())
            if (x < std::pow(3.0, -k)) pts.push_back(x);
        PointCloud cell(1, 1e-6, pts);
        auto est = estimate_almost_similarity(inv, cell, 0.0, 1.0);
        CHECK(est.c_k == doctest::Approx(0.25).epsilon(2 * std::pow(3.0, -k)));
        double ratio = (est.deviation - 1) / est.diameter;
        CHECK(ratio < 2.0);
        CHECK(est.deviation - 1 < prev);
        prev = est.deviation - 1;
    }
}

TEST_CASE("almost similarity exponent fit") {
    auto cells = sample_attractor(cantor(), 1e-7);
    std::vector<PointCloud> nested;
    for (int k = 1; k <= 6; ++k) {
        std::vector<double> pts;
        for (double x : cells.coords())
            if (x < std::pow(3.0, -k)) pts.push_back(x);
        nested.emplace_back(1, 1e-7, pts);
    }
    auto fit = almost_similarity_exponent_fit(ConformalMap::inversion(v1(2), 1.0), nested);
    CHECK_FALSE(fit.exact_similarity);
    CHECK(std::abs(fit.alpha - 1.0) <= 0.15);
    auto aff = almost_similarity_exponent_fit(ConformalMap::affine(2.0, Matrix::Identity(1, 1), v1(0)), nested);
    CHECK(aff.exact_similarity);
    std::vector<PointCloud> two(nested.begin(), nested.begin() + 2);
    CHECK_THROWS_AS(almost_similarity_exponent_fit(ConformalMap::inversion(v1(2), 1.0), two), PreconditionError);
}
