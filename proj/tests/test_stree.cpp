#include <cmath>
#include <random>

#include "ahlfors/error.hpp"
#include "ahlfors/geometry.hpp"
#include "ahlfors/stree.hpp"
#include "doctest.h"

using namespace ahlfors;
using namespace ahlfors::stree;
using geometry::Ifs;
using geometry::OpenSet;
using geometry::PointCloud;
using geometry::Similarity;

namespace {

Vector v1(double x) { return Vector::Constant(1, x); }
Vector v2(double x, double y) {
    Vector v(2);
    v << x, y;
    return v;
}

Ifs line_ifs(double r1, double r2) {
    return Ifs({Similarity::scaling(r1, v1(0)), Similarity::scaling(r2, v1(1 - r2))},
               OpenSet({geometry::Box{v1(0), v1(1)}}));
}

Ifs gasket() {
    return Ifs({Similarity::scaling(0.5, v2(0, 0)), Similarity::scaling(0.5, v2(0.5, 0)),
                Similarity::scaling(0.5, v2(0, 0.5))},
               OpenSet({geometry::Box{v2(0, 0), v2(1, 1)}}));
}

PointCloud cantor_sample(int level) {
    std::vector<double> pts{0.0};
    for (int k = 0; k < level; ++k) {
        std::vector<double> next;
        for (double x : pts) {
            next.push_back(x / 3);
            next.push_back(x / 3 + 2.0 / 3);
        }
        pts = next;
    }
    return PointCloud(1, std::pow(3.0, -level), pts);
}

double level_sum(const STree& t, std::size_t n) {
    double s = 0;
    for (auto i : t.level(n)) s += std::pow(t.node(i).r, t.s());
    return s;
}

}  // namespace

TEST_CASE("tree from ifs: Cantor depth 1") {
    auto t = tree_from_ifs(line_ifs(1.0 / 3, 1.0 / 3), v1(0.5), 1);
    CHECK(t.size() == 3);
    CHECK(t.at(Word{0}).x[0] == doctest::Approx(1.0 / 6));
    CHECK(t.at(Word{1}).x[0] == doctest::Approx(5.0 / 6));
    CHECK(t.constants().C == doctest::Approx(0.5));
    CHECK(t.constants().D == doctest::Approx(1.0));
    CHECK(t.constants().rho == doctest::Approx(1.0 / 3));
    CHECK(t.constants().R == doctest::Approx(1.0 / 3));
    CHECK(t.s() == doctest::Approx(std::log(2.0) / std::log(3.0)));
}

TEST_CASE("tree from ifs: gasket radii and depth 0") {
    auto t = tree_from_ifs(gasket(), v2(0.25, 0.25), 2);
    CHECK(t.level(2).size() == 9);
    for (auto i : t.level(2)) CHECK(t.node(i).r == doctest::Approx(0.25));
    auto z = tree_from_ifs(gasket(), v2(0.25, 0.25), 0);
    CHECK(z.size() == 1);
    CHECK(z.node(0).word.empty());
    CHECK(z.node(0).r == 1.0);
    CHECK_THROWS_AS(tree_from_ifs(gasket(), v2(1.5, 0.25), 2), PreconditionError);
}

TEST_CASE("tree from ifs passes every axiom with E = 1") {
    for (auto ifs : {line_ifs(0.5, 1.0 / 3), line_ifs(1.0 / 3, 1.0 / 3), line_ifs(0.4, 0.25), gasket()}) {
        auto t = tree_from_ifs(ifs, ifs.dim() == 1 ? 6 : 4);
        auto rep = verify_axioms(t);
        CHECK(rep.passed());
        CHECK(rep.measured.E == doctest::Approx(1.0).epsilon(1e-9));
        for (std::size_t n = 0; n <= t.depth(); ++n) CHECK(level_sum(t, n) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("centres follow the map compositions") {
    auto ifs = line_ifs(0.5, 1.0 / 3);
    auto t = tree_from_ifs(ifs, v1(0.4), 5);
    for (const auto& node : t.nodes()) {
        // apply maps innermost-last: x_I = phi_{i1}(...phi_{in}(x0))
        double x = 0.4, r = 1.0;
        for (std::size_t k = node.word.size(); k-- > 0;) {
            double q = node.word[k] == 0 ? 0.5 : 1.0 / 3;
            double shift = node.word[k] == 0 ? 0.0 : 2.0 / 3;
            x = q * x + shift;
            r *= q;
        }
        CHECK(node.x[0] == doctest::Approx(x).epsilon(1e-13));
        CHECK(node.r == doctest::Approx(r).epsilon(1e-13));
    }
}

TEST_CASE("perturbed radius breaks T3 with a witness") {
    auto t = tree_from_ifs(line_ifs(1.0 / 3, 1.0 / 3), v1(0.5), 3);
    auto nodes = t.node_map();
    nodes[Word{0, 1}].r *= 1.1;
    STree bad(t.shift(), t.s(), t.constants(), nodes);
    auto rep = verify_axioms(bad);
    CHECK_FALSE(rep.passed());
    auto* t3 = rep.find("T3");
    REQUIRE(t3);
    CHECK_FALSE(t3->passed);
    CHECK(t3->witness);
}

TEST_CASE("tree construction rejects malformed data") {
    auto t = tree_from_ifs(line_ifs(1.0 / 3, 1.0 / 3), v1(0.5), 2);
    auto nodes = t.node_map();
    auto no_root = nodes;
    no_root[Word{}].r = 0.5;
    CHECK_THROWS(STree(t.shift(), t.s(), t.constants(), no_root));
    auto orphan = nodes;
    orphan.erase(Word{0});
    CHECK_THROWS(STree(t.shift(), t.s(), t.constants(), orphan));
}

TEST_CASE("tree from packing: hand examples") {
    auto t = tree_from_packing(PointCloud(1, 0, {0, 1}), {}, 0.1, 1.0, 1);
    CHECK(t.level(1).size() == 2);
    for (auto i : t.level(1)) CHECK(t.node(i).r == doctest::Approx(0.5));

    auto single = tree_from_packing(PointCloud(2, 0, {0.3, 0.3}), {}, 0.1, 1.0, 4);
    CHECK(single.depth() == 4);
    for (const auto& n : single.nodes()) CHECK(n.r == doctest::Approx(1.0));

    CHECK_THROWS_AS(tree_from_packing(PointCloud(1, 0, {0, 1}), {}, 0.2, 1.0, 1), DomainError);
    CHECK_THROWS_AS(tree_from_packing(PointCloud(1, 0, {0, 1}), {}, 0.1, 0.0, 1), DomainError);
}

TEST_CASE("tree from packing on a Cantor sample passes the axioms") {
    const double s = std::log(2.0) / std::log(3.0), delta = 0.15;
    auto t = tree_from_packing(cantor_sample(8), {}, delta, s, 3);
    auto rep = verify_axioms(t);
    CHECK(rep.passed());
    for (const auto& c : rep.checks) CHECK_MESSAGE(std::isfinite(c.measured), c.axiom);
    auto* dd = rep.find("D_delta");
    REQUIRE(dd);
    CHECK(dd->measured <= 2 / (1 - delta));
    for (std::size_t n = 0; n <= t.depth(); ++n) CHECK(level_sum(t, n) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("packing levels are separated at their scale") {
    const double delta = 0.12;
    auto K = cantor_sample(7);
    auto t = tree_from_packing(K, {}, delta, 0.6309, 3);
    for (std::size_t n = 1; n <= 3; ++n) {
        auto lv = t.level(n);
        for (std::size_t a = 0; a < lv.size(); ++a)
            for (std::size_t b = a + 1; b < lv.size(); ++b)
                CHECK(std::abs(t.node(lv[a]).x[0] - t.node(lv[b]).x[0]) > std::pow(delta, n));
    }
}

TEST_CASE("pruned mass on the equal-ratio ternary tree") {
    auto t = tree_from_ifs(gasket(), v2(0.25, 0.25), 5);
    ChoiceFunction first = [](const Word&) { return Symbol(0); };
    CHECK(pruned_mass(t, first, Word{}, 0) == doctest::Approx(1.0));
    CHECK(pruned_mass(t, first, Word{}, 1) == doctest::Approx(2.0 / 3));
    CHECK(pruned_mass(t, first, Word{}, 4) == doctest::Approx(std::pow(2.0 / 3, 4)).epsilon(1e-12));
    CHECK(pruned_mass(t, first, Word{1}, 0) == doctest::Approx(1.0 / 3));
    CHECK_THROWS_AS(pruned_mass(t, first, Word{}, 6), DomainError);
    ChoiceFunction bad = [](const Word&) { return Symbol(7); };
    CHECK_THROWS_AS(pruned_mass(t, bad, Word{}, 1), PreconditionError);
}

TEST_CASE("pruned mass never exceeds its geometric bound") {
    auto t = tree_from_ifs(line_ifs(0.5, 1.0 / 3), v1(0.4), 8);
    std::mt19937_64 rng(3);
    ChoiceFunction random_choice = [&](const Word& w) { return Symbol((w.size() + rng()) % 2); };
    for (std::size_t m = 0; m <= 6; ++m)
        for (const Word& I : {Word{}, Word{0}, Word{1, 0}}) {
            double mass = pruned_mass(t, random_choice, I, m);
            CHECK(mass <= pruned_mass_bound(t, I, m) * (1 + 1e-12));
            CHECK(mass >= 0.0);
        }
}

TEST_CASE("power tree") {
    auto c = tree_from_ifs(line_ifs(1.0 / 3, 1.0 / 3), v1(0.5), 6);
    auto same = power_tree(c, 1);
    CHECK(same.size() == c.size());
    auto p = power_tree(c, 2);
    CHECK(p.depth() == 3);
    CHECK(p.shift().alphabet_size() == 4);
    for (auto i : p.level(1)) CHECK(p.node(i).r == doctest::Approx(1.0 / 9));
    CHECK(verify_axioms(p).passed());

    auto u = tree_from_ifs(line_ifs(0.5, 1.0 / 3), v1(0.4), 4);
    auto q = power_tree(u, 2);
    std::vector<double> r;
    for (auto i : q.level(1)) r.push_back(q.node(i).r);
    std::sort(r.begin(), r.end());
    REQUIRE(r.size() == 4);
    CHECK(r[0] == doctest::Approx(1.0 / 9));
    CHECK(r[1] == doctest::Approx(1.0 / 6));
    CHECK(r[2] == doctest::Approx(1.0 / 6));
    CHECK(r[3] == doctest::Approx(1.0 / 4));
    for (std::size_t n = 0; n <= q.depth(); ++n) CHECK(level_sum(q, n) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(power_tree(u, 0), DomainError);
    CHECK_THROWS_AS(power_tree(u, 5), DomainError);
}

TEST_CASE("ratio limit diagnostic") {
    auto t = tree_from_ifs(line_ifs(0.5, 1.0 / 3), v1(0.4), 6);
    for (Symbol i : {Symbol(0), Symbol(1)}) {
        auto rs = ratio_limit_diagnostic(t, i, Word{});
        CHECK(rs.ratios.size() >= 2);
        for (double q : rs.ratios) CHECK(q == doctest::Approx(i == 0 ? 0.5 : 1.0 / 3).epsilon(1e-12));
    }
    auto tip = ratio_limit_diagnostic(t, 0, Word{1, 1, 1, 1, 1});
    CHECK(tip.ratios.size() == 1);

    auto pk = tree_from_packing(cantor_sample(9), {}, 0.15, std::log(2.0) / std::log(3.0), 3);
    auto rs = ratio_limit_diagnostic(pk, 0, Word{});
    CHECK(rs.estimate > 0.0);
    CHECK(rs.estimate < 1.0);
}
