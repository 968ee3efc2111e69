#include <cmath>
#include <sstream>

#include "ahlfors/error.hpp"
#include "ahlfors/io.hpp"
#include "doctest.h"

using namespace ahlfors;
using io::json;

namespace {

geometry::Vector v1(double x) { return geometry::Vector::Constant(1, x); }

}  // namespace

TEST_CASE("shift and potential round-trip") {
    auto doc = json::parse(R"({"alphabet": 2, "transition": [[1, 1], [1, 0]]})");
    auto sh = io::shift_from_json(doc);
    CHECK(sh.alphabet_size() == 2);
    CHECK_FALSE(sh.is_full());
    auto again = io::shift_from_json(io::to_json(sh));
    CHECK(again.transition() == sh.transition());
    CHECK(io::shift_from_json(json::parse(R"({"alphabet": 3})")).is_full());

    auto p = json::parse(R"({"depth": 2, "values": {"00": 0.5, "01": 1.25, "10": 0.75}})");
    auto f = io::potential_from_json(p, sh);
    CHECK(f.value(symbolic::Word{0, 1, 0}) == 1.25);
    auto f2 = io::potential_from_json(io::to_json(f), sh);
    CHECK(f2.value(symbolic::Word{1, 0}) == 0.75);

    CHECK_THROWS_AS(io::shift_from_json(json::parse(R"({"alphabet": "two"})")), InputError);
    CHECK_THROWS_AS(io::potential_from_json(json::parse(R"({"depth": 1, "values": {"0": 1.0}})"), sh), InputError);
}

TEST_CASE("ifs round-trip keeps maps and witness") {
    auto doc = json::parse(R"({
      "maps": [{"ratio": 0.5, "translation": [0]}, {"ratio": 0.3333333333333333, "translation": [0.6666666666666666]}],
      "witness": [{"box": {"lo": [0], "hi": [1]}}]})");
    auto ifs = io::ifs_from_json(doc);
    CHECK(ifs.size() == 2);
    CHECK(geometry::check_osc(ifs).status == geometry::OscStatus::Certified);
    auto back = io::ifs_from_json(io::to_json(ifs));
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(back.map(i).ratio() == ifs.map(i).ratio());
        CHECK(back.map(i).translation() == ifs.map(i).translation());
    }
    REQUIRE(back.witness());
    CHECK(back.witness()->contains(v1(0.5)));

    auto planar = io::ifs_from_json(json::parse(R"({"maps": [
        {"ratio": 0.5, "angle": 1.5707963267948966, "translation": [0, 0]},
        {"ratio": 0.5, "translation": [0.5, 0]}]})"));
    CHECK(planar.dim() == 2);
    CHECK_FALSE(planar.witness());
    CHECK_THROWS_AS(io::ifs_from_json(json::parse(R"({"maps": [{"ratio": 1.5, "translation": [0]},
                                                               {"ratio": 0.5, "translation": [0]}]})")),
                    InputError);
    CHECK_THROWS_AS(io::ifs_from_json(json::parse(R"({"nomaps": 1})")), InputError);
}

TEST_CASE("conformal map round-trip") {
    for (const char* text : {R"({"kind": "inversion", "center": [2, 0], "radius": 1})",
                             R"({"kind": "mobius", "a": [1, 0], "b": [0.5, 0], "c": [0.2, 0.1], "d": [2, 0]})",
                             R"({"kind": "affine", "scale": 3, "translation": [1, 1], "margin": 0.01})"}) {
        auto m = io::map_from_json(json::parse(text));
        auto m2 = io::map_from_json(io::to_json(m));
        CHECK(m2.kind() == m.kind());
        CHECK(m2.margin() == m.margin());
        geometry::Vector x(2);
        x << 0.3, 0.4;
        CHECK((m2(x) - m(x)).norm() < 1e-15);
    }
    CHECK_THROWS_AS(io::map_from_json(json::parse(R"({"kind": "shear"})")), InputError);
}

TEST_CASE("point cloud text format") {
    geometry::PointCloud c(2, 0.001, {0.1, 0.2, 1.0 / 3, -2.5e-7});
    std::stringstream ss;
    io::write_cloud(ss, c);
    auto text = ss.str();
    CHECK(text.rfind("dim=2 delta=", 0) == 0);
    auto back = io::read_cloud(ss);
    CHECK(back.coords() == c.coords());
    CHECK(back.resolution() == c.resolution());

    std::stringstream bad("dim=2 delta=0.1 n=3\n0 0\n1 1\n");
    CHECK_THROWS_AS(io::read_cloud(bad), InputError);
    std::stringstream nohead("0 0\n");
    CHECK_THROWS_AS(io::read_cloud(nohead), InputError);
    CHECK_THROWS_AS(io::read_cloud_file("/nonexistent/cloud.pts"), InputError);
}

TEST_CASE("curve csv round-trip") {
    asymptotics::CountingCurve c;
    c.function = counting::Function::Packing;
    c.eps = {0.1, 0.05, 0.025};
    c.values = {3, 7, 15};
    std::stringstream ss;
    io::write_curve(ss, c, 0.63);
    CHECK(ss.str().rfind("function,epsilon,value,eps_pow_s_value,s", 0) == 0);
    auto back = io::read_curve(ss);
    CHECK(back.s == 0.63);
    CHECK(back.curve.function == counting::Function::Packing);
    CHECK(back.curve.eps == c.eps);
    CHECK(back.curve.values == c.values);
    std::stringstream junk("function,epsilon\nS,abc\n");
    CHECK_THROWS_AS(io::read_curve(junk), InputError);
}

TEST_CASE("tree json round-trip") {
    geometry::Ifs ifs({geometry::Similarity::scaling(0.5, v1(0)), geometry::Similarity::scaling(1.0 / 3, v1(2.0 / 3))},
                      geometry::OpenSet({geometry::Box{v1(0), v1(1)}}));
    auto t = stree::tree_from_ifs(ifs, 4);
    auto j = io::to_json(t);
    auto back = io::tree_from_json(j);
    CHECK(back.size() == t.size());
    CHECK(back.s() == t.s());
    CHECK(back.constants().C == t.constants().C);
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(back.node(i).word == t.node(i).word);
        CHECK(back.node(i).r == t.node(i).r);
        CHECK(back.node(i).x == t.node(i).x);
    }
    CHECK(io::dump(io::to_json(back)) == io::dump(j));
    auto rep = io::to_json(stree::verify_axioms(back), back.shift().alphabet_size());
    CHECK(rep["passed"] == true);
}

TEST_CASE("renewal spec defaults") {
    auto doc = json::parse(R"({"alphabet": 2, "potential": {"depth": 1, "values": {"0": 0.6931471805599453, "1": 0.6931471805599453}}})");
    auto spec = io::renewal_from_json(doc);
    CHECK(symbolic::renewal_sum(spec, 1.0) == 2.0);
    CHECK_THROWS_AS(io::renewal_from_json(json::parse(R"({"alphabet": 2})")), InputError);
}

TEST_CASE("format double keeps full precision") {
    double x = 0.1 + 0.2;
    CHECK(std::stod(io::format_double(x)) == x);
    CHECK(io::format_double(1.0) == "1");
}
