#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ahlfors/io.hpp"
#include "doctest.h"

using namespace ahlfors;
namespace fs = std::filesystem;

namespace {

const fs::path work = AHLFORS_WORKDIR;

std::string path(const std::string& name) { return (work / name).string(); }

std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void put(const std::string& name, const std::string& text) { std::ofstream(path(name)) << text; }

// runs the CLI with stdout captured to `name`.out; returns the exit code
int run(const std::string& args, const std::string& name = "last") {
    std::string cmd = std::string("cd '") + work.string() + "' && '" + AHLFORS_CLI + "' " + args + " > '" +
                      path(name + ".out") + "' 2> '" + path(name + ".err") + "'";
    int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

io::json out_json(const std::string& name = "last") { return io::json::parse(slurp(path(name + ".out"))); }

struct Setup {
    Setup() {
        fs::remove_all(work);
        fs::create_directories(work);
        put("cantor.json", R"({"maps": [{"ratio": 0.3333333333333333, "translation": [0]},
            {"ratio": 0.3333333333333333, "translation": [0.6666666666666666]}],
            "witness": [{"box": {"lo": [0], "hi": [1]}}]})");
        put("gasket.json", R"({"maps": [{"ratio": 0.5, "translation": [0, 0]}, {"ratio": 0.5, "translation": [0.5, 0]},
            {"ratio": 0.5, "translation": [0.25, 0.4330127018922193]}]})");
        put("overlap.json", R"({"maps": [{"ratio": 0.6, "translation": [0]}, {"ratio": 0.6, "translation": [0.4]}],
            "witness": [{"box": {"lo": [0], "hi": [1]}}]})");
        put("inv.json", R"({"kind": "inversion", "center": [2], "radius": 1})");
        put("renewal.json", R"({"alphabet": 2, "potential": {"depth": 1,
            "values": {"0": 0.6931471805599453, "1": 1.0986122886681098}}})");
        std::string seg = "dim=1 delta=0.0001 n=10001\n";
        for (int i = 0; i <= 10000; ++i) seg += io::format_double(i / 10000.0) + "\n";
        put("seg.pts", seg);
    }
};
const Setup setup_once;

}  // namespace

TEST_CASE("gen writes the cut-rule sample and a manifest") {
    REQUIRE(run("gen --ifs cantor.json --delta 1e-4 -o cantor.pts") == 0);
    auto K = io::read_cloud_file(path("cantor.pts"));
    CHECK(K.size() == 512);
    auto m = io::read_json_file(path("cantor.pts.manifest.json"));
    CHECK(m["command"] == "gen");
    CHECK(m["config"]["delta"] == 1e-4);

    REQUIRE(run("gen --ifs gasket.json --delta 0.5 -o gasket.pts") == 0);
    CHECK(io::read_cloud_file(path("gasket.pts")).size() == 3);
}

TEST_CASE("gen rejects bad input") {
    CHECK(run("gen --ifs cantor.json --delta -1 -o x.pts") == 2);
    CHECK(run("gen --ifs nothere.json --delta 0.1 -o x.pts") == 2);
    CHECK(run("gen --ifs overlap.json --delta 0.1 --require-osc -o x.pts") == 3);
    CHECK(run("frobnicate") == 2);
}

TEST_CASE("files written by the CLI read back exactly") {
    REQUIRE(run("gen --ifs cantor.json --delta 1e-4 -o rt.pts") == 0);
    auto K = io::read_cloud_file(path("rt.pts"));
    std::stringstream ss;
    io::write_cloud(ss, K);
    CHECK(ss.str() == slurp(path("rt.pts")));

    REQUIRE(run("count --fn separated --cloud rt.pts --emax 0.3 --emin 1e-3 -o rt.csv") == 0);
    auto cf = io::read_curve_file(path("rt.csv"));
    std::stringstream cs;
    io::write_curve(cs, cf.curve, cf.s);
    CHECK(cs.str() == slurp(path("rt.csv")));

    REQUIRE(run("tree build --mode ifs --ifs cantor.json --depth 4 -o rt_tree.json") == 0);
    auto doc = io::read_json_file(path("rt_tree.json"));
    auto t = io::tree_from_json(doc);
    auto again = io::to_json(t);
    for (auto it = again.begin(); it != again.end(); ++it) CHECK(doc[it.key()] == it.value());
}

TEST_CASE("count produces monotone curves and honours the guards") {
    REQUIRE(run("gen --ifs cantor.json --delta 1e-4 -o c.pts") == 0);
    REQUIRE(run("count --fn separated --cloud c.pts --emax 0.3 --emin 1e-3 -o c.csv") == 0);
    auto cf = io::read_curve_file(path("c.csv"));
    CHECK(cf.curve.eps.size() == 100);
    for (std::size_t i = 1; i < cf.curve.values.size(); ++i) CHECK(cf.curve.values[i] >= cf.curve.values[i - 1]);
    CHECK(cf.s == doctest::Approx(0.6309).epsilon(0.03));

    CHECK(run("count --fn separated --cloud missing.pts --emax 0.3 --emin 1e-3 -o m.csv") == 2);
    CHECK(run("count --fn separated --cloud c.pts --emax 0.3 --emin 1e-5 -o m.csv") == 3);

    REQUIRE(run("count --fn minkowski --cloud seg.pts --emax 0.1 --emin 1e-2 --ppd 10 --s 1 -o seg.csv") == 0);
    auto seg = io::read_curve_file(path("seg.csv"));
    CHECK(seg.s == 1.0);
    CHECK(slurp(path("seg.csv")).find("eps_pow_s_value") != std::string::npos);
    CHECK(seg.curve.values.front() * seg.curve.eps.front() == doctest::Approx(1.2).epsilon(0.02));
}

TEST_CASE("dim and limit reports embed the manifest") {
    REQUIRE(run("gen --ifs cantor.json --delta 1e-5 -o d.pts") == 0);
    REQUIRE(run("count --fn separated --cloud d.pts --emax 0.1 --emin 1e-4 -o d.csv") == 0);
    REQUIRE(run("dim --curve d.csv") == 0);
    auto j = out_json();
    CHECK(j["s_hat"].get<double>() == doctest::Approx(0.6309).epsilon(0.03));
    CHECK(j.contains("stderr"));
    CHECK(j["manifest"]["command"] == "dim");

    REQUIRE(run("limit --curve d.csv --s 0.6309297535714574") == 0);
    auto l = out_json();
    CHECK(l.contains("verdict"));
    CHECK(l.contains("window"));
    CHECK(l["config"]["peak_ratio"] == 5.0);
    CHECK(l["manifest"]["config"]["s"] == 0.6309297535714574);
}

TEST_CASE("tree subcommands") {
    REQUIRE(run("gen --ifs cantor.json --delta 1.5e-4 -o p.pts") == 0);
    REQUIRE(run("tree build --mode packing --cloud p.pts --delta 0.15 --s 0.6309 --depth 3 -o p_tree.json") == 0);
    auto doc = io::read_json_file(path("p_tree.json"));
    CHECK(doc["axiom_report"]["passed"] == true);
    CHECK(doc["packing_delta"] == 0.15);

    REQUIRE(run("tree verify p_tree.json") == 0);
    CHECK(out_json()["passed"] == true);

    REQUIRE(run("tree build --mode ifs --ifs cantor.json --depth 4 -o i_tree.json") == 0);
    REQUIRE(run("tree power i_tree.json --m 2 -o i2.json") == 0);
    auto p = io::tree_from_json(io::read_json_file(path("i2.json")));
    CHECK(p.depth() == 2);
    CHECK(p.shift().alphabet_size() == 4);
    CHECK(run("tree power i_tree.json --m 9") == 2);

    REQUIRE(run("tree prune i_tree.json --word 0 --m 2 --choice first") == 0);
    auto pr = out_json();
    CHECK(pr["value"].get<double>() == doctest::Approx(0.125));
    CHECK(pr["within_bound"] == true);

    CHECK(run("tree build --mode ifs --ifs cantor.json --x0 5 --depth 2 -o bad.json") == 3);
    CHECK(run("tree build --mode packing --cloud p.pts --delta 0.3 --s 0.6309 --depth 2 -o bad.json") == 2);
}

TEST_CASE("renewal, transform and axioms") {
    REQUIRE(run("renewal --spec renewal.json --points 21") == 0);
    auto r = out_json();
    CHECK(r["series"].size() == 21);
    CHECK(r["delta"].get<double>() == doctest::Approx(0.78788).epsilon(1e-4));
    CHECK(run("renewal --spec renewal.json --amax 60 --points 3 --budget-nodes 1000") == 4);

    REQUIRE(run("gen --ifs cantor.json --delta 1e-3 -o t.pts") == 0);
    REQUIRE(run("transform --map inv.json --cloud t.pts -o t_inv.pts") == 0);
    auto K = io::read_cloud_file(path("t.pts"));
    auto img = io::read_cloud_file(path("t_inv.pts"));
    REQUIRE(img.size() == K.size());
    for (std::size_t i = 0; i < K.size(); ++i) {
        double x = K.point(i)[0];
        CHECK(img.point(i)[0] == doctest::Approx(2 + (x - 2) / ((x - 2) * (x - 2))));
    }

    REQUIRE(run("gen --ifs cantor.json --delta 0.01 -o a.pts") == 0);
    REQUIRE(run("axioms --fn packing --cloud a.pts --eps 0.05,0.1,0.2") == 0);
    auto a = out_json();
    CHECK(a["all_passed"] == true);
    CHECK(a["manifest"]["command"] == "axioms");
}

TEST_CASE("identical configurations give identical bytes") {
    for (const char* tag : {"x", "y"}) {
        std::string t = tag;
        REQUIRE(run("gen --ifs gasket.json --delta 0.002 -o det_" + t + ".pts") == 0);
        REQUIRE(run("count --fn packing --cloud det_" + t + ".pts --emax 0.3 --emin 0.03 -o det_" + t + ".csv") == 0);
        REQUIRE(run("tree build --mode packing --cloud det_" + t + ".pts --delta 0.12 --s 1.58 --depth 2 -o det_" + t +
                    ".json") == 0);
    }
    CHECK(slurp(path("det_x.pts")) == slurp(path("det_y.pts")));
    CHECK(slurp(path("det_x.csv")) == slurp(path("det_y.csv")));
    // manifests differ only in the file names they echo
    auto jx = io::read_json_file(path("det_x.json")), jy = io::read_json_file(path("det_y.json"));
    jx.erase("manifest");
    jy.erase("manifest");
    CHECK(jx == jy);

    REQUIRE(run("--threads 1 count --fn packing --cloud det_x.pts --emax 0.3 --emin 0.03 -o det_t1.csv") == 0);
    CHECK(slurp(path("det_t1.csv")) == slurp(path("det_x.csv")));
}
