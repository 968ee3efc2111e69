#include "ahlfors/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ahlfors/error.hpp"

namespace ahlfors::io {

using geometry::Matrix;
using geometry::Vector;
using symbolic::Word;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InputError(path + ": " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << text;
    if (!out) throw InputError("write failed: " + path);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

namespace {

template <class T>
T get(const json& j, const char* key, const char* what) {
    if (!j.is_object() || !j.contains(key)) throw InputError(std::string(what) + ": missing \"" + key + "\"");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InputError(std::string(what) + ": bad \"" + key + "\": " + e.what());
    }
}

Vector vec_from(const json& j, const char* what) {
    if (!j.is_array()) throw InputError(std::string(what) + ": expected an array of numbers");
    Vector v(long(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw InputError(std::string(what) + ": expected numbers");
        v[long(i)] = j[i].get<double>();
    }
    return v;
}

json vec_to(const Vector& v) {
    json a = json::array();
    for (long i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Matrix mat_from(const json& j, const char* what) {
    if (!j.is_array() || j.empty()) throw InputError(std::string(what) + ": expected a matrix");
    Matrix m(long(j.size()), long(j.size()));
    for (std::size_t r = 0; r < j.size(); ++r) {
        Vector row = vec_from(j[r], what);
        if (row.size() != m.cols()) throw InputError(std::string(what) + ": matrix must be square");
        m.row(long(r)) = row.transpose();
    }
    return m;
}

json mat_to(const Matrix& m) {
    json a = json::array();
    for (long r = 0; r < m.rows(); ++r) a.push_back(vec_to(m.row(r).transpose()));
    return a;
}

std::complex<double> complex_from(const json& j, const char* what) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    Vector v = vec_from(j, what);
    if (v.size() != 2) throw InputError(std::string(what) + ": complex numbers are [re, im]");
    return {v[0], v[1]};
}

json complex_to(std::complex<double> z) { return json::array({z.real(), z.imag()}); }

// Rethrows core validation failures as input errors: the document is at fault.
template <class F>
auto guarded(const char* what, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const InputError&) {
        throw;
    } catch (const DomainError& e) {
        throw InputError(std::string(what) + ": " + e.what());
    }
}

}  // namespace

symbolic::SubshiftFT shift_from_json(const json& doc) {
    auto n = get<std::size_t>(doc, "alphabet", "shift");
    if (!doc.contains("transition")) return guarded("shift", [&] { return symbolic::SubshiftFT::full(n); });
    auto t = get<std::vector<std::vector<int>>>(doc, "transition", "shift");
    if (t.size() != n) throw InputError("shift: transition size differs from alphabet");
    return guarded("shift", [&] { return symbolic::SubshiftFT(t); });
}

json to_json(const symbolic::SubshiftFT& shift) {
    json j;
    j["alphabet"] = shift.alphabet_size();
    j["transition"] = shift.transition();
    return j;
}

symbolic::LocallyConstantPotential potential_from_json(const json& p, const symbolic::SubshiftFT& shift) {
    auto k = get<std::size_t>(p, "depth", "potential");
    if (!p.contains("values") || !p["values"].is_object()) throw InputError("potential: \"values\" must be an object");
    std::map<Word, double> vals;
    for (const auto& [key, v] : p["values"].items()) {
        if (!v.is_number()) throw InputError("potential: value of " + key + " is not a number");
        Word w = guarded("potential", [&] { return Word::parse(key, shift.alphabet_size()); });
        vals[w] = v.get<double>();
    }
    return guarded("potential", [&] { return symbolic::LocallyConstantPotential(shift, k, vals); });
}

json to_json(const symbolic::LocallyConstantPotential& f) {
    json j;
    j["depth"] = f.depth();
    json v = json::object();
    for (const auto& [w, x] : f.values()) v[w.to_string(f.alphabet_size())] = x;
    j["values"] = v;
    return j;
}

geometry::Ifs ifs_from_json(const json& j) {
    if (!j.contains("maps") || !j["maps"].is_array()) throw InputError("ifs: \"maps\" must be an array");
    return guarded("ifs", [&] {
        std::vector<geometry::Similarity> maps;
        for (const auto& m : j["maps"]) {
            double r = get<double>(m, "ratio", "ifs map");
            if (!m.contains("translation")) throw InputError("ifs map: missing \"translation\"");
            Vector t = vec_from(m["translation"], "ifs translation");
            Matrix q = Matrix::Identity(t.size(), t.size());
            if (m.contains("rotation"))
                q = mat_from(m["rotation"], "ifs rotation");
            else if (m.contains("angle")) {
                if (t.size() != 2) throw InputError("ifs map: \"angle\" needs dimension 2");
                double a = get<double>(m, "angle", "ifs map");
                q << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
            }
            maps.emplace_back(r, q, t);
        }
        std::optional<geometry::OpenSet> witness;
        if (j.contains("witness")) {
            std::vector<geometry::Primitive> parts;
            for (const auto& p : j["witness"]) {
                if (p.contains("box"))
                    parts.push_back(geometry::Box{vec_from(p["box"].value("lo", json()), "box lo"),
                                                  vec_from(p["box"].value("hi", json()), "box hi")});
                else if (p.contains("ball"))
                    parts.push_back(geometry::Ball{vec_from(p["ball"].value("center", json()), "ball center"),
                                                   get<double>(p["ball"], "radius", "ball")});
                else
                    throw InputError("ifs witness: expected \"box\" or \"ball\"");
            }
            witness = geometry::OpenSet(std::move(parts));
        }
        return geometry::Ifs(std::move(maps), std::move(witness));
    });
}

json to_json(const geometry::Ifs& ifs) {
    json j;
    json maps = json::array();
    for (const auto& m : ifs.maps()) {
        json o;
        o["ratio"] = m.ratio();
        o["rotation"] = mat_to(m.rotation());
        o["translation"] = vec_to(m.translation());
        maps.push_back(o);
    }
    j["maps"] = maps;
    if (ifs.witness()) {
        json w = json::array();
        for (const auto& p : ifs.witness()->parts()) {
            if (const auto* b = std::get_if<geometry::Box>(&p))
                w.push_back({{"box", {{"lo", vec_to(b->lo)}, {"hi", vec_to(b->hi)}}}});
            else {
                const auto& ball = std::get<geometry::Ball>(p);
                w.push_back({{"ball", {{"center", vec_to(ball.center)}, {"radius", ball.radius}}}});
            }
        }
        j["witness"] = w;
    }
    return j;
}

geometry::ConformalMap map_from_json(const json& j) {
    auto kind = get<std::string>(j, "kind", "map");
    return guarded("map", [&] {
        std::optional<geometry::ConformalMap> m;
        if (kind == "affine") {
            Vector t = vec_from(j.value("translation", json()), "map translation");
            Matrix q = j.contains("rotation") ? mat_from(j["rotation"], "map rotation")
                                              : Matrix(Matrix::Identity(t.size(), t.size()));
            m = geometry::ConformalMap::affine(get<double>(j, "scale", "map"), q, t);
        } else if (kind == "inversion") {
            m = geometry::ConformalMap::inversion(vec_from(j.value("center", json()), "map center"),
                                                  get<double>(j, "radius", "map"));
        } else if (kind == "mobius") {
            for (const char* k : {"a", "b", "c", "d"})
                if (!j.contains(k)) throw InputError(std::string("map: missing \"") + k + "\"");
            m = geometry::ConformalMap::mobius(complex_from(j["a"], "a"), complex_from(j["b"], "b"),
                                               complex_from(j["c"], "c"), complex_from(j["d"], "d"));
        } else {
            throw InputError("map: unknown kind " + kind);
        }
        if (j.contains("margin")) m = m->with_margin(get<double>(j, "margin", "map"));
        return *m;
    });
}

json to_json(const geometry::ConformalMap& m) {
    json j;
    j["kind"] = m.kind_name();
    switch (m.kind()) {
        case geometry::ConformalMap::Kind::Affine:
            j["scale"] = m.scale();
            j["rotation"] = mat_to(m.rotation());
            j["translation"] = vec_to(m.translation());
            break;
        case geometry::ConformalMap::Kind::Inversion:
            j["center"] = vec_to(m.center());
            j["radius"] = m.radius();
            break;
        case geometry::ConformalMap::Kind::Mobius:
            j["a"] = complex_to(m.a());
            j["b"] = complex_to(m.b());
            j["c"] = complex_to(m.c());
            j["d"] = complex_to(m.d());
            break;
    }
    if (m.margin()) j["margin"] = *m.margin();
    return j;
}

symbolic::RenewalSpec renewal_from_json(const json& doc) {
    auto shift = shift_from_json(doc);
    if (!doc.contains("potential")) throw InputError("renewal: missing \"potential\"");
    auto f = potential_from_json(doc["potential"], shift);
    auto g = doc.contains("weight") ? potential_from_json(doc["weight"], shift)
                                    : symbolic::LocallyConstantPotential::constant(shift, 1.0);
    symbolic::Kernel kernel = symbolic::Kernel::constant(1.0);
    if (doc.contains("kernel")) {
        auto kind = get<std::string>(doc["kernel"], "kind", "kernel");
        if (kind == "constant")
            kernel = guarded("kernel", [&] { return symbolic::Kernel::constant(doc["kernel"].value("c", 1.0)); });
        else if (kind == "exp")
            kernel = guarded("kernel",
                             [&] { return symbolic::Kernel::exponential(get<double>(doc["kernel"], "rate", "kernel")); });
        else
            throw InputError("kernel: unknown kind " + kind);
    }
    Word anchor;
    std::size_t need = std::max(f.depth(), g.depth());
    if (doc.contains("anchor"))
        anchor = guarded("anchor", [&] { return Word::parse(get<std::string>(doc, "anchor", "renewal"), shift.alphabet_size()); });
    else
        anchor = symbolic::admissible_words(shift, need).front();
    return guarded("renewal", [&] { return symbolic::RenewalSpec(shift, f, g, kernel, anchor); });
}

void write_cloud(std::ostream& os, const geometry::PointCloud& cloud) {
    os << "dim=" << cloud.dim() << " delta=" << format_double(cloud.resolution()) << " n=" << cloud.size() << "\n";
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        auto p = cloud.point(i);
        for (std::size_t k = 0; k < p.size(); ++k) os << (k ? " " : "") << format_double(p[k]);
        os << "\n";
    }
}

geometry::PointCloud read_cloud(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) throw InputError("cloud: empty file");
    std::size_t dim = 0, n = 0;
    double delta = 0;
    {
        std::istringstream hs(header);
        std::string tok;
        bool have_d = false, have_delta = false, have_n = false;
        while (hs >> tok) {
            auto eq = tok.find('=');
            if (eq == std::string::npos) throw InputError("cloud: bad header token " + tok);
            std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
            try {
                if (key == "dim") dim = std::stoul(val), have_d = true;
                else if (key == "delta") delta = std::stod(val), have_delta = true;
                else if (key == "n") n = std::stoul(val), have_n = true;
                else throw InputError("cloud: unknown header key " + key);
            } catch (const std::logic_error&) {
                throw InputError("cloud: bad header value " + tok);
            }
        }
        if (!have_d || !have_delta || !have_n) throw InputError("cloud: header needs dim, delta and n");
    }
    std::vector<double> coords;
    coords.reserve(n * dim);
    std::string line;
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        std::string tok;
        std::size_t k = 0;
        while (ls >> tok) {
            char* end = nullptr;
            double v = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str() || *end != '\0') throw InputError("cloud: bad number " + tok);
            coords.push_back(v);
            ++k;
        }
        if (k != dim) throw InputError("cloud: row " + std::to_string(rows + 1) + " has " + std::to_string(k) + " coordinates");
        ++rows;
    }
    if (rows != n) throw InputError("cloud: header says n=" + std::to_string(n) + " but found " + std::to_string(rows));
    return guarded("cloud", [&] { return geometry::PointCloud(dim, delta, std::move(coords)); });
}

void write_cloud_file(const std::string& path, const geometry::PointCloud& cloud) {
    std::ostringstream os;
    write_cloud(os, cloud);
    write_text_file(path, os.str());
}

geometry::PointCloud read_cloud_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    return read_cloud(in);
}

void write_curve(std::ostream& os, const asymptotics::CountingCurve& curve, double s) {
    os << "function,epsilon,value,eps_pow_s_value,s\n";
    const auto name = counting::to_string(curve.function);
    for (std::size_t i = 0; i < curve.eps.size(); ++i)
        os << name << "," << format_double(curve.eps[i]) << "," << format_double(curve.values[i]) << ","
           << format_double(std::pow(curve.eps[i], s) * curve.values[i]) << "," << format_double(s) << "\n";
}

CurveFile read_curve(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw InputError("curve: empty file");
    if (line.rfind("function,epsilon,value", 0) != 0) throw InputError("curve: unexpected header");
    CurveFile out;
    bool first = true;
    std::size_t row = 0;
    while (std::getline(is, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++row;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() != 5) throw InputError("curve: row " + std::to_string(row) + " needs 5 fields");
        double v[4];
        for (int k = 0; k < 4; ++k) {
            char* end = nullptr;
            v[k] = std::strtod(cells[std::size_t(k) + 1].c_str(), &end);
            if (end == cells[std::size_t(k) + 1].c_str()) throw InputError("curve: bad number in row " + std::to_string(row));
        }
        auto f = guarded("curve", [&] { return counting::parse_function(cells[0]); });
        if (first) {
            out.curve.function = f;
            out.s = v[3];
            first = false;
        }
        out.curve.eps.push_back(v[0]);
        out.curve.values.push_back(v[1]);
    }
    for (std::size_t i = 1; i < out.curve.eps.size(); ++i)
        if (!(out.curve.eps[i] < out.curve.eps[i - 1])) throw InputError("curve: epsilon must strictly decrease");
    for (std::size_t i = 0; i + 1 < out.curve.values.size(); ++i)
        if (out.curve.values[i + 1] < out.curve.values[i]) out.curve.c1_violations.push_back(i);
    return out;
}

CurveFile read_curve_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    return read_curve(in);
}

json to_json(const stree::STree& tree) {
    json j = to_json(tree.shift());
    j["s"] = tree.s();
    const auto& c = tree.constants();
    j["constants"] = {{"C", c.C}, {"D", c.D}, {"rho", c.rho}, {"R", c.R}, {"E", c.E}, {"s", tree.s()}};
    if (tree.packing_delta()) j["packing_delta"] = *tree.packing_delta();
    json nodes = json::object();
    for (const auto& n : tree.nodes())
        nodes[n.word.to_string(tree.shift().alphabet_size())] = {{"x", vec_to(n.x)}, {"r", n.r}};
    j["nodes"] = nodes;
    return j;
}

stree::STree tree_from_json(const json& j) {
    auto shift = shift_from_json(j);
    if (!j.contains("constants") || !j.contains("nodes")) throw InputError("tree: needs \"constants\" and \"nodes\"");
    const auto& cj = j["constants"];
    stree::Constants c{get<double>(cj, "C", "tree constants"), get<double>(cj, "D", "tree constants"),
                       get<double>(cj, "rho", "tree constants"), get<double>(cj, "R", "tree constants"),
                       get<double>(cj, "E", "tree constants")};
    double s = j.contains("s") ? get<double>(j, "s", "tree") : get<double>(cj, "s", "tree constants");
    std::map<Word, stree::NodeValue> nodes;
    for (const auto& [key, v] : j["nodes"].items()) {
        Word w = guarded("tree", [&] { return Word::parse(key, shift.alphabet_size()); });
        nodes[w] = stree::NodeValue{vec_from(v.value("x", json()), "tree node x"), get<double>(v, "r", "tree node")};
    }
    std::optional<double> pd;
    if (j.contains("packing_delta")) pd = get<double>(j, "packing_delta", "tree");
    return guarded("tree", [&] { return stree::STree(shift, s, c, nodes, pd); });
}

json to_json(const stree::AxiomReport& rep, std::size_t alphabet_size) {
    json j;
    j["passed"] = rep.passed();
    json checks = json::array();
    for (const auto& c : rep.checks) {
        json o{{"axiom", c.axiom}, {"passed", c.passed}, {"measured", c.measured}, {"detail", c.detail}};
        if (c.witness)
            o["witness"] = json::array({c.witness->first.to_string(alphabet_size), c.witness->second.to_string(alphabet_size)});
        checks.push_back(o);
    }
    j["checks"] = checks;
    const auto& m = rep.measured;
    j["measured"] = {{"C", m.C}, {"D", m.D}, {"rho", m.rho}, {"R", m.R}, {"E", m.E}};
    j["max_r_deepest"] = rep.max_r_deepest;
    return j;
}

json to_json(const counting::AxiomSuiteReport& rep) {
    json j;
    j["function"] = counting::to_string(rep.spec.kind);
    j["constants"] = {{"A", rep.spec.A}, {"B", rep.spec.B}, {"G", rep.spec.G}};
    j["all_passed"] = rep.all_passed();
    if (rep.measured_B) j["measured_B"] = *rep.measured_B;
    json out = json::array();
    for (const auto& o : rep.outcomes)
        out.push_back({{"axiom", o.axiom},
                       {"passed", o.passed},
                       {"checks", o.checks},
                       {"violations", o.violations},
                       {"detail", o.detail}});
    j["outcomes"] = out;
    return j;
}

json to_json(const geometry::OscReport& rep) {
    json j;
    j["status"] = geometry::to_string(rep.status);
    json checks = json::array();
    for (const auto& c : rep.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"margin", c.margin}});
    j["checks"] = checks;
    if (rep.violating_pair) j["violating_pair"] = {rep.violating_pair->first, rep.violating_pair->second};
    j["detail"] = rep.detail;
    return j;
}

json to_json(const asymptotics::DimensionFit& fit) {
    return {{"s_hat", fit.s_hat}, {"stderr", fit.stderr_}, {"intercept", fit.intercept}, {"points", fit.points}};
}

json to_json(const asymptotics::LimitDiagnostic& d) {
    json j;
    j["s"] = d.s;
    j["mean"] = d.mean;
    j["amplitude"] = d.amplitude;
    j["period"] = d.period ? json(*d.period) : json(nullptr);
    j["verdict"] = asymptotics::to_string(d.verdict);
    j["window"] = json::array({d.window_lo, d.window_hi});
    j["window_points"] = d.window_points;
    j["peak_power"] = d.peak_power;
    j["median_power"] = d.median_power;
    j["peak_swing"] = d.peak_swing;
    j["dominant_peak"] = d.dominant_peak;
    j["config"] = {{"window_decades", d.config.window_decades},
                   {"converge_amplitude", d.config.converge_amplitude},
                   {"oscillate_amplitude", d.config.oscillate_amplitude},
                   {"peak_ratio", d.config.peak_ratio},
                   {"peak_floor", d.config.peak_floor},
                   {"trials", d.config.trials}};
    return j;
}

json to_json(const symbolic::RenewalSeries& s) {
    json j;
    j["delta"] = s.delta;
    json rows = json::array();
    for (std::size_t i = 0; i < s.a.size(); ++i) rows.push_back({{"a", s.a[i]}, {"N", s.raw[i]}, {"scaled", s.scaled[i]}});
    j["series"] = rows;
    if (s.diagnostic) {
        const auto& d = *s.diagnostic;
        j["diagnostic"] = {{"window", json::array({d.window_lo, d.window_hi})},
                           {"mean", d.mean},
                           {"relative_variation", d.relative_variation},
                           {"period", d.period ? json(*d.period) : json(nullptr)},
                           {"peak_power", d.peak_power},
                           {"median_power", d.median_power}};
    } else {
        j["diagnostic"] = nullptr;
    }
    return j;
}

}  // namespace ahlfors::io
