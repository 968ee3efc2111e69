// Command-line front end. Exit codes: 0 ok, 2 input, 3 precondition, 4 budget.
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "ahlfors/asymptotics.hpp"
#include "ahlfors/counting.hpp"
#include "ahlfors/error.hpp"
#include "ahlfors/geometry.hpp"
#include "ahlfors/io.hpp"
#include "ahlfors/parallel.hpp"
#include "ahlfors/stree.hpp"
#include "ahlfors/symbolic.hpp"

using namespace ahlfors;
using io::json;

namespace {

struct Globals {
    std::size_t threads = 0;
    std::uint64_t budget = 0;  // 0: module defaults
    std::string out;
    std::string manifest;
};

Globals G;

json manifest_for(const std::string& command, json config) {
    json m;
    m["tool"] = "ahlfors";
    m["command"] = command;
    m["threads"] = G.threads;
    m["budget_nodes"] = G.budget;
    m["config"] = std::move(config);
    return m;
}

void emit_text(const std::string& text) {
    if (G.out.empty())
        std::cout << text;
    else
        io::write_text_file(G.out, text);
}

// Writes the manifest next to file outputs, or where --manifest points.
void emit_manifest(const json& manifest) {
    std::string path = G.manifest;
    if (path.empty() && !G.out.empty()) path = G.out + ".manifest.json";
    if (!path.empty()) io::write_text_file(path, io::dump(manifest));
}

void emit_report(json report, const json& manifest) {
    report["manifest"] = manifest;
    emit_text(io::dump(report));
    if (!G.manifest.empty()) io::write_text_file(G.manifest, io::dump(manifest));
}

json load_section(const std::string& path, const char* key) {
    json doc = io::read_json_file(path);
    if (doc.contains(key)) return doc[key];
    return doc;
}

std::vector<double> read_weights(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    std::vector<double> w;
    double v;
    while (in >> v) w.push_back(v);
    if (!in.eof()) throw InputError("weights: bad number in " + path);
    return w;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + io::format_double(v[i]);
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ahlfors-regular sets: sampling, counting functions, s-trees and limit experiments"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--threads", G.threads, "worker cap (0: hardware concurrency)");
    app.add_option("--budget-nodes", G.budget, "node / point budget for enumerations and exact searches");
    app.add_option("-o,--out", G.out, "output file (stdout when omitted)");
    app.add_option("--manifest", G.manifest, "manifest path (default: <out>.manifest.json)");

    // gen
    auto* gen = app.add_subcommand("gen", "sample an IFS attractor");
    std::string gen_ifs;
    double gen_delta = 0;
    std::vector<double> gen_seed;
    bool gen_require_osc = false;
    gen->add_option("--ifs", gen_ifs, "IFS JSON")->required()->check(CLI::ExistingFile);
    gen->add_option("--delta", gen_delta, "resolution")->required()->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed, "seed point (default: fixed point of map 0)")->delimiter(',');
    gen->add_flag("--require-osc", gen_require_osc, "fail unless the open set condition is certified");

    // count
    auto* count = app.add_subcommand("count", "counting curve over a geometric eps grid");
    std::string cnt_fn = "separated", cnt_cloud, cnt_mode = "greedy";
    double cnt_emax = 0, cnt_emin = 0;
    std::size_t cnt_ppd = 40;
    std::optional<double> cnt_s;
    count->add_option("--fn", cnt_fn, "separated|packing|covering|minkowski");
    count->add_option("--cloud", cnt_cloud, "point cloud file")->required();
    count->add_option("--emax", cnt_emax)->required()->check(CLI::PositiveNumber);
    count->add_option("--emin", cnt_emin)->required()->check(CLI::PositiveNumber);
    count->add_option("--ppd", cnt_ppd, "points per decade");
    count->add_option("--mode", cnt_mode, "greedy|exact");
    count->add_option("--s", cnt_s, "exponent for the scaled column (default: fitted dimension)");

    // dim
    auto* dim = app.add_subcommand("dim", "dimension fit of a curve");
    std::string dim_curve;
    dim->add_option("--curve", dim_curve)->required();

    // limit
    auto* limit = app.add_subcommand("limit", "limit diagnostic of eps^s N(eps)");
    std::string lim_curve;
    std::optional<double> lim_s;
    asymptotics::LimitConfig lim_cfg;
    limit->add_option("--curve", lim_curve)->required();
    limit->add_option("--s", lim_s, "exponent (default: the curve file's s column)");
    limit->add_option("--window-decades", lim_cfg.window_decades);
    limit->add_option("--converge-amp", lim_cfg.converge_amplitude);
    limit->add_option("--oscillate-amp", lim_cfg.oscillate_amplitude);
    limit->add_option("--peak-ratio", lim_cfg.peak_ratio);
    limit->add_option("--peak-floor", lim_cfg.peak_floor);

    // tree
    auto* tree = app.add_subcommand("tree", "s-trees");
    tree->require_subcommand(1);
    auto* tbuild = tree->add_subcommand("build", "build from an IFS or a point cloud");
    std::string tb_mode = "ifs", tb_ifs, tb_cloud, tb_weights;
    double tb_delta = 0.15, tb_s = 0;
    std::size_t tb_depth = 3;
    std::vector<double> tb_x0;
    tbuild->add_option("--mode", tb_mode, "ifs|packing");
    tbuild->add_option("--ifs", tb_ifs);
    tbuild->add_option("--x0", tb_x0, "root point for ifs mode")->delimiter(',');
    tbuild->add_option("--cloud", tb_cloud);
    tbuild->add_option("--weights", tb_weights, "one weight per line (default uniform)");
    tbuild->add_option("--delta", tb_delta);
    tbuild->add_option("--s", tb_s);
    tbuild->add_option("--depth", tb_depth);
    auto* tverify = tree->add_subcommand("verify", "check the tree axioms");
    std::string tv_tree;
    tverify->add_option("tree,--tree", tv_tree, "tree JSON file")->required();
    auto* tpower = tree->add_subcommand("power", "m-block recoding");
    std::string tp_tree;
    std::size_t tp_m = 2;
    tpower->add_option("tree,--tree", tp_tree, "tree JSON file")->required();
    tpower->add_option("--m", tp_m);
    auto* tprune = tree->add_subcommand("prune", "pruned mass below a word");
    std::string tr_tree, tr_word, tr_choice = "first";
    std::size_t tr_m = 1;
    tprune->add_option("tree,--tree", tr_tree, "tree JSON file")->required();
    tprune->add_option("--word", tr_word, "start word (default: root)");
    tprune->add_option("--m", tr_m);
    tprune->add_option("--choice", tr_choice, "first|last|heaviest|lightest child removed at each node");

    // renewal
    auto* ren = app.add_subcommand("renewal", "renewal sums and their rescaled series");
    std::string rn_spec;
    double rn_amin = 5, rn_amax = 15;
    std::size_t rn_points = 401;
    std::optional<double> rn_delta;
    ren->add_option("--spec", rn_spec)->required();
    ren->add_option("--amin", rn_amin);
    ren->add_option("--amax", rn_amax);
    ren->add_option("--points", rn_points);
    ren->add_option("--delta", rn_delta, "exponent (default: Bowen root of the potential)");

    // transform
    auto* tr = app.add_subcommand("transform", "apply a conformal map to a cloud");
    std::string tf_map, tf_cloud;
    tr->add_option("--map", tf_map)->required();
    tr->add_option("--cloud", tf_cloud)->required();

    // axioms
    auto* ax = app.add_subcommand("axioms", "counting-function axiom suite");
    std::string ax_fn = "packing", ax_mode = "exact";
    std::vector<std::string> ax_clouds;
    std::vector<double> ax_eps, ax_lip{0.5, 2.0, 3.0};
    ax->add_option("--fn", ax_fn, "separated|packing|covering");
    ax->add_option("--cloud", ax_clouds)->required();
    ax->add_option("--eps", ax_eps)->required()->delimiter(',');
    ax->add_option("--mode", ax_mode, "exact|greedy");
    ax->add_option("--lipschitz", ax_lip, "scaling factors for (C5)")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }

    try {
        set_thread_limit(G.threads);

        if (*gen) {
            auto ifs = io::ifs_from_json(load_section(gen_ifs, "ifs"));
            if (gen_require_osc) {
                auto rep = geometry::check_osc(ifs);
                if (rep.status != geometry::OscStatus::Certified)
                    throw PreconditionError("open set condition: " + geometry::to_string(rep.status) + " " + rep.detail);
            }
            geometry::SampleOptions opt;
            if (G.budget) opt.max_points = G.budget;
            geometry::PointCloud cloud = gen_seed.empty()
                ? geometry::sample_attractor(ifs, gen_delta, opt)
                : geometry::sample_attractor(ifs, gen_delta, Eigen::Map<const geometry::Vector>(gen_seed.data(), long(gen_seed.size())), opt);
            std::ostringstream os;
            io::write_cloud(os, cloud);
            emit_text(os.str());
            emit_manifest(manifest_for("gen", {{"ifs", gen_ifs}, {"delta", gen_delta}, {"seed", gen_seed},
                                               {"require_osc", gen_require_osc}, {"points", cloud.size()}}));
            return 0;
        }
        if (*count) {
            auto f = counting::parse_function(cnt_fn);
            auto mode = counting::parse_mode(cnt_mode);
            auto cloud = io::read_cloud_file(cnt_cloud);
            auto curve = asymptotics::counting_curve(cloud, f, cnt_emax, cnt_emin, cnt_ppd, mode);
            double s = 0;
            std::string s_source = "given";
            if (cnt_s) {
                s = *cnt_s;
            } else {
                try {
                    s = asymptotics::dimension_fit(curve).s_hat;
                    s_source = "fitted";
                } catch (const DomainError&) {
                    s_source = "none";
                }
            }
            std::ostringstream os;
            io::write_curve(os, curve, s);
            emit_text(os.str());
            for (auto i : curve.c1_violations)
                std::cerr << "warning: value rises with eps between " << io::format_double(curve.eps[i + 1]) << " and "
                          << io::format_double(curve.eps[i]) << "\n";
            emit_manifest(manifest_for("count", {{"fn", cnt_fn}, {"cloud", cnt_cloud}, {"emax", cnt_emax}, {"emin", cnt_emin},
                                                 {"ppd", cnt_ppd}, {"mode", cnt_mode}, {"s", s}, {"s_source", s_source},
                                                 {"c1_violations", curve.c1_violations.size()}}));
            return 0;
        }
        if (*dim) {
            auto cf = io::read_curve_file(dim_curve);
            auto fit = asymptotics::dimension_fit(cf.curve);
            emit_report(io::to_json(fit), manifest_for("dim", {{"curve", dim_curve}}));
            return 0;
        }
        if (*limit) {
            auto cf = io::read_curve_file(lim_curve);
            double s = lim_s.value_or(cf.s);
            auto d = asymptotics::limit_diagnostic(cf.curve, s, lim_cfg);
            emit_report(io::to_json(d), manifest_for("limit", {{"curve", lim_curve}, {"s", s},
                                                               {"window_decades", lim_cfg.window_decades},
                                                               {"converge_amplitude", lim_cfg.converge_amplitude},
                                                               {"oscillate_amplitude", lim_cfg.oscillate_amplitude},
                                                               {"peak_ratio", lim_cfg.peak_ratio},
                                                               {"peak_floor", lim_cfg.peak_floor}}));
            return 0;
        }
        if (*tbuild) {
            json cfg{{"mode", tb_mode}, {"depth", tb_depth}};
            std::optional<stree::STree> t;
            if (tb_mode == "ifs") {
                if (tb_ifs.empty()) throw InputError("tree build --mode ifs needs --ifs");
                auto ifs = io::ifs_from_json(load_section(tb_ifs, "ifs"));
                if (tb_x0.empty())
                    t = stree::tree_from_ifs(ifs, tb_depth);
                else
                    t = stree::tree_from_ifs(ifs, Eigen::Map<const geometry::Vector>(tb_x0.data(), long(tb_x0.size())), tb_depth);
                cfg["ifs"] = tb_ifs;
                cfg["x0"] = tb_x0;
            } else if (tb_mode == "packing") {
                if (tb_cloud.empty()) throw InputError("tree build --mode packing needs --cloud");
                auto cloud = io::read_cloud_file(tb_cloud);
                std::vector<double> w = tb_weights.empty() ? std::vector<double>{} : read_weights(tb_weights);
                t = stree::tree_from_packing(cloud, w, tb_delta, tb_s, tb_depth);
                cfg["cloud"] = tb_cloud;
                cfg["weights"] = tb_weights;
                cfg["delta"] = tb_delta;
                cfg["s"] = tb_s;
            } else {
                throw InputError("tree build: unknown mode " + tb_mode);
            }
            json doc = io::to_json(*t);
            doc["axiom_report"] = io::to_json(stree::verify_axioms(*t), t->shift().alphabet_size());
            emit_report(doc, manifest_for("tree build", cfg));
            return 0;
        }
        if (*tverify) {
            auto t = io::tree_from_json(io::read_json_file(tv_tree));
            emit_report(io::to_json(stree::verify_axioms(t), t.shift().alphabet_size()),
                        manifest_for("tree verify", {{"tree", tv_tree}}));
            return 0;
        }
        if (*tpower) {
            auto t = io::tree_from_json(io::read_json_file(tp_tree));
            auto p = stree::power_tree(t, tp_m);
            emit_report(io::to_json(p), manifest_for("tree power", {{"tree", tp_tree}, {"m", tp_m}}));
            return 0;
        }
        if (*tprune) {
            auto t = io::tree_from_json(io::read_json_file(tr_tree));
            auto I = symbolic::Word::parse(tr_word, t.shift().alphabet_size());
            stree::ChoiceFunction choice = [&](const symbolic::Word& w) -> symbolic::Symbol {
                const auto& node = t.at(w);
                std::size_t pick = node.children.front();
                for (auto c : node.children) {
                    const auto& a = t.node(c);
                    const auto& b = t.node(pick);
                    if ((tr_choice == "last") || (tr_choice == "heaviest" && a.r > b.r) ||
                        (tr_choice == "lightest" && a.r < b.r))
                        pick = c;
                }
                return t.node(pick).word.vec().back();
            };
            if (tr_choice != "first" && tr_choice != "last" && tr_choice != "heaviest" && tr_choice != "lightest")
                throw InputError("tree prune: unknown choice " + tr_choice);
            double v = stree::pruned_mass(t, choice, I, tr_m);
            double b = stree::pruned_mass_bound(t, I, tr_m);
            emit_report({{"value", v}, {"bound", b}, {"within_bound", v <= b * (1 + 1e-12)}},
                        manifest_for("tree prune", {{"tree", tr_tree}, {"word", tr_word}, {"m", tr_m}, {"choice", tr_choice}}));
            return 0;
        }
        if (*ren) {
            auto spec = io::renewal_from_json(io::read_json_file(rn_spec));
            if (rn_points < 1 || !(rn_amax >= rn_amin) || rn_amin < 0) throw InputError("renewal: bad a-grid");
            std::vector<double> grid;
            for (std::size_t i = 0; i < rn_points; ++i)
                grid.push_back(rn_points == 1 ? rn_amin : rn_amin + (rn_amax - rn_amin) * double(i) / double(rn_points - 1));
            double delta = rn_delta ? *rn_delta : symbolic::bowen_root(spec.shift, spec.f);
            symbolic::RenewalOptions opt;
            if (G.budget) opt.node_budget = G.budget;
            auto series = symbolic::renewal_convergence_series(spec, grid, delta, opt);
            emit_report(io::to_json(series), manifest_for("renewal", {{"spec", rn_spec}, {"amin", rn_amin}, {"amax", rn_amax},
                                                                      {"points", rn_points}, {"delta", delta},
                                                                      {"node_budget", opt.node_budget}}));
            return 0;
        }
        if (*tr) {
            auto map = io::map_from_json(load_section(tf_map, "map"));
            auto cloud = io::read_cloud_file(tf_cloud);
            auto img = geometry::apply_map(map, cloud);
            std::ostringstream os;
            io::write_cloud(os, img);
            emit_text(os.str());
            emit_manifest(manifest_for("transform", {{"map", tf_map}, {"cloud", tf_cloud}}));
            return 0;
        }
        if (*ax) {
            auto f = counting::parse_function(ax_fn);
            std::vector<geometry::PointCloud> clouds;
            for (const auto& p : ax_clouds) clouds.push_back(io::read_cloud_file(p));
            counting::AxiomSuiteOptions opt;
            opt.mode = counting::parse_mode(ax_mode);
            for (double L : ax_lip) {
                if (!(L > 0)) throw InputError("axioms: scaling factors must be positive");
                opt.lipschitz_maps.push_back({"scale " + io::format_double(L), L,
                                              [L](const geometry::Vector& x) { return geometry::Vector(L * x); }});
            }
            auto rep = counting::axiom_suite(counting::CountingFunctionSpec::of(f), clouds, ax_eps, opt);
            emit_report(io::to_json(rep), manifest_for("axioms", {{"fn", ax_fn}, {"clouds", ax_clouds}, {"eps", join(ax_eps)},
                                                                  {"mode", ax_mode}, {"lipschitz", ax_lip}}));
            return 0;
        }
    } catch (const BudgetError& e) {
        std::cerr << "budget exceeded: " << e.what() << " (partial " << io::format_double(e.partial()) << ")\n";
        return 4;
    } catch (const PreconditionError& e) {
        std::cerr << "precondition: " << e.what() << "\n";
        return 3;
    } catch (const StructuralError& e) {
        std::cerr << "precondition: " << e.what() << "\n";
        return 3;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
