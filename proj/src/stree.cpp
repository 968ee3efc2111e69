#include "ahlfors/stree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ahlfors/counting.hpp"
#include "ahlfors/error.hpp"
#include "ahlfors/parallel.hpp"

namespace ahlfors::stree {

using geometry::PointCloud;

STree::STree(SubshiftFT shift, double s, Constants constants, const std::map<Word, NodeValue>& nodes,
             std::optional<double> packing_delta)
    : shift_(std::move(shift)), s_(s), constants_(constants), packing_delta_(packing_delta) {
    if (!std::isfinite(s) || s < 0) throw DomainError("STree: s must be finite and >= 0");
    auto root = nodes.find(Word{});
    if (root == nodes.end()) throw DomainError("STree: missing root");
    if (std::abs(root->second.r - 1.0) > 1e-12) throw DomainError("STree: r of the root must be 1");
    dim_ = std::size_t(root->second.x.size());

    std::vector<const std::pair<const Word, NodeValue>*> order;
    for (const auto& kv : nodes) order.push_back(&kv);
    std::stable_sort(order.begin(), order.end(),
                     [](auto* a, auto* b) { return a->first.size() < b->first.size(); });
    nodes_.reserve(order.size());
    for (auto* kv : order) {
        const Word& w = kv->first;
        if (!symbolic::is_admissible(w, shift_))
            throw DomainError("STree: inadmissible word " + w.to_string(shift_.alphabet_size()));
        if (!(kv->second.r > 0) || !std::isfinite(kv->second.r))
            throw DomainError("STree: r must be positive at " + w.to_string(shift_.alphabet_size()));
        if (std::size_t(kv->second.x.size()) != dim_ || !kv->second.x.allFinite())
            throw DomainError("STree: bad point at " + w.to_string(shift_.alphabet_size()));
        Node n;
        n.word = w;
        n.x = kv->second.x;
        n.r = kv->second.r;
        if (!w.empty()) {
            auto p = index_.find(w.prefix(w.size() - 1));
            if (p == index_.end())
                throw DomainError("STree: parent missing for " + w.to_string(shift_.alphabet_size()));
            n.parent = std::ptrdiff_t(p->second);
            nodes_[p->second].children.push_back(nodes_.size());
        }
        depth_ = std::max(depth_, w.size());
        index_.emplace(w, nodes_.size());
        nodes_.push_back(std::move(n));
    }
    for (const auto& n : nodes_)
        if (n.word.size() < depth_ && n.children.empty())
            throw DomainError("STree: node " + n.word.to_string(shift_.alphabet_size()) +
                              " has no children above the stored depth");
}

std::optional<std::size_t> STree::find(const Word& w) const {
    auto it = index_.find(w);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

const Node& STree::at(const Word& w) const {
    auto i = find(w);
    if (!i) throw DomainError("STree: word not stored: " + w.to_string(shift_.alphabet_size()));
    return nodes_[*i];
}

std::vector<std::size_t> STree::level(std::size_t n) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].word.size() == n) out.push_back(i);
    return out;
}

std::map<Word, NodeValue> STree::node_map() const {
    std::map<Word, NodeValue> out;
    for (const auto& n : nodes_) out.emplace(n.word, NodeValue{n.x, n.r});
    return out;
}

STree STree::with_constants(Constants c) const {
    STree t = *this;
    t.constants_ = c;
    return t;
}

STree tree_from_ifs(const geometry::Ifs& ifs, const Vector& x0, std::size_t depth) {
    auto osc = geometry::check_osc(ifs);
    if (osc.status != geometry::OscStatus::Certified)
        throw PreconditionError("tree_from_ifs: open set condition not certified (" +
                                geometry::to_string(osc.status) + ")");
    const auto& U = *ifs.witness();
    if (std::size_t(x0.size()) != ifs.dim()) throw DomainError("tree_from_ifs: x0 has the wrong dimension");
    if (!U.contains(x0)) throw PreconditionError("tree_from_ifs: x0 lies outside the open set");

    auto ratios = ifs.ratios();
    Constants c;
    c.C = U.inner_distance(x0);
    c.D = U.diameter();
    c.rho = *std::min_element(ratios.begin(), ratios.end());
    c.R = *std::max_element(ratios.begin(), ratios.end());
    c.E = 1.0;
    const double s = geometry::moran_dimension(ratios);

    std::map<Word, NodeValue> nodes;
    nodes.emplace(Word{}, NodeValue{x0, 1.0});
    std::vector<std::pair<Word, geometry::Similarity>> frontier;
    if (depth > 0)
        for (std::size_t i = 0; i < ifs.size(); ++i) frontier.emplace_back(Word{Symbol(i)}, ifs.map(i));
    for (std::size_t len = 1; len <= depth; ++len) {
        for (const auto& [w, phi] : frontier) nodes.emplace(w, NodeValue{phi(x0), phi.ratio()});
        if (len == depth) break;
        std::vector<std::pair<Word, geometry::Similarity>> next;
        next.reserve(frontier.size() * ifs.size());
        for (const auto& [w, phi] : frontier)
            for (std::size_t i = 0; i < ifs.size(); ++i)
                next.emplace_back(w.append(Symbol(i)), phi.compose(ifs.map(i)));
        frontier = std::move(next);
    }
    return STree(SubshiftFT::full(ifs.size()), s, c, nodes);
}

STree tree_from_ifs(const geometry::Ifs& ifs, std::size_t depth) {
    auto x0 = geometry::attractor_point_in_witness(ifs);
    if (!x0) throw PreconditionError("tree_from_ifs: no attractor point found inside the open set");
    return tree_from_ifs(ifs, *x0, depth);
}

namespace {

// index of the nearest member of `level`, ties to the smaller position
std::size_t nearest_in(const PointCloud& level, const counting::SpatialIndex& index, std::span<const double> q) {
    std::size_t best = SIZE_MAX;
    double bd = std::numeric_limits<double>::infinity();
    index.for_each_near(q, [&](std::size_t j) {
        double dd = geometry::squared_distance(q, level.point(j));
        if (dd < bd || (dd == bd && j < best)) {
            bd = dd;
            best = j;
        }
        return true;
    });
    if (best == SIZE_MAX) {
        // the grid neighbourhood always holds a member for a dense level; keep a fallback anyway
        for (std::size_t j = 0; j < level.size(); ++j) {
            double dd = geometry::squared_distance(q, level.point(j));
            if (dd < bd) {
                bd = dd;
                best = j;
            }
        }
    }
    return best;
}

}  // namespace

STree tree_from_packing(const PointCloud& cloud, const std::vector<double>& weights, double delta, double s,
                        std::size_t depth) {
    if (!(delta > 0) || !(delta < 1.0 / 6.0)) throw DomainError("tree_from_packing: delta must lie in (0, 1/6)");
    if (!(s > 0)) throw DomainError("tree_from_packing: s must be positive");
    const std::size_t n = cloud.size();
    if (n == 0) throw DomainError("tree_from_packing: empty cloud");
    std::vector<double> w = weights;
    if (w.empty()) w.assign(n, 1.0 / double(n));
    if (w.size() != n) throw DomainError("tree_from_packing: one weight per point required");
    double total = 0;
    for (double v : w) {
        if (!(v >= 0) || !std::isfinite(v)) throw DomainError("tree_from_packing: weights must be nonnegative");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) throw DomainError("tree_from_packing: weights must sum to 1");

    // strict total order: coordinates lexicographically, then input index
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        auto pa = cloud.point(a), pb = cloud.point(b);
        return std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end());
    });
    const PointCloud sorted = cloud.subset(order);

    // levels[k] holds positions in `sorted`, ascending, hence in the total order
    std::vector<std::vector<std::size_t>> levels(depth + 1);
    levels[0] = {0};
    double scale = 1.0;
    for (std::size_t k = 1; k <= depth; ++k) {
        scale *= delta;
        levels[k] = counting::separated_greedy(sorted, scale).selected;
        if (levels[k].empty()) throw DomainError("tree_from_packing: empty packing level");
    }

    // parent links: nearest member of the previous level
    std::vector<PointCloud> level_clouds;
    for (const auto& lv : levels) level_clouds.push_back(sorted.subset(lv));
    std::vector<std::vector<std::size_t>> parent(depth + 1);
    scale = 1.0;
    for (std::size_t k = 1; k <= depth; ++k) {
        counting::SpatialIndex idx(level_clouds[k - 1], std::max(scale, 1e-300));
        parent[k].resize(levels[k].size());
        for (std::size_t j = 0; j < levels[k].size(); ++j)
            parent[k][j] = nearest_in(level_clouds[k - 1], idx, level_clouds[k].point(j));
        scale *= delta;
    }

    // words: children labelled by their rank in the level order
    std::vector<std::vector<Word>> words(depth + 1);
    words[0] = {Word{}};
    std::size_t branching = 1;
    for (std::size_t k = 1; k <= depth; ++k) {
        std::vector<std::size_t> seen(levels[k - 1].size(), 0);
        words[k].resize(levels[k].size());
        for (std::size_t j = 0; j < levels[k].size(); ++j) {
            std::size_t p = parent[k][j];
            words[k][j] = words[k - 1][p].append(Symbol(seen[p]++));
        }
        for (auto c : seen) branching = std::max(branching, c);
    }

    // each cloud point feeds exactly one leaf; inner masses are sums over leaves
    std::vector<std::vector<double>> mass(depth + 1);
    for (std::size_t k = 0; k <= depth; ++k) mass[k].assign(levels[k].size(), 0.0);
    {
        double leaf_scale = std::pow(delta, double(depth));
        counting::SpatialIndex idx(level_clouds[depth], std::max(leaf_scale, 1e-300));
        for (std::size_t q = 0; q < n; ++q)
            mass[depth][nearest_in(level_clouds[depth], idx, sorted.point(q))] += w[order[q]];
    }
    for (std::size_t k = depth; k >= 1; --k)
        for (std::size_t j = 0; j < levels[k].size(); ++j) mass[k - 1][parent[k][j]] += mass[k][j];

    std::map<Word, NodeValue> nodes;
    for (std::size_t k = 0; k <= depth; ++k)
        for (std::size_t j = 0; j < levels[k].size(); ++j) {
            double m = mass[k][j] / mass[0][0];
            if (!(m > 0))
                throw DomainError("tree_from_packing: zero mass at " + words[k][j].to_string(branching));
            double r = k == 0 ? 1.0 : std::pow(m, 1.0 / s);
            nodes.emplace(words[k][j], NodeValue{level_clouds[k].vec(j), r});
        }
    STree raw(SubshiftFT::full(branching), s, Constants{}, nodes, delta);
    auto rep = verify_axioms(raw);
    return raw.with_constants(rep.measured);
}

namespace {

struct PairExtreme {
    double value;
    std::size_t a = 0, b = 0;
};

// farthest pair among the given node positions
PairExtreme farthest_pair(const STree& t, const std::vector<std::size_t>& ids) {
    PairExtreme best{0.0, ids.front(), ids.front()};
    if (ids.size() <= 4096) {
        for (std::size_t i = 0; i < ids.size(); ++i)
            for (std::size_t j = i + 1; j < ids.size(); ++j) {
                double d = (t.node(ids[i]).x - t.node(ids[j]).x).norm();
                if (d > best.value) best = {d, ids[i], ids[j]};
            }
        return best;
    }
    std::size_t a = ids.front();
    for (int sweep = 0; sweep < 4; ++sweep) {
        std::size_t far = a;
        double fd = -1;
        for (auto j : ids) {
            double d = (t.node(a).x - t.node(j).x).norm();
            if (d > fd) {
                fd = d;
                far = j;
            }
        }
        if (fd > best.value) best = {fd, a, far};
        a = far;
    }
    return best;
}

AxiomCheck make_check(std::string name) {
    AxiomCheck c;
    c.axiom = std::move(name);
    return c;
}

}  // namespace

bool AxiomReport::passed() const {
    for (const auto& c : checks) {
        if (c.axiom == "M3" || c.axiom == "D_delta") continue;
        if (!c.passed) return false;
    }
    return true;
}

const AxiomCheck* AxiomReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.axiom == name) return &c;
    return nullptr;
}

AxiomReport verify_axioms(const STree& tree, double tol) {
    AxiomReport rep;
    const auto& K = tree.constants();
    const std::size_t n = tree.size();
    const double s = tree.s();

    // (T1) over all incomparable pairs
    {
        struct Slot {
            double min_ratio = std::numeric_limits<double>::infinity();
            std::size_t ra = 0, rb = 0;
            double worst = std::numeric_limits<double>::infinity();
            std::size_t wa = 0, wb = 0;
        };
        std::vector<Slot> slots(n);
        parallel_for(n, [&](std::size_t i) {
            Slot& sl = slots[i];
            const Node& a = tree.node(i);
            for (std::size_t j = i + 1; j < n; ++j) {
                const Node& b = tree.node(j);
                if (a.word.comparable(b.word)) continue;
                double d = (a.x - b.x).norm();
                double ratio = d / (a.r + b.r);
                if (ratio < sl.min_ratio) sl = Slot{ratio, i, j, sl.worst, sl.wa, sl.wb};
                double slack = d - K.C * (a.r + b.r);
                if (slack < sl.worst) {
                    sl.worst = slack;
                    sl.wa = i;
                    sl.wb = j;
                }
            }
        });
        Slot all;
        for (const auto& sl : slots) {
            if (sl.min_ratio < all.min_ratio) {
                all.min_ratio = sl.min_ratio;
                all.ra = sl.ra;
                all.rb = sl.rb;
            }
            if (sl.worst < all.worst) {
                all.worst = sl.worst;
                all.wa = sl.wa;
                all.wb = sl.wb;
            }
        }
        auto c = make_check("T1");
        c.measured = all.min_ratio;
        rep.measured.C = std::isfinite(all.min_ratio) ? all.min_ratio : K.C;
        c.passed = !(all.worst < -tol);
        if (!c.passed) c.witness = std::make_pair(tree.node(all.wa).word, tree.node(all.wb).word);
        c.detail = "min d(x_I,x_J)/(r_I+r_J) over incomparable pairs";
        rep.checks.push_back(c);
    }

    // descendants per node, self included
    std::vector<std::vector<std::size_t>> desc(n);
    for (std::size_t i = n; i-- > 0;) {
        desc[i].push_back(i);
        for (auto ch : tree.node(i).children) desc[i].insert(desc[i].end(), desc[ch].begin(), desc[ch].end());
    }

    // (T2)
    {
        std::vector<PairExtreme> far(n);
        parallel_for(n, [&](std::size_t i) { far[i] = farthest_pair(tree, desc[i]); });
        auto c = make_check("T2");
        double worst_ratio = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double ratio = far[i].value / tree.node(i).r;
            worst_ratio = std::max(worst_ratio, ratio);
            if (c.passed && far[i].value > K.D * tree.node(i).r + tol) {
                c.passed = false;
                c.witness = std::make_pair(tree.node(far[i].a).word, tree.node(far[i].b).word);
            }
        }
        c.measured = worst_ratio;
        rep.measured.D = worst_ratio;
        c.detail = "max diam{x_IJ}/r_I";
        rep.checks.push_back(c);
    }

    // (T3) and (T'3): level sums of r^s below every node
    {
        std::vector<std::vector<double>> sums(n);
        for (std::size_t i = n; i-- > 0;) {
            const Node& nd = tree.node(i);
            sums[i].assign(tree.depth() - nd.word.size() + 1, 0.0);
            sums[i][0] = std::pow(nd.r, s);
            for (auto ch : nd.children)
                for (std::size_t k = 0; k < sums[ch].size(); ++k) sums[i][k + 1] += sums[ch][k];
        }
        auto t3 = make_check("T3");
        auto t3p = make_check("T'3");
        double worst_diff = 0.0, E = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            double base = sums[i][0];
            for (std::size_t k = 1; k < sums[i].size(); ++k) {
                double diff = std::abs(sums[i][k] - base);
                if (diff > worst_diff) worst_diff = diff;
                double q = sums[i][k] / base;
                E = std::max({E, q, 1.0 / q});
                if (t3.passed && diff > tol) {
                    t3.passed = false;
                    std::size_t first = i;
                    for (auto j : desc[i])
                        if (tree.node(j).word.size() == tree.node(i).word.size() + k) {
                            first = j;
                            break;
                        }
                    t3.witness = std::make_pair(tree.node(i).word, tree.node(first).word);
                    t3.detail = "level " + std::to_string(k) + " below the first word misses r_I^s by " +
                                std::to_string(diff);
                }
            }
        }
        t3.measured = worst_diff;
        if (t3.passed) t3.detail = "max |sum_{|J|=n} r_IJ^s - r_I^s|";
        t3p.measured = E;
        rep.measured.E = E;
        t3p.passed = E <= K.E * (1 + tol) + tol;
        if (!t3p.passed) t3p.witness = t3.witness.value_or(std::make_pair(Word{}, Word{}));
        t3p.detail = "max ratio of level sums to r_I^s, either way";
        rep.checks.push_back(t3);
        rep.checks.push_back(t3p);
    }

    // (T4) as the largest r at the deepest level
    {
        auto c = make_check("T4");
        std::size_t arg = 0;
        double mx = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (tree.node(i).word.size() == tree.depth() && tree.node(i).r >= mx) {
                if (tree.node(i).r > mx) arg = i;
                mx = tree.node(i).r;
            }
        rep.max_r_deepest = mx;
        c.measured = mx;
        c.passed = tree.depth() == 0 || mx < 1.0;
        if (!c.passed) c.witness = std::make_pair(Word{}, tree.node(arg).word);
        c.detail = "max r_I at depth " + std::to_string(tree.depth());
        rep.checks.push_back(c);
    }

    // (T5) and (M3): child-to-parent ratios
    {
        auto t5 = make_check("T5");
        auto m3 = make_check("M3");
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (std::size_t i = 1; i < n; ++i) {
            const Node& ch = tree.node(i);
            const Node& pa = tree.node(std::size_t(ch.parent));
            double q = ch.r / pa.r;
            lo = std::min(lo, q);
            hi = std::max(hi, q);
            if (t5.passed && ch.r < K.rho * pa.r - tol) {
                t5.passed = false;
                t5.witness = std::make_pair(pa.word, ch.word);
            }
            if (m3.passed && ch.r > K.R * pa.r + tol) {
                m3.passed = false;
                m3.witness = std::make_pair(pa.word, ch.word);
            }
        }
        if (n == 1) lo = hi = K.rho;
        rep.measured.rho = lo;
        rep.measured.R = n == 1 ? K.R : hi;
        t5.measured = lo;
        t5.detail = "min r_Ij/r_I";
        m3.measured = rep.measured.R;
        m3.passed = m3.passed && K.R < 1.0;
        m3.detail = "max r_Ij/r_I, declared R must be < 1";
        rep.checks.push_back(t5);
        rep.checks.push_back(m3);
    }

    // C rho < D
    {
        auto c = make_check("C_rho_below_D");
        c.measured = K.C * K.rho;
        c.passed = K.C * K.rho < K.D || n == 1;
        if (!c.passed) c.witness = std::make_pair(Word{}, Word{});
        c.detail = "C*rho against D";
        rep.checks.push_back(c);
    }

    if (auto delta = tree.packing_delta()) {
        auto c = make_check("D_delta");
        double worst = 0.0;
        std::pair<Word, Word> wit;
        for (std::size_t i = 0; i < n; ++i) {
            double sc = std::pow(*delta, double(tree.node(i).word.size()));
            for (auto j : desc[i]) {
                double q = (tree.node(i).x - tree.node(j).x).norm() / sc;
                if (q > worst) {
                    worst = q;
                    wit = {tree.node(i).word, tree.node(j).word};
                }
            }
        }
        c.measured = worst;
        double bound = 2.0 / (1.0 - *delta);
        c.passed = worst <= bound + tol;
        if (!c.passed) c.witness = wit;
        c.detail = "max d(x_I,x_IJ)/delta^|I| against 2/(1-delta)";
        rep.checks.push_back(c);
    }
    return rep;
}

double pruned_mass(const STree& tree, const ChoiceFunction& choice, const Word& I, std::size_t m) {
    auto start = tree.find(I);
    if (!start) throw DomainError("pruned_mass: word not stored");
    if (I.size() + m > tree.depth()) throw DomainError("pruned_mass: m exceeds the stored depth");
    const double s = tree.s();
    auto rec = [&](auto&& self, std::size_t id, std::size_t left) -> double {
        const Node& nd = tree.node(id);
        if (left == 0) return std::pow(nd.r, s);
        Symbol c = choice(nd.word);
        bool found = false;
        double sum = 0.0;
        for (auto ch : nd.children) {
            if (tree.node(ch).word.vec().back() == c) {
                found = true;
                continue;
            }
            sum += self(self, ch, left - 1);
        }
        if (!found) throw PreconditionError("pruned_mass: choice is not a stored child");
        return sum;
    };
    return rec(rec, *start, m);
}

double pruned_mass_bound(const STree& tree, const Word& I, std::size_t m) {
    const auto& K = tree.constants();
    const double s = tree.s();
    return K.E * K.E * std::pow(tree.at(I).r, s) * std::pow(1.0 - std::pow(K.rho, s), double(m));
}

STree power_tree(const STree& tree, std::size_t m) {
    if (m < 1) throw DomainError("power_tree: m must be >= 1");
    if (m > 1 && tree.depth() < m) throw DomainError("power_tree: stored depth below m");
    auto rec = symbolic::power_recode(tree.shift(), symbolic::LocallyConstantPotential::constant(tree.shift(), 1.0), m);
    std::map<Word, Symbol> code;
    for (std::size_t i = 0; i < rec.blocks.size(); ++i) code.emplace(rec.blocks[i], Symbol(i));
    const std::size_t depth = tree.depth() / m;
    std::map<Word, NodeValue> nodes;
    for (const auto& nd : tree.nodes()) {
        if (nd.word.size() % m != 0 || nd.word.size() / m > depth) continue;
        std::vector<Symbol> w;
        for (std::size_t k = 0; k < nd.word.size(); k += m) w.push_back(code.at(nd.word.prefix(k + m).drop(k)));
        nodes.emplace(Word(std::move(w)), NodeValue{nd.x, nd.r});
    }
    Constants c = tree.constants();
    c.rho = std::pow(c.rho, double(m));
    c.R = std::pow(c.R, double(m));
    return STree(rec.shift, tree.s(), c, nodes, tree.packing_delta() ? std::optional<double>(std::pow(*tree.packing_delta(), double(m))) : std::nullopt);
}

RatioSeries ratio_limit_diagnostic(const STree& tree, Symbol i, const Word& omega_prefix) {
    if (i >= tree.shift().alphabet_size()) throw DomainError("ratio_limit_diagnostic: symbol out of range");
    Word iw = Word{i}.concat(omega_prefix);
    if (!tree.find(omega_prefix) || !tree.find(iw))
        throw DomainError("ratio_limit_diagnostic: prefix cannot be extended inside the stored tree");
    RatioSeries out;
    out.i = i;
    out.omega = omega_prefix;
    for (;;) {
        Word a = out.omega, b = Word{i}.concat(out.omega);
        out.n.push_back(a.size());
        out.ratios.push_back(tree.at(b).r / tree.at(a).r);
        bool extended = false;
        for (Symbol j = 0; j < tree.shift().alphabet_size() && !extended; ++j)
            if (tree.find(a.append(j)) && tree.find(b.append(j))) {
                out.omega = a.append(j);
                extended = true;
            }
        if (!extended) break;
    }
    out.estimate = out.ratios.back();
    return out;
}

}  // namespace ahlfors::stree
