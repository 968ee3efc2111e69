#include "ahlfors/counting.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "ahlfors/error.hpp"

namespace ahlfors::counting {

using geometry::squared_distance;

std::string to_string(Function f) {
    switch (f) {
        case Function::Separated: return "separated";
        case Function::Packing: return "packing";
        case Function::Covering: return "covering";
        case Function::Minkowski: return "minkowski";
    }
    return "?";
}

std::string to_string(Mode m) { return m == Mode::Greedy ? "greedy" : "exact"; }

Function parse_function(const std::string& s) {
    if (s == "separated" || s == "S") return Function::Separated;
    if (s == "packing" || s == "P") return Function::Packing;
    if (s == "covering" || s == "C") return Function::Covering;
    if (s == "minkowski" || s == "M") return Function::Minkowski;
    throw InputError("unknown counting function '" + s + "'");
}

Mode parse_mode(const std::string& s) {
    if (s == "greedy") return Mode::Greedy;
    if (s == "exact") return Mode::Exact;
    throw InputError("unknown mode '" + s + "'");
}

CountingFunctionSpec CountingFunctionSpec::of(Function f) {
    switch (f) {
        case Function::Separated: return {f, 1.0, 1.0, 0.0};
        case Function::Packing: return {f, 2.0, 2.0, 1.0};
        case Function::Covering: return {f, 2.0, 2.0, 2.0};
        case Function::Minkowski: return {f, 2.0, 1.0, 0.0};
    }
    return {f, 1.0, 1.0, 0.0};
}

// ---- spatial index ------------------------------------------------------------

namespace {

std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_cell(const std::vector<long long>& c) {
    std::uint64_t h = 0x1234567;
    for (long long v : c) h = mix(h ^ std::uint64_t(v));
    return h;
}

// Visits every offset vector in {-1,0,1}^d.
template <class F>
void for_each_offset(std::size_t d, F&& f) {
    std::vector<long long> off(d, -1);
    for (;;) {
        f(off);
        std::size_t k = 0;
        while (k < d && off[k] == 1) off[k++] = -1;
        if (k == d) return;
        ++off[k];
    }
}

}  // namespace

SpatialIndex::SpatialIndex(const PointCloud& cloud, double cell) : cloud_(&cloud), cell_(cell) {
    if (!(cell > 0)) throw DomainError("SpatialIndex: cell size must be positive");
    auto [lo, hi] = cloud.bounding_box();
    origin_.assign(lo.data(), lo.data() + lo.size());
    const std::size_t n = cloud.size();
    std::vector<std::uint64_t> keys(n);
    for (std::size_t i = 0; i < n; ++i) keys[i] = key(cell_of(cloud.point(i)));
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0);
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && keys[order_[j]] == keys[order_[i]]) ++j;
        buckets_.emplace(keys[order_[i]], std::make_pair(i, j));
        i = j;
    }
}

std::uint64_t SpatialIndex::key(const std::vector<long long>& c) const { return hash_cell(c); }

std::vector<long long> SpatialIndex::cell_of(std::span<const double> q) const {
    std::vector<long long> c(q.size());
    for (std::size_t k = 0; k < q.size(); ++k) c[k] = (long long)std::floor((q[k] - origin_[k]) / cell_);
    return c;
}

void SpatialIndex::for_each_near(std::span<const double> q, const std::function<bool(std::size_t)>& fn) const {
    auto base = cell_of(q);
    std::vector<std::uint64_t> seen;
    bool stop = false;
    for_each_offset(q.size(), [&](const std::vector<long long>& off) {
        if (stop) return;
        std::vector<long long> c(base.size());
        for (std::size_t k = 0; k < c.size(); ++k) c[k] = base[k] + off[k];
        auto h = key(c);
        if (std::find(seen.begin(), seen.end(), h) != seen.end()) return;
        seen.push_back(h);
        auto it = buckets_.find(h);
        if (it == buckets_.end()) return;
        for (std::size_t i = it->second.first; i < it->second.second && !stop; ++i)
            if (!fn(order_[i])) stop = true;
    });
}

bool SpatialIndex::any_within(std::span<const double> q, double radius) const {
    if (radius > cell_) throw DomainError("SpatialIndex: radius exceeds cell size");
    const double r2 = radius * radius;
    bool found = false;
    for_each_near(q, [&](std::size_t i) {
        if (squared_distance(q, cloud_->point(i)) <= r2) found = true;
        return !found;
    });
    return found;
}

// ---- adequacy -----------------------------------------------------------------

Adequacy adequacy(double resolution, double eps) {
    if (resolution > eps / 2) return Adequacy::Refuse;
    if (resolution > eps / 10) return Adequacy::Warn;
    return Adequacy::Ok;
}

void require_adequate(const PointCloud& cloud, double eps, const char* who) {
    if (!(eps > 0) || !std::isfinite(eps)) throw DomainError(std::string(who) + ": eps must be positive");
    if (adequacy(cloud.resolution(), eps) == Adequacy::Refuse)
        throw PreconditionError(std::string(who) + ": sample resolution " + std::to_string(cloud.resolution()) +
                                " exceeds eps/2 at eps = " + std::to_string(eps) +
                                "; counts would describe the sample, not the set");
}

// ---- greedy -------------------------------------------------------------------

SeparatedResult separated_greedy(const PointCloud& cloud, double eps) {
    require_adequate(cloud, eps, "separated_greedy");
    SeparatedResult res;
    res.adequacy_warning = adequacy(cloud.resolution(), eps) == Adequacy::Warn;
    const std::size_t d = cloud.dim();
    const double e2 = eps * eps;
    auto [lo, hi] = cloud.bounding_box();
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> kept;
    std::vector<long long> c(d), nb(d);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        auto p = cloud.point(i);
        for (std::size_t k = 0; k < d; ++k) c[k] = (long long)std::floor((p[k] - lo[long(k)]) / eps);
        bool close = false;
        for_each_offset(d, [&](const std::vector<long long>& off) {
            if (close) return;
            for (std::size_t k = 0; k < d; ++k) nb[k] = c[k] + off[k];
            auto it = kept.find(hash_cell(nb));
            if (it == kept.end()) return;
            for (auto j : it->second)
                if (squared_distance(p, cloud.point(j)) <= e2) {
                    close = true;
                    return;
                }
        });
        if (close) continue;
        kept[hash_cell(c)].push_back(i);
        res.selected.push_back(i);
    }
    res.count = res.selected.size();
    return res;
}

// ---- exact maximum separated set ----------------------------------------------

namespace {

using Bits = std::vector<std::uint64_t>;

struct BitGraph {
    std::size_t n = 0, w = 0;
    std::vector<std::uint64_t> adj;  // n rows of w words
    const std::uint64_t* row(std::size_t v) const { return adj.data() + v * w; }
    void set(std::size_t u, std::size_t v) {
        adj[u * w + v / 64] |= 1ULL << (v % 64);
        adj[v * w + u / 64] |= 1ULL << (u % 64);
    }
};

bool any(const Bits& b) {
    return std::any_of(b.begin(), b.end(), [](std::uint64_t x) { return x != 0; });
}

// Branch-and-reduce maximum independent set on the proximity graph.
// Reductions: degree <= 1 vertices are taken, and v is discarded whenever
// some neighbour u has N[u] within N[v]. Bound: greedy clique partition.
class MisSolver {
public:
    MisSolver(const BitGraph& g, std::uint64_t budget) : g_(g), budget_(budget) {}

    std::size_t solve() {
        Bits all(g_.w, 0);
        for (std::size_t v = 0; v < g_.n; ++v) all[v / 64] |= 1ULL << (v % 64);
        return solve_exact(all);
    }

private:
    static bool test(const Bits& b, std::size_t i) { return (b[i / 64] >> (i % 64)) & 1; }
    static void clear(Bits& b, std::size_t i) { b[i / 64] &= ~(1ULL << (i % 64)); }

    std::size_t degree(const Bits& alive, std::size_t v) const {
        const auto* r = g_.row(v);
        std::size_t d = 0;
        for (std::size_t k = 0; k < g_.w; ++k) d += std::size_t(std::popcount(alive[k] & r[k]));
        return d;
    }

    void remove_closed(Bits& alive, std::size_t v) const {
        const auto* r = g_.row(v);
        for (std::size_t k = 0; k < g_.w; ++k) alive[k] &= ~r[k];
        clear(alive, v);
    }

    template <class F>
    void for_each(const Bits& b, F&& f) const {
        for (std::size_t k = 0; k < g_.w; ++k)
            for (std::uint64_t x = b[k]; x; x &= x - 1) f(k * 64 + std::size_t(std::countr_zero(x)));
    }

    std::size_t reduce(Bits& alive) const {
        std::size_t taken = 0;
        for (bool changed = true; changed;) {
            changed = false;
            for_each(Bits(alive), [&](std::size_t v) {
                if (!test(alive, v)) return;
                if (degree(alive, v) <= 1) {
                    ++taken;
                    remove_closed(alive, v);
                    changed = true;
                }
            });
            if (changed) continue;
            for_each(Bits(alive), [&](std::size_t v) {
                if (!test(alive, v)) return;
                const auto* rv = g_.row(v);
                bool dominated = false;
                for (std::size_t k = 0; k < g_.w && !dominated; ++k)
                    for (std::uint64_t x = alive[k] & rv[k]; x && !dominated; x &= x - 1) {
                        std::size_t u = k * 64 + std::size_t(std::countr_zero(x));
                        const auto* ru = g_.row(u);
                        // N[u] subset of N[v] (both restricted to alive)
                        bool sub = true;
                        for (std::size_t j = 0; j < g_.w && sub; ++j) {
                            std::uint64_t nu = alive[j] & ru[j];
                            std::uint64_t nv = alive[j] & rv[j];
                            if (j == v / 64) nv |= 1ULL << (v % 64);
                            sub = (nu & ~nv) == 0;
                        }
                        dominated = sub;
                    }
                if (dominated) {
                    clear(alive, v);
                    changed = true;
                }
            });
        }
        return taken;
    }

    std::size_t clique_cover(const Bits& alive) const {
        std::vector<Bits> common;
        for_each(alive, [&](std::size_t v) {
            for (auto& c : common)
                if (test(c, v)) {
                    const auto* r = g_.row(v);
                    for (std::size_t k = 0; k < g_.w; ++k) c[k] &= r[k];
                    return;
                }
            Bits c(g_.row(v), g_.row(v) + g_.w);
            common.push_back(std::move(c));
        });
        return common.size();
    }

    std::size_t greedy(Bits alive) const {
        std::size_t size = 0;
        while (any(alive)) {
            std::size_t pick = SIZE_MAX, best = SIZE_MAX;
            for_each(alive, [&](std::size_t v) {
                auto d = degree(alive, v);
                if (d < best) {
                    best = d;
                    pick = v;
                }
            });
            remove_closed(alive, pick);
            ++size;
        }
        return size;
    }

    std::size_t solve_exact(Bits alive) {
        std::size_t g = greedy(alive);
        return g == 0 ? 0 : std::max(g, search(alive, g - 1));
    }

    // Fail-soft: exact whenever the true value exceeds lb, otherwise some
    // value <= lb.
    std::size_t search(Bits alive, std::size_t lb) {
        if (++nodes_ > budget_) throw BudgetError("separated_exact: branch-and-reduce budget exceeded", 0.0);
        std::size_t taken = reduce(alive);
        if (!any(alive)) return taken;
        std::size_t need = lb > taken ? lb - taken : 0;

        // split into components and solve each exactly
        std::size_t first = 0;
        for (std::size_t k = 0; k < g_.w; ++k)
            if (alive[k]) {
                first = k * 64 + std::size_t(std::countr_zero(alive[k]));
                break;
            }
        Bits comp(g_.w, 0), frontier(g_.w, 0);
        frontier[first / 64] |= 1ULL << (first % 64);
        while (any(frontier)) {
            for (std::size_t k = 0; k < g_.w; ++k) comp[k] |= frontier[k];
            Bits next(g_.w, 0);
            for_each(frontier, [&](std::size_t v) {
                const auto* r = g_.row(v);
                for (std::size_t k = 0; k < g_.w; ++k) next[k] |= r[k];
            });
            for (std::size_t k = 0; k < g_.w; ++k) frontier[k] = next[k] & alive[k] & ~comp[k];
        }
        if (comp != alive) {
            Bits rest(g_.w);
            for (std::size_t k = 0; k < g_.w; ++k) rest[k] = alive[k] & ~comp[k];
            return taken + solve_exact(comp) + solve_exact(rest);
        }

        if (clique_cover(alive) <= need) return taken + need;  // cannot beat lb
        std::size_t v = SIZE_MAX, dmax = 0;
        for_each(alive, [&](std::size_t u) {
            auto d = degree(alive, u);
            if (v == SIZE_MAX || d > dmax) {
                dmax = d;
                v = u;
            }
        });
        Bits with = alive;
        remove_closed(with, v);
        std::size_t a = 1 + search(with, need > 0 ? need - 1 : 0);
        Bits without = alive;
        clear(without, v);
        std::size_t b = search(without, std::max(need, a));
        return taken + std::max(a, b);
    }

    const BitGraph& g_;
    std::uint64_t budget_;
    std::uint64_t nodes_ = 0;
};

std::vector<std::vector<std::size_t>> proximity_lists(const PointCloud& cloud, double r) {
    const std::size_t n = cloud.size();
    const double r2 = r * r;
    std::vector<std::vector<std::size_t>> nb(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (squared_distance(cloud.point(i), cloud.point(j)) <= r2) {
                nb[i].push_back(j);
                nb[j].push_back(i);
            }
    return nb;
}

}  // namespace

std::size_t separated_exact(const PointCloud& cloud, double eps, const ExactOptions& opt) {
    require_adequate(cloud, eps, "separated_exact");
    const std::size_t n = cloud.size();
    if (n > opt.max_points)
        throw BudgetError("separated_exact: " + std::to_string(n) + " points exceed the oracle cap of " +
                              std::to_string(opt.max_points),
                          double(separated_greedy(cloud, eps).count));
    auto nb = proximity_lists(cloud, eps);

    // degree <= 1 reductions are safe for maximum independent sets
    std::vector<char> alive(n, 1);
    std::vector<std::size_t> degree(n);
    for (std::size_t i = 0; i < n; ++i) degree[i] = nb[i].size();
    std::size_t taken = 0;
    auto remove = [&](std::size_t v) {
        alive[v] = 0;
        for (auto u : nb[v])
            if (alive[u]) --degree[u];
    };
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t v = 0; v < n; ++v) {
            if (!alive[v] || degree[v] > 1) continue;
            ++taken;
            for (auto u : nb[v])
                if (alive[u]) remove(u);
            remove(v);
            changed = true;
        }
    }

    std::vector<std::size_t> members;
    std::vector<std::size_t> local(n, SIZE_MAX);
    for (std::size_t v = 0; v < n; ++v)
        if (alive[v]) {
            local[v] = members.size();
            members.push_back(v);
        }
    BitGraph g;
    g.n = members.size();
    g.w = (g.n + 63) / 64;
    g.adj.assign(g.n * g.w, 0);
    for (std::size_t a = 0; a < g.n; ++a)
        for (auto u : nb[members[a]])
            if (local[u] != SIZE_MAX) g.set(a, local[u]);
    std::size_t total = taken + MisSolver(g, opt.node_budget).solve();
    return total;
}

// ---- exact covering -----------------------------------------------------------

namespace {

class CoverSolver {
public:
    CoverSolver(std::vector<Bits> sets, std::size_t points, std::uint64_t budget)
        : sets_(std::move(sets)), m_(points), w_((points + 63) / 64), budget_(budget) {
        drop_dominated_points();
        owners_.resize(m_);
        for (std::size_t c = 0; c < sets_.size(); ++c)
            for (std::size_t p = 0; p < m_; ++p)
                if (test(sets_[c], p)) owners_[p].push_back(c);
        shared_.assign(m_, Bits(w_, 0));
        for (std::size_t p = 0; p < m_; ++p)
            for (auto c : owners_[p])
                for (std::size_t k = 0; k < w_; ++k) shared_[p][k] |= sets_[c][k];
    }

    std::size_t solve() {
        Bits uncovered(w_, 0);
        for (std::size_t p = 0; p < m_; ++p) uncovered[p / 64] |= 1ULL << (p % 64);
        best_ = greedy(uncovered);
        branch(uncovered, std::vector<char>(sets_.size(), 1), 0);
        return best_;
    }

private:
    static bool test(const Bits& b, std::size_t i) { return (b[i / 64] >> (i % 64)) & 1; }

    // A point whose centre set contains another point's centre set is covered
    // whenever that other point is, so it can be ignored.
    void drop_dominated_points() {
        const std::size_t nc = sets_.size(), cw = (nc + 63) / 64;
        std::vector<Bits> own(m_, Bits(cw, 0));
        for (std::size_t c = 0; c < nc; ++c)
            for (std::size_t p = 0; p < m_; ++p)
                if (test(sets_[c], p)) own[p][c / 64] |= 1ULL << (c % 64);
        std::vector<char> keep(m_, 1);
        for (std::size_t p = 0; p < m_; ++p)
            for (std::size_t q = 0; q < m_ && keep[p]; ++q) {
                if (p == q || !keep[q]) continue;
                bool sub = true;
                for (std::size_t k = 0; k < cw && sub; ++k) sub = (own[q][k] & ~own[p][k]) == 0;
                if (sub && (own[p] != own[q] || q < p)) keep[p] = 0;
            }
        std::vector<std::size_t> idx;
        for (std::size_t p = 0; p < m_; ++p)
            if (keep[p]) idx.push_back(p);
        const std::size_t m = idx.size(), w = (m + 63) / 64;
        std::vector<Bits> reduced;
        for (const auto& set : sets_) {
            Bits b(w, 0);
            for (std::size_t k = 0; k < m; ++k)
                if (test(set, idx[k])) b[k / 64] |= 1ULL << (k % 64);
            if (any(b)) reduced.push_back(std::move(b));
        }
        sets_ = std::move(reduced);
        m_ = m;
        w_ = w;
    }

    std::size_t count_and(const Bits& a, const Bits& b) const {
        std::size_t s = 0;
        for (std::size_t k = 0; k < w_; ++k) s += std::size_t(std::popcount(a[k] & b[k]));
        return s;
    }

    std::size_t greedy(Bits u) const {
        std::size_t used = 0;
        while (any(u)) {
            std::size_t best = 0, gain = 0;
            for (std::size_t c = 0; c < sets_.size(); ++c) {
                auto g = count_and(sets_[c], u);
                if (g > gain) {
                    gain = g;
                    best = c;
                }
            }
            for (std::size_t k = 0; k < w_; ++k) u[k] &= ~sets_[best][k];
            ++used;
        }
        return used;
    }

    // Max of two bounds: points pairwise without a shared centre each need
    // their own ball, and the fractional bound sum_p 1 / (best gain at p).
    std::size_t lower_bound(const Bits& u, const std::vector<char>& avail, const std::vector<std::size_t>& gain) const {
        Bits blocked(w_, 0);
        std::size_t lb = 0;
        double frac = 0;
        for (std::size_t p = 0; p < m_; ++p) {
            if (!test(u, p)) continue;
            std::size_t g = 0;
            for (auto c : owners_[p])
                if (avail[c]) g = std::max(g, gain[c]);
            frac += 1.0 / double(g);
            if (test(blocked, p)) continue;
            ++lb;
            for (auto c : owners_[p])
                if (avail[c])
                    for (std::size_t k = 0; k < w_; ++k) blocked[k] |= sets_[c][k];
        }
        return std::max(lb, std::size_t(std::ceil(frac - 1e-9)));
    }

    // Points still to be covered are `u`; centres still usable are `avail`.
    void branch(Bits u, std::vector<char> avail, std::size_t used) {
        if (++nodes_ > budget_) throw BudgetError("covering_exact: branch-and-bound budget exceeded", double(best_));
        const std::size_t nc = sets_.size();
        std::vector<std::size_t> gain(nc);
        for (bool changed = true; changed;) {
            changed = false;
            for (std::size_t c = 0; c < nc; ++c) gain[c] = avail[c] ? count_and(sets_[c], u) : 0;
            for (std::size_t c = 0; c < nc; ++c)
                if (avail[c] && gain[c] == 0) avail[c] = 0;
            // a centre whose uncovered part sits inside another's is never needed
            for (std::size_t a = 0; a < nc; ++a) {
                if (!avail[a]) continue;
                for (std::size_t b = 0; b < nc; ++b) {
                    if (a == b || !avail[b] || gain[b] < gain[a]) continue;
                    bool sub = true;
                    for (std::size_t k = 0; k < w_ && sub; ++k) sub = (sets_[a][k] & u[k] & ~sets_[b][k]) == 0;
                    if (sub && (gain[a] < gain[b] || b < a)) {
                        avail[a] = 0;
                        changed = true;
                        break;
                    }
                }
            }
            // a point with a single usable centre forces that centre
            for (std::size_t p = 0; p < m_ && !changed; ++p) {
                if (!test(u, p)) continue;
                std::size_t only = SIZE_MAX, cnt = 0;
                for (auto c : owners_[p])
                    if (avail[c]) {
                        only = c;
                        ++cnt;
                    }
                if (cnt == 0) return;  // infeasible branch
                if (cnt == 1) {
                    for (std::size_t k = 0; k < w_; ++k) u[k] &= ~sets_[only][k];
                    avail[only] = 0;
                    ++used;
                    changed = true;
                }
            }
            if (used >= best_) return;
        }
        if (!any(u)) {
            best_ = std::min(best_, used);
            return;
        }
        if (used + lower_bound(u, avail, gain) >= best_) return;
        std::size_t pick = SIZE_MAX, fewest = SIZE_MAX;
        for (std::size_t p = 0; p < m_; ++p) {
            if (!test(u, p)) continue;
            std::size_t cnt = 0;
            for (auto c : owners_[p]) cnt += avail[c];
            if (cnt < fewest) {
                fewest = cnt;
                pick = p;
            }
        }
        std::vector<std::size_t> cands;
        for (auto c : owners_[pick])
            if (avail[c]) cands.push_back(c);
        std::stable_sort(cands.begin(), cands.end(), [&](std::size_t a, std::size_t b) { return gain[a] > gain[b]; });
        for (auto c : cands) {
            Bits nu = u;
            for (std::size_t k = 0; k < w_; ++k) nu[k] &= ~sets_[c][k];
            avail[c] = 0;
            branch(nu, avail, used + 1);
            // later branches may assume c is not used
            if (used + 1 >= best_) return;
        }
    }

    std::vector<Bits> sets_;
    std::size_t m_, w_;
    std::uint64_t budget_;
    std::vector<std::vector<std::size_t>> owners_;
    std::vector<Bits> shared_;
    std::uint64_t nodes_ = 0;
    std::size_t best_ = 0;
};

}  // namespace

std::size_t covering_exact(const PointCloud& cloud, double eps, const PointCloud* centers, const ExactOptions& opt) {
    require_adequate(cloud, eps, "covering_exact");
    const PointCloud& ctr = centers ? *centers : cloud;
    if (ctr.dim() != cloud.dim()) throw DomainError("covering_exact: centre dimension mismatch");
    const std::size_t n = cloud.size(), nc = ctr.size();
    if (n > opt.max_points || nc > 4 * opt.max_points)
        throw BudgetError("covering_exact: instance exceeds the oracle cap of " + std::to_string(opt.max_points),
                          double(separated_greedy(cloud, eps).count));
    const double e2 = eps * eps;
    std::vector<std::vector<std::size_t>> covers(nc);
    for (std::size_t c = 0; c < nc; ++c)
        for (std::size_t p = 0; p < n; ++p)
            if (squared_distance(ctr.point(c), cloud.point(p)) <= e2) covers[c].push_back(p);
    for (std::size_t p = 0; p < n; ++p) {
        bool ok = false;
        for (std::size_t c = 0; c < nc && !ok; ++c)
            ok = squared_distance(ctr.point(c), cloud.point(p)) <= e2;
        if (!ok) throw DomainError("covering_exact: some point has no centre within eps");
    }

    // components: points linked when they share a centre
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& cv : covers)
        for (std::size_t k = 1; k < cv.size(); ++k) parent[find(cv[k])] = find(cv[0]);

    std::size_t total = 0;
    std::vector<char> done(n, 0);
    for (std::size_t s = 0; s < n; ++s) {
        std::size_t root = find(s);
        if (done[root]) continue;
        done[root] = 1;
        std::vector<std::size_t> members;
        std::vector<std::size_t> local(n, SIZE_MAX);
        for (std::size_t p = 0; p < n; ++p)
            if (find(p) == root) {
                local[p] = members.size();
                members.push_back(p);
            }
        const std::size_t m = members.size(), w = (m + 63) / 64;
        std::vector<Bits> sets;
        for (const auto& cv : covers) {
            if (cv.empty() || find(cv[0]) != root) continue;
            Bits b(w, 0);
            for (auto p : cv) b[local[p] / 64] |= 1ULL << (local[p] % 64);
            sets.push_back(std::move(b));
        }
        // drop centres whose coverage is contained in another's
        std::vector<char> keep(sets.size(), 1);
        for (std::size_t a = 0; a < sets.size(); ++a)
            for (std::size_t b = 0; b < sets.size() && keep[a]; ++b) {
                if (a == b || !keep[b]) continue;
                bool subset = true;
                for (std::size_t k = 0; k < w && subset; ++k) subset = (sets[a][k] & ~sets[b][k]) == 0;
                if (subset && (sets[a] != sets[b] || b < a)) keep[a] = 0;
            }
        std::vector<Bits> kept;
        for (std::size_t a = 0; a < sets.size(); ++a)
            if (keep[a]) kept.push_back(std::move(sets[a]));
        total += CoverSolver(std::move(kept), m, opt.node_budget).solve();
    }
    return total;
}

std::size_t separated_number(const PointCloud& cloud, double eps, Mode mode) {
    return mode == Mode::Exact ? separated_exact(cloud, eps) : separated_greedy(cloud, eps).count;
}

std::size_t packing_number(const PointCloud& cloud, double eps, Mode mode) {
    if (!(eps > 0)) throw DomainError("packing_number: eps must be positive");
    return separated_number(cloud, 2 * eps, mode);
}

std::size_t covering_number(const PointCloud& cloud, double eps, Mode mode) {
    return mode == Mode::Exact ? covering_exact(cloud, eps) : separated_greedy(cloud, eps).count;
}

// ---- Minkowski content --------------------------------------------------------

double default_voxel_size(double eps) {
    if (!(eps > 0)) throw DomainError("default_voxel_size: eps must be positive");
    return std::exp2(std::floor(std::log2(eps / 20.0)));
}

namespace {

struct Active {
    const double* p;
    double rem;  // remaining squared radius
};

class VoxelCounter {
public:
    VoxelCounter(std::size_t d, const std::vector<double>& origin, double h) : d_(d), o_(origin), h_(h) {}

    std::uint64_t count(std::vector<Active>& act, std::size_t axis) const {
        if (act.empty()) return 0;
        const double o = o_[axis];
        if (axis + 1 == d_) {
            std::vector<std::pair<double, double>> iv;
            iv.reserve(act.size());
            for (const auto& a : act) {
                double r = std::sqrt(a.rem);
                iv.emplace_back(a.p[axis] - r, a.p[axis] + r);
            }
            std::sort(iv.begin(), iv.end());
            std::uint64_t total = 0;
            double lo = iv[0].first, hi = iv[0].second;
            auto flush = [&] {
                // voxel centres o + (k + 1/2) h inside [lo, hi]
                long long k0 = (long long)std::ceil((lo - o) / h_ - 0.5);
                long long k1 = (long long)std::floor((hi - o) / h_ - 0.5);
                if (k1 >= k0) total += std::uint64_t(k1 - k0 + 1);
            };
            for (std::size_t i = 1; i < iv.size(); ++i) {
                if (iv[i].first <= hi) {
                    hi = std::max(hi, iv[i].second);
                } else {
                    flush();
                    lo = iv[i].first;
                    hi = iv[i].second;
                }
            }
            flush();
            return total;
        }
        std::sort(act.begin(), act.end(), [axis](const Active& a, const Active& b) { return a.p[axis] < b.p[axis]; });
        double rmax = 0;
        for (const auto& a : act) rmax = std::max(rmax, std::sqrt(a.rem));
        std::uint64_t total = 0;
        std::size_t lo = 0, hi = 0;
        long long k = (long long)std::ceil((act.front().p[axis] - rmax - o) / h_ - 0.5);
        const long long kend = (long long)std::floor((act.back().p[axis] + rmax - o) / h_ - 0.5);
        std::vector<Active> sub;
        while (k <= kend) {
            double c = o + (double(k) + 0.5) * h_;
            while (lo < act.size() && act[lo].p[axis] < c - rmax) ++lo;
            while (hi < act.size() && act[hi].p[axis] <= c + rmax) ++hi;
            if (lo == hi) {
                if (lo >= act.size()) break;
                long long next = (long long)std::ceil((act[lo].p[axis] - rmax - o) / h_ - 0.5);
                k = std::max(k + 1, next);
                continue;
            }
            sub.clear();
            for (std::size_t i = lo; i < hi; ++i) {
                double dz = act[i].p[axis] - c;
                double rem = act[i].rem - dz * dz;
                if (rem >= 0) sub.push_back({act[i].p, rem});
            }
            total += count(sub, axis + 1);
            ++k;
        }
        return total;
    }

private:
    std::size_t d_;
    std::vector<double> o_;
    double h_;
};

}  // namespace

MinkowskiResult minkowski_content(const PointCloud& cloud, double eps, double h, const MinkowskiOptions& opt) {
    require_adequate(cloud, eps, "minkowski_content");
    if (!(h > 0)) throw DomainError("minkowski_content: voxel size must be positive");
    if (h > eps / 20 * (1 + 1e-12)) throw PreconditionError("minkowski_content: voxel size must be <= eps/20");
    const std::size_t d = cloud.dim();
    MinkowskiResult res;
    res.h = h;
    res.adequacy_warning = adequacy(cloud.resolution(), eps) == Adequacy::Warn;
    double work = double(cloud.size()) * std::pow(2 * eps / h + 1, double(d) - 1);
    if (work > double(opt.max_work))
        throw BudgetError("minkowski_content: voxel work estimate " + std::to_string(work) + " exceeds budget " +
                              std::to_string(opt.max_work),
                          0.0);
    auto [lo, hi] = cloud.bounding_box();
    std::vector<double> origin(lo.data(), lo.data() + lo.size());
    std::vector<Active> act;
    act.reserve(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) act.push_back({cloud.coords().data() + i * d, eps * eps});
    res.cells = VoxelCounter(d, origin, h).count(act, 0);
    res.volume = double(res.cells) * std::pow(h, double(d));
    res.value = res.volume / std::pow(eps, double(d));
    // boundary layer of half-diagonal width, plus the sample gap
    double t = h * std::sqrt(double(d)) / 2 / eps;
    double dd = double(d);
    res.error_bound = std::pow(1 + t, dd) - std::pow(std::max(0.0, 1 - t), dd) +
                      std::pow(1 + cloud.resolution() / eps, dd) - 1;
    return res;
}

MinkowskiResult minkowski_content(const PointCloud& cloud, double eps) {
    return minkowski_content(cloud, eps, default_voxel_size(eps));
}

double evaluate(Function f, const PointCloud& cloud, double eps, Mode mode) {
    switch (f) {
        case Function::Separated: return double(separated_number(cloud, eps, mode));
        case Function::Packing: return double(packing_number(cloud, eps, mode));
        case Function::Covering: return double(covering_number(cloud, eps, mode));
        case Function::Minkowski: return minkowski_content(cloud, eps).value;
    }
    return 0;
}

ChainResult chain_check(const PointCloud& cloud, double eps, Mode mode) {
    ChainResult r;
    r.mode = mode;
    if (mode == Mode::Exact) {
        r.s_2eps = separated_exact(cloud, 2 * eps);
        r.packing = packing_number(cloud, eps, Mode::Exact);
        r.covering = covering_exact(cloud, eps);
        r.s_eps = separated_exact(cloud, eps);
    } else {
        r.s_2eps = separated_greedy(cloud, 2 * eps).count;
        r.packing = r.s_2eps;
        r.covering = separated_greedy(cloud, eps).count;
        r.s_eps = r.covering;
    }
    r.holds = r.s_2eps <= r.packing && r.packing <= r.covering && r.covering <= r.s_eps;
    return r;
}

MonotonicityResult minkowski_monotonicity_check(const PointCloud& cloud, const std::vector<double>& eps_grid,
                                                double tolerance) {
    MonotonicityResult r;
    r.tolerance = tolerance;
    for (std::size_t i = 1; i < eps_grid.size(); ++i)
        if (!(eps_grid[i] < eps_grid[i - 1])) throw DomainError("minkowski_monotonicity_check: grid must decrease");
    for (double e : eps_grid) {
        r.eps.push_back(e);
        r.values.push_back(minkowski_content(cloud, e).value);
    }
    for (std::size_t i = 0; i + 1 < r.values.size(); ++i)
        if (r.values[i] > r.values[i + 1] * (1 + tolerance)) r.violations.push_back(i);
    r.passed = r.violations.empty();
    return r;
}

double different_epsilons_constant(const PointCloud& cloud, const std::vector<double>& eps_grid, double s, Mode mode) {
    std::vector<double> v;
    for (double e : eps_grid) v.push_back(double(separated_number(cloud, e, mode)));
    double R = 1.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = 0; j < v.size(); ++j) {
            double expect = std::pow(eps_grid[i] / eps_grid[j], s);  // e1 = grid[i], e2 = grid[j]
            double ratio = v[j] / v[i];
            R = std::max({R, ratio / expect, expect / ratio});
        }
    return R;
}

// ---- axiom suite --------------------------------------------------------------

bool AxiomSuiteReport::all_passed() const {
    return std::all_of(outcomes.begin(), outcomes.end(), [](const AxiomOutcome& o) { return o.passed; });
}

const AxiomOutcome* AxiomSuiteReport::find(const std::string& name) const {
    for (const auto& o : outcomes)
        if (o.axiom == name) return &o;
    return nullptr;
}

namespace {

double set_distance(const PointCloud& a, const PointCloud& b) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) best = std::min(best, squared_distance(a.point(i), b.point(j)));
    return std::sqrt(best);
}

PointCloud first_half(const PointCloud& c) {
    std::vector<std::size_t> idx((c.size() + 1) / 2);
    std::iota(idx.begin(), idx.end(), 0);
    return c.subset(idx);
}

}  // namespace

AxiomSuiteReport axiom_suite(const CountingFunctionSpec& spec, const std::vector<PointCloud>& clouds,
                             const std::vector<double>& eps_grid, const AxiomSuiteOptions& opt) {
    if (spec.kind == Function::Minkowski)
        throw DomainError("axiom_suite: supports the separated, packing and covering numbers");
    if (clouds.empty() || eps_grid.empty()) throw DomainError("axiom_suite: need clouds and an eps grid");
    AxiomSuiteReport rep{spec, {}, std::nullopt};

    PointCloud ambient = clouds.front();
    for (std::size_t i = 1; i < clouds.size(); ++i) ambient = ambient.merged(clouds[i]);

    auto N = [&](const PointCloud& k, double e) -> double {
        switch (spec.kind) {
            case Function::Separated: return double(separated_number(k, e, opt.mode));
            case Function::Packing: return double(packing_number(k, e, opt.mode));
            case Function::Covering:
                return double(opt.mode == Mode::Exact ? covering_exact(k, e, &ambient) : separated_greedy(k, e).count);
            default: return 0;
        }
    };
    auto S = [&](const PointCloud& k, double e) { return double(separated_number(k, e, opt.mode)); };

    std::vector<double> grid = eps_grid;
    std::sort(grid.begin(), grid.end(), std::greater<>());

    auto record = [&](AxiomOutcome& o, bool ok, const std::string& what) {
        ++o.checks;
        if (!ok) {
            ++o.violations;
            o.passed = false;
            if (o.detail.empty()) o.detail = what;
        }
    };

    AxiomOutcome c1, c2, c3, c4, c6, c5;
    c1.axiom = "C1";
    c2.axiom = "C2";
    c3.axiom = "C3";
    c4.axiom = "C4";
    c5.axiom = "C5";
    c6.axiom = "C6";
    for (std::size_t ci = 0; ci < clouds.size(); ++ci) {
        const auto& K = clouds[ci];
        double prev = -1;
        for (double e : grid) {
            double v = N(K, e);
            record(c1, v >= prev, "cloud " + std::to_string(ci) + " decreases at eps=" + std::to_string(e));
            prev = v;
            PointCloud H = first_half(K);
            record(c2, N(H, e) <= v, "cloud " + std::to_string(ci) + " half exceeds whole at eps=" + std::to_string(e));
        }
    }
    for (std::size_t i = 0; i < clouds.size(); ++i)
        for (std::size_t j = i + 1; j < clouds.size(); ++j) {
            PointCloud U = clouds[i].merged(clouds[j]);
            double gap = set_distance(clouds[i], clouds[j]);
            for (double e : grid) {
                double nk = N(clouds[i], e), nq = N(clouds[j], e), nu = N(U, e);
                std::string tag = "clouds " + std::to_string(i) + "," + std::to_string(j) + " eps=" + std::to_string(e);
                record(c2, nk <= nu && nq <= nu, tag + ": part exceeds union");
                record(c3, nu <= nk + nq, tag + ": union exceeds sum");
                if (gap > spec.A * e) record(c4, nu == nk + nq, tag + ": separated union not additive");
            }
        }

    // smallest B = 2^{k/8} >= 1 with S(Be)/B <= N(e) <= B S(e/B) everywhere
    std::vector<std::pair<const PointCloud*, double>> cases;
    for (const auto& K : clouds)
        for (double e : grid) cases.emplace_back(&K, e);
    std::vector<double> nvals;
    for (auto [k, e] : cases) nvals.push_back(N(*k, e));
    std::optional<double> found;
    for (int k = 0;; ++k) {
        double B = std::exp2(k / 8.0);
        if (B > opt.max_B) break;
        bool ok = true;
        for (std::size_t c = 0; c < cases.size() && ok; ++c) {
            auto [K, e] = cases[c];
            if (K->resolution() > e / B / 2) {  // S(e/B) unavailable at this resolution
                ok = false;
                break;
            }
            ok = S(*K, B * e) / B <= nvals[c] && nvals[c] <= B * S(*K, e / B);
        }
        if (ok) {
            found = B;
            break;
        }
    }
    c6.checks = cases.size();
    rep.measured_B = found;
    if (!found) {
        c6.passed = false;
        c6.violations = 1;
        c6.detail = "no B <= " + std::to_string(opt.max_B) + " brackets the function";
    } else {
        c6.detail = "B = " + std::to_string(*found);
    }

    rep.outcomes = {c1, c2, c3, c4, c6};
    if (spec.kind == Function::Packing && !opt.lipschitz_maps.empty()) {
        for (const auto& lc : opt.lipschitz_maps) {
            for (std::size_t ci = 0; ci < clouds.size(); ++ci) {
                const auto& K = clouds[ci];
                std::vector<double> img;
                for (std::size_t i = 0; i < K.size(); ++i) {
                    auto y = lc.map(K.vec(i));
                    img.insert(img.end(), y.data(), y.data() + y.size());
                }
                PointCloud PK(K.dim(), K.resolution() * lc.L, std::move(img));
                for (double e : grid)
                    record(c5, N(K, e) >= N(PK, lc.L * e),
                           lc.name + " cloud " + std::to_string(ci) + " eps=" + std::to_string(e));
            }
        }
        rep.outcomes.push_back(c5);
    }
    return rep;
}

}  // namespace ahlfors::counting
