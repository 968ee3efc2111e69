#include "ahlfors/symbolic.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "ahlfors/error.hpp"
#include "ahlfors/parallel.hpp"
#include "ahlfors/spectral.hpp"

namespace ahlfors::symbolic {

// ---- Word -------------------------------------------------------------------

Word Word::prefix(std::size_t n) const {
    if (n > s_.size()) throw DomainError("Word::prefix: length exceeds word");
    return Word(std::vector<Symbol>(s_.begin(), s_.begin() + long(n)));
}

Word Word::drop(std::size_t n) const {
    if (n > s_.size()) throw DomainError("Word::drop: length exceeds word");
    return Word(std::vector<Symbol>(s_.begin() + long(n), s_.end()));
}

Word Word::append(Symbol a) const {
    auto v = s_;
    v.push_back(a);
    return Word(std::move(v));
}

Word Word::concat(const Word& other) const {
    auto v = s_;
    v.insert(v.end(), other.s_.begin(), other.s_.end());
    return Word(std::move(v));
}

bool Word::is_prefix_of(const Word& other) const {
    return s_.size() <= other.s_.size() && std::equal(s_.begin(), s_.end(), other.s_.begin());
}

std::string Word::to_string(std::size_t alphabet_size) const {
    std::string out;
    if (alphabet_size <= 10) {
        for (Symbol a : s_) out.push_back(char('0' + a));
        return out;
    }
    for (std::size_t i = 0; i < s_.size(); ++i) {
        if (i) out.push_back('.');
        out += std::to_string(s_[i]);
    }
    return out;
}

Word Word::parse(std::string_view text, std::size_t alphabet_size) {
    std::vector<Symbol> v;
    if (text.empty()) return Word();
    if (alphabet_size <= 10) {
        for (char c : text) {
            if (c < '0' || c > '9') throw InputError("bad word string '" + std::string(text) + "'");
            v.push_back(Symbol(c - '0'));
        }
        return Word(std::move(v));
    }
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t dot = text.find('.', pos);
        if (dot == std::string_view::npos) dot = text.size();
        Symbol a = 0;
        auto [p, ec] = std::from_chars(text.data() + pos, text.data() + dot, a);
        if (ec != std::errc() || p != text.data() + dot)
            throw InputError("bad word string '" + std::string(text) + "'");
        v.push_back(a);
        pos = dot + 1;
    }
    return Word(std::move(v));
}

// ---- shifts -----------------------------------------------------------------

namespace {

using Adjacency = std::vector<std::vector<std::uint32_t>>;

bool primitive_graph(const Adjacency& succ) {
    const std::size_t n = succ.size();
    if (n == 0) return false;
    Adjacency pred(n);
    for (std::size_t u = 0; u < n; ++u)
        for (auto v : succ[u]) pred[v].push_back(std::uint32_t(u));

    auto reach = [n](const Adjacency& g, std::vector<long>& level) {
        level.assign(n, -1);
        std::queue<std::uint32_t> q;
        level[0] = 0;
        q.push(0);
        while (!q.empty()) {
            auto u = q.front();
            q.pop();
            for (auto v : g[u])
                if (level[v] < 0) {
                    level[v] = level[u] + 1;
                    q.push(v);
                }
        }
        return std::all_of(level.begin(), level.end(), [](long l) { return l >= 0; });
    };
    std::vector<long> fwd, bwd;
    if (!reach(succ, fwd) || !reach(pred, bwd)) return false;
    long g = 0;
    for (std::size_t u = 0; u < n; ++u)
        for (auto v : succ[u]) g = std::gcd(g, std::labs(fwd[u] + 1 - fwd[v]));
    return g == 1;
}

}  // namespace

bool is_primitive(const std::vector<std::vector<int>>& a) {
    const std::size_t n = a.size();
    Adjacency succ(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (a[i].size() != n) return false;
        for (std::size_t j = 0; j < n; ++j) {
            if (a[i][j] != 0 && a[i][j] != 1) return false;
            if (a[i][j]) succ[i].push_back(std::uint32_t(j));
        }
    }
    return primitive_graph(succ);
}

SubshiftFT::SubshiftFT(std::vector<std::vector<int>> transition) : n_(transition.size()) {
    if (n_ == 0) throw DomainError("SubshiftFT: empty alphabet");
    for (const auto& row : transition) {
        if (row.size() != n_) throw DomainError("SubshiftFT: transition matrix is not square");
        for (int x : row)
            if (x != 0 && x != 1) throw DomainError("SubshiftFT: entries must be 0 or 1");
    }
    if (!is_primitive(transition))
        throw DomainError("SubshiftFT: transition matrix is not irreducible and aperiodic");
    a_.resize(n_ * n_);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) a_[i * n_ + j] = std::uint8_t(transition[i][j]);
}

SubshiftFT SubshiftFT::full(std::size_t n) {
    return SubshiftFT(std::vector<std::vector<int>>(n, std::vector<int>(n, 1)));
}

bool SubshiftFT::is_full() const {
    return std::all_of(a_.begin(), a_.end(), [](std::uint8_t x) { return x == 1; });
}

std::vector<std::vector<int>> SubshiftFT::transition() const {
    std::vector<std::vector<int>> t(n_, std::vector<int>(n_));
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) t[i][j] = a_[i * n_ + j];
    return t;
}

bool is_admissible(const Word& w, const SubshiftFT& shift) {
    for (Symbol a : w.symbols())
        if (a >= shift.alphabet_size())
            throw DomainError("is_admissible: symbol " + std::to_string(a) + " out of range");
    for (std::size_t i = 1; i < w.size(); ++i)
        if (!shift.allowed(w[i - 1], w[i])) return false;
    return true;
}

std::vector<Word> admissible_words(const SubshiftFT& shift, std::size_t length) {
    std::vector<Word> level{Word()};
    const auto n = Symbol(shift.alphabet_size());
    for (std::size_t l = 0; l < length; ++l) {
        std::vector<Word> next;
        for (const auto& w : level)
            for (Symbol a = 0; a < n; ++a)
                if (w.empty() || shift.allowed(w[w.size() - 1], a)) next.push_back(w.append(a));
        level = std::move(next);
    }
    return level;
}

// ---- potentials -------------------------------------------------------------

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::size_t checked_power(std::size_t n, std::size_t k) {
    std::size_t p = 1;
    for (std::size_t i = 0; i < k; ++i) {
        if (p > (std::size_t(1) << 26) / n) throw DomainError("potential: N^k too large");
        p *= n;
    }
    return p;
}

std::size_t block_index(std::span<const Symbol> s, std::size_t n, std::size_t k) {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < k; ++i) idx = idx * n + s[i];
    return idx;
}

}  // namespace

LocallyConstantPotential::LocallyConstantPotential(const SubshiftFT& shift, std::size_t depth,
                                                   const std::map<Word, double>& values)
    : n_(shift.alphabet_size()), k_(depth) {
    if (k_ < 1) throw DomainError("potential: depth must be >= 1");
    dense_.assign(checked_power(n_, k_), kMissing);
    for (const auto& [w, v] : values) {
        if (w.size() != k_) throw DomainError("potential: word '" + w.to_string(n_) + "' has wrong length");
        if (!is_admissible(w, shift))
            throw DomainError("potential: word '" + w.to_string(n_) + "' is not admissible");
        if (!std::isfinite(v)) throw DomainError("potential: non-finite value");
        dense_[block_index(w.symbols(), n_, k_)] = v;
    }
    for (const auto& w : admissible_words(shift, k_)) {
        auto it = values.find(w);
        if (it == values.end())
            throw DomainError("potential: missing value for admissible word '" + w.to_string(n_) + "'");
        values_.emplace(w, it->second);
    }
}

LocallyConstantPotential LocallyConstantPotential::constant(const SubshiftFT& shift, double c) {
    std::map<Word, double> v;
    for (Symbol a = 0; a < shift.alphabet_size(); ++a) v[Word{a}] = c;
    return LocallyConstantPotential(shift, 1, v);
}

LocallyConstantPotential LocallyConstantPotential::from_symbols(const SubshiftFT& shift,
                                                                const std::vector<double>& values) {
    if (values.size() != shift.alphabet_size())
        throw DomainError("potential: need one value per symbol");
    std::map<Word, double> v;
    for (Symbol a = 0; a < values.size(); ++a) v[Word{a}] = values[a];
    return LocallyConstantPotential(shift, 1, v);
}

double LocallyConstantPotential::operator()(std::span<const Symbol> block) const {
    if (block.size() < k_) throw PreconditionError("potential: block shorter than depth");
    for (std::size_t i = 0; i < k_; ++i)
        if (block[i] >= n_) throw DomainError("potential: symbol out of range");
    double v = dense_[block_index(block, n_, k_)];
    if (std::isnan(v)) throw DomainError("potential: block is not admissible");
    return v;
}

double LocallyConstantPotential::min_value() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& [w, v] : values_) m = std::min(m, v);
    return m;
}

double LocallyConstantPotential::max_value() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& [w, v] : values_) m = std::max(m, v);
    return m;
}

std::vector<double> LocallyConstantPotential::distinct_values() const {
    std::vector<double> v;
    for (const auto& [w, x] : values_) v.push_back(x);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

double LocallyConstantPotential::variation(std::size_t n) const {
    if (n >= k_) return 0.0;
    // values_ is ordered lexicographically, so words sharing an n-prefix are
    // contiguous
    double best = 0.0;
    auto it = values_.begin();
    while (it != values_.end()) {
        Word head = it->first.prefix(n);
        double lo = it->second, hi = it->second;
        auto jt = it;
        while (jt != values_.end() && head.is_prefix_of(jt->first)) {
            lo = std::min(lo, jt->second);
            hi = std::max(hi, jt->second);
            ++jt;
        }
        best = std::max(best, hi - lo);
        it = jt;
    }
    return best;
}

double birkhoff_sum(const LocallyConstantPotential& f, const Word& w, std::size_t n) {
    if (n == 0) return 0.0;
    if (n + f.depth() - 1 > w.size())
        throw PreconditionError("birkhoff_sum: insufficient context, word of length " +
                                std::to_string(w.size()) + " determines at most " +
                                std::to_string(w.size() + 1 > f.depth() ? w.size() + 1 - f.depth() : 0) +
                                " terms, " + std::to_string(n) + " requested");
    double s = 0.0;
    auto sym = w.symbols();
    for (std::size_t j = 0; j < n; ++j) s += f(sym.subspan(j));
    return s;
}

// ---- pressure ---------------------------------------------------------------

namespace {

struct BlockGraph {
    std::vector<double> f;  // potential value of each block
    Adjacency succ;
};

BlockGraph block_graph(const SubshiftFT& shift, const LocallyConstantPotential& f) {
    if (f.alphabet_size() != shift.alphabet_size())
        throw DomainError("pressure: potential and shift alphabets differ");
    const std::size_t k = f.depth();
    auto blocks = admissible_words(shift, k);
    std::map<Word, std::uint32_t> index;
    for (std::size_t i = 0; i < blocks.size(); ++i) index.emplace(blocks[i], std::uint32_t(i));
    BlockGraph g;
    g.f.resize(blocks.size());
    g.succ.resize(blocks.size());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        g.f[i] = f.value(blocks[i]);
        Word tail = blocks[i].drop(1);
        for (Symbol a = 0; a < shift.alphabet_size(); ++a) {
            if (!shift.allowed(blocks[i][k - 1], a)) continue;
            g.succ[i].push_back(index.at(tail.append(a)));
        }
    }
    return g;
}

double log_spectral_radius(const BlockGraph& g, double t) {
    const std::size_t n = g.f.size();
    // Factor out exp(-t f_min) (or exp(-t f_max) for t < 0) to avoid
    // under/overflow when the bracket in bowen_root grows large.
    double fmin = *std::min_element(g.f.begin(), g.f.end());
    double fmax = *std::max_element(g.f.begin(), g.f.end());
    double shift = t >= 0 ? fmin : fmax;
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = std::exp(-t * (g.f[i] - shift));

    std::vector<double> v(n, 1.0), nv(n);
    double lo = 0, hi = 0;
    for (int it = 0; it < 1'000'000; ++it) {
        lo = std::numeric_limits<double>::infinity();
        hi = 0.0;
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (auto j : g.succ[i]) s += v[j];
            nv[i] = w[i] * s;
            double ratio = nv[i] / v[i];
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
            norm = std::max(norm, nv[i]);
        }
        if (!(norm > 0) || !std::isfinite(norm))
            throw StructuralError("pressure: power iteration degenerated");
        for (std::size_t i = 0; i < n; ++i) v[i] = nv[i] / norm;
        if ((hi - lo) <= 1e-13 * hi) break;
    }
    return std::log(0.5 * (lo + hi)) - t * shift;
}

}  // namespace

double pressure(const SubshiftFT& shift, const LocallyConstantPotential& f, double t) {
    auto g = block_graph(shift, f);
    if (!primitive_graph(g.succ)) throw StructuralError("pressure: block matrix is not irreducible");
    return log_spectral_radius(g, t);
}

double bowen_root(const SubshiftFT& shift, const LocallyConstantPotential& f) {
    if (!(f.min_value() > 0)) throw DomainError("bowen_root: potential must be strictly positive");
    auto g = block_graph(shift, f);
    if (!primitive_graph(g.succ)) throw StructuralError("bowen_root: block matrix is not irreducible");
    auto p = [&](double t) { return log_spectral_radius(g, t); };
    if (p(0.0) <= 0.0) return 0.0;  // zero entropy: single periodic orbit
    double lo = 0.0, hi = 1.0;
    while (p(hi) >= 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) throw StructuralError("bowen_root: bracket expansion failed");
    }
    for (int it = 0; it < 200 && hi - lo > 4 * std::numeric_limits<double>::epsilon() * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        if (p(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// ---- lattice test -----------------------------------------------------------

namespace {

constexpr long long kDenominatorCap = 1'000'000;
constexpr double kLatticeTol = 1e-12;

struct Approximant {
    long long p = 0, q = 1;
    double residual = 0;
    bool ok = false;
};

// Walks the convergents of x up to the denominator cap and accepts the first
// one with |q x - p| <= tol * max(1, x).
Approximant rational_approximation(double x) {
    Approximant best;
    best.residual = std::numeric_limits<double>::infinity();
    long long h0 = 1, h1 = 0, k0 = 0, k1 = 1;  // h_{-1}, h_{-2}, ...
    double r = x;
    for (int it = 0; it < 64; ++it) {
        double a = std::floor(r);
        if (a > 1e15) break;
        long long ai = (long long)a;
        long long h = ai * h0 + h1, k = ai * k0 + k1;
        if (k > kDenominatorCap) break;
        double res = std::fabs(double(k) * x - double(h));
        if (res < best.residual) best = {h, k, res, false};
        if (res <= kLatticeTol * std::max(1.0, x)) {
            best.ok = true;
            return best;
        }
        h1 = h0;
        h0 = h;
        k1 = k0;
        k0 = k;
        double frac = r - a;
        if (frac <= 0) break;
        r = 1.0 / frac;
    }
    return best;
}

}  // namespace

LatticeResult is_lattice(const std::vector<double>& values) {
    if (values.empty()) throw DomainError("is_lattice: empty value list");
    for (double v : values)
        if (!(v > 0) || !std::isfinite(v)) throw DomainError("is_lattice: values must be positive and finite");
    double ref = *std::min_element(values.begin(), values.end());
    LatticeResult out;
    std::vector<std::pair<long long, long long>> ratios;
    double worst = -1.0;
    for (double v : values) {
        Approximant ap = rational_approximation(v / ref);
        if (!ap.ok) {
            if (ap.residual > worst) {
                worst = ap.residual;
                out.best_p = ap.p;
                out.best_q = ap.q;
                out.best_residual = ap.residual;
            }
            continue;
        }
        ratios.emplace_back(ap.p, ap.q);
    }
    if (worst >= 0) return out;

    // ref * p_i / q_i = (ref / L) * (p_i L / q_i); generator = ref / L * gcd
    __int128 lcm = 1;
    for (auto [p, q] : ratios) {
        lcm = lcm / std::gcd((long long)lcm, q) * q;
        if (lcm > (__int128)1e15) {
            out.best_residual = 0.0;
            return out;  // common period too fine to be meaningful
        }
    }
    long long L = (long long)lcm;
    long long g = L;
    for (auto [p, q] : ratios) g = std::gcd(g, p * (L / q));
    out.lattice = true;
    out.generator = ref / double(L) * double(g);
    out.best_p = ratios.empty() ? 1 : ratios.back().first;
    out.best_q = ratios.empty() ? 1 : ratios.back().second;
    return out;
}

// ---- power recoding ---------------------------------------------------------

Recoded power_recode(const SubshiftFT& shift, const LocallyConstantPotential& f, std::size_t m) {
    if (m < 1) throw DomainError("power_recode: m must be >= 1");
    auto blocks = admissible_words(shift, m);
    const std::size_t nb = blocks.size();
    std::vector<std::vector<int>> t(nb, std::vector<int>(nb, 0));
    for (std::size_t i = 0; i < nb; ++i)
        for (std::size_t j = 0; j < nb; ++j)
            t[i][j] = shift.allowed(blocks[i][m - 1], blocks[j][0]) ? 1 : 0;
    SubshiftFT ns(t);
    const std::size_t k = f.depth();
    const std::size_t nk = 1 + (k - 1 + m - 1) / m;
    std::map<Word, double> values;
    for (const auto& w : admissible_words(ns, nk)) {
        Word flat;
        for (Symbol b : w.symbols()) flat = flat.concat(blocks[b]);
        values[w] = birkhoff_sum(f, flat, m);
    }
    return Recoded{ns, LocallyConstantPotential(ns, nk, values), std::move(blocks)};
}

// ---- renewal ----------------------------------------------------------------

Kernel Kernel::constant(double c) {
    if (!(c >= 0)) throw DomainError("kernel: constant must be nonnegative");
    Kernel k;
    k.kind_ = "constant";
    k.param_ = c;
    k.fn_ = [c](double) { return c; };
    return k;
}

Kernel Kernel::exponential(double rate) {
    if (!(rate >= 0)) throw DomainError("kernel: rate must be nonnegative");
    Kernel k;
    k.kind_ = "exp";
    k.param_ = rate;
    k.fn_ = [rate](double t) { return std::exp(-rate * t); };
    return k;
}

Kernel Kernel::custom(std::string name, std::function<double(double)> fn) {
    Kernel k;
    k.kind_ = std::move(name);
    k.fn_ = std::move(fn);
    return k;
}

RenewalSpec::RenewalSpec(SubshiftFT shift_, LocallyConstantPotential f_, LocallyConstantPotential g_,
                         Kernel kernel_, Word anchor_)
    : shift(std::move(shift_)), f(std::move(f_)), g(std::move(g_)), kernel(std::move(kernel_)),
      anchor(std::move(anchor_)) {
    const std::size_t n = shift.alphabet_size();
    if (f.alphabet_size() != n || g.alphabet_size() != n)
        throw DomainError("renewal: potential alphabet differs from shift");
    if (!(f.min_value() > 0)) throw DomainError("renewal: f must be strictly positive");
    if (g.min_value() < 0) throw DomainError("renewal: g must be nonnegative");
    if (!(g.max_value() > 0)) throw DomainError("renewal: g is identically 0");
    if (!is_admissible(anchor, shift)) throw DomainError("renewal: anchor word is not admissible");
    if (anchor.size() < std::max(f.depth(), g.depth()))
        throw DomainError("renewal: anchor shorter than potential depth");
}

namespace {

std::vector<double> enumerate_renewal(const RenewalSpec& spec, const std::vector<double>& grid,
                                      const RenewalOptions& opt) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0)) throw DomainError("renewal: a must be >= 0");
        if (i && !(grid[i] > grid[i - 1])) throw DomainError("renewal: a_grid must be increasing");
    }
    if (grid.empty()) return {};
    const std::size_t n = spec.shift.alphabet_size();
    const std::size_t k = spec.f.depth(), kg = spec.g.depth();
    const double fmin = spec.f.min_value();
    const double a_max = grid.back();
    const auto& L = spec.anchor.vec();
    const double f_anchor = spec.f(spec.anchor.symbols());

    std::atomic<std::uint64_t> visited{0};
    std::atomic<bool> exceeded{false};
    // task 0 is the empty word, task s+1 the subtree under symbol s
    std::vector<std::vector<double>> partial(n + 1, std::vector<double>(grid.size(), 0.0));

    auto task = [&](std::size_t t) {
        auto& acc = partial[t];
        std::vector<Symbol> buf;
        std::vector<double> P{0.0};  // P[len] = sum of windows fully inside the word
        std::vector<Symbol> tmp;

        // Accumulates the contribution of the word in buf and reports whether
        // its subtree can still reach a_max.
        auto visit = [&]() -> bool {
            if (visited.fetch_add(1, std::memory_order_relaxed) >= opt.node_budget) {
                exceeded = true;
                return false;
            }
            const std::size_t len = buf.size();
            const double p = P[len];
            if (len == 0 || spec.shift.allowed(buf.back(), L[0])) {
                // windows starting at j in [max(0, len-k+1), len] straddle into L
                std::size_t j0 = len + 1 > k ? len + 1 - k : 0;
                tmp.assign(buf.begin() + long(j0), buf.end());
                tmp.insert(tmp.end(), L.begin(), L.end());
                double lo = p;
                for (std::size_t j = j0; j < len; ++j) lo += spec.f(std::span<const Symbol>(tmp).subspan(j - j0));
                double hi = lo + f_anchor;
                if (lo <= a_max && hi > grid.front()) {
                    double gv;
                    if (len >= kg) {
                        gv = spec.g(buf);
                    } else {
                        std::vector<Symbol> head(buf);
                        head.insert(head.end(), L.begin(), L.end());
                        gv = spec.g(head);
                    }
                    if (gv != 0.0) {
                        auto first = std::lower_bound(grid.begin(), grid.end(), lo);
                        for (auto it = first; it != grid.end() && *it < hi; ++it)
                            acc[std::size_t(it - grid.begin())] += gv * spec.kernel(hi - *it);
                    }
                }
            }
            return p + double(std::min(k, len + 1)) * fmin <= a_max;
        };

        if (t == 0) {
            visit();
            return;
        }
        buf.push_back(Symbol(t - 1));
        P.push_back(k == 1 ? spec.f(buf) : 0.0);
        if (!visit()) return;
        std::vector<Symbol> next{0};
        while (!next.empty() && !exceeded) {
            Symbol c = next.back();
            if (c >= n) {
                next.pop_back();
                buf.pop_back();
                P.pop_back();
                continue;
            }
            next.back() = c + 1;
            if (!spec.shift.allowed(buf.back(), c)) continue;
            buf.push_back(c);
            double p = P.back();
            if (buf.size() >= k) p += spec.f(std::span<const Symbol>(buf).subspan(buf.size() - k));
            P.push_back(p);
            if (visit()) {
                next.push_back(0);
            } else {
                buf.pop_back();
                P.pop_back();
            }
        }
    };
    parallel_for(n + 1, task);

    std::vector<double> total(grid.size(), 0.0);
    for (const auto& part : partial)
        for (std::size_t i = 0; i < grid.size(); ++i) total[i] += part[i];
    if (exceeded)
        throw BudgetError("renewal: node budget of " + std::to_string(opt.node_budget) +
                              " exceeded; partial count is a lower bound",
                          total.back());
    return total;
}

}  // namespace

double renewal_sum(const RenewalSpec& spec, double a, const RenewalOptions& opt) {
    return enumerate_renewal(spec, {a}, opt).front();
}

std::vector<double> renewal_sums(const RenewalSpec& spec, const std::vector<double>& a_grid,
                                 const RenewalOptions& opt) {
    return enumerate_renewal(spec, a_grid, opt);
}

RenewalSeries renewal_convergence_series(const RenewalSpec& spec, const std::vector<double>& a_grid,
                                         double delta, const RenewalOptions& opt) {
    if (a_grid.empty()) throw DomainError("renewal: empty a_grid");
    RenewalSeries out;
    out.a = a_grid;
    out.delta = delta;
    out.raw = renewal_sums(spec, a_grid, opt);
    out.scaled.resize(a_grid.size());
    for (std::size_t i = 0; i < a_grid.size(); ++i) out.scaled[i] = std::exp(-a_grid[i] * delta) * out.raw[i];
    if (a_grid.size() < 2) return out;

    RenewalDiagnostic d;
    const double span = a_grid.back() - a_grid.front();
    d.window_hi = a_grid.back();
    d.window_lo = a_grid.back() - 0.25 * span;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < a_grid.size(); ++i) {
        if (a_grid[i] < d.window_lo) continue;
        lo = std::min(lo, out.scaled[i]);
        hi = std::max(hi, out.scaled[i]);
        sum += out.scaled[i];
        ++cnt;
    }
    d.mean = sum / double(cnt);
    d.relative_variation = d.mean > 0 ? (hi - lo) / d.mean : 0.0;
    if (a_grid.size() >= 8) {
        std::vector<double> steps;
        for (std::size_t i = 1; i < a_grid.size(); ++i) steps.push_back(a_grid[i] - a_grid[i - 1]);
        std::nth_element(steps.begin(), steps.begin() + long(steps.size() / 2), steps.end());
        double p_min = std::max(2.0 * steps[steps.size() / 2], 1e-9);
        if (span > p_min) {
            auto pg = spectral::sinusoid_scan(a_grid, out.scaled, p_min, span, 4000);
            d.period = pg.best_period;
            d.peak_power = pg.peak_power;
            d.median_power = pg.median_power;
        }
    }
    out.diagnostic = d;
    return out;
}

}  // namespace ahlfors::symbolic
