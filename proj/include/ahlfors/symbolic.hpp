#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ahlfors::symbolic {

using Symbol = std::uint32_t;

class Word {
public:
    Word() = default;
    Word(std::initializer_list<Symbol> s) : s_(s) {}
    explicit Word(std::vector<Symbol> s) : s_(std::move(s)) {}

    std::size_t size() const { return s_.size(); }
    bool empty() const { return s_.empty(); }
    Symbol operator[](std::size_t i) const { return s_[i]; }
    std::span<const Symbol> symbols() const { return s_; }
    const std::vector<Symbol>& vec() const { return s_; }

    Word prefix(std::size_t n) const;
    Word drop(std::size_t n) const;  // sigma^n
    Word append(Symbol a) const;
    Word concat(const Word& other) const;
    bool is_prefix_of(const Word& other) const;
    bool comparable(const Word& other) const { return is_prefix_of(other) || other.is_prefix_of(*this); }

    // Digits when every symbol fits in one; dot-separated otherwise. The
    // alphabet size picks the form so that parsing is unambiguous.
    std::string to_string(std::size_t alphabet_size = 10) const;
    static Word parse(std::string_view text, std::size_t alphabet_size = 10);

    auto operator<=>(const Word&) const = default;
    bool operator==(const Word&) const = default;

private:
    std::vector<Symbol> s_;
};

class SubshiftFT {
public:
    // Rejects matrices that are not irreducible and aperiodic.
    explicit SubshiftFT(std::vector<std::vector<int>> transition);
    static SubshiftFT full(std::size_t n);

    std::size_t alphabet_size() const { return n_; }
    bool allowed(Symbol a, Symbol b) const { return a_[a * n_ + b] != 0; }
    bool is_full() const;
    std::vector<std::vector<int>> transition() const;

private:
    std::size_t n_;
    std::vector<std::uint8_t> a_;
};

// True when `a` is a 0/1 square matrix whose graph is strongly connected with
// period 1.
bool is_primitive(const std::vector<std::vector<int>>& a);

bool is_admissible(const Word& w, const SubshiftFT& shift);

// Admissible words of the given length in lexicographic order.
std::vector<Word> admissible_words(const SubshiftFT& shift, std::size_t length);

class LocallyConstantPotential {
public:
    LocallyConstantPotential(const SubshiftFT& shift, std::size_t depth,
                             const std::map<Word, double>& values);
    static LocallyConstantPotential constant(const SubshiftFT& shift, double c);
    // Depth 1 with f(i) = values[i].
    static LocallyConstantPotential from_symbols(const SubshiftFT& shift,
                                                 const std::vector<double>& values);

    std::size_t depth() const { return k_; }
    std::size_t alphabet_size() const { return n_; }
    // Value on a block whose first `depth()` symbols are given.
    double operator()(std::span<const Symbol> block) const;
    double value(const Word& w) const { return (*this)(w.symbols()); }
    const std::map<Word, double>& values() const { return values_; }

    double min_value() const;
    double max_value() const;
    std::vector<double> distinct_values() const;
    double variation(std::size_t n) const;

private:
    std::size_t n_;
    std::size_t k_;
    std::map<Word, double> values_;
    std::vector<double> dense_;
};

double birkhoff_sum(const LocallyConstantPotential& f, const Word& w, std::size_t n);

// p(-t f) via the k-block weighted matrix.
double pressure(const SubshiftFT& shift, const LocallyConstantPotential& f, double t);

double bowen_root(const SubshiftFT& shift, const LocallyConstantPotential& f);

struct LatticeResult {
    bool lattice = false;
    std::optional<double> generator;
    // Worst relative fit among the ratio tests: (p, q, |q x - p|).
    long long best_p = 0;
    long long best_q = 0;
    double best_residual = 0.0;
};

LatticeResult is_lattice(const std::vector<double>& values);

struct Recoded {
    SubshiftFT shift;
    LocallyConstantPotential potential;
    std::vector<Word> blocks;  // new symbol i is blocks[i]
};

Recoded power_recode(const SubshiftFT& shift, const LocallyConstantPotential& f, std::size_t m);

class Kernel {
public:
    static Kernel constant(double c = 1.0);
    static Kernel exponential(double rate);  // t -> exp(-rate t)
    static Kernel custom(std::string name, std::function<double(double)> fn);

    double operator()(double t) const { return fn_(t); }
    const std::string& kind() const { return kind_; }
    double parameter() const { return param_; }

private:
    std::string kind_;
    double param_ = 0.0;
    std::function<double(double)> fn_;
};

struct RenewalSpec {
    RenewalSpec(SubshiftFT shift, LocallyConstantPotential f, LocallyConstantPotential g,
                Kernel kernel, Word anchor);

    SubshiftFT shift;
    LocallyConstantPotential f;
    LocallyConstantPotential g;
    Kernel kernel;
    Word anchor;
};

struct RenewalOptions {
    std::uint64_t node_budget = 100'000'000;
};

double renewal_sum(const RenewalSpec& spec, double a, const RenewalOptions& opt = {});

// One enumeration for the whole grid; a_grid must be increasing.
std::vector<double> renewal_sums(const RenewalSpec& spec, const std::vector<double>& a_grid,
                                 const RenewalOptions& opt = {});

struct RenewalDiagnostic {
    double window_lo = 0.0;
    double window_hi = 0.0;
    double mean = 0.0;
    double relative_variation = 0.0;
    std::optional<double> period;
    double peak_power = 0.0;
    double median_power = 0.0;
};

struct RenewalSeries {
    std::vector<double> a;
    std::vector<double> raw;     // N_G(a)
    std::vector<double> scaled;  // e^{-a delta} N_G(a)
    double delta = 0.0;
    std::optional<RenewalDiagnostic> diagnostic;
};

RenewalSeries renewal_convergence_series(const RenewalSpec& spec, const std::vector<double>& a_grid,
                                         double delta, const RenewalOptions& opt = {});

}  // namespace ahlfors::symbolic
