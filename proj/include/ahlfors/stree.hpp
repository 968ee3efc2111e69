#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ahlfors/geometry.hpp"
#include "ahlfors/symbolic.hpp"

namespace ahlfors::stree {

using geometry::Vector;
using symbolic::SubshiftFT;
using symbolic::Symbol;
using symbolic::Word;

struct Constants {
    double C = 0.0;
    double D = 0.0;
    double rho = 0.0;
    double R = 0.0;
    double E = 1.0;
};

struct NodeValue {
    Vector x;
    double r = 0.0;
};

struct Node {
    Word word;
    Vector x;
    double r = 0.0;
    std::ptrdiff_t parent = -1;
    std::vector<std::size_t> children;  // ascending symbol
};

// Word-indexed centres and radii. Nodes are kept in (length, lex) order, so
// index 0 is the root and every parent precedes its children.
class STree {
public:
    STree(SubshiftFT shift, double s, Constants constants, const std::map<Word, NodeValue>& nodes,
          std::optional<double> packing_delta = std::nullopt);

    const SubshiftFT& shift() const { return shift_; }
    double s() const { return s_; }
    const Constants& constants() const { return constants_; }
    std::size_t depth() const { return depth_; }
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return nodes_.size(); }
    const Node& node(std::size_t i) const { return nodes_[i]; }
    const std::vector<Node>& nodes() const { return nodes_; }
    std::optional<std::size_t> find(const Word& w) const;
    const Node& at(const Word& w) const;
    // Scale of the packing levels when built from a cloud.
    std::optional<double> packing_delta() const { return packing_delta_; }

    std::vector<std::size_t> level(std::size_t n) const;
    std::map<Word, NodeValue> node_map() const;
    STree with_constants(Constants c) const;

private:
    SubshiftFT shift_;
    double s_;
    Constants constants_;
    std::optional<double> packing_delta_;
    std::size_t depth_ = 0;
    std::size_t dim_ = 0;
    std::vector<Node> nodes_;
    std::map<Word, std::size_t> index_;
};

// x_I = phi_I(x0), r_I = product of ratios; C = dist(x0, U^c), D = diam U.
STree tree_from_ifs(const geometry::Ifs& ifs, const Vector& x0, std::size_t depth);
// x0 defaults to an attractor point inside the witness.
STree tree_from_ifs(const geometry::Ifs& ifs, std::size_t depth);

// Empty `weights` means uniform.
STree tree_from_packing(const geometry::PointCloud& cloud, const std::vector<double>& weights, double delta,
                        double s, std::size_t depth);

struct AxiomCheck {
    std::string axiom;
    bool passed = true;
    double measured = 0.0;
    std::optional<std::pair<Word, Word>> witness;
    std::string detail;
};

struct AxiomReport {
    std::vector<AxiomCheck> checks;
    Constants measured;
    double max_r_deepest = 0.0;
    // (T1)-(T5) and (T'3); (M3) and the packing-radius check are informational.
    bool passed() const;
    const AxiomCheck* find(const std::string& name) const;
};

AxiomReport verify_axioms(const STree& tree, double tol = 1e-9);

using ChoiceFunction = std::function<Symbol(const Word&)>;

// Sum of r_{IJ}^s over the |J| = m words that never step into the chosen child.
double pruned_mass(const STree& tree, const ChoiceFunction& choice, const Word& I, std::size_t m);
// E^2 r_I^s (1 - rho^s)^m with the tree's constants
double pruned_mass_bound(const STree& tree, const Word& I, std::size_t m);

// m-block recoding; new symbols are the admissible m-blocks in lex order.
STree power_tree(const STree& tree, std::size_t m);

struct RatioSeries {
    Symbol i = 0;
    Word omega;                  // prefix extended inside the stored tree
    std::vector<std::size_t> n;  // prefix lengths
    std::vector<double> ratios;  // r_{i omega|n} / r_{omega|n}
    double estimate = 0.0;       // last ratio
};

// The prefix is extended by the smallest symbol keeping both branches stored.
RatioSeries ratio_limit_diagnostic(const STree& tree, Symbol i, const Word& omega_prefix);

}  // namespace ahlfors::stree
