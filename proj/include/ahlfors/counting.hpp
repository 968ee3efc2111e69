#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ahlfors/geometry.hpp"

namespace ahlfors::counting {

using geometry::PointCloud;

enum class Function { Separated, Packing, Covering, Minkowski };
enum class Mode { Greedy, Exact };

std::string to_string(Function f);
std::string to_string(Mode m);
Function parse_function(const std::string& s);
Mode parse_mode(const std::string& s);

struct CountingFunctionSpec {
    Function kind;
    double A;  // separation constant of (C4)
    double B;  // comparability constant, measured by the suite
    double G;  // Lipschitz-image constant of (C5)

    static CountingFunctionSpec of(Function f);
};

// Uniform grid with hashed cells. Distinct cells may share a hash slot; that
// only enlarges candidate sets, never loses a neighbour.
class SpatialIndex {
public:
    SpatialIndex(const PointCloud& cloud, double cell);

    double cell() const { return cell_; }
    // Calls fn(index) for every point in the 3^d cells around q. Stops early
    // when fn returns false.
    void for_each_near(std::span<const double> q, const std::function<bool(std::size_t)>& fn) const;
    bool any_within(std::span<const double> q, double radius) const;

private:
    std::uint64_t key(const std::vector<long long>& c) const;
    std::vector<long long> cell_of(std::span<const double> q) const;

    const PointCloud* cloud_;
    double cell_;
    std::vector<double> origin_;
    std::vector<std::size_t> order_;
    std::unordered_map<std::uint64_t, std::pair<std::size_t, std::size_t>> buckets_;
};

enum class Adequacy { Ok, Warn, Refuse };
// warn when resolution > eps/10, refuse when resolution > eps/2
Adequacy adequacy(double resolution, double eps);
void require_adequate(const PointCloud& cloud, double eps, const char* who);

struct SeparatedResult {
    std::size_t count = 0;
    std::vector<std::size_t> selected;
    bool adequacy_warning = false;
};

// Greedy pass in input order: keep a point iff it is > eps from every kept one.
SeparatedResult separated_greedy(const PointCloud& cloud, double eps);

struct ExactOptions {
    std::size_t max_points = 400;
    std::uint64_t node_budget = 200'000'000;
};

std::size_t separated_exact(const PointCloud& cloud, double eps, const ExactOptions& opt = {});
std::size_t separated_number(const PointCloud& cloud, double eps, Mode mode);
std::size_t packing_number(const PointCloud& cloud, double eps, Mode mode);
// Exact mode: minimum number of eps-balls centred at `centers` (default: the
// cloud itself) covering the cloud.
std::size_t covering_number(const PointCloud& cloud, double eps, Mode mode);
std::size_t covering_exact(const PointCloud& cloud, double eps, const PointCloud* centers = nullptr,
                           const ExactOptions& opt = {});

struct MinkowskiOptions {
    std::uint64_t max_work = 400'000'000;  // interval evaluations
};

struct MinkowskiResult {
    double value = 0.0;   // |K_eps| / eps^d
    double volume = 0.0;  // |K_eps|
    double h = 0.0;
    std::uint64_t cells = 0;
    double error_bound = 0.0;  // relative
    bool adequacy_warning = false;
};

// largest power of two not exceeding eps/20
double default_voxel_size(double eps);
MinkowskiResult minkowski_content(const PointCloud& cloud, double eps, double h,
                                  const MinkowskiOptions& opt = {});
MinkowskiResult minkowski_content(const PointCloud& cloud, double eps);

// Evaluates one counting function; Minkowski ignores mode.
double evaluate(Function f, const PointCloud& cloud, double eps, Mode mode);

struct ChainResult {
    bool holds = false;
    Mode mode = Mode::Exact;
    std::size_t s_2eps = 0, packing = 0, covering = 0, s_eps = 0;
};

// Exact: S(2e) <= P(e) <= C(e) <= S(e). Greedy: the greedy values bracket the
// same chain, so S(2e) <= P(e) <= greedy(e) with greedy(e) as the cover.
ChainResult chain_check(const PointCloud& cloud, double eps, Mode mode = Mode::Exact);

struct MonotonicityResult {
    bool passed = true;
    double tolerance = 0.03;
    std::vector<double> eps;
    std::vector<double> values;
    std::vector<std::size_t> violations;  // index i with eM(e_i) > eM(e_{i+1})(1+tol)
};

MonotonicityResult minkowski_monotonicity_check(const PointCloud& cloud, const std::vector<double>& eps_grid,
                                                double tolerance = 0.03);

// max over pairs of the two-sided constant R with
// R^-1 (e1/e2)^s <= S(e2)/S(e1) <= R (e1/e2)^s
double different_epsilons_constant(const PointCloud& cloud, const std::vector<double>& eps_grid, double s,
                                   Mode mode = Mode::Greedy);

struct AxiomOutcome {
    std::string axiom;
    bool passed = true;
    std::size_t checks = 0;
    std::size_t violations = 0;
    std::string detail;
};

struct AxiomSuiteReport {
    CountingFunctionSpec spec;
    std::vector<AxiomOutcome> outcomes;
    std::optional<double> measured_B;
    bool all_passed() const;
    const AxiomOutcome* find(const std::string& name) const;
};

using LipschitzMap = std::function<geometry::Vector(const geometry::Vector&)>;

struct LipschitzCase {
    std::string name;
    double L;
    LipschitzMap map;
};

struct AxiomSuiteOptions {
    Mode mode = Mode::Exact;
    double max_B = 64.0;
    std::vector<LipschitzCase> lipschitz_maps;  // (C5), packing only
};

// `clouds` are finite sets; every (C2)/(C3)/(C4) check uses them pairwise and
// their halves. Covering centres range over the union of all clouds.
AxiomSuiteReport axiom_suite(const CountingFunctionSpec& spec, const std::vector<PointCloud>& clouds,
                             const std::vector<double>& eps_grid, const AxiomSuiteOptions& opt = {});

}  // namespace ahlfors::counting
