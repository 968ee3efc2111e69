#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace ahlfors::geometry {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// x -> ratio * rotation * x + translation
class Similarity {
public:
    Similarity(double ratio, Matrix rotation, Vector translation);
    static Similarity scaling(double ratio, Vector translation);
    static Similarity planar(double ratio, double angle, const Vector& translation);

    std::size_t dim() const { return std::size_t(t_.size()); }
    double ratio() const { return r_; }
    const Matrix& rotation() const { return q_; }
    const Vector& translation() const { return t_; }

    Vector operator()(const Vector& x) const { return r_ * (q_ * x) + t_; }
    Vector fixed_point() const;
    // this o inner
    Similarity compose(const Similarity& inner) const;

private:
    double r_;
    Matrix q_;
    Vector t_;
};

struct Box {
    Vector lo, hi;
};
struct Ball {
    Vector center;
    double radius;
};
using Primitive = std::variant<Box, Ball>;

// Open set given as a union of open boxes and balls.
class OpenSet {
public:
    OpenSet() = default;
    explicit OpenSet(std::vector<Primitive> parts);

    const std::vector<Primitive>& parts() const { return parts_; }
    bool empty() const { return parts_.empty(); }
    bool contains(const Vector& x) const;
    // Lower bound on dist(x, complement); exact for a single primitive.
    double inner_distance(const Vector& x) const;
    double diameter() const;

private:
    std::vector<Primitive> parts_;
};

class Ifs {
public:
    Ifs(std::vector<Similarity> maps, std::optional<OpenSet> witness = std::nullopt);

    std::size_t size() const { return maps_.size(); }
    std::size_t dim() const { return maps_.front().dim(); }
    const Similarity& map(std::size_t i) const { return maps_[i]; }
    const std::vector<Similarity>& maps() const { return maps_; }
    const std::optional<OpenSet>& witness() const { return witness_; }
    std::vector<double> ratios() const;

private:
    std::vector<Similarity> maps_;
    std::optional<OpenSet> witness_;
};

double moran_dimension(std::span<const double> ratios);

enum class OscStatus { Certified, Violated, NotCertifiable };

struct OscCheck {
    std::string name;
    bool passed = false;
    double margin = 0.0;
};

struct OscReport {
    OscStatus status = OscStatus::NotCertifiable;
    std::vector<OscCheck> checks;
    std::optional<std::pair<std::size_t, std::size_t>> violating_pair;
    std::string detail;
};

OscReport check_osc(const Ifs& ifs);
std::string to_string(OscStatus s);

// Upper bound on diam K used by the sampling cut rule. Exact (the diameter of
// the fixed-point hull) when that hull is verified invariant in d <= 2.
double attractor_diameter_bound(const Ifs& ifs);

// Fixed point of the first word (in length-lex order, up to max_length) that
// lies strictly inside the witness.
std::optional<Vector> attractor_point_in_witness(const Ifs& ifs, std::size_t max_length = 8);

class PointCloud {
public:
    // resolution 0 means the points are the set itself
    PointCloud(std::size_t dim, double resolution, std::vector<double> coords);

    std::size_t size() const { return coords_.size() / dim_; }
    std::size_t dim() const { return dim_; }
    double resolution() const { return resolution_; }
    const std::vector<double>& coords() const { return coords_; }
    std::span<const double> point(std::size_t i) const {
        return std::span<const double>(coords_).subspan(i * dim_, dim_);
    }
    Vector vec(std::size_t i) const;

    std::pair<Vector, Vector> bounding_box() const;
    // Exact up to 4096 points, a farthest-point lower estimate beyond.
    double diameter() const;

    PointCloud subset(std::span<const std::size_t> indices) const;
    PointCloud merged(const PointCloud& other) const;
    PointCloud with_resolution(double r) const;

private:
    std::size_t dim_;
    double resolution_;
    std::vector<double> coords_;
};

double distance(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);

struct SampleOptions {
    std::size_t max_points = 20'000'000;
};

PointCloud sample_attractor(const Ifs& ifs, double delta, const Vector& seed, const SampleOptions& opt = {});
// Seed defaults to the fixed point of the first map.
PointCloud sample_attractor(const Ifs& ifs, double delta, const SampleOptions& opt = {});

class ConformalMap {
public:
    enum class Kind { Affine, Inversion, Mobius };

    static ConformalMap affine(double scale, Matrix rotation, Vector translation);
    static ConformalMap identity(std::size_t dim);
    static ConformalMap inversion(Vector center, double radius);
    static ConformalMap mobius(std::complex<double> a, std::complex<double> b, std::complex<double> c,
                               std::complex<double> d);

    Kind kind() const { return kind_; }
    std::string kind_name() const;
    std::size_t dim() const;
    std::optional<double> margin() const { return margin_; }
    ConformalMap with_margin(double m) const;

    Vector operator()(const Vector& x) const;
    double derivative_norm(const Vector& x) const;  // |lambda_x|
    // Distance to the singular locus, +inf when there is none.
    double singular_distance(const Vector& x) const;
    // sup |lambda| over the closed ball B(x, r), +inf if it meets the locus
    double derivative_sup(const Vector& x, double r) const;
    ConformalMap inverse() const;
    bool is_similarity() const;

    // parameters, for serialization
    double scale() const { return scale_; }
    const Matrix& rotation() const { return rotation_; }
    const Vector& translation() const { return translation_; }
    const Vector& center() const { return center_; }
    double radius() const { return radius_; }
    std::complex<double> a() const { return a_; }
    std::complex<double> b() const { return b_; }
    std::complex<double> c() const { return c_; }
    std::complex<double> d() const { return d_; }

private:
    Kind kind_ = Kind::Affine;
    double scale_ = 1.0;
    Matrix rotation_;
    Vector translation_;
    Vector center_;
    double radius_ = 0.0;
    std::complex<double> a_, b_, c_, d_;
    std::optional<double> margin_;
};

PointCloud apply_map(const ConformalMap& map, const PointCloud& cloud);

struct AlmostSimilarity {
    double c_k = 1.0;
    double deviation = 1.0;
    double diameter = 0.0;
    double a_estimate = 0.0;  // (deviation - 1) / diam^alpha
    std::size_t pairs = 0;
};

struct AlmostSimilarityOptions {
    std::size_t max_pairs = 200'000;
    std::size_t enlargement_points = 64;
};

AlmostSimilarity estimate_almost_similarity(const ConformalMap& map, const PointCloud& cloud, double S,
                                            double alpha, const AlmostSimilarityOptions& opt = {});

struct ExponentFit {
    bool exact_similarity = false;
    double alpha = 0.0;
    double a_const = 0.0;
    double alpha_stderr = 0.0;
    std::vector<double> diameters;
    std::vector<double> deviations;
};

ExponentFit almost_similarity_exponent_fit(const ConformalMap& map, const std::vector<PointCloud>& nested,
                                           double S = 0.0);

}  // namespace ahlfors::geometry
