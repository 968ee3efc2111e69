#include "ahlfors/geometry.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>

#include "ahlfors/error.hpp"
#include "ahlfors/parallel.hpp"
#include "ahlfors/spectral.hpp"

namespace ahlfors::geometry {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTouchTol = 1e-12;

void require_orthogonal(const Matrix& q, const char* who) {
    if (q.rows() != q.cols()) throw DomainError(std::string(who) + ": rotation must be square");
    Matrix e = q.transpose() * q - Matrix::Identity(q.rows(), q.cols());
    if (e.cwiseAbs().maxCoeff() > 1e-12) throw DomainError(std::string(who) + ": rotation is not orthogonal");
}

std::string format_point(std::span<const double> p) {
    std::ostringstream os;
    os.precision(17);
    os << "(";
    for (std::size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
    os << ")";
    return os.str();
}

}  // namespace

// ---- Similarity ---------------------------------------------------------------

Similarity::Similarity(double ratio, Matrix rotation, Vector translation)
    : r_(ratio), q_(std::move(rotation)), t_(std::move(translation)) {
    if (!(r_ > 0 && r_ < 1)) throw DomainError("Similarity: ratio must lie in (0,1)");
    if (t_.size() == 0) throw DomainError("Similarity: empty translation");
    require_orthogonal(q_, "Similarity");
    if (q_.rows() != t_.size()) throw DomainError("Similarity: rotation and translation dimensions differ");
    if (!t_.allFinite()) throw DomainError("Similarity: non-finite translation");
}

Similarity Similarity::scaling(double ratio, Vector translation) {
    auto d = translation.size();
    return Similarity(ratio, Matrix::Identity(d, d), std::move(translation));
}

Similarity Similarity::planar(double ratio, double angle, const Vector& translation) {
    if (translation.size() != 2) throw DomainError("Similarity::planar: translation must be 2-d");
    Matrix q(2, 2);
    q << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return Similarity(ratio, q, translation);
}

Vector Similarity::fixed_point() const {
    auto d = t_.size();
    Matrix m = Matrix::Identity(d, d) - r_ * q_;
    return m.partialPivLu().solve(t_);
}

Similarity Similarity::compose(const Similarity& inner) const {
    return Similarity(r_ * inner.r_, q_ * inner.q_, r_ * (q_ * inner.t_) + t_);
}

// ---- OpenSet ------------------------------------------------------------------

OpenSet::OpenSet(std::vector<Primitive> parts) : parts_(std::move(parts)) {
    if (parts_.empty()) throw DomainError("OpenSet: no primitives");
    auto d = std::visit([](const auto& p) -> long {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, Box>)
            return p.lo.size();
        else
            return p.center.size();
    }, parts_.front());
    for (const auto& p : parts_) {
        if (const auto* b = std::get_if<Box>(&p)) {
            if (b->lo.size() != d || b->hi.size() != d) throw DomainError("OpenSet: box dimension mismatch");
            if (!((b->hi - b->lo).minCoeff() > 0)) throw DomainError("OpenSet: box must have lo < hi");
        } else {
            const auto& ball = std::get<Ball>(p);
            if (ball.center.size() != d) throw DomainError("OpenSet: ball dimension mismatch");
            if (!(ball.radius > 0)) throw DomainError("OpenSet: ball radius must be positive");
        }
    }
}

namespace {

double primitive_inner_distance(const Primitive& p, const Vector& x) {
    if (const auto* b = std::get_if<Box>(&p)) {
        return std::min((x - b->lo).minCoeff(), (b->hi - x).minCoeff());
    }
    const auto& ball = std::get<Ball>(p);
    return ball.radius - (x - ball.center).norm();
}

std::vector<Vector> box_corners(const Box& b) {
    const auto d = b.lo.size();
    std::vector<Vector> out;
    for (long mask = 0; mask < (1L << d); ++mask) {
        Vector c(d);
        for (long k = 0; k < d; ++k) c[k] = (mask >> k) & 1 ? b.hi[k] : b.lo[k];
        out.push_back(c);
    }
    return out;
}

}  // namespace

bool OpenSet::contains(const Vector& x) const { return inner_distance(x) > 0; }

double OpenSet::inner_distance(const Vector& x) const {
    double best = 0.0;
    for (const auto& p : parts_) best = std::max(best, primitive_inner_distance(p, x));
    return best;
}

double OpenSet::diameter() const {
    std::vector<Vector> corners;
    std::vector<Ball> balls;
    for (const auto& p : parts_) {
        if (const auto* b = std::get_if<Box>(&p)) {
            auto c = box_corners(*b);
            corners.insert(corners.end(), c.begin(), c.end());
        } else {
            balls.push_back(std::get<Ball>(p));
        }
    }
    double d = 0.0;
    for (std::size_t i = 0; i < corners.size(); ++i)
        for (std::size_t j = i + 1; j < corners.size(); ++j) d = std::max(d, (corners[i] - corners[j]).norm());
    for (std::size_t i = 0; i < balls.size(); ++i) {
        d = std::max(d, 2 * balls[i].radius);
        for (const auto& c : corners) d = std::max(d, (c - balls[i].center).norm() + balls[i].radius);
        for (std::size_t j = i + 1; j < balls.size(); ++j)
            d = std::max(d, (balls[i].center - balls[j].center).norm() + balls[i].radius + balls[j].radius);
    }
    return d;
}

// ---- Ifs ----------------------------------------------------------------------

Ifs::Ifs(std::vector<Similarity> maps, std::optional<OpenSet> witness)
    : maps_(std::move(maps)), witness_(std::move(witness)) {
    if (maps_.size() < 2) throw DomainError("Ifs: need at least 2 maps");
    for (const auto& m : maps_)
        if (m.dim() != maps_.front().dim()) throw DomainError("Ifs: maps have different dimensions");
    if (witness_ && !witness_->empty()) {
        Vector probe = Vector::Zero(long(dim()));
        auto check = [&](const Primitive& p) {
            long d = std::holds_alternative<Box>(p) ? std::get<Box>(p).lo.size() : std::get<Ball>(p).center.size();
            if (d != probe.size()) throw DomainError("Ifs: witness dimension differs from maps");
        };
        for (const auto& p : witness_->parts()) check(p);
    }
}

std::vector<double> Ifs::ratios() const {
    std::vector<double> r;
    for (const auto& m : maps_) r.push_back(m.ratio());
    return r;
}

double moran_dimension(std::span<const double> ratios) {
    if (ratios.empty()) throw DomainError("moran_dimension: empty ratio list");
    if (ratios.size() < 2) throw DomainError("moran_dimension: a single ratio gives the degenerate root s = 0");
    for (double r : ratios)
        if (!(r > 0 && r < 1)) throw DomainError("moran_dimension: ratios must lie in (0,1)");
    auto g = [&](double s) {
        double sum = 0;
        for (double r : ratios) sum += std::pow(r, s);
        return sum - 1.0;
    };
    double lo = 0.0, hi = 1.0;
    while (g(hi) > 0) {
        lo = hi;
        hi *= 2;
    }
    for (int it = 0; it < 200 && hi - lo > 2 * std::numeric_limits<double>::epsilon() * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        (g(mid) > 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// ---- OSC ----------------------------------------------------------------------

namespace {

// Image of an axis-aligned box under a similarity: an oriented box.
struct OrientedBox {
    Vector c;
    Matrix axes;  // orthonormal columns
    Vector h;     // half extents
};

using ImagePrimitive = std::variant<OrientedBox, Ball>;

ImagePrimitive image(const Similarity& s, const Primitive& p) {
    if (const auto* b = std::get_if<Box>(&p))
        return OrientedBox{s(0.5 * (b->lo + b->hi)), s.rotation(), 0.5 * s.ratio() * (b->hi - b->lo)};
    const auto& ball = std::get<Ball>(p);
    return Ball{s(ball.center), s.ratio() * ball.radius};
}

std::vector<Vector> corners(const OrientedBox& b) {
    const auto d = b.c.size();
    std::vector<Vector> out;
    for (long mask = 0; mask < (1L << d); ++mask) {
        Vector x = b.c;
        for (long k = 0; k < d; ++k) x += ((mask >> k) & 1 ? 1.0 : -1.0) * b.h[k] * b.axes.col(k);
        out.push_back(x);
    }
    return out;
}

// slack of the image inside a witness primitive (>= 0 means contained)
double containment_margin(const ImagePrimitive& img, const Primitive& target) {
    if (const auto* ob = std::get_if<OrientedBox>(&img)) {
        double m = kInf;
        auto cs = corners(*ob);
        if (const auto* b = std::get_if<Box>(&target)) {
            for (const auto& c : cs) m = std::min(m, std::min((c - b->lo).minCoeff(), (b->hi - c).minCoeff()));
        } else {
            const auto& ball = std::get<Ball>(target);
            for (const auto& c : cs) m = std::min(m, ball.radius - (c - ball.center).norm());
        }
        return m;
    }
    const auto& ib = std::get<Ball>(img);
    if (const auto* b = std::get_if<Box>(&target))
        return std::min((ib.center - b->lo).minCoeff(), (b->hi - ib.center).minCoeff()) - ib.radius;
    const auto& ball = std::get<Ball>(target);
    return ball.radius - (ib.center - ball.center).norm() - ib.radius;
}

double projection_radius(const OrientedBox& b, const Vector& u) {
    double r = 0;
    for (long k = 0; k < b.c.size(); ++k) r += b.h[k] * std::fabs(b.axes.col(k).dot(u));
    return r;
}

// Largest separating gap found; >= 0 means the open sets are disjoint.
double separation_gap(const ImagePrimitive& p, const ImagePrimitive& q) {
    const auto* a = std::get_if<OrientedBox>(&p);
    const auto* b = std::get_if<OrientedBox>(&q);
    if (a && b) {
        std::vector<Vector> axes;
        for (long k = 0; k < a->c.size(); ++k) axes.push_back(a->axes.col(k));
        for (long k = 0; k < b->c.size(); ++k) axes.push_back(b->axes.col(k));
        if (a->c.size() == 3) {
            for (long i = 0; i < 3; ++i)
                for (long j = 0; j < 3; ++j) {
                    Eigen::Vector3d u = Eigen::Vector3d(a->axes.col(i)).cross(Eigen::Vector3d(b->axes.col(j)));
                    if (u.norm() > 1e-9) axes.push_back(Vector(u.normalized()));
                }
        }
        double best = -kInf;
        for (const auto& u : axes) {
            double ca = a->c.dot(u), cb = b->c.dot(u);
            double gap = std::fabs(ca - cb) - projection_radius(*a, u) - projection_radius(*b, u);
            best = std::max(best, gap);
        }
        return best;
    }
    const auto* ba = std::get_if<Ball>(&p);
    const auto* bb = std::get_if<Ball>(&q);
    if (ba && bb) return (ba->center - bb->center).norm() - ba->radius - bb->radius;
    const Ball& ball = ba ? *ba : *bb;
    const OrientedBox& box = a ? *a : *b;
    Vector local = box.axes.transpose() * (ball.center - box.c);
    Vector clamped = local.cwiseMax(-box.h).cwiseMin(box.h);
    return (local - clamped).norm() - ball.radius;
}

}  // namespace

std::string to_string(OscStatus s) {
    switch (s) {
        case OscStatus::Certified: return "certified";
        case OscStatus::Violated: return "violated";
        case OscStatus::NotCertifiable: return "not-certifiable";
    }
    return "?";
}

OscReport check_osc(const Ifs& ifs) {
    OscReport rep;
    if (!ifs.witness() || ifs.witness()->empty()) {
        rep.status = OscStatus::NotCertifiable;
        rep.detail = "no open-set witness supplied";
        return rep;
    }
    const auto& parts = ifs.witness()->parts();
    const std::size_t n = ifs.size();
    std::vector<std::vector<ImagePrimitive>> imgs(n);
    for (std::size_t i = 0; i < n; ++i)
        for (const auto& p : parts) imgs[i].push_back(image(ifs.map(i), p));

    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < parts.size(); ++p) {
            double best = -kInf;
            for (const auto& target : parts) best = std::max(best, containment_margin(imgs[i][p], target));
            bool pass = best >= -kTouchTol;
            rep.checks.push_back({"contain phi_" + std::to_string(i) + "(U_" + std::to_string(p) + ")", pass, best});
            if (!pass && ok) {
                ok = false;
                rep.detail = "image of part " + std::to_string(p) + " under map " + std::to_string(i) +
                             " leaves the witness";
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double worst = kInf;
            for (const auto& a : imgs[i])
                for (const auto& b : imgs[j]) worst = std::min(worst, separation_gap(a, b));
            bool pass = worst >= -kTouchTol;
            rep.checks.push_back({"disjoint phi_" + std::to_string(i) + "(U), phi_" + std::to_string(j) + "(U)", pass,
                                  worst});
            if (!pass && !rep.violating_pair) {
                rep.violating_pair = std::make_pair(i, j);
                if (ok) rep.detail = "images under maps " + std::to_string(i) + " and " + std::to_string(j) + " overlap";
                ok = false;
            }
        }
    rep.status = ok ? OscStatus::Certified : OscStatus::Violated;
    return rep;
}

// ---- diameter bound -----------------------------------------------------------

namespace {

double cross2(const Vector& o, const Vector& a, const Vector& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

std::vector<Vector> convex_hull_2d(std::vector<Vector> pts) {
    std::sort(pts.begin(), pts.end(), [](const Vector& a, const Vector& b) {
        return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]);
    });
    pts.erase(std::unique(pts.begin(), pts.end(), [](const Vector& a, const Vector& b) { return a == b; }),
              pts.end());
    if (pts.size() < 3) return pts;
    std::vector<Vector> h(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross2(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
        h[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
        while (k >= t && cross2(h[k - 2], h[k - 1], pts[i - 1]) <= 0) --k;
        h[k++] = pts[i - 1];
    }
    h.resize(k - 1);
    return h;
}

double segment_distance(const Vector& p, const Vector& a, const Vector& b) {
    Vector ab = b - a;
    double len2 = ab.squaredNorm();
    double t = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (p - a - t * ab).norm();
}

bool inside_hull(const std::vector<Vector>& hull, const Vector& p, double tol) {
    if (hull.size() == 1) return (p - hull[0]).norm() <= tol;
    if (hull.size() == 2) return segment_distance(p, hull[0], hull[1]) <= tol;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const Vector& a = hull[i];
        const Vector& b = hull[(i + 1) % hull.size()];
        // signed distance to the left of the counter-clockwise edge
        if (cross2(a, b, p) / (b - a).norm() < -tol) return false;
    }
    return true;
}

}  // namespace

double attractor_diameter_bound(const Ifs& ifs) {
    std::vector<Vector> fixed;
    for (const auto& m : ifs.maps()) fixed.push_back(m.fixed_point());
    double scale = 1.0;
    for (const auto& f : fixed) scale = std::max(scale, f.cwiseAbs().maxCoeff());
    const double tol = 1e-12 * scale;

    if (ifs.dim() == 1) {
        double lo = kInf, hi = -kInf;
        for (const auto& f : fixed) {
            lo = std::min(lo, f[0]);
            hi = std::max(hi, f[0]);
        }
        bool invariant = true;
        for (const auto& m : ifs.maps())
            for (double e : {lo, hi}) {
                double y = m(Vector::Constant(1, e))[0];
                invariant = invariant && y >= lo - tol && y <= hi + tol;
            }
        if (invariant) return hi - lo;
    } else if (ifs.dim() == 2) {
        auto hull = convex_hull_2d(fixed);
        bool invariant = true;
        for (const auto& m : ifs.maps())
            for (const auto& v : hull) invariant = invariant && inside_hull(hull, m(v), tol);
        if (invariant) {
            double d = 0;
            for (std::size_t i = 0; i < hull.size(); ++i)
                for (std::size_t j = i + 1; j < hull.size(); ++j) d = std::max(d, (hull[i] - hull[j]).norm());
            return d;
        }
    }
    double tmax = 0, rmax = 0;
    for (const auto& m : ifs.maps()) {
        tmax = std::max(tmax, m.translation().norm());
        rmax = std::max(rmax, m.ratio());
    }
    return 2.0 * tmax / (1.0 - rmax);
}

std::optional<Vector> attractor_point_in_witness(const Ifs& ifs, std::size_t max_length) {
    if (!ifs.witness()) return std::nullopt;
    std::vector<Similarity> level;
    for (const auto& m : ifs.maps()) level.push_back(m);
    for (std::size_t len = 1; len <= max_length; ++len) {
        for (const auto& s : level) {
            Vector x = s.fixed_point();
            if (ifs.witness()->inner_distance(x) > 1e-12) return x;
        }
        if (len == max_length || level.size() * ifs.size() > 200'000) break;
        std::vector<Similarity> next;
        for (const auto& s : level)
            for (const auto& m : ifs.maps()) next.push_back(s.compose(m));
        level = std::move(next);
    }
    return std::nullopt;
}

// ---- PointCloud ---------------------------------------------------------------

PointCloud::PointCloud(std::size_t dim, double resolution, std::vector<double> coords)
    : dim_(dim), resolution_(resolution), coords_(std::move(coords)) {
    if (dim_ == 0) throw DomainError("PointCloud: dimension must be >= 1");
    if (coords_.empty()) throw DomainError("PointCloud: empty cloud");
    if (coords_.size() % dim_ != 0) throw DomainError("PointCloud: coordinate count not a multiple of dim");
    if (!(resolution_ >= 0) || !std::isfinite(resolution_))
        throw DomainError("PointCloud: resolution must be finite and >= 0");
    for (double x : coords_)
        if (!std::isfinite(x)) throw DomainError("PointCloud: non-finite coordinate");
}

Vector PointCloud::vec(std::size_t i) const {
    auto p = point(i);
    return Eigen::Map<const Vector>(p.data(), long(dim_));
}

std::pair<Vector, Vector> PointCloud::bounding_box() const {
    Vector lo = Vector::Constant(long(dim_), kInf), hi = Vector::Constant(long(dim_), -kInf);
    for (std::size_t i = 0; i < size(); ++i)
        for (std::size_t k = 0; k < dim_; ++k) {
            lo[long(k)] = std::min(lo[long(k)], coords_[i * dim_ + k]);
            hi[long(k)] = std::max(hi[long(k)], coords_[i * dim_ + k]);
        }
    return {lo, hi};
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        double d = a[k] - b[k];
        s += d * d;
    }
    return s;
}

double distance(std::span<const double> a, std::span<const double> b) { return std::sqrt(squared_distance(a, b)); }

double PointCloud::diameter() const {
    const std::size_t n = size();
    if (dim_ == 1) {
        auto [lo, hi] = bounding_box();
        return hi[0] - lo[0];
    }
    double best = 0;
    if (n <= 4096) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) best = std::max(best, squared_distance(point(i), point(j)));
        return std::sqrt(best);
    }
    std::size_t a = 0;
    for (int sweep = 0; sweep < 4; ++sweep) {
        std::size_t far = a;
        double fd = 0;
        for (std::size_t j = 0; j < n; ++j) {
            double d = squared_distance(point(a), point(j));
            if (d > fd) {
                fd = d;
                far = j;
            }
        }
        best = std::max(best, fd);
        a = far;
    }
    return std::sqrt(best);
}

PointCloud PointCloud::subset(std::span<const std::size_t> indices) const {
    std::vector<double> c;
    c.reserve(indices.size() * dim_);
    for (auto i : indices) {
        if (i >= size()) throw DomainError("PointCloud::subset: index out of range");
        auto p = point(i);
        c.insert(c.end(), p.begin(), p.end());
    }
    return PointCloud(dim_, resolution_, std::move(c));
}

PointCloud PointCloud::merged(const PointCloud& other) const {
    if (other.dim_ != dim_) throw DomainError("PointCloud::merged: dimension mismatch");
    auto c = coords_;
    c.insert(c.end(), other.coords_.begin(), other.coords_.end());
    return PointCloud(dim_, std::max(resolution_, other.resolution_), std::move(c));
}

PointCloud PointCloud::with_resolution(double r) const { return PointCloud(dim_, r, coords_); }

// ---- sampling -----------------------------------------------------------------

PointCloud sample_attractor(const Ifs& ifs, double delta, const Vector& seed, const SampleOptions& opt) {
    if (!(delta > 0)) throw DomainError("sample_attractor: delta must be positive");
    const std::size_t d = ifs.dim();
    if (std::size_t(seed.size()) != d) throw DomainError("sample_attractor: seed dimension mismatch");
    const double diam0 = attractor_diameter_bound(ifs);
    const double cut = delta * (1.0 + 1e-9);
    const std::size_t n = ifs.size();

    if (diam0 <= cut) return PointCloud(d, delta, std::vector<double>(seed.data(), seed.data() + d));

    // flat copies of the maps for the hot loop
    std::vector<double> ratio(n);
    std::vector<std::vector<double>> rot(n), trans(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& m = ifs.map(i);
        ratio[i] = m.ratio();
        rot[i].resize(d * d);
        trans[i].resize(d);
        for (std::size_t a = 0; a < d; ++a) {
            trans[i][a] = m.translation()[long(a)];
            for (std::size_t b = 0; b < d; ++b) rot[i][a * d + b] = m.rotation()(long(a), long(b));
        }
    }

    std::atomic<std::size_t> emitted{0};
    std::atomic<bool> exceeded{false};
    std::vector<std::vector<double>> parts(n);

    struct Frame {
        double r;
        std::vector<double> q, t;
        std::size_t next;
    };

    parallel_for(n, [&](std::size_t first) {
        auto& out = parts[first];
        auto child = [&](const Frame& f, std::size_t j) {
            Frame c;
            c.r = f.r * ratio[j];
            c.q.assign(d * d, 0.0);
            c.t = f.t;
            for (std::size_t a = 0; a < d; ++a)
                for (std::size_t b = 0; b < d; ++b) {
                    double s = 0;
                    for (std::size_t k = 0; k < d; ++k) s += f.q[a * d + k] * rot[j][k * d + b];
                    c.q[a * d + b] = s;
                    c.t[a] += f.r * f.q[a * d + b] * trans[j][b];
                }
            c.next = 0;
            return c;
        };
        Frame root{1.0, std::vector<double>(d * d, 0.0), std::vector<double>(d, 0.0), 0};
        for (std::size_t a = 0; a < d; ++a) root.q[a * d + a] = 1.0;

        std::vector<Frame> stack;
        stack.push_back(child(root, first));
        while (!stack.empty()) {
            if (exceeded) return;
            Frame& top = stack.back();
            if (top.r * diam0 <= cut) {
                if (emitted.fetch_add(1, std::memory_order_relaxed) >= opt.max_points) {
                    exceeded = true;
                    return;
                }
                for (std::size_t a = 0; a < d; ++a) {
                    double s = top.t[a];
                    for (std::size_t b = 0; b < d; ++b) s += top.r * top.q[a * d + b] * seed[long(b)];
                    out.push_back(s);
                }
                stack.pop_back();
                continue;
            }
            if (top.next >= n) {
                stack.pop_back();
                continue;
            }
            std::size_t j = top.next++;
            Frame c = child(top, j);
            stack.push_back(std::move(c));
        }
    });
    if (exceeded)
        throw BudgetError("sample_attractor: point budget of " + std::to_string(opt.max_points) + " exceeded",
                          double(emitted.load()));
    std::vector<double> all;
    for (auto& p : parts) all.insert(all.end(), p.begin(), p.end());
    return PointCloud(d, delta, std::move(all));
}

PointCloud sample_attractor(const Ifs& ifs, double delta, const SampleOptions& opt) {
    return sample_attractor(ifs, delta, ifs.map(0).fixed_point(), opt);
}

// ---- conformal maps -----------------------------------------------------------

ConformalMap ConformalMap::affine(double scale, Matrix rotation, Vector translation) {
    if (!(scale > 0) || !std::isfinite(scale)) throw DomainError("affine map: scale must be positive");
    require_orthogonal(rotation, "affine map");
    if (rotation.rows() != translation.size()) throw DomainError("affine map: dimension mismatch");
    ConformalMap m;
    m.kind_ = Kind::Affine;
    m.scale_ = scale;
    m.rotation_ = std::move(rotation);
    m.translation_ = std::move(translation);
    return m;
}

ConformalMap ConformalMap::identity(std::size_t dim) {
    return affine(1.0, Matrix::Identity(long(dim), long(dim)), Vector::Zero(long(dim)));
}

ConformalMap ConformalMap::inversion(Vector center, double radius) {
    if (!(radius > 0)) throw DomainError("inversion: radius must be positive");
    if (center.size() == 0) throw DomainError("inversion: empty center");
    ConformalMap m;
    m.kind_ = Kind::Inversion;
    m.center_ = std::move(center);
    m.radius_ = radius;
    return m;
}

ConformalMap ConformalMap::mobius(std::complex<double> a, std::complex<double> b, std::complex<double> c,
                                  std::complex<double> d) {
    if (std::abs(a * d - b * c) == 0.0) throw DomainError("mobius: ad - bc must be nonzero");
    ConformalMap m;
    m.kind_ = Kind::Mobius;
    m.a_ = a;
    m.b_ = b;
    m.c_ = c;
    m.d_ = d;
    return m;
}

std::string ConformalMap::kind_name() const {
    switch (kind_) {
        case Kind::Affine: return "affine";
        case Kind::Inversion: return "inversion";
        case Kind::Mobius: return "mobius";
    }
    return "?";
}

std::size_t ConformalMap::dim() const {
    switch (kind_) {
        case Kind::Affine: return std::size_t(translation_.size());
        case Kind::Inversion: return std::size_t(center_.size());
        case Kind::Mobius: return 2;
    }
    return 0;
}

ConformalMap ConformalMap::with_margin(double m) const {
    if (!(m >= 0)) throw DomainError("conformal map: margin must be >= 0");
    ConformalMap out = *this;
    out.margin_ = m;
    return out;
}

Vector ConformalMap::operator()(const Vector& x) const {
    if (std::size_t(x.size()) != dim()) throw DomainError("conformal map: point dimension mismatch");
    switch (kind_) {
        case Kind::Affine: return scale_ * (rotation_ * x) + translation_;
        case Kind::Inversion: {
            Vector v = x - center_;
            double n2 = v.squaredNorm();
            if (n2 == 0) throw DomainError("inversion: point at the center");
            return center_ + (radius_ * radius_ / n2) * v;
        }
        case Kind::Mobius: {
            std::complex<double> z(x[0], x[1]);
            std::complex<double> den = c_ * z + d_;
            if (den == 0.0) throw DomainError("mobius: point at the pole");
            std::complex<double> w = (a_ * z + b_) / den;
            Vector out(2);
            out << w.real(), w.imag();
            return out;
        }
    }
    return x;
}

double ConformalMap::derivative_norm(const Vector& x) const {
    switch (kind_) {
        case Kind::Affine: return scale_;
        case Kind::Inversion: return radius_ * radius_ / (x - center_).squaredNorm();
        case Kind::Mobius: {
            std::complex<double> z(x[0], x[1]);
            return std::abs(a_ * d_ - b_ * c_) / std::norm(c_ * z + d_);
        }
    }
    return 1.0;
}

double ConformalMap::singular_distance(const Vector& x) const {
    switch (kind_) {
        case Kind::Affine: return kInf;
        case Kind::Inversion: return (x - center_).norm();
        case Kind::Mobius: {
            if (c_ == 0.0) return kInf;
            std::complex<double> z(x[0], x[1]);
            return std::abs(z + d_ / c_);
        }
    }
    return kInf;
}

double ConformalMap::derivative_sup(const Vector& x, double r) const {
    switch (kind_) {
        case Kind::Affine: return scale_;
        case Kind::Inversion: {
            double dist = (x - center_).norm() - r;
            return dist > 0 ? radius_ * radius_ / (dist * dist) : kInf;
        }
        case Kind::Mobius: {
            double num = std::abs(a_ * d_ - b_ * c_);
            if (c_ == 0.0) return num / std::norm(d_);
            double dist = singular_distance(x) - r;
            return dist > 0 ? num / (std::norm(c_) * dist * dist) : kInf;
        }
    }
    return kInf;
}

ConformalMap ConformalMap::inverse() const {
    ConformalMap out;
    switch (kind_) {
        case Kind::Affine: {
            Matrix qt = rotation_.transpose();
            out = affine(1.0 / scale_, qt, -(qt * translation_) / scale_);
            break;
        }
        case Kind::Inversion: out = *this; break;
        case Kind::Mobius: out = mobius(d_, -b_, -c_, a_); break;
    }
    out.margin_ = margin_;
    return out;
}

bool ConformalMap::is_similarity() const {
    return kind_ == Kind::Affine || (kind_ == Kind::Mobius && c_ == 0.0);
}

PointCloud apply_map(const ConformalMap& map, const PointCloud& cloud) {
    if (map.dim() != cloud.dim()) throw DomainError("apply_map: map and cloud dimensions differ");
    const double delta = cloud.resolution();
    const double margin = map.margin().value_or(10.0 * delta);
    const std::size_t d = cloud.dim();
    std::vector<double> out;
    out.reserve(cloud.coords().size());
    double lip = 0.0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        Vector x = cloud.vec(i);
        double sd = map.singular_distance(x);
        if (sd == 0.0 || sd < margin)
            throw DomainError("apply_map: point " + std::to_string(i) + " " + format_point(cloud.point(i)) +
                              " lies within margin " + std::to_string(margin) + " of the singular locus");
        Vector y = map(x);
        out.insert(out.end(), y.data(), y.data() + d);
        // K lies in the delta-neighbourhood of the sample, so the sup over
        // B(x, delta) bounds the local Lipschitz constant conservatively
        lip = std::max(lip, map.derivative_sup(x, delta));
    }
    if (!std::isfinite(lip)) throw DomainError("apply_map: derivative unbounded near the cloud");
    return PointCloud(d, delta * lip, std::move(out));
}

AlmostSimilarity estimate_almost_similarity(const ConformalMap& map, const PointCloud& cloud, double S,
                                            double alpha, const AlmostSimilarityOptions& opt) {
    if (cloud.size() < 2) throw DomainError("estimate_almost_similarity: need at least 2 points");
    if (map.dim() != cloud.dim()) throw DomainError("estimate_almost_similarity: dimension mismatch");
    if (!(S >= 0)) throw DomainError("estimate_almost_similarity: S must be >= 0");
    AlmostSimilarity res;
    res.diameter = cloud.diameter();
    if (map.is_similarity()) {
        res.c_k = map.derivative_norm(cloud.vec(0));
        res.deviation = 1.0;
        res.a_estimate = 0.0;
        return res;
    }
    const std::size_t d = cloud.dim();
    std::vector<Vector> pts;
    for (std::size_t i = 0; i < cloud.size(); ++i) pts.push_back(cloud.vec(i));
    if (S > 0 && res.diameter > 0) {
        const double off = S * res.diameter;
        const std::size_t m = std::min(cloud.size(), opt.enlargement_points);
        for (std::size_t k = 0; k < m; ++k) {
            Vector base = cloud.vec(k * cloud.size() / m);
            for (std::size_t a = 0; a < d; ++a)
                for (double sign : {-1.0, 1.0}) {
                    Vector p = base;
                    p[long(a)] += sign * off;
                    if (map.singular_distance(p) <= 0)
                        throw DomainError("estimate_almost_similarity: enlargement meets the singular locus");
                    pts.push_back(p);
                }
        }
    }
    std::vector<Vector> img;
    for (const auto& p : pts) img.push_back(map(p));

    const std::size_t n = pts.size();
    const unsigned long long total = (unsigned long long)n * (n - 1) / 2;
    const unsigned long long stride = std::max<unsigned long long>(1, (total + opt.max_pairs - 1) / opt.max_pairs);
    double qmax = 0, qmin = kInf;
    unsigned long long idx = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j, ++idx) {
            if (idx % stride) continue;
            double dx = (pts[i] - pts[j]).norm();
            if (dx == 0) continue;
            double q = (img[i] - img[j]).norm() / dx;
            qmax = std::max(qmax, q);
            qmin = std::min(qmin, q);
            ++res.pairs;
        }
    if (res.pairs == 0) throw DomainError("estimate_almost_similarity: all sampled pairs coincide");
    res.c_k = std::sqrt(qmax * qmin);
    res.deviation = std::max(1.0, std::sqrt(qmax / qmin));
    res.a_estimate = res.diameter > 0 ? (res.deviation - 1.0) / std::pow(res.diameter, alpha) : 0.0;
    return res;
}

ExponentFit almost_similarity_exponent_fit(const ConformalMap& map, const std::vector<PointCloud>& nested,
                                           double S) {
    if (nested.size() < 4)
        throw PreconditionError("almost_similarity_exponent_fit: need at least 4 nested scales, got " +
                                std::to_string(nested.size()));
    ExponentFit fit;
    std::vector<double> lx, ly;
    for (const auto& c : nested) {
        auto est = estimate_almost_similarity(map, c, S, 1.0);
        fit.diameters.push_back(est.diameter);
        fit.deviations.push_back(est.deviation);
        if (est.deviation > 1.0 && est.diameter > 0) {
            lx.push_back(std::log(est.diameter));
            ly.push_back(std::log(est.deviation - 1.0));
        }
    }
    if (map.is_similarity() || lx.size() < 2) {
        fit.exact_similarity = true;
        return fit;
    }
    auto lf = spectral::linear_fit(lx, ly);
    fit.alpha = lf.slope;
    fit.alpha_stderr = lf.slope_stderr;
    fit.a_const = std::exp(lf.intercept);
    return fit;
}

}  // namespace ahlfors::geometry
