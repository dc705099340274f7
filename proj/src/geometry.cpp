#include "dtpinn/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace dtpinn {

namespace {
constexpr double kPi = std::numbers::pi;
}

// ---------------------------------------------------------------------------
// DomainShape

DomainShape DomainShape::star(int petals, double amplitude) {
    if (petals < 3)
        throw InvalidArgument("star domain: petal count must be >= 3");
    if (!(amplitude > 0.0) || !(amplitude < 1.0))
        throw InvalidArgument(
            "star domain: amplitude must lie in (0, 1) so r(theta) > 0");
    DomainShape s;
    s.kind = Kind::Star;
    s.star_petals = petals;
    s.star_amplitude = amplitude;
    return s;
}

double DomainShape::boundary_radius(double theta) const {
    if (kind == Kind::UnitDisk) return 1.0;
    return 1.0 + star_amplitude * std::cos(star_petals * theta);
}

double DomainShape::boundary_radius_deriv(double theta) const {
    if (kind == Kind::UnitDisk) return 0.0;
    return -star_amplitude * star_petals * std::sin(star_petals * theta);
}

Vec2 DomainShape::boundary_point(double theta) const {
    const double r = boundary_radius(theta);
    return {r * std::cos(theta), r * std::sin(theta)};
}

Vec2 DomainShape::outward_normal(double theta) const {
    if (kind == Kind::UnitDisk) return {std::cos(theta), std::sin(theta)};
    // Tangent of theta -> r(theta)(cos,sin); rotate by -90 deg for the
    // outward side of a counterclockwise curve.
    const double r = boundary_radius(theta);
    const double rp = boundary_radius_deriv(theta);
    const double c = std::cos(theta), s = std::sin(theta);
    const Vec2 tangent{rp * c - r * s, rp * s + r * c};
    const Vec2 n{tangent.y, -tangent.x};
    const double len = norm(n);
    return {n.x / len, n.y / len};
}

double DomainShape::signed_coordinate(Vec2 p) const {
    const double rho = norm(p);
    if (kind == Kind::UnitDisk) return rho - 1.0;
    const double theta = std::atan2(p.y, p.x);
    return rho - boundary_radius(theta);
}

double DomainShape::boundary_distance(Vec2 p) const {
    const double rho = norm(p);
    if (kind == Kind::UnitDisk) return 1.0 - rho;
    const double theta = std::atan2(p.y, p.x);
    const double r = boundary_radius(theta);
    const double rp = boundary_radius_deriv(theta);
    // Radial gap projected onto the boundary normal direction.
    return (r - rho) * r / std::sqrt(r * r + rp * rp);
}

double DomainShape::area() const {
    if (kind == Kind::UnitDisk) return kPi;
    const double a = star_amplitude;
    return kPi * (1.0 + 0.5 * a * a);
}

double DomainShape::perimeter() const {
    if (kind == Kind::UnitDisk) return 2.0 * kPi;
    const int n = 16384;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = 2.0 * kPi * (i + 0.5) / n;
        const double r = boundary_radius(t);
        const double rp = boundary_radius_deriv(t);
        sum += std::sqrt(r * r + rp * rp);
    }
    return sum * 2.0 * kPi / n;
}

// ---------------------------------------------------------------------------
// PointCloud

Vec2 PointCloud::point(std::size_t global_index) const {
    const std::size_t ni = interior.size(), nb = boundary.size();
    if (global_index < ni) return interior[global_index];
    if (global_index < ni + nb) return boundary[global_index - ni];
    if (global_index < ni + nb + ghost.size()) return ghost[global_index - ni - nb];
    throw InvalidArgument("PointCloud::point: index out of range");
}

std::vector<Vec2> PointCloud::extended_points() const {
    std::vector<Vec2> pts;
    pts.reserve(n_extended());
    pts.insert(pts.end(), interior.begin(), interior.end());
    pts.insert(pts.end(), boundary.begin(), boundary.end());
    pts.insert(pts.end(), ghost.begin(), ghost.end());
    return pts;
}

// ---------------------------------------------------------------------------
// Node generation

namespace {

// Uniform-cell occupancy grid used during Poisson-disk sampling.
class SampleGrid {
public:
    SampleGrid(double lo, double hi, double cell)
        : lo_(lo), cell_(cell),
          dim_(std::max<int>(1, static_cast<int>(std::ceil((hi - lo) / cell)))),
          cells_(static_cast<std::size_t>(dim_) * dim_) {}

    void insert(Vec2 p, std::size_t idx) {
        cells_[cell_of(p)].push_back(idx);
    }

    // True if some already-inserted point lies within min_dist of p.
    bool has_neighbor_within(Vec2 p, double min_dist,
                             const std::vector<Vec2>& points) const {
        const int cx = coord(p.x), cy = coord(p.y);
        const int reach = static_cast<int>(std::ceil(min_dist / cell_));
        const double d2 = min_dist * min_dist;
        for (int gy = std::max(0, cy - reach); gy <= std::min(dim_ - 1, cy + reach); ++gy)
            for (int gx = std::max(0, cx - reach); gx <= std::min(dim_ - 1, cx + reach); ++gx)
                for (std::size_t idx : cells_[static_cast<std::size_t>(gy) * dim_ + gx]) {
                    const Vec2 q = points[idx];
                    const double dx = p.x - q.x, dy = p.y - q.y;
                    if (dx * dx + dy * dy < d2) return true;
                }
        return false;
    }

private:
    int coord(double v) const {
        int c = static_cast<int>((v - lo_) / cell_);
        return std::clamp(c, 0, dim_ - 1);
    }
    std::size_t cell_of(Vec2 p) const {
        return static_cast<std::size_t>(coord(p.y)) * dim_ + coord(p.x);
    }

    double lo_, cell_;
    int dim_;
    std::vector<std::vector<std::size_t>> cells_;
};

struct RawCloud {
    std::vector<Vec2> interior;
    std::vector<Vec2> boundary;
    std::vector<Vec2> normals;
};

// Boundary nodes equispaced in arclength, interior filled by advancing-front
// Poisson-disk sampling with minimum separation `delta`, growing inward from
// the boundary front.
RawCloud build_at_spacing(const DomainShape& shape, double delta,
                          std::uint64_t seed) {
    RawCloud out;

    // Arclength table for equispaced boundary placement.
    const int table_n = 16384;
    std::vector<double> cum(table_n + 1, 0.0);
    for (int i = 0; i < table_n; ++i) {
        const double t = 2.0 * kPi * (i + 0.5) / table_n;
        const double r = shape.boundary_radius(t);
        const double rp = shape.boundary_radius_deriv(t);
        cum[i + 1] = cum[i] + std::sqrt(r * r + rp * rp) * 2.0 * kPi / table_n;
    }
    const double perim = cum[table_n];
    const int nb = std::max(8, static_cast<int>(std::llround(perim / delta)));
    out.boundary.reserve(nb);
    out.normals.reserve(nb);
    int cell = 0;
    for (int j = 0; j < nb; ++j) {
        const double target = perim * j / nb;
        while (cell < table_n - 1 && cum[cell + 1] < target) ++cell;
        const double seg = cum[cell + 1] - cum[cell];
        const double frac = seg > 0.0 ? (target - cum[cell]) / seg : 0.0;
        const double theta = 2.0 * kPi * (cell + frac) / table_n;
        out.boundary.push_back(shape.boundary_point(theta));
        out.normals.push_back(shape.outward_normal(theta));
    }

    // Advancing-front interior fill seeded by the boundary nodes.
    const double bound = (shape.kind == DomainShape::Kind::Star)
                             ? 1.0 + shape.star_amplitude
                             : 1.0;
    const double margin = 0.45 * delta;
    std::vector<Vec2> points = out.boundary;
    SampleGrid grid(-bound - delta, bound + delta, delta / std::sqrt(2.0));
    for (std::size_t i = 0; i < points.size(); ++i) grid.insert(points[i], i);

    std::vector<std::size_t> active(points.size());
    for (std::size_t i = 0; i < active.size(); ++i) active[i] = i;

    Rng rng(seed);
    const int attempts = 30;
    while (!active.empty()) {
        const std::size_t slot = rng.index(active.size());
        const Vec2 base = points[active[slot]];
        bool placed = false;
        for (int t = 0; t < attempts; ++t) {
            const double rad = delta * (1.0 + rng.uniform());
            const double ang = 2.0 * kPi * rng.uniform();
            const Vec2 cand{base.x + rad * std::cos(ang),
                            base.y + rad * std::sin(ang)};
            if (shape.signed_coordinate(cand) >= 0.0) continue;
            if (shape.boundary_distance(cand) < margin) continue;
            if (grid.has_neighbor_within(cand, delta, points)) continue;
            const std::size_t idx = points.size();
            points.push_back(cand);
            grid.insert(cand, idx);
            active.push_back(idx);
            out.interior.push_back(cand);
            placed = true;
            break;
        }
        if (!placed) {
            active[slot] = active.back();
            active.pop_back();
        }
    }
    return out;
}

double mean_nearest_distance(const std::vector<Vec2>& pts) {
    const KdTree tree(pts);
    double sum = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto nn = tree.nearest(pts[i], 2);
        sum += norm(pts[i] - pts[nn[1]]);
    }
    return sum / static_cast<double>(pts.size());
}

}  // namespace

PointCloud generate_nodes(const DomainShape& shape, int target_n,
                          std::uint64_t seed) {
    if (target_n < 50)
        throw InvalidArgument("generate_nodes: target_n must be >= 50");
    if (shape.kind == DomainShape::Kind::Star &&
        (!(shape.star_amplitude > 0.0) || !(shape.star_amplitude < 1.0) ||
         shape.star_petals < 3))
        throw InvalidArgument("generate_nodes: degenerate star parameters");

    const double area = shape.area();
    const double perim = shape.perimeter();

    // Initial spacing from the empirical Poisson-disk density ~0.7/delta^2,
    // then a few multiplicative corrections toward the target count.
    const double density = 0.70;
    const double z = (-perim + std::sqrt(perim * perim +
                                         4.0 * density * area * target_n)) /
                     (2.0 * density * area);
    double delta = 1.0 / z;

    RawCloud raw;
    std::size_t n = 0;
    for (int iter = 0; iter < 10; ++iter) {
        raw = build_at_spacing(shape, delta, seed);
        n = raw.interior.size() + raw.boundary.size();
        const double ratio = static_cast<double>(n) / target_n;
        if (ratio > 0.94 && ratio < 1.06) break;
        delta *= std::sqrt(ratio);
    }
    if (n < static_cast<std::size_t>(0.9 * target_n) ||
        n > static_cast<std::size_t>(1.1 * target_n))
        throw Error("generate_nodes: spacing calibration failed to reach "
                    "target count");

    PointCloud cloud;
    cloud.shape = shape;
    cloud.interior = std::move(raw.interior);
    cloud.boundary = std::move(raw.boundary);
    cloud.normals = std::move(raw.normals);

    std::vector<Vec2> all = cloud.interior;
    all.insert(all.end(), cloud.boundary.begin(), cloud.boundary.end());
    cloud.spacing = mean_nearest_distance(all);

    make_ghost_points(cloud, 1.0);
    return cloud;
}

void make_ghost_points(PointCloud& cloud, double offset_factor) {
    if (!(offset_factor > 0.0))
        throw InvalidArgument("make_ghost_points: offset_factor must be > 0");
    if (cloud.normals.size() != cloud.boundary.size())
        throw InvalidArgument("make_ghost_points: cloud has no boundary normals");
    if (!(cloud.spacing > 0.0))
        throw InvalidArgument("make_ghost_points: cloud has no spacing estimate");

    cloud.ghost.clear();
    cloud.ghost.reserve(cloud.boundary.size());
    for (std::size_t j = 0; j < cloud.boundary.size(); ++j) {
        double factor = offset_factor;
        Vec2 g = cloud.boundary[j] + factor * cloud.spacing * cloud.normals[j];
        int halvings = 0;
        while (cloud.shape.signed_coordinate(g) <= 0.0 && halvings < 8) {
            factor *= 0.5;
            g = cloud.boundary[j] + factor * cloud.spacing * cloud.normals[j];
            ++halvings;
        }
        if (cloud.shape.signed_coordinate(g) <= 0.0)
            throw Error("make_ghost_points: ghost point for boundary index " +
                        std::to_string(j) + " could not be placed outside");
        cloud.ghost.push_back(g);
    }
}

// ---------------------------------------------------------------------------
// KdTree

KdTree::KdTree(std::vector<Vec2> points) : points_(std::move(points)) {
    if (points_.empty()) return;
    std::vector<std::size_t> idx(points_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    nodes_.reserve(points_.size());
    root_ = build(idx, 0, idx.size(), 0);
}

std::int64_t KdTree::build(std::vector<std::size_t>& idx, std::size_t lo,
                           std::size_t hi, int depth) {
    if (lo >= hi) return -1;
    const int axis = depth % 2;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(idx.begin() + lo, idx.begin() + mid, idx.begin() + hi,
                     [&](std::size_t a, std::size_t b) {
                         const double ca = axis == 0 ? points_[a].x : points_[a].y;
                         const double cb = axis == 0 ? points_[b].x : points_[b].y;
                         if (ca != cb) return ca < cb;
                         return a < b;
                     });
    const std::int64_t self = static_cast<std::int64_t>(nodes_.size());
    nodes_.push_back(Node{idx[mid], axis, -1, -1});
    const std::int64_t left = build(idx, lo, mid, depth + 1);
    const std::int64_t right = build(idx, mid + 1, hi, depth + 1);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
}

void KdTree::search(std::int64_t node, Vec2 query, std::size_t k,
                    std::vector<std::pair<double, std::size_t>>& heap) const {
    if (node < 0) return;
    const Node& nd = nodes_[node];
    const Vec2 p = points_[nd.point];
    const double dx = query.x - p.x, dy = query.y - p.y;
    const double d2 = dx * dx + dy * dy;

    const std::pair<double, std::size_t> cand{d2, nd.point};
    if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end());
    } else if (cand < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end());
    }

    const double axis_delta = nd.axis == 0 ? dx : dy;
    const std::int64_t near = axis_delta <= 0.0 ? nd.left : nd.right;
    const std::int64_t far = axis_delta <= 0.0 ? nd.right : nd.left;
    search(near, query, k, heap);
    // The far side can still hold an equal-distance lower-index point, so
    // prune only on a strict distance excess.
    if (heap.size() < k || axis_delta * axis_delta <= heap.front().first)
        search(far, query, k, heap);
}

std::vector<std::size_t> KdTree::nearest(Vec2 query, std::size_t k) const {
    if (k > points_.size())
        throw InvalidArgument("KdTree::nearest: k exceeds available points");
    std::vector<std::pair<double, std::size_t>> heap;
    heap.reserve(k + 1);
    search(root_, query, k, heap);
    std::sort(heap.begin(), heap.end());
    std::vector<std::size_t> out(heap.size());
    for (std::size_t i = 0; i < heap.size(); ++i) out[i] = heap[i].second;
    return out;
}

std::vector<std::size_t> knn(const PointCloud& cloud, const KdTree& tree,
                             std::size_t center_index, std::size_t k) {
    if (k > tree.size())
        throw InvalidArgument("knn: k exceeds available points");
    auto out = tree.nearest(cloud.point(center_index), k);
    // The center itself is at distance zero; pin it to the front in case an
    // exact duplicate point with a lower index sorted ahead of it.
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i] == center_index) {
            std::rotate(out.begin(), out.begin() + i, out.begin() + i + 1);
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Node file I/O

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_cloud(const PointCloud& cloud, std::ostream& os) {
    os << cloud.dim << ' ' << cloud.n_interior() << ' ' << cloud.n_boundary()
       << ' ' << cloud.n_ghost() << ' ' << fmt_double(cloud.spacing) << '\n';
    for (const Vec2& p : cloud.interior)
        os << fmt_double(p.x) << ' ' << fmt_double(p.y) << " i\n";
    for (std::size_t j = 0; j < cloud.boundary.size(); ++j) {
        const Vec2& p = cloud.boundary[j];
        const Vec2& n = cloud.normals[j];
        os << fmt_double(p.x) << ' ' << fmt_double(p.y) << " b "
           << fmt_double(n.x) << ' ' << fmt_double(n.y) << '\n';
    }
    for (const Vec2& p : cloud.ghost)
        os << fmt_double(p.x) << ' ' << fmt_double(p.y) << " g\n";
}

void write_cloud(const PointCloud& cloud, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("write_cloud: cannot open " + path);
    write_cloud(cloud, os);
    if (!os) throw IoError("write_cloud: write failed for " + path);
}

PointCloud read_cloud(std::istream& is) {
    PointCloud cloud;
    std::size_t ni = 0, nb = 0, ng = 0;
    if (!(is >> cloud.dim >> ni >> nb >> ng >> cloud.spacing))
        throw IoError("read_cloud: malformed header");
    if (cloud.dim != 2) throw IoError("read_cloud: only d=2 supported");
    cloud.interior.reserve(ni);
    cloud.boundary.reserve(nb);
    cloud.normals.reserve(nb);
    cloud.ghost.reserve(ng);
    for (std::size_t i = 0; i < ni + nb + ng; ++i) {
        double x, y;
        std::string flag;
        if (!(is >> x >> y >> flag))
            throw IoError("read_cloud: truncated point list");
        if (flag == "i") {
            cloud.interior.push_back({x, y});
        } else if (flag == "b") {
            double nx, ny;
            if (!(is >> nx >> ny))
                throw IoError("read_cloud: boundary line missing normal");
            cloud.boundary.push_back({x, y});
            cloud.normals.push_back({nx, ny});
        } else if (flag == "g") {
            cloud.ghost.push_back({x, y});
        } else {
            throw IoError("read_cloud: unknown flag '" + flag + "'");
        }
    }
    if (cloud.interior.size() != ni || cloud.boundary.size() != nb ||
        cloud.ghost.size() != ng)
        throw IoError("read_cloud: counts do not match header");
    return cloud;
}

PointCloud read_cloud(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("read_cloud: cannot open " + path);
    return read_cloud(is);
}

}  // namespace dtpinn
