#ifndef DTPINN_GEOMETRY_HPP
#define DTPINN_GEOMETRY_HPP

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "dtpinn/common.hpp"

namespace dtpinn {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }

// Closed 2D domain bounded by r(theta). The unit disk has r = 1; the star
// domain has r(theta) = 1 + a*cos(k*theta).
struct DomainShape {
    enum class Kind { UnitDisk, Star };

    Kind kind = Kind::UnitDisk;
    int star_petals = 5;
    double star_amplitude = 0.25;

    static DomainShape unit_disk() { return {}; }
    static DomainShape star(int petals = 5, double amplitude = 0.25);

    double boundary_radius(double theta) const;
    double boundary_radius_deriv(double theta) const;

    // Point on the boundary curve and the unit outward normal there.
    Vec2 boundary_point(double theta) const;
    Vec2 outward_normal(double theta) const;

    // Radial signed coordinate rho - r(theta): negative inside, zero on the
    // boundary, positive outside.
    double signed_coordinate(Vec2 p) const;

    // Approximate Euclidean distance from an interior point to the boundary
    // (exact for the disk).
    double boundary_distance(Vec2 p) const;

    double area() const;
    double perimeter() const;
};

// Collocation set partitioned as [interior | boundary | ghost] in a fixed
// global index order. N = n_interior + n_boundary; the extended set adds one
// ghost per boundary point.
struct PointCloud {
    int dim = 2;
    std::vector<Vec2> interior;
    std::vector<Vec2> boundary;
    std::vector<Vec2> normals;  // unit outward, one per boundary point
    std::vector<Vec2> ghost;
    double spacing = 0.0;  // mean nearest-neighbor distance over interior+boundary
    DomainShape shape;

    std::size_t n_interior() const { return interior.size(); }
    std::size_t n_boundary() const { return boundary.size(); }
    std::size_t n_ghost() const { return ghost.size(); }
    std::size_t n_collocation() const { return interior.size() + boundary.size(); }
    std::size_t n_extended() const {
        return interior.size() + boundary.size() + ghost.size();
    }

    // Point by global index over [interior | boundary | ghost].
    Vec2 point(std::size_t global_index) const;

    // All extended-set points in global index order.
    std::vector<Vec2> extended_points() const;
};

// Quasi-uniform node generation: boundary nodes equispaced in arclength,
// interior filled by advancing-front Poisson-disk sampling seeded from the
// boundary. Deterministic for a fixed seed. The spacing is calibrated so the
// interior+boundary count lands within a few percent of target_n.
PointCloud generate_nodes(const DomainShape& shape, int target_n,
                          std::uint64_t seed);

// Places one ghost point per boundary point at offset_factor * spacing along
// the outward normal, halving the offset where that would land inside the
// domain (possible in concave star regions).
void make_ghost_points(PointCloud& cloud, double offset_factor = 1.0);

// Static 2D kd-tree over an immutable point list.
class KdTree {
public:
    KdTree() = default;
    explicit KdTree(std::vector<Vec2> points);

    // Indices of the k nearest points to `query`, sorted by distance
    // ascending, ties broken by lower index.
    std::vector<std::size_t> nearest(Vec2 query, std::size_t k) const;

    std::size_t size() const { return points_.size(); }

private:
    struct Node {
        std::size_t point = 0;
        int axis = 0;
        std::int64_t left = -1;
        std::int64_t right = -1;
    };

    std::int64_t build(std::vector<std::size_t>& idx, std::size_t lo,
                       std::size_t hi, int depth);
    void search(std::int64_t node, Vec2 query, std::size_t k,
                std::vector<std::pair<double, std::size_t>>& heap) const;

    std::vector<Vec2> points_;
    std::vector<Node> nodes_;
    std::int64_t root_ = -1;
};

// k nearest neighbors of the point at `center_index` over the extended set,
// center first.
std::vector<std::size_t> knn(const PointCloud& cloud, const KdTree& tree,
                             std::size_t center_index, std::size_t k);

// Text node file: header "d N_i N_b N_g h", then one "x y flag [nx ny]" line
// per point in global order. Round-trips doubles exactly.
void write_cloud(const PointCloud& cloud, std::ostream& os);
void write_cloud(const PointCloud& cloud, const std::string& path);
PointCloud read_cloud(std::istream& is);
PointCloud read_cloud(const std::string& path);

}  // namespace dtpinn

#endif
