#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>
#include <vector>

#include "dtpinn/common.hpp"
#include "dtpinn/geometry.hpp"

using namespace dtpinn;

namespace {

// Brute-force k nearest points, sorted by (distance, index).
std::vector<std::size_t> brute_knn(const std::vector<Vec2>& pts, Vec2 q,
                                   std::size_t k) {
    std::vector<std::pair<double, std::size_t>> d(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i)
        d[i] = {norm(pts[i] - q), i};
    std::sort(d.begin(), d.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < k && i < d.size(); ++i)
        out.push_back(d[i].second);
    return out;
}

}  // namespace

TEST_CASE("unit disk shape basics") {
    auto disk = DomainShape::unit_disk();
    CHECK(disk.boundary_radius(0.3) == doctest::Approx(1.0));
    CHECK(disk.area() == doctest::Approx(std::numbers::pi).epsilon(1e-6));
    CHECK(disk.perimeter() ==
          doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-6));
    const Vec2 p = disk.boundary_point(1.1);
    CHECK(norm(p) == doctest::Approx(1.0));
    const Vec2 n = disk.outward_normal(1.1);
    // Disk normal is radial.
    CHECK(n.x == doctest::Approx(p.x));
    CHECK(n.y == doctest::Approx(p.y));
    CHECK(disk.signed_coordinate({0.5, 0.0}) < 0.0);
    CHECK(disk.signed_coordinate({1.5, 0.0}) > 0.0);
    CHECK(disk.signed_coordinate({std::cos(0.4), std::sin(0.4)}) ==
          doctest::Approx(0.0));
}

TEST_CASE("star shape radius and normals") {
    auto star = DomainShape::star(5, 0.25);
    // r(t) = 1 + 0.25 cos(5t)
    CHECK(star.boundary_radius(0.0) == doctest::Approx(1.25));
    CHECK(star.boundary_radius(std::numbers::pi / 5.0) ==
          doctest::Approx(0.75));
    // Normals are unit and outward: moving along +normal increases the
    // signed coordinate.
    for (double t : {0.0, 0.7, 1.9, 3.3, 5.2}) {
        const Vec2 p = star.boundary_point(t);
        const Vec2 n = star.outward_normal(t);
        CHECK(norm(n) == doctest::Approx(1.0));
        const Vec2 out{p.x + 1e-4 * n.x, p.y + 1e-4 * n.y};
        const Vec2 in{p.x - 1e-4 * n.x, p.y - 1e-4 * n.y};
        CHECK(star.signed_coordinate(out) > 0.0);
        CHECK(star.signed_coordinate(in) < 0.0);
    }
    // Area of r(t) = 1 + a cos(kt): pi (1 + a^2/2).
    CHECK(star.area() ==
          doctest::Approx(std::numbers::pi * (1.0 + 0.25 * 0.25 / 2.0))
              .epsilon(1e-6));
    CHECK_THROWS_AS(DomainShape::star(2, 0.25), InvalidArgument);
    CHECK_THROWS_AS(DomainShape::star(5, 1.5), InvalidArgument);
}

TEST_CASE("star perimeter oracle via dense polyline") {
    auto star = DomainShape::star(5, 0.25);
    const int n = 200000;
    double len = 0.0;
    Vec2 prev = star.boundary_point(0.0);
    for (int i = 1; i <= n; ++i) {
        const double t = 2.0 * std::numbers::pi * i / n;
        const Vec2 p = star.boundary_point(t);
        len += norm(p - prev);
        prev = p;
    }
    CHECK(star.perimeter() == doctest::Approx(len).epsilon(1e-5));
}

TEST_CASE("node generation hits target and keeps separation") {
    for (unsigned seed : {0u, 1u}) {
        PointCloud cloud = generate_nodes(DomainShape::unit_disk(), 400, seed);
        const double n_total =
            static_cast<double>(cloud.n_interior() + cloud.n_boundary());
        CHECK(n_total >= 0.9 * 400);
        CHECK(n_total <= 1.1 * 400);
        CHECK(cloud.n_ghost() == cloud.n_boundary());
        CHECK(cloud.spacing > 0.0);

        for (const Vec2& p : cloud.interior)
            CHECK(cloud.shape.signed_coordinate(p) < 0.0);
        for (const Vec2& p : cloud.boundary)
            CHECK(std::abs(cloud.shape.signed_coordinate(p)) < 1e-9);
        for (const Vec2& g : cloud.ghost)
            CHECK(cloud.shape.signed_coordinate(g) > 0.0);

        // Minimum pairwise separation among interior+boundary nodes stays a
        // healthy fraction of the mean spacing.
        std::vector<Vec2> pts = cloud.interior;
        pts.insert(pts.end(), cloud.boundary.begin(), cloud.boundary.end());
        double min_d = 1e300;
        for (std::size_t i = 0; i < pts.size(); ++i)
            for (std::size_t j = i + 1; j < pts.size(); ++j)
                min_d = std::min(min_d, norm(pts[i] - pts[j]));
        CHECK(min_d > 0.3 * cloud.spacing);
    }
}

TEST_CASE("same seed reproduces the cloud bit for bit") {
    PointCloud a = generate_nodes(DomainShape::unit_disk(), 300, 5);
    PointCloud b = generate_nodes(DomainShape::unit_disk(), 300, 5);
    REQUIRE(a.interior.size() == b.interior.size());
    for (std::size_t i = 0; i < a.interior.size(); ++i) {
        CHECK(a.interior[i].x == b.interior[i].x);
        CHECK(a.interior[i].y == b.interior[i].y);
    }
    CHECK(a.spacing == b.spacing);
    PointCloud c = generate_nodes(DomainShape::unit_disk(), 300, 6);
    CHECK(a.interior.size() + a.boundary.size() > 0);
    bool differs = a.interior.size() != c.interior.size();
    if (!differs)
        for (std::size_t i = 0; i < a.interior.size(); ++i)
            if (a.interior[i].x != c.interior[i].x) differs = true;
    CHECK(differs);
}

TEST_CASE("ghost nodes sit along outward normals") {
    PointCloud cloud = generate_nodes(DomainShape::unit_disk(), 300, 2);
    REQUIRE(cloud.ghost.size() == cloud.boundary.size());
    for (std::size_t j = 0; j < cloud.boundary.size(); ++j) {
        const Vec2 d = cloud.ghost[j] - cloud.boundary[j];
        const double len = norm(d);
        CHECK(len > 0.0);
        CHECK(len <= cloud.spacing * (1.0 + 1e-12));
        const double along = dot(d, cloud.normals[j]);
        CHECK(along == doctest::Approx(len).epsilon(1e-9));
    }
}

TEST_CASE("star cloud generation respects the boundary") {
    PointCloud cloud = generate_nodes(DomainShape::star(5, 0.25), 500, 3);
    const double n_total =
        static_cast<double>(cloud.n_interior() + cloud.n_boundary());
    CHECK(n_total >= 0.9 * 500);
    CHECK(n_total <= 1.1 * 500);
    for (const Vec2& p : cloud.interior)
        CHECK(cloud.shape.signed_coordinate(p) < 0.0);
    for (const Vec2& g : cloud.ghost)
        CHECK(cloud.shape.signed_coordinate(g) > 0.0);
}

TEST_CASE("spacing matches mean nearest-neighbor distance") {
    PointCloud cloud = generate_nodes(DomainShape::unit_disk(), 350, 8);
    std::vector<Vec2> pts = cloud.interior;
    pts.insert(pts.end(), cloud.boundary.begin(), cloud.boundary.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double best = 1e300;
        for (std::size_t j = 0; j < pts.size(); ++j)
            if (j != i) best = std::min(best, norm(pts[i] - pts[j]));
        acc += best;
    }
    CHECK(cloud.spacing ==
          doctest::Approx(acc / static_cast<double>(pts.size())));
}

TEST_CASE("kd-tree agrees with brute force") {
    Rng rng(11);
    std::vector<Vec2> pts;
    for (int i = 0; i < 500; ++i)
        pts.push_back({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
    KdTree tree(pts);
    for (int q = 0; q < 50; ++q) {
        const Vec2 query{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        for (std::size_t k : {1u, 5u, 23u}) {
            auto got = tree.nearest(query, k);
            auto want = brute_knn(pts, query, k);
            CHECK(got == want);
        }
    }
}

TEST_CASE("kd-tree handles duplicate points with index ties") {
    std::vector<Vec2> pts{{0.0, 0.0}, {1.0, 1.0}, {0.0, 0.0}, {2.0, 2.0}};
    KdTree tree(pts);
    auto got = tree.nearest({0.0, 0.0}, 3);
    CHECK(got == std::vector<std::size_t>{0, 2, 1});
}

TEST_CASE("knn puts the center first") {
    PointCloud cloud = generate_nodes(DomainShape::unit_disk(), 300, 4);
    KdTree tree(cloud.extended_points());
    for (std::size_t c : {std::size_t{0}, cloud.n_interior() + 2}) {
        auto idx = knn(cloud, tree, c, 21);
        REQUIRE(idx.size() == 21);
        CHECK(idx[0] == c);
        // All others are valid and unique.
        std::vector<std::size_t> rest(idx.begin() + 1, idx.end());
        std::sort(rest.begin(), rest.end());
        CHECK(std::adjacent_find(rest.begin(), rest.end()) == rest.end());
    }
}

TEST_CASE("cloud file roundtrip preserves every digit") {
    PointCloud cloud = generate_nodes(DomainShape::unit_disk(), 300, 12);
    const std::string path = (std::filesystem::temp_directory_path() /
                              "dtpinn_test_cloud.txt").string();
    write_cloud(cloud, path);
    PointCloud back = read_cloud(path);
    REQUIRE(back.n_interior() == cloud.n_interior());
    REQUIRE(back.n_boundary() == cloud.n_boundary());
    REQUIRE(back.n_ghost() == cloud.n_ghost());
    CHECK(back.spacing == cloud.spacing);
    for (std::size_t i = 0; i < cloud.interior.size(); ++i) {
        CHECK(back.interior[i].x == cloud.interior[i].x);
        CHECK(back.interior[i].y == cloud.interior[i].y);
    }
    for (std::size_t i = 0; i < cloud.boundary.size(); ++i) {
        CHECK(back.boundary[i].x == cloud.boundary[i].x);
        CHECK(back.normals[i].x == cloud.normals[i].x);
        CHECK(back.normals[i].y == cloud.normals[i].y);
    }
    for (std::size_t i = 0; i < cloud.ghost.size(); ++i) {
        CHECK(back.ghost[i].x == cloud.ghost[i].x);
        CHECK(back.ghost[i].y == cloud.ghost[i].y);
    }
    std::filesystem::remove(path);
}

TEST_CASE("cloud reader rejects malformed input") {
    std::istringstream bad_header("2 banana 3 3 0.1\n");
    CHECK_THROWS_AS(read_cloud(bad_header), IoError);
    std::istringstream bad_flag("2 1 0 0 0.1\n0 0 9\n");
    CHECK_THROWS_AS(read_cloud(bad_flag), IoError);
    std::istringstream truncated("2 2 0 0 0.1\n0 0 0\n");
    CHECK_THROWS_AS(read_cloud(truncated), IoError);
}

TEST_CASE("generation fails loudly when the target is unreachable") {
    CHECK_THROWS_AS(generate_nodes(DomainShape::unit_disk(), 10, 0),
                    InvalidArgument);
}
