#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "svhjb/hausdorff.hpp"
#include "svhjb/rng.hpp"

using namespace svhjb;

TEST_CASE("identical polygons have distance zero") {
    const Polygon p = regular_polygon(Vec2(0.2, -0.1), 1.3, 17);
    CHECK(hausdorff_distance(p, p) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(boundary_hausdorff(p, p) < 1e-12);
}

TEST_CASE("unit disk vs radius-2 disk as 720-gons") {
    const Polygon a = regular_polygon(Vec2(0, 0), 1.0, 720);
    const Polygon b = regular_polygon(Vec2(0, 0), 2.0, 720);
    const double d_sets = hausdorff_distance(a, b);
    const double d_bounds = boundary_hausdorff(a, b);
    CHECK(d_sets == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(d_bounds == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(std::abs(d_sets - d_bounds) < 1e-9);
}

TEST_CASE("signed distance to a polygon") {
    const Polygon sq = convex_hull({{Vec2(0, 0), Vec2(2, 0), Vec2(2, 2), Vec2(0, 2)}});
    CHECK(signed_distance_to_polygon(Vec2(1, 1), sq) == doctest::Approx(-1.0));
    CHECK(signed_distance_to_polygon(Vec2(3, 1), sq) == doctest::Approx(1.0));
    CHECK(signed_distance_to_polygon(Vec2(3, 3), sq) == doctest::Approx(std::sqrt(2.0)));
    CHECK(is_convex(sq));
}

TEST_CASE("boundary identity on random convex pairs") {
    NormalStream rng(99, 0);
    auto random_convex = [&](double scale, double cx, double cy) {
        std::vector<Vec2> pts;
        for (int k = 0; k < 24; ++k)
            pts.emplace_back(cx + scale * rng.next(), cy + scale * rng.next());
        return convex_hull(pts);
    };
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
        const Polygon a = random_convex(1.0, 0.0, 0.0);
        const Polygon b = random_convex(0.7, 0.4 * rng.next(), 0.4 * rng.next());
        worst = std::max(worst, std::abs(hausdorff_distance(a, b) - boundary_hausdorff(a, b)));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("nonconvex counterexample violates the boundary identity") {
    // pac-man: unit disk minus the sector |theta| < eps
    const double eps = 0.3;
    Polygon pac;
    pac.v.emplace_back(0.0, 0.0);
    const int arc = 512;
    for (int k = 0; k <= arc; ++k) {
        const double th = eps + (2.0 * M_PI - 2.0 * eps) * k / arc;
        pac.v.emplace_back(std::cos(th), std::sin(th));
    }
    CHECK_FALSE(is_convex(pac));
    const Polygon disk = regular_polygon(Vec2(0, 0), 1.0, 512);

    // set distance stays small; boundary distance jumps to ~1
    PointCloud pac_boundary;
    for (const Vec2& v : pac.v) pac_boundary.pts.push_back(Eigen::VectorXd(v));
    const double d_bounds = cloud_to_polyline_defect(pac_boundary, disk);
    CHECK(d_bounds > 0.5);

    PointCloud sector;
    for (int i = 0; i <= 40; ++i)
        for (int j = 0; j <= 20; ++j) {
            const double r = i / 40.0;
            const double th = -eps + 2.0 * eps * j / 20.0;
            sector.pts.push_back(Eigen::Vector2d(r * std::cos(th), r * std::sin(th)));
        }
    const double d_sets = cloud_to_polygon_defect(sector, pac);
    CHECK(d_sets < std::sin(eps) + 1e-6);
    CHECK(d_sets < d_bounds - 0.4);
}

TEST_CASE("cloud Hausdorff basics") {
    PointCloud a, b;
    a.pts.push_back(Eigen::Vector2d(0, 0));
    a.pts.push_back(Eigen::Vector2d(1, 0));
    b.pts.push_back(Eigen::Vector2d(0, 0));
    CHECK(hausdorff_distance(a, b) == doctest::Approx(1.0));
    CHECK(hausdorff_distance(a, a) == doctest::Approx(0.0));
    PointCloud empty;
    CHECK_THROWS_AS(hausdorff_distance(a, empty), EmptySet);
}
