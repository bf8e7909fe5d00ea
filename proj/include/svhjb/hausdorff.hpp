#pragma once

#include <Eigen/Dense>
#include <vector>

#include "svhjb/errors.hpp"

namespace svhjb {

using Vec2 = Eigen::Vector2d;

// Simple planar polygon, vertices in counter-clockwise order.
struct Polygon {
    std::vector<Vec2> v;
};

struct PointCloud {
    std::vector<Eigen::VectorXd> pts;
};

bool is_convex(const Polygon& p, double tol = 1e-12);

Polygon regular_polygon(const Vec2& center, double radius, int n);

// Convex hull (Andrew monotone chain), CCW.
Polygon convex_hull(std::vector<Vec2> pts);

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);

bool point_in_polygon(const Vec2& p, const Polygon& poly);

// Distance to the boundary polyline (no inside test).
double distance_to_polyline(const Vec2& p, const Polygon& poly);

// Signed distance to the region bounded by the polygon: negative inside.
double signed_distance_to_polygon(const Vec2& p, const Polygon& poly);

// Hausdorff distance between the two regions. Exact for convex polygons:
// the distance-to-set function is convex, so the supremum over each region
// sits at a vertex.
double hausdorff_distance(const Polygon& a, const Polygon& b);

// Hausdorff distance between the two boundary curves. Exact for convex
// polygons: along each edge the signed distance to the other set is convex
// in the edge parameter, so |r| is maximized at an endpoint or at the
// interior minimum of r, which ternary search locates.
double boundary_hausdorff(const Polygon& a, const Polygon& b);

// Hausdorff distance between finite point sets.
double hausdorff_distance(const PointCloud& a, const PointCloud& b);

// sup over cloud points of the distance to the polygon region (0 inside).
double cloud_to_polygon_defect(const PointCloud& cloud, const Polygon& poly);

// sup over cloud points of the distance to the polygon boundary.
double cloud_to_polyline_defect(const PointCloud& cloud, const Polygon& poly);

} // namespace svhjb
