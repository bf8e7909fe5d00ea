#include "svhjb/hausdorff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace svhjb {

namespace {

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

void require_nonempty(const Polygon& p) {
    if (p.v.size() < 3) throw EmptySet("polygon needs at least 3 vertices");
}

} // namespace

bool is_convex(const Polygon& p, double tol) {
    const int n = static_cast<int>(p.v.size());
    if (n < 3) return false;
    for (int i = 0; i < n; ++i) {
        const Vec2 e1 = p.v[(i + 1) % n] - p.v[i];
        const Vec2 e2 = p.v[(i + 2) % n] - p.v[(i + 1) % n];
        if (cross2(e1, e2) < -tol) return false;
    }
    return true;
}

Polygon regular_polygon(const Vec2& center, double radius, int n) {
    Polygon p;
    p.v.reserve(n);
    for (int k = 0; k < n; ++k) {
        const double th = 2.0 * M_PI * k / n;
        p.v.emplace_back(center.x() + radius * std::cos(th), center.y() + radius * std::sin(th));
    }
    return p;
}

Polygon convex_hull(std::vector<Vec2> pts) {
    std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Vec2& a, const Vec2& b) { return a == b; }),
              pts.end());
    const int n = static_cast<int>(pts.size());
    if (n < 3) throw EmptySet("hull needs at least 3 distinct points");
    std::vector<Vec2> hull(2 * n);
    int k = 0;
    for (int i = 0; i < n; ++i) {
        while (k >= 2 && cross2(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) --k;
        hull[k++] = pts[i];
    }
    const int lower = k + 1;
    for (int i = n - 2; i >= 0; --i) {
        while (k >= lower && cross2(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    Polygon out;
    out.v = std::move(hull);
    return out;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 == 0.0) return (p - a).norm();
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

bool point_in_polygon(const Vec2& p, const Polygon& poly) {
    // Crossing number; works for any simple polygon.
    const int n = static_cast<int>(poly.v.size());
    bool inside = false;
    for (int i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = poly.v[j];
        const Vec2& b = poly.v[i];
        if ((b.y() > p.y()) != (a.y() > p.y())) {
            const double xcross = b.x() + (p.y() - b.y()) * (a.x() - b.x()) / (a.y() - b.y());
            if (p.x() < xcross) inside = !inside;
        }
    }
    return inside;
}

double distance_to_polyline(const Vec2& p, const Polygon& poly) {
    require_nonempty(poly);
    const int n = static_cast<int>(poly.v.size());
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
        best = std::min(best, point_segment_distance(p, poly.v[i], poly.v[(i + 1) % n]));
    return best;
}

double signed_distance_to_polygon(const Vec2& p, const Polygon& poly) {
    const double d = distance_to_polyline(p, poly);
    return point_in_polygon(p, poly) ? -d : d;
}

double hausdorff_distance(const Polygon& a, const Polygon& b) {
    require_nonempty(a);
    require_nonempty(b);
    auto one_sided = [](const Polygon& from, const Polygon& to) {
        double best = 0.0;
        for (const Vec2& v : from.v)
            best = std::max(best, std::max(signed_distance_to_polygon(v, to), 0.0));
        return best;
    };
    return std::max(one_sided(a, b), one_sided(b, a));
}

namespace {

// max over one edge of |signed distance to the other polygon|. The signed
// distance of a convex region is convex along the edge, so the candidates
// are the endpoints and the interior minimum.
double edge_max_abs_r(const Vec2& a, const Vec2& b, const Polygon& other) {
    auto g = [&](double t) { return signed_distance_to_polygon(a + t * (b - a), other); };
    const double g0 = g(0.0), g1 = g(1.0);
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 80; ++it) {
        const double m1 = lo + (hi - lo) / 3.0;
        const double m2 = hi - (hi - lo) / 3.0;
        if (g(m1) < g(m2)) hi = m2; else lo = m1;
    }
    const double gmin = g(0.5 * (lo + hi));
    double best = std::max(std::abs(g0), std::abs(g1));
    if (gmin < 0.0) best = std::max(best, -gmin);
    return best;
}

} // namespace

double boundary_hausdorff(const Polygon& a, const Polygon& b) {
    require_nonempty(a);
    require_nonempty(b);
    auto one_sided = [](const Polygon& from, const Polygon& to) {
        const int n = static_cast<int>(from.v.size());
        double best = 0.0;
        for (int i = 0; i < n; ++i)
            best = std::max(best, edge_max_abs_r(from.v[i], from.v[(i + 1) % n], to));
        return best;
    };
    return std::max(one_sided(a, b), one_sided(b, a));
}

double hausdorff_distance(const PointCloud& a, const PointCloud& b) {
    if (a.pts.empty() || b.pts.empty()) throw EmptySet("hausdorff of an empty cloud");
    auto one_sided = [](const PointCloud& from, const PointCloud& to) {
        double worst = 0.0;
        for (const auto& p : from.pts) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : to.pts) {
                best = std::min(best, (p - q).norm());
                if (best <= worst) break; // cannot raise the supremum
            }
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(one_sided(a, b), one_sided(b, a));
}

double cloud_to_polygon_defect(const PointCloud& cloud, const Polygon& poly) {
    if (cloud.pts.empty()) throw EmptySet("empty cloud");
    double worst = 0.0;
    for (const auto& p : cloud.pts) {
        const Vec2 q(p(0), p(1));
        worst = std::max(worst, std::max(signed_distance_to_polygon(q, poly), 0.0));
    }
    return worst;
}

double cloud_to_polyline_defect(const PointCloud& cloud, const Polygon& poly) {
    if (cloud.pts.empty()) throw EmptySet("empty cloud");
    double worst = 0.0;
    for (const auto& p : cloud.pts)
        worst = std::max(worst, distance_to_polyline(Vec2(p(0), p(1)), poly));
    return worst;
}

} // namespace svhjb
