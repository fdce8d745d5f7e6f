#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "polygon2.hpp"

namespace mahler {

// Centrally symmetric convex polygon, vertices counterclockwise.
struct Polygon2 {
    std::vector<Vec2> vertices;

    double area() const { return signed_area(vertices); }

    double gauge(const Vec2& x) const
    {
        double g = 0.0;
        const std::size_t n = vertices.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2& a = vertices[i];
            const Vec2& b = vertices[(i + 1) % n];
            const double det = cross2(a, b);
            const Vec2 normal((b.y() - a.y()) / det, (a.x() - b.x()) / det);
            g = std::max(g, normal.dot(x));
        }
        return g;
    }

    double radial(const Vec2& u) const { return 1.0 / gauge(u); }
};

inline Polygon2 make_polygon2(const std::vector<Vec2>& points)
{
    if (points.size() < 4)
        throw Error(ErrorKind::DegenerateBody, "a symmetric polygon needs at least four vertices");
    double scale = 0.0;
    for (const auto& p : points)
        scale = std::max(scale, p.norm());
    const double tol = 1e-12 * std::max(scale, 1.0);
    for (const auto& p : points) {
        const bool paired = std::any_of(points.begin(), points.end(),
                                        [&](const Vec2& q) { return (p + q).norm() <= tol; });
        if (!paired)
            throw Error(ErrorKind::NotSymmetric, "vertex without an antipode");
    }
    Polygon2 out{convex_hull2(points)};
    if (out.vertices.size() < 4 || out.area() <= 1e-12 * scale * scale)
        throw Error(ErrorKind::DegenerateBody, "polygon has no interior");
    const std::size_t n = out.vertices.size();
    for (std::size_t i = 0; i < n; ++i)
        if (cross2(out.vertices[i], out.vertices[(i + 1) % n]) <= tol * scale)
            throw Error(ErrorKind::OriginNotInterior, "origin on an edge line");
    return out;
}

inline Polygon2 polar2(const Polygon2& p) { return Polygon2{polar_polygon(p.vertices)}; }

inline Polygon2 transform2(const Polygon2& p, const Mat2& m)
{
    std::vector<Vec2> v;
    v.reserve(p.vertices.size());
    for (const auto& x : p.vertices)
        v.push_back(m * x);
    if (m.determinant() < 0)
        std::reverse(v.begin(), v.end());
    return Polygon2{std::move(v)};
}

// |K_1|, |K_2| for the closed first and second quadrants.
inline std::array<double, 2> quadrant_areas(const Polygon2& p)
{
    return {wedge_area(p.vertices, Vec2(1, 0), Vec2(0, 1)), wedge_area(p.vertices, Vec2(0, 1), Vec2(-1, 0))};
}

struct Normalized2 {
    Mat2 map;
    Polygon2 polygon;
};

// Rotation balancing the first two quadrants, then the diagonal scaling that
// puts (1,0) and (0,1) on the boundary.
inline Normalized2 normalize2(const Polygon2& p)
{
    auto rot = [](double w) {
        Mat2 r;
        r << std::cos(w), -std::sin(w), std::sin(w), std::cos(w);
        return r;
    };
    auto diff = [&](double w) {
        const auto q = quadrant_areas(transform2(p, rot(w)));
        return q[0] - q[1];
    };
    double lo = 0.0, hi = kPi / 2;
    double flo = diff(lo);
    double w = 0.0;
    if (flo != 0.0) {
        // rotating by pi/2 swaps the two quadrants, so the sign flips across [0, pi/2]
        for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double fm = diff(mid);
            if (fm == 0.0) {
                lo = hi = mid;
                break;
            }
            if ((fm > 0) == (flo > 0)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        w = std::abs(diff(lo)) <= std::abs(diff(hi)) ? lo : hi;
    }
    const Polygon2 r = transform2(p, rot(w));
    Mat2 d = Mat2::Zero();
    d(0, 0) = 1.0 / r.radial(Vec2(1, 0));
    d(1, 1) = 1.0 / r.radial(Vec2(0, 1));
    const Mat2 m = d * rot(w);
    return {m, transform2(p, m)};
}

inline Vec2 dual_vertex2(const Vec2& p, const Vec2& q)
{
    const double det = cross2(p, q);
    if (std::abs(det) <= 1e-12 * p.norm() * q.norm())
        throw Error(ErrorKind::CollinearPoints, "points are linearly dependent");
    return Vec2(q.y() - p.y(), p.x() - q.x()) / det;
}

struct Report2 {
    double area = 0, polar_area = 0, product = 0;
    bool diamond = false; // (1,1) or (-1,1) in the polar: the body is the unit diamond
    double b = 0, c = 0;
    double polar_piece1 = 0, polar_piece2 = 0;
    Vec2 s1 = Vec2::Zero(), s2 = Vec2::Zero(), r1 = Vec2::Zero(), r2 = Vec2::Zero();
    double pairing1 = 0, pairing2 = 0;
    double gauge_s1 = 0, gauge_s2 = 0, gauge_r1 = 0, gauge_r2 = 0;
    bool bound_holds = false;
};

inline Report2 verify2(const Polygon2& p)
{
    const double a = p.area();
    const auto q = quadrant_areas(p);
    if (std::abs(q[0] - q[1]) > 1e-9 * a || std::abs(p.radial(Vec2(1, 0)) - 1.0) > 1e-9 ||
        std::abs(p.radial(Vec2(0, 1)) - 1.0) > 1e-9)
        throw Error(ErrorKind::NotNormalized, "polygon is not balanced with (1,0), (0,1) on its boundary");

    const Polygon2 pp = polar2(p);
    Report2 r;
    r.area = a;
    r.polar_area = pp.area();
    r.product = r.area * r.polar_area;
    r.diamond = pp.gauge(Vec2(1, 1)) <= 1.0 + 1e-12 || pp.gauge(Vec2(-1, 1)) <= 1.0 + 1e-12;
    r.bound_holds = r.product >= 8.0 - 1e-9;
    if (r.diamond)
        return r;

    // B° maximises u, C° maximises v; ties go to the larger other coordinate
    Vec2 bp = pp.vertices.front(), cp = pp.vertices.front();
    for (const auto& v : pp.vertices) {
        if (v.x() > bp.x() + 1e-12 || (std::abs(v.x() - bp.x()) <= 1e-12 && v.y() > bp.y()))
            bp = v;
        if (v.y() > cp.y() + 1e-12 || (std::abs(v.y() - cp.y()) <= 1e-12 && v.x() > cp.x()))
            cp = v;
    }
    r.b = bp.y();
    r.c = cp.x();
    // K°_1: v >= b u and u >= c v; K°_2: v >= b u and c v >= u
    auto piece1 = clip_halfplane(pp.vertices, Vec2(-r.b, 1), 0.0);
    piece1 = clip_halfplane(piece1, Vec2(1, -r.c), 0.0);
    auto piece2 = clip_halfplane(pp.vertices, Vec2(-r.b, 1), 0.0);
    piece2 = clip_halfplane(piece2, Vec2(-1, r.c), 0.0);
    r.polar_piece1 = signed_area(piece1);
    r.polar_piece2 = signed_area(piece2);

    r.s1 = Vec2(1 - r.b, 1 - r.c) / (2 * r.polar_piece1);
    r.s2 = Vec2(-1 - r.b, 1 + r.c) / (2 * r.polar_piece2);
    r.r1 = Vec2(1, 1) / (2 * q[0]);
    r.r2 = Vec2(-1, 1) / (2 * q[1]);
    r.pairing1 = r.r1.dot(r.s1);
    r.pairing2 = r.r2.dot(r.s2);
    r.gauge_s1 = p.gauge(r.s1);
    r.gauge_s2 = p.gauge(r.s2);
    r.gauge_r1 = pp.gauge(r.r1);
    r.gauge_r2 = pp.gauge(r.r2);
    r.bound_holds = r.bound_holds && r.pairing1 <= 1 + 1e-12 && r.pairing2 <= 1 + 1e-12;
    return r;
}

struct EqualityPair2 {
    Polygon2 body;
    Polygon2 polar;
};

// The squares attaining the planar bound among balanced, axis-normalised bodies.
inline EqualityPair2 equality_family(double a)
{
    if (!(a > -1.0 && a <= 1.0))
        throw Error(ErrorKind::BadParameter, "parameter must lie in (-1, 1]");
    const double s = 1.0 / (1.0 + a * a);
    const Vec2 p(s * (1 - a), s * (1 + a)), q(s * (-1 - a), s * (1 - a));
    const Vec2 u(1, a), v(-a, 1);
    return {make_polygon2({p, q, -p, -q}), make_polygon2({u, v, -u, -v})};
}

} // namespace mahler
