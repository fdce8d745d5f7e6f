#pragma once

#include <algorithm>
#include <vector>

#include "linalg.hpp"

namespace mahler {

inline double signed_area(const std::vector<Vec2>& p)
{
    double s = 0.0;
    const std::size_t n = p.size();
    for (std::size_t i = 0; i < n; ++i)
        s += cross2(p[i], p[(i + 1) % n]);
    return 0.5 * s;
}

// Keeps the part with n.x >= c (Sutherland-Hodgman, one edge).
inline std::vector<Vec2> clip_halfplane(const std::vector<Vec2>& poly, const Vec2& n, double c)
{
    std::vector<Vec2> out;
    const std::size_t m = poly.size();
    if (m == 0)
        return out;
    out.reserve(m + 2);
    for (std::size_t i = 0; i < m; ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % m];
        const double fp = n.dot(p) - c, fq = n.dot(q) - c;
        if (fp >= 0)
            out.push_back(p);
        if ((fp >= 0) != (fq >= 0)) {
            const double t = fp / (fp - fq);
            out.push_back(p + t * (q - p));
        }
    }
    return out;
}

// Area of the part of a convex polygon inside the cone spanned by u and w
// (counterclockwise from u, opening below pi).
inline double wedge_area(const std::vector<Vec2>& poly, const Vec2& u, const Vec2& w)
{
    auto cut = clip_halfplane(poly, Vec2(-u.y(), u.x()), 0.0);
    cut = clip_halfplane(cut, Vec2(w.y(), -w.x()), 0.0);
    return cut.size() < 3 ? 0.0 : signed_area(cut);
}

// Andrew's monotone chain. Counterclockwise, collinear points dropped.
inline std::vector<Vec2> convex_hull2(std::vector<Vec2> pts, double tol = 1e-14)
{
    std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3)
        return pts;
    double scale = 0.0;
    for (const auto& p : pts)
        scale = std::max(scale, p.norm());
    const double eps = tol * scale * scale;
    std::vector<Vec2> h(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross2(h[k - 1] - h[k - 2], pts[i] - h[k - 2]) <= eps)
            --k;
        h[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross2(h[k - 1] - h[k - 2], pts[i] - h[k - 2]) <= eps)
            --k;
        h[k++] = pts[i];
    }
    h.resize(k - 1);
    return h;
}

// Polar of a convex CCW polygon with the origin inside: one dual vertex
// per edge, again counterclockwise.
inline std::vector<Vec2> polar_polygon(const std::vector<Vec2>& p)
{
    std::vector<Vec2> out;
    const std::size_t n = p.size();
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = p[i];
        const Vec2& b = p[(i + 1) % n];
        const double det = cross2(a, b);
        out.emplace_back((b.y() - a.y()) / det, (a.x() - b.x()) / det);
    }
    return out;
}

} // namespace mahler
