#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"

namespace mahler {

// Facet {x : normal.x = 1}; vertex indices counterclockwise seen from outside.
struct Facet {
    Vec3 normal;
    std::vector<int> verts;
};

// Facet sequence met by x(t) = (1-t)u + t w, t in [0,1].
// top[k] holds the facets maximal on (t[k], t[k+1]); active[k] those maximal at t[k].
struct SegmentTrace {
    std::vector<double> t;
    std::vector<std::vector<int>> top;
    std::vector<std::vector<int>> active;
    std::vector<double> level; // gauge of x(t[k])
};

inline std::vector<Vec3> clip_halfspace(const std::vector<Vec3>& poly, const Vec3& n)
{
    std::vector<Vec3> out;
    const std::size_t m = poly.size();
    out.reserve(m + 2);
    for (std::size_t i = 0; i < m; ++i) {
        const Vec3& p = poly[i];
        const Vec3& q = poly[(i + 1) % m];
        const double fp = n.dot(p), fq = n.dot(q);
        if (fp >= 0)
            out.push_back(p);
        if ((fp >= 0) != (fq >= 0))
            out.push_back(p + (fp / (fp - fq)) * (q - p));
    }
    return out;
}

// Volume of the cone from the origin over a planar polygon.
inline double fan_volume(const std::vector<Vec3>& poly)
{
    double v = 0.0;
    for (std::size_t i = 1; i + 1 < poly.size(); ++i)
        v += poly[0].dot(poly[i].cross(poly[i + 1]));
    return v / 6.0;
}

// Convex polytope with the origin in its interior, stored both ways.
class Polytope {
public:
    Polytope() = default;

    // Convex hull. Throws DegenerateBody for flat input and OriginNotInterior
    // when some supporting plane passes through the origin.
    static Polytope hull(const std::vector<Vec3>& input);

    const std::vector<Vec3>& vertices() const { return verts_; }
    const std::vector<Facet>& facets() const { return facets_; }

    double gauge(const Vec3& x) const
    {
        double m = -1e300;
        for (const auto& f : facets_)
            m = std::max(m, f.normal.dot(x));
        return m;
    }

    double support(const Vec3& u) const
    {
        double m = -1e300;
        for (const auto& v : verts_)
            m = std::max(m, v.dot(u));
        return m;
    }

    // Lowest-index facet attaining the gauge within rel_tol.
    int top_facet(const Vec3& x, double rel_tol = 1e-12) const
    {
        const double g = gauge(x);
        const double tol = rel_tol * std::max(std::abs(g), 1e-300);
        for (std::size_t i = 0; i < facets_.size(); ++i)
            if (facets_[i].normal.dot(x) >= g - tol)
                return static_cast<int>(i);
        return 0;
    }

    int top_vertex(const Vec3& u) const
    {
        const double h = support(u);
        const double tol = 1e-12 * std::max(std::abs(h), 1e-300);
        for (std::size_t i = 0; i < verts_.size(); ++i)
            if (verts_[i].dot(u) >= h - tol)
                return static_cast<int>(i);
        return 0;
    }

    std::vector<int> active_facets(const Vec3& x, double rel_tol = 1e-10) const
    {
        const double g = gauge(x);
        std::vector<int> out;
        for (std::size_t i = 0; i < facets_.size(); ++i)
            if (facets_[i].normal.dot(x) >= g - rel_tol * std::abs(g))
                out.push_back(static_cast<int>(i));
        return out;
    }

    std::vector<Vec3> facet_polygon(std::size_t i) const
    {
        std::vector<Vec3> p;
        for (int v : facets_[i].verts)
            p.push_back(verts_[v]);
        return p;
    }

    // Volume of K intersected with the cone {x : n.x >= 0 for every n}.
    double cone_volume(std::span<const Vec3> halfspaces = {}) const
    {
        double vol = 0.0;
        for (std::size_t i = 0; i < facets_.size(); ++i) {
            auto poly = facet_polygon(i);
            for (const auto& n : halfspaces) {
                poly = clip_halfspace(poly, n);
                if (poly.size() < 3)
                    break;
            }
            if (poly.size() >= 3)
                vol += fan_volume(poly);
        }
        return vol;
    }

    double volume() const { return cone_volume(); }

    // Vertices and facets swap roles; the combinatorics carry over.
    Polytope polar() const
    {
        Polytope p;
        for (const auto& f : facets_)
            p.verts_.push_back(f.normal);
        std::vector<std::vector<int>> incident(verts_.size());
        for (std::size_t i = 0; i < facets_.size(); ++i)
            for (int v : facets_[i].verts)
                incident[v].push_back(static_cast<int>(i));
        for (std::size_t v = 0; v < verts_.size(); ++v) {
            Facet f{verts_[v], incident[v]};
            p.order_facet(f);
            p.facets_.push_back(std::move(f));
        }
        return p;
    }

    Polytope mapped(const LinearMap3& a) const
    {
        Polytope p;
        const Mat3 it = a.inverse().transpose();
        for (const auto& v : verts_)
            p.verts_.push_back(a(v));
        for (const auto& f : facets_) {
            Facet g{it * f.normal, f.verts};
            if (a.det() < 0)
                std::reverse(g.verts.begin(), g.verts.end());
            p.facets_.push_back(std::move(g));
        }
        return p;
    }

    SegmentTrace trace(const Vec3& u, const Vec3& w) const;

    // Integral over t in [0,1] of radial(x(t))^2 along a traced segment.
    double inverse_square_integral(const Vec3& u, const Vec3& w) const
    {
        const SegmentTrace tr = trace(u, w);
        double s = 0.0;
        for (std::size_t k = 0; k + 1 < tr.t.size(); ++k)
            s += (tr.t[k + 1] - tr.t[k]) / (tr.level[k] * tr.level[k + 1]);
        return s;
    }

private:
    void order_facet(Facet& f) const
    {
        Vec3 c = Vec3::Zero();
        for (int v : f.verts)
            c += verts_[v];
        c /= static_cast<double>(f.verts.size());
        const Vec3 nz = f.normal.normalized();
        Vec3 e1 = verts_[f.verts[0]] - c;
        e1 = (e1 - e1.dot(nz) * nz).normalized();
        const Vec3 e2 = nz.cross(e1);
        std::vector<std::pair<double, int>> key;
        for (int v : f.verts) {
            const Vec3 d = verts_[v] - c;
            key.emplace_back(std::atan2(d.dot(e2), d.dot(e1)), v);
        }
        std::sort(key.begin(), key.end());
        for (std::size_t i = 0; i < key.size(); ++i)
            f.verts[i] = key[i].second;
    }

    std::vector<Vec3> verts_;
    std::vector<Facet> facets_;
};

inline Polytope Polytope::hull(const std::vector<Vec3>& input)
{
    double scale = 0.0;
    for (const auto& p : input) {
        if (!p.allFinite())
            throw Error(ErrorKind::DegenerateBody, "non-finite vertex");
        scale = std::max(scale, p.norm());
    }
    if (input.size() < 4 || scale == 0.0)
        throw Error(ErrorKind::DegenerateBody, "fewer than four distinct points");

    std::vector<Vec3> pts;
    for (const auto& p : input) {
        bool dup = false;
        for (const auto& q : pts)
            dup = dup || (p - q).norm() <= 1e-12 * scale;
        if (!dup)
            pts.push_back(p);
    }
    const int n = static_cast<int>(pts.size());
    {
        Eigen::MatrixXd m(n, 3);
        for (int i = 0; i < n; ++i)
            m.row(i) = pts[i].transpose();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
        const auto& s = svd.singularValues();
        if (n < 4 || s(2) <= 1e-10 * s(0))
            throw Error(ErrorKind::DegenerateBody, "points do not span space");
    }

    constexpr double eps = 1e-10;
    std::vector<Vec3> normals;
    std::vector<std::vector<char>> on;
    auto covered = [&](int i, int j, int k) {
        for (const auto& row : on)
            if (row[i] && row[j] && row[k])
                return true;
        return false;
    };
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = j + 1; k < n; ++k) {
                if (covered(i, j, k))
                    continue;
                Vec3 nrm = (pts[j] - pts[i]).cross(pts[k] - pts[i]);
                const double len = nrm.norm();
                if (len <= 1e-13 * scale * scale)
                    continue;
                double c = nrm.dot(pts[i]);
                if (std::abs(c) <= 1e-12 * len * scale) {
                    bool pos = true, neg = true;
                    for (const auto& p : pts) {
                        const double s = nrm.dot(p) / (len * scale);
                        pos = pos && s >= -1e-12;
                        neg = neg && s <= 1e-12;
                    }
                    if (pos || neg)
                        throw Error(ErrorKind::OriginNotInterior, "supporting plane through the origin");
                    continue;
                }
                if (c < 0) {
                    nrm = -nrm;
                    c = -c;
                }
                const Vec3 a = nrm / c;
                bool supporting = true;
                for (const auto& p : pts)
                    if (a.dot(p) > 1 + eps) {
                        supporting = false;
                        break;
                    }
                if (!supporting)
                    continue;
                std::vector<char> row(n);
                for (int v = 0; v < n; ++v)
                    row[v] = std::abs(a.dot(pts[v]) - 1) <= eps;
                normals.push_back(a);
                on.push_back(std::move(row));
            }
    if (normals.size() < 4)
        throw Error(ErrorKind::DegenerateBody, "hull has fewer than four facets");

    // extreme points lie on at least three facets
    std::vector<int> index(n, -1);
    Polytope poly;
    for (int v = 0; v < n; ++v) {
        int cnt = 0;
        for (const auto& row : on)
            cnt += row[v];
        if (cnt >= 3) {
            index[v] = static_cast<int>(poly.verts_.size());
            poly.verts_.push_back(pts[v]);
        }
    }
    for (std::size_t f = 0; f < normals.size(); ++f) {
        Facet fc{normals[f], {}};
        for (int v = 0; v < n; ++v)
            if (on[f][v] && index[v] >= 0)
                fc.verts.push_back(index[v]);
        // refit the plane through all incident vertices
        Eigen::MatrixXd m(fc.verts.size(), 3);
        for (std::size_t r = 0; r < fc.verts.size(); ++r)
            m.row(r) = poly.verts_[fc.verts[r]].transpose();
        Vec3 a = m.colPivHouseholderQr().solve(Eigen::VectorXd::Ones(fc.verts.size()));
        if (a.allFinite())
            fc.normal = a;
        poly.order_facet(fc);
        poly.facets_.push_back(std::move(fc));
    }
    return poly;
}

inline SegmentTrace Polytope::trace(const Vec3& u, const Vec3& w) const
{
    const std::size_t m = facets_.size();
    std::vector<double> c(m), s(m);
    double cmax = -1e300, smag = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        c[i] = facets_[i].normal.dot(u);
        s[i] = facets_[i].normal.dot(w - u);
        cmax = std::max(cmax, c[i]);
        smag = std::max(smag, std::abs(s[i]));
    }
    const double tol = 1e-12 * std::max(std::abs(cmax), 1.0);
    const double stol = 1e-12 * std::max(smag, std::abs(cmax));
    auto level_at = [&](double t) {
        double l = -1e300;
        for (std::size_t i = 0; i < m; ++i)
            l = std::max(l, c[i] + s[i] * t);
        return l;
    };
    auto active_at = [&](double t, double l) {
        std::vector<int> a;
        for (std::size_t i = 0; i < m; ++i)
            if (c[i] + s[i] * t >= l - tol)
                a.push_back(static_cast<int>(i));
        return a;
    };

    SegmentTrace tr;
    double t = 0.0;
    double l = level_at(0.0);
    tr.t.push_back(0.0);
    tr.level.push_back(l);
    tr.active.push_back(active_at(0.0, l));
    for (;;) {
        const auto& act = tr.active.back();
        double smax = -1e300;
        for (int i : act)
            smax = std::max(smax, s[i]);
        std::vector<int> top;
        for (int i : act)
            if (s[i] >= smax - stol)
                top.push_back(i);
        const int rep = top.front();
        double tnext = 1.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (s[j] <= s[rep] + stol)
                continue;
            const double tj = (c[rep] - c[j]) / (s[j] - s[rep]);
            if (tj > t && tj < tnext)
                tnext = tj;
        }
        tr.top.push_back(std::move(top));
        if (tnext >= 1.0 - 1e-14)
            break;
        t = tnext;
        l = c[rep] + s[rep] * t;
        tr.t.push_back(t);
        tr.level.push_back(l);
        tr.active.push_back(active_at(t, l));
    }
    l = level_at(1.0);
    tr.t.push_back(1.0);
    tr.level.push_back(l);
    tr.active.push_back(active_at(1.0, l));
    return tr;
}

} // namespace mahler
