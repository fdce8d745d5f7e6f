#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "body.hpp"
#include "gauss.hpp"
#include "normalize.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"

namespace mahler {

// Endpoints of the quarter arcs d, e, f, g, h, i.
inline const std::array<std::array<Vec3, 2>, 6>& quarter_arcs()
{
    static const std::array<std::array<Vec3, 2>, 6> arcs{{
        {Vec3::UnitY(), Vec3::UnitZ()},
        {Vec3::UnitZ(), -Vec3::UnitY()},
        {Vec3::UnitZ(), Vec3::UnitX()},
        {Vec3::UnitX(), -Vec3::UnitZ()},
        {Vec3::UnitX(), Vec3::UnitY()},
        {Vec3::UnitY(), -Vec3::UnitX()},
    }};
    return arcs;
}

namespace detail {

inline Vec3 mean_normal(const Polytope& p, const std::vector<int>& ids)
{
    Vec3 m = Vec3::Zero();
    for (int i : ids)
        m += p.facets()[i].normal;
    return m / static_cast<double>(ids.size());
}

// The dual of a traced segment is a polygonal path through polar vertices;
// faces met at breakpoints contribute their mean normal.
inline Vec3 polytope_dual_curve_vector(const Polytope& p, const Vec3& a, const Vec3& b)
{
    const SegmentTrace tr = p.trace(a, b);
    std::vector<Vec3> path{mean_normal(p, tr.active.front())};
    for (std::size_t k = 0; k < tr.top.size(); ++k) {
        path.push_back(mean_normal(p, tr.top[k]));
        path.push_back(mean_normal(p, tr.active[k + 1]));
    }
    Vec3 s = Vec3::Zero();
    for (std::size_t k = 0; k + 1 < path.size(); ++k)
        s += path[k].cross(path[k + 1]);
    return s;
}

} // namespace detail

// Integral of y x y' along the image under the boundary map of the segment
// from a to b, radially projected onto the boundary.
inline Vec3 dual_curve_vector(const ConvexBody3& k, const Vec3& a, const Vec3& b, int n_curve)
{
    if (n_curve < 64)
        throw Error(ErrorKind::BadParameter, "curve discretisation needs at least 64 points");
    if (auto p = k.polytope())
        return detail::polytope_dual_curve_vector(*p, a, b);
    const int n = n_curve + (n_curve % 2);
    std::vector<Vec3> y(n + 1);
    parallel_for(y.size(), [&](std::size_t j) {
        const double t = static_cast<double>(j) / n;
        const Vec3 m = (1 - t) * a + t * b;
        const Vec3 x = k.radial(m) * m;
        y[j] = boundary_map(k, x);
    });
    // polygonal sums at n and n/2 points, combined to cancel the h^2 term
    Vec3 fine = Vec3::Zero(), coarse = Vec3::Zero();
    for (int j = 0; j < n; ++j)
        fine += y[j].cross(y[j + 1]);
    for (int j = 0; j < n; j += 2)
        coarse += y[j].cross(y[j + 2]);
    return (4.0 * fine - coarse) / 3.0;
}

struct CurveVectors {
    std::array<Vec3, 6> body;  // d, e, f, g, h, i
    std::array<Vec3, 6> polar; // the dual curves
};

inline CurveVectors curve_vectors(const ConvexBody3& k, const SphereGrid& g, int n_curve)
{
    CurveVectors cv;
    const auto q = quarter_areas(k, g);
    for (int i = 0; i < 6; ++i) {
        Vec3 v = Vec3::Zero();
        v[i / 2] = 2.0 * q[i];
        cv.body[i] = v;
        cv.polar[i] = dual_curve_vector(k, quarter_arcs()[i][0], quarter_arcs()[i][1], n_curve);
    }
    return cv;
}

// Signed combinations of d..i used for piece i of the upper half.
inline std::array<Vec3, 4> piece_combinations(const std::array<Vec3, 6>& c)
{
    const Vec3 &d = c[0], &e = c[1], &f = c[2], &g = c[3], &h = c[4], &i = c[5];
    return {d + f + h, -d + g + i, -e - g + h, e - f + i};
}

struct TestPoints {
    std::array<Vec3, 4> s; // in K
    std::array<Vec3, 4> r; // in the polar
    std::array<double, 4> pieces{};
    std::array<double, 4> polar_pieces{};
    std::array<double, 4> gauge_s{};
    std::array<double, 4> gauge_r{};
    std::array<double, 4> pairing{};
    std::array<bool, 4> empty_polar_piece{};
};

inline TestPoints compute_test_points(const ConvexBody3& k, const SphereGrid& g, const CurveVectors& cv)
{
    TestPoints tp;
    const auto vol = octant_volumes(k, g);
    const auto pol = polar_piece_volumes(k, g);
    const auto cs = piece_combinations(cv.polar);
    const auto cr = piece_combinations(cv.body);
    double pol_total = 0;
    for (double x : pol)
        pol_total += x;
    for (int i = 0; i < 4; ++i) {
        tp.pieces[i] = vol[i];
        tp.polar_pieces[i] = pol[i];
        // A polytope with no vertex in octant i has an empty polar piece and a
        // vanishing curve combination; S_i is then taken at the origin.
        tp.empty_polar_piece[i] = pol[i] <= 1e-12 * pol_total;
        tp.s[i] = tp.empty_polar_piece[i] ? Vec3::Zero() : Vec3(cs[i] / (6.0 * pol[i]));
        tp.r[i] = cr[i] / (6.0 * vol[i]);
        tp.gauge_s[i] = k.gauge(tp.s[i]);
        tp.gauge_r[i] = k.support(tp.r[i]);
        tp.pairing[i] = tp.r[i].dot(tp.s[i]);
    }
    return tp;
}

inline TestPoints test_points(const ConvexBody3& k, const SphereGrid& g, int n_curve)
{
    TestPoints tp = compute_test_points(k, g, curve_vectors(k, g, n_curve));
    for (int i = 0; i < 4; ++i)
        if (tp.gauge_s[i] > 1 + 1e-6 || tp.gauge_r[i] > 1 + 1e-6)
            throw Error(ErrorKind::MembershipViolated,
                        "test point " + std::to_string(i + 1) + ": gauge " + std::to_string(tp.gauge_s[i]) +
                            " in K, " + std::to_string(tp.gauge_r[i]) + " in the polar");
    return tp;
}

struct ChainReport {
    TestPoints points;
    CurveVectors curves;
    std::array<double, 3> section{};
    std::array<double, 3> projection{};
    std::array<double, 3> planar_product{};
    std::array<double, 3> curve_projection{}; // d°_1 + e°_1, f°_2 + g°_2, h°_3 + i°_3
    double chain_sum = 0;                     // 2 d.(d° + e°) + 2 f.(f° + g°) + 2 h.(h° + i°)
    double volume = 0;
    double polar_volume = 0;
    double product = 0;
    double slack = 0; // product - 32/3
    double condition_residual = 0;
    bool applicable = false;
    bool pairings_ok = false;
    bool membership_ok = false;
    bool planar_ok = false;
    bool chain_ok = false;
    bool bound_ok = false;

    bool passed() const { return pairings_ok && membership_ok && planar_ok && bound_ok && (!applicable || chain_ok); }
};

inline ChainReport verify_chain(const ConvexBody3& k, const SphereGrid& g, int n_curve)
{
    ChainReport r;
    r.curves = curve_vectors(k, g, n_curve);
    r.points = compute_test_points(k, g, r.curves);
    r.volume = volume(k, g);
    r.polar_volume = polar_volume(k, g);
    r.product = r.volume * r.polar_volume;
    r.slack = r.product - 32.0 / 3.0;

    const auto pm = plane_measures(k, g);
    for (int i = 0; i < 3; ++i) {
        r.section[i] = pm.section[i];
        r.projection[i] = pm.projection[i];
        r.planar_product[i] = pm.section[i] * pm.projection[i];
        r.curve_projection[i] = r.curves.polar[2 * i][i] + r.curves.polar[2 * i + 1][i];
        r.chain_sum += r.curves.body[2 * i].dot(r.curves.polar[2 * i] + r.curves.polar[2 * i + 1]);
    }
    r.chain_sum *= 2.0;

    r.condition_residual = condition_residuals(k, g).max23();
    r.applicable = r.condition_residual <= 1e-4 * r.volume;
    r.pairings_ok = r.membership_ok = true;
    for (int i = 0; i < 4; ++i) {
        r.pairings_ok = r.pairings_ok && r.points.pairing[i] <= 1 + 1e-8;
        r.membership_ok = r.membership_ok && r.points.gauge_s[i] <= 1 + 1e-6 && r.points.gauge_r[i] <= 1 + 1e-6;
    }
    r.planar_ok = std::all_of(r.planar_product.begin(), r.planar_product.end(),
                              [](double p) { return p >= 8.0 - 1e-5; });
    double planar_sum = 0;
    for (double p : r.planar_product)
        planar_sum += p;
    const double tol = 1e-5 * std::max(1.0, r.product);
    r.chain_ok = 2.25 * r.product >= r.chain_sum - tol && r.chain_sum >= planar_sum - tol;
    r.bound_ok = r.product >= 32.0 / 3.0 - 1e-5;
    return r;
}

// ---- cone inequality -------------------------------------------------------

struct ConeCheckStats {
    int trials = 0;
    int violations = 0;
    double worst_margin = 0; // smallest cone volume minus left side
};

namespace detail {

inline double arc_angle(const Vec3& a, const Vec3& b) { return std::atan2(a.cross(b).norm(), a.dot(b)); }

// Integral of l x dl along the boundary curve over the segment from a to b.
// Long segments pass near the origin, so smooth bodies are split at the
// radial midpoint until each piece spans a small angle.
inline Vec3 segment_cross_integral(const ConvexBody3& k, const Vec3& a, const Vec3& b)
{
    if (auto p = k.polytope())
        return a.cross(b) * p->inverse_square_integral(a, b);
    if (arc_angle(a, b) > 0.25) {
        const Vec3 m = 0.5 * (a.normalized() + b.normalized());
        return segment_cross_integral(k, a, m) + segment_cross_integral(k, m, b);
    }
    return a.cross(b) * gauss_integrate(
                            [&](double t) {
                                const double r = k.radial((1 - t) * a + t * b);
                                return r * r;
                            },
                            0.0, 1.0, 32);
}

// Volume of K inside the cone spanned by a1, a2, a3 (positively oriented).
inline double triangle_cone_volume(const ConvexBody3& k, const Vec3& a1, const Vec3& a2, const Vec3& a3)
{
    if (auto p = k.polytope()) {
        const std::array<Vec3, 3> hs{a2.cross(a3), a3.cross(a1), a1.cross(a2)};
        return p->cone_volume(hs);
    }
    const Vec3 u1 = a1.normalized(), u2 = a2.normalized(), u3 = a3.normalized();
    if (std::max({arc_angle(u1, u2), arc_angle(u2, u3), arc_angle(u3, u1)}) > 0.5) {
        const Vec3 m12 = (u1 + u2).normalized(), m23 = (u2 + u3).normalized(), m31 = (u3 + u1).normalized();
        return triangle_cone_volume(k, u1, m12, m31) + triangle_cone_volume(k, m12, u2, m23) +
               triangle_cone_volume(k, m31, m23, u3) + triangle_cone_volume(k, m12, m23, m31);
    }
    // collapsed square onto the flat triangle u1 u2 u3, then radial scaling
    const double det = u1.dot(u2.cross(u3));
    constexpr int n = 16;
    const auto& rule = gauss_legendre(n);
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = 0.5 * (rule.x[i] + 1), wu = 0.5 * rule.w[i];
        for (int j = 0; j < n; ++j) {
            const double v = 0.5 * (rule.x[j] + 1), wv = 0.5 * rule.w[j];
            const Vec3 x = u1 + u * ((1 - v) * (u2 - u1) + v * (u3 - u1));
            const double r = k.radial(x);
            s += wu * wv * u * r * r * r;
        }
    }
    return det * s / 3.0;
}

} // namespace detail

// Left side (1/6) P.(C12 + C23 + C31) against the cone volume over the
// boundary triangle with corners a1, a2, a3.
inline double cone_margin(const ConvexBody3& k, const Vec3& a1, const Vec3& a2, const Vec3& a3, const Vec3& p)
{
    const Vec3 c = detail::segment_cross_integral(k, a1, a2) + detail::segment_cross_integral(k, a2, a3) +
                   detail::segment_cross_integral(k, a3, a1);
    return detail::triangle_cone_volume(k, a1, a2, a3) - p.dot(c) / 6.0;
}

inline ConeCheckStats cone_inequality_check(const ConvexBody3& k, int trials, std::uint64_t seed = 1)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    auto unit = [&] {
        Vec3 v(nd(rng), nd(rng), nd(rng));
        return Vec3(v.normalized());
    };
    struct Trial {
        Vec3 a1, a2, a3, p;
    };
    std::vector<Trial> ts;
    while (static_cast<int>(ts.size()) < trials) {
        Vec3 a1 = unit(), a2 = unit(), a3 = unit();
        double det = a1.dot(a2.cross(a3));
        if (std::abs(det) < 1e-3)
            continue;
        if (det < 0)
            std::swap(a2, a3);
        a1 *= k.radial(a1);
        a2 *= k.radial(a2);
        a3 *= k.radial(a3);
        const Vec3 u = unit();
        // every other point is taken on the boundary, where the inequality is tightest
        const double scale = ts.size() % 2 ? 1.0 : std::cbrt(ud(rng));
        ts.push_back({a1, a2, a3, u * k.radial(u) * scale});
    }
    std::vector<double> margin(ts.size());
    parallel_for(ts.size(), [&](std::size_t i) { margin[i] = cone_margin(k, ts[i].a1, ts[i].a2, ts[i].a3, ts[i].p); });
    ConeCheckStats st;
    st.trials = trials;
    st.worst_margin = margin.empty() ? 0.0 : *std::min_element(margin.begin(), margin.end());
    st.violations = static_cast<int>(std::count_if(margin.begin(), margin.end(), [](double m) { return m < -1e-6; }));
    return st;
}

// ---- dual faces and equality ---------------------------------------------

inline Vec3 dual_vertex3(const Vec3& p1, const Vec3& p2, const Vec3& p3)
{
    Mat3 m;
    m.row(0) = p1;
    m.row(1) = p2;
    m.row(2) = p3;
    if (std::abs(m.determinant()) <= 1e-12 * p1.norm() * p2.norm() * p3.norm())
        throw Error(ErrorKind::SingularFace, "face points are linearly dependent");
    return m.partialPivLu().solve(Vec3::Ones());
}

enum class EqualityClass { Parallelepiped, CrossPolytopeDual, Neither };

inline const char* equality_name(EqualityClass c)
{
    switch (c) {
    case EqualityClass::Parallelepiped: return "parallelepiped";
    case EqualityClass::CrossPolytopeDual: return "cross-polytope";
    default: return "neither";
    }
}

namespace detail {

// Points of the form +-v1 +-v2 +-v3 with independent v_i, up to tol.
inline bool is_parallelepiped(const std::vector<Vec3>& pts, double tol)
{
    double scale = 0.0;
    for (const auto& p : pts)
        scale = std::max(scale, p.norm());
    std::vector<Vec3> v;
    for (const auto& p : pts)
        if (std::none_of(v.begin(), v.end(), [&](const Vec3& q) { return (p - q).norm() <= tol * scale; }))
            v.push_back(p);
    if (v.size() != 8)
        return false;
    std::vector<Vec3> reps;
    for (const auto& p : v)
        if (std::none_of(reps.begin(), reps.end(), [&](const Vec3& q) { return (p + q).norm() <= tol * scale; }))
            reps.push_back(p);
    if (reps.size() != 4)
        return false;
    for (int signs = 0; signs < 8; ++signs) {
        const Vec3 b = (signs & 1 ? -1.0 : 1.0) * reps[1];
        const Vec3 c = (signs & 2 ? -1.0 : 1.0) * reps[2];
        const Vec3 d = (signs & 4 ? -1.0 : 1.0) * reps[3];
        if ((reps[0] - b - c - d).norm() > tol * scale)
            continue;
        Mat3 m;
        m.col(0) = 0.5 * (reps[0] - d);
        m.col(1) = 0.5 * (reps[0] - c);
        m.col(2) = 0.5 * (reps[0] - b);
        return std::abs(m.determinant()) > tol * scale * scale * scale;
    }
    return false;
}

} // namespace detail

inline EqualityClass detect_equality(const ConvexBody3& k, double tol = 1e-5)
{
    const Polytope* p = k.polytope();
    if (!p)
        return EqualityClass::Neither;
    if (detail::is_parallelepiped(p->vertices(), tol))
        return EqualityClass::Parallelepiped;
    std::vector<Vec3> normals;
    for (const auto& f : p->facets())
        normals.push_back(f.normal);
    if (detail::is_parallelepiped(normals, tol))
        return EqualityClass::CrossPolytopeDual;
    return EqualityClass::Neither;
}

} // namespace mahler
