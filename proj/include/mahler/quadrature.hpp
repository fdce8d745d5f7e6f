#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "body.hpp"
#include "optimize.hpp"
#include "parallel.hpp"
#include "polygon2.hpp"
#include "sphere_nodes.hpp"

namespace mahler {

// Tensor grid: Gauss-Legendre in alpha per hemisphere, in beta per quarter turn.
// Every coordinate octant is a union of whole grid blocks.
struct SphereGrid {
    int n_alpha = 0;
    int n_beta = 0;
    std::vector<double> alpha, beta, w_alpha, w_beta;
    std::vector<Vec3> dirs;     // alpha-major
    std::vector<double> weight; // includes sin(alpha)
    std::vector<int> octant;    // 0..7 for Delta_1..Delta_8

    std::size_t size() const { return dirs.size(); }
};

// Octants numbered counterclockwise in the upper half, then the lower half:
// (+,+,+) (-,+,+) (-,-,+) (+,-,+) (+,+,-) (-,+,-) (-,-,-) (+,-,-).
inline Vec3 octant_signs(int i)
{
    static const int sx[4] = {1, -1, -1, 1};
    static const int sy[4] = {1, 1, -1, -1};
    return {double(sx[i % 4]), double(sy[i % 4]), i < 4 ? 1.0 : -1.0};
}

inline int octant_of(const Vec3& x)
{
    const bool px = x.x() >= 0, py = x.y() >= 0, pz = x.z() >= 0;
    const int q = px ? (py ? 0 : 3) : (py ? 1 : 2);
    return pz ? q : q + 4;
}

inline SphereGrid make_grid(int n_alpha, int n_beta)
{
    check_grid_size(n_alpha, n_beta);
    SphereGrid g;
    g.n_alpha = n_alpha;
    g.n_beta = n_beta;
    alpha_rule(n_alpha, g.alpha, g.w_alpha);
    beta_rule(n_beta, g.beta, g.w_beta);
    const std::size_t n = static_cast<std::size_t>(n_alpha) * n_beta;
    g.dirs.reserve(n);
    g.weight.reserve(n);
    g.octant.reserve(n);
    for (int i = 0; i < n_alpha; ++i)
        for (int j = 0; j < n_beta; ++j) {
            g.dirs.push_back(direction(g.alpha[i], g.beta[j]));
            g.weight.push_back(g.w_alpha[i] * g.w_beta[j]);
            const bool px = i < n_alpha / 2;
            const int q = j / (n_beta / 4);
            static const int upper_q[4] = {0, 1, 1, 0}; // y sign per quarter: + - - +
            const bool py = upper_q[q] == 0;
            const bool pz = q < 2;
            const int k = px ? (py ? 0 : 3) : (py ? 1 : 2);
            g.octant.push_back(pz ? k : k + 4);
        }
    return g;
}

template <class F>
std::vector<double> sample_grid(const SphereGrid& g, F&& f)
{
    std::vector<double> out(g.size());
    parallel_for(g.size(), [&](std::size_t k) { out[k] = f(g.dirs[k]); });
    return out;
}

inline double integrate_sphere(const SphereGrid& g, const std::vector<double>& values)
{
    std::vector<double> t(values.size());
    for (std::size_t k = 0; k < values.size(); ++k)
        t[k] = g.weight[k] * values[k];
    return stable_sum(t);
}

inline std::array<double, 8> integrate_octants(const SphereGrid& g, const std::vector<double>& values)
{
    std::array<std::vector<double>, 8> parts;
    for (std::size_t k = 0; k < values.size(); ++k)
        parts[g.octant[k]].push_back(g.weight[k] * values[k]);
    std::array<double, 8> out{};
    for (int i = 0; i < 8; ++i)
        out[i] = stable_sum(parts[i]);
    return out;
}

inline std::vector<Vec3> octant_halfspaces(int i)
{
    const Vec3 s = octant_signs(i);
    return {Vec3(s.x(), 0, 0), Vec3(0, s.y(), 0), Vec3(0, 0, s.z())};
}

inline std::vector<double> cubed_radial(const ConvexBody3& k, const SphereGrid& g)
{
    return sample_grid(g, [&](const Vec3& u) {
        const double r = k.radial(u);
        return r * r * r / 3.0;
    });
}

inline double volume(const ConvexBody3& k, const SphereGrid& g)
{
    if (auto p = k.polytope())
        return p->volume();
    return integrate_sphere(g, cubed_radial(k, g));
}

inline std::array<double, 8> octant_volumes(const ConvexBody3& k, const SphereGrid& g)
{
    if (auto p = k.polytope()) {
        std::array<double, 8> out{};
        for (int i = 0; i < 8; ++i) {
            const auto hs = octant_halfspaces(i);
            out[i] = p->cone_volume(hs);
        }
        return out;
    }
    return integrate_octants(g, cubed_radial(k, g));
}

// ---- pieces of the polar body --------------------------------------------

enum class PieceMethod { Auto, Pullback, Classify };

namespace detail {

// Vertex v of K owns the polar facet dual to it; a vertex on coordinate
// planes shares that facet between its octants, cut by the same planes.
inline std::array<double, 8> polytope_polar_pieces(const Polytope& p)
{
    const Polytope q = p.polar();
    double scale = 0.0;
    for (const auto& v : p.vertices())
        scale = std::max(scale, v.norm());
    std::array<double, 8> out{};
    for (std::size_t v = 0; v < p.vertices().size(); ++v) {
        const Vec3& x = p.vertices()[v];
        for (int i = 0; i < 8; ++i) {
            const Vec3 s = octant_signs(i);
            std::vector<Vec3> cuts;
            bool ok = true;
            for (int c = 0; c < 3; ++c) {
                if (std::abs(x[c]) <= 1e-12 * scale) {
                    Vec3 n = Vec3::Zero();
                    n[c] = s[c];
                    cuts.push_back(n);
                } else if (x[c] * s[c] < 0) {
                    ok = false;
                }
            }
            if (!ok)
                continue;
            auto poly = q.facet_polygon(v);
            for (const auto& n : cuts)
                poly = clip_halfspace(poly, n);
            if (poly.size() >= 3)
                out[i] += fan_volume(poly);
        }
    }
    return out;
}

// Cone volume swept by the boundary map over each octant patch of the sphere.
inline std::array<double, 8> pullback_polar_pieces(const ConvexBody3& k, const SphereGrid& g)
{
    constexpr double h = 1e-5;
    std::vector<double> dens(g.size());
    parallel_for(g.size(), [&](std::size_t n) {
        const int i = static_cast<int>(n) / g.n_beta, j = static_cast<int>(n) % g.n_beta;
        const double a = g.alpha[i], b = g.beta[j];
        const Vec3 v = g.dirs[n];
        const Vec3 e1(-std::sin(a), std::cos(a) * std::cos(b), std::cos(a) * std::sin(b));
        const Vec3 e2(0, -std::sin(b), std::cos(b));
        const Vec3 y = k.gauge_gradient(v);
        const Vec3 d1 = (k.gauge_gradient(v + h * e1) - k.gauge_gradient(v - h * e1)) / (2 * h);
        const Vec3 d2 = (k.gauge_gradient(v + h * e2) - k.gauge_gradient(v - h * e2)) / (2 * h);
        dens[n] = y.dot(d1.cross(d2)) / 3.0;
    });
    return integrate_octants(g, dens);
}

inline std::array<double, 8> classified_polar_pieces(const ConvexBody3& k, const SphereGrid& g)
{
    std::vector<double> dens(g.size());
    std::vector<int> cls(g.size());
    std::vector<char> ambiguous(g.size());
    parallel_for(g.size(), [&](std::size_t n) {
        const Vec3 x = k.support_point(g.dirs[n]);
        const double r = 1.0 / g.dirs[n].dot(x);
        dens[n] = r * r * r / 3.0;
        cls[n] = octant_of(x);
        ambiguous[n] = x.cwiseAbs().minCoeff() <= 1e-9 * x.norm();
    });
    std::size_t amb = 0;
    for (char c : ambiguous)
        amb += c;
    if (amb > g.size() / 1000)
        throw Error(ErrorKind::ClassificationUnstable,
                    std::to_string(amb) + " nodes map onto coordinate planes");
    std::array<std::vector<double>, 8> parts;
    for (std::size_t n = 0; n < g.size(); ++n)
        parts[cls[n]].push_back(g.weight[n] * dens[n]);
    std::array<double, 8> out{};
    for (int i = 0; i < 8; ++i)
        out[i] = stable_sum(parts[i]);
    return out;
}

// Whether the gauge has a bounded Hessian away from the origin. The pullback
// differentiates the boundary map, so it is only used when this holds.
inline bool bounded_hessian(const ConvexBody3& k)
{
    struct V {
        bool operator()(const Polytope&) const { return false; }
        bool operator()(const LpBall& b) const { return b.p >= 2.0; }
        bool operator()(const Ellipsoid&) const { return true; }
        bool operator()(const NormBall& b) const { return b.p >= 2.0; }
        bool operator()(const RadialField&) const { return false; }
        bool operator()(const Transformed& t) const { return bounded_hessian(*t.base); }
        bool operator()(const PolarOf& p) const
        {
            // the gauge of the polar is the support function of the base
            if (auto b = std::get_if<LpBall>(&p.base->rep()))
                return b->p <= 2.0;
            return std::holds_alternative<Ellipsoid>(p.base->rep());
        }
    };
    return std::visit(V{}, k.rep());
}

// Gauges that are smooth away from the origin. For these the pullback of the
// boundary map integrates |K°| far more accurately than 1/h^3, whose kinks
// follow the coordinate planes of the dual norm.
inline bool smooth_gauge(const ConvexBody3& k)
{
    auto even = [](double p) { return p == std::round(p) && static_cast<long>(p) % 2 == 0; };
    if (auto b = std::get_if<LpBall>(&k.rep()))
        return even(b->p);
    if (auto b = std::get_if<NormBall>(&k.rep()))
        return even(b->p);
    if (auto t = std::get_if<Transformed>(&k.rep()))
        return smooth_gauge(*t->base);
    return std::holds_alternative<Ellipsoid>(k.rep());
}

} // namespace detail

inline double polar_volume(const ConvexBody3& k, const SphereGrid& g)
{
    if (!k.polytope() && detail::smooth_gauge(k)) {
        const auto pieces = detail::pullback_polar_pieces(k, g);
        return stable_sum(std::vector<double>(pieces.begin(), pieces.end()));
    }
    return volume(polar(k), g);
}

inline double volume_product(const ConvexBody3& k, const SphereGrid& g)
{
    return volume(k, g) * polar_volume(k, g);
}

// |K°_i| for the pieces of the polar body over the octant patches of K.
inline std::array<double, 8> polar_piece_volumes(const ConvexBody3& k, const SphereGrid& g,
                                                 PieceMethod method = PieceMethod::Auto)
{
    if (auto p = k.polytope(); p && method == PieceMethod::Auto)
        return detail::polytope_polar_pieces(*p);
    if (method == PieceMethod::Classify || (method == PieceMethod::Auto && !detail::bounded_hessian(k)))
        return detail::classified_polar_pieces(k, g);
    return detail::pullback_polar_pieces(k, g);
}

// ---- planar measures -----------------------------------------------------

// Area of the central section between directions u and w (angle below pi).
inline double sector_area(const ConvexBody3& k, const Vec3& u, const Vec3& w, int nodes)
{
    if (auto p = k.polytope())
        return 0.5 * u.cross(w).norm() * p->inverse_square_integral(u, w);
    const Vec3 a = u.normalized();
    Vec3 b = w - w.dot(a) * a;
    b.normalize();
    const double gamma = std::atan2(w.dot(b), w.dot(a));
    return 0.5 * gauss_integrate(
                     [&](double t) {
                         const double r = k.radial(std::cos(t) * a + std::sin(t) * b);
                         return r * r;
                     },
                     0.0, gamma, nodes);
}

inline int sector_nodes(const SphereGrid& g) { return std::max(16, g.n_beta / 2); }

// |O*d|, |O*e|, |O*f|, |O*g|, |O*h|, |O*i|.
inline std::array<double, 6> quarter_areas(const ConvexBody3& k, const SphereGrid& g)
{
    const Vec3 ex = Vec3::UnitX(), ey = Vec3::UnitY(), ez = Vec3::UnitZ();
    const int n = sector_nodes(g);
    return {sector_area(k, ey, ez, n), sector_area(k, ez, -ey, n), sector_area(k, ez, ex, n),
            sector_area(k, ex, -ez, n), sector_area(k, ex, ey, n), sector_area(k, ey, -ex, n)};
}

struct PlaneMeasures {
    std::array<double, 3> section{};    // |Q_i(K)|, sections by the planes normal to e_i
    std::array<double, 3> projection{}; // |P_i(K°)|, projections onto the same planes
};

inline std::array<Vec3, 2> plane_basis(int i)
{
    switch (i) {
    case 0: return {Vec3::UnitY(), Vec3::UnitZ()};
    case 1: return {Vec3::UnitZ(), Vec3::UnitX()};
    default: return {Vec3::UnitX(), Vec3::UnitY()};
    }
}

inline PlaneMeasures plane_measures(const ConvexBody3& k, const SphereGrid& g)
{
    PlaneMeasures out;
    const int n = sector_nodes(g);
    for (int i = 0; i < 3; ++i) {
        const auto [a, b] = plane_basis(i);
        out.section[i] = 2.0 * (sector_area(k, a, b, n) + sector_area(k, b, -a, n));
        if (auto p = k.polytope()) {
            std::vector<Vec2> pts;
            for (const auto& f : p->facets())
                pts.emplace_back(f.normal.dot(a), f.normal.dot(b));
            out.projection[i] = signed_area(convex_hull2(pts));
        } else {
            // support function of the projection is the gauge restricted to the plane
            auto integrand = [&](double t) {
                const Vec3 c = std::cos(t) * a + std::sin(t) * b;
                const Vec3 dc = -std::sin(t) * a + std::cos(t) * b;
                const double h = k.gauge(c);
                const double dh = k.gauge_gradient(c).dot(dc);
                return h * h - dh * dh;
            };
            double s = 0.0;
            for (int q = 0; q < 2; ++q)
                s += gauss_integrate(integrand, q * kPi / 2, (q + 1) * kPi / 2, n);
            out.projection[i] = s; // half the full turn, doubled by symmetry
        }
    }
    return out;
}

// ---- Santalo point -------------------------------------------------------

// Minimiser of z -> |(K - z)°| for a body given by its support function.
inline Vec3 santalo_point(const std::function<double(const Vec3&)>& support_fn, const Vec3& start,
                          const SphereGrid& g)
{
    std::vector<double> h(g.size());
    for (std::size_t n = 0; n < g.size(); ++n)
        h[n] = support_fn(g.dirs[n]);
    auto f = [&](const std::vector<double>& z) {
        const Vec3 zz(z[0], z[1], z[2]);
        std::vector<double> t(g.size());
        for (std::size_t n = 0; n < g.size(); ++n) {
            const double d = h[n] - g.dirs[n].dot(zz);
            if (d <= 0)
                return std::numeric_limits<double>::infinity();
            t[n] = g.weight[n] / (3 * d * d * d);
        }
        return stable_sum(t);
    };
    double scale = 0.0;
    for (double v : h)
        scale = std::max(scale, v);
    auto r = nelder_mead(f, {start.x(), start.y(), start.z()}, 0.1 * scale, 1e-8 * std::max(1.0, scale));
    return {r.x[0], r.x[1], r.x[2]};
}

// Exact objective for a polytope given by points (not necessarily symmetric).
// Moving z keeps the face lattice, so the polar is the centroid-based polar
// with each vertex a_i rescaled to a_i / (1 - a_i.(z - c)).
inline Vec3 santalo_point(const std::vector<Vec3>& points)
{
    Vec3 c = Vec3::Zero();
    for (const auto& p : points)
        c += p;
    c /= static_cast<double>(points.size());
    std::vector<Vec3> centred;
    double scale = 0.0;
    for (const auto& p : points) {
        centred.push_back(p - c);
        scale = std::max(scale, (p - c).norm());
    }
    const Polytope base = Polytope::hull(centred);
    const Polytope dual = base.polar();
    auto f = [&](const std::vector<double>& z) {
        const Vec3 d = Vec3(z[0], z[1], z[2]) - c;
        std::vector<Vec3> moved;
        for (const auto& a : dual.vertices()) {
            const double den = 1.0 - a.dot(d);
            if (den <= 1e-12)
                return std::numeric_limits<double>::infinity();
            moved.push_back(a / den);
        }
        double vol = 0.0;
        for (const auto& fc : dual.facets()) {
            std::vector<Vec3> poly;
            for (int v : fc.verts)
                poly.push_back(moved[v]);
            vol += fan_volume(poly);
        }
        return vol;
    };
    auto r = nelder_mead(f, {c.x(), c.y(), c.z()}, 0.05 * scale, 1e-10 * scale);
    return {r.x[0], r.x[1], r.x[2]};
}

inline Vec3 santalo_point(const ConvexBody3& k, const SphereGrid& g)
{
    if (k.polytope()) {
        std::vector<Vec3> v = k.polytope()->vertices();
        return santalo_point(v);
    }
    return santalo_point([&](const Vec3& u) { return k.support(u); }, Vec3::Zero(), g);
}

} // namespace mahler
