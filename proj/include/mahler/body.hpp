#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "polytope.hpp"
#include "sphere_nodes.hpp"

namespace mahler {

class ConvexBody3;
using BodyPtr = std::shared_ptr<const ConvexBody3>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;

// sum |x_i / axes_i|^p <= 1 with 1 < p < inf; p = 1 and p = inf become polytopes.
struct LpBall {
    double p;
    Vec3 axes;
};

// x.Mx <= 1
struct Ellipsoid {
    Mat3 m;
    Mat3 m_inv;
};

// |Wx|_p <= 1 for a rank-3 matrix W, 1 < p < inf.
struct NormBall {
    RowMatrix w;
    double p;
};

// Radial function tabulated on the sphere grid nodes, bilinear in between.
struct RadialField {
    int n_alpha = 0;
    int n_beta = 0;
    std::vector<double> alpha, beta;
    std::vector<double> rho; // alpha-major
    double north = 0, south = 0;

    double at(int i, int j) const { return rho[static_cast<std::size_t>(i) * n_beta + j]; }
    double radial(const Vec3& x) const;
};

struct Transformed {
    BodyPtr base;
    LinearMap3 map;
};

struct PolarOf {
    BodyPtr base;
};

class ConvexBody3 {
public:
    using Rep = std::variant<Polytope, LpBall, Ellipsoid, NormBall, RadialField, Transformed, PolarOf>;

    ConvexBody3(Rep rep, std::string label) : rep_(std::move(rep)), label_(std::move(label)) {}

    const Rep& rep() const { return rep_; }
    const std::string& label() const { return label_; }
    const Polytope* polytope() const { return std::get_if<Polytope>(&rep_); }
    bool is_polytope() const { return polytope() != nullptr; }

    // Bodies whose radial function is only piecewise bilinear.
    bool is_tabulated() const;

    double gauge(const Vec3& x) const;
    double radial(const Vec3& x) const { return 1.0 / gauge(x); }
    double support(const Vec3& u) const;
    // Gradient of the gauge; for polytopes the lowest-index maximal facet normal.
    Vec3 gauge_gradient(const Vec3& x) const;
    // A maximiser of u.x over the body.
    Vec3 support_point(const Vec3& u) const;

private:
    Rep rep_;
    std::string label_;
};

namespace detail {

inline double lp_norm(const Vec3& y, double p)
{
    const double m = y.cwiseAbs().maxCoeff();
    if (m == 0.0)
        return 0.0;
    double s = 0.0;
    for (int i = 0; i < 3; ++i)
        s += std::pow(std::abs(y[i]) / m, p);
    return m * std::pow(s, 1.0 / p);
}

// Gradient of the p-norm at y != 0.
inline Vec3 lp_grad(const Vec3& y, double p)
{
    const double n = lp_norm(y, p);
    Vec3 g;
    for (int i = 0; i < 3; ++i)
        g[i] = std::copysign(std::pow(std::abs(y[i]) / n, p - 1), y[i]);
    return g;
}

inline double norm_p(const Eigen::VectorXd& y, double p)
{
    const double m = y.cwiseAbs().maxCoeff();
    if (m == 0.0)
        return 0.0;
    double s = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i)
        s += std::pow(std::abs(y[i]) / m, p);
    return m * std::pow(s, 1.0 / p);
}

// Boundary point with outward normal along u: Newton on u.x - |Wx|_p^p / p.
inline Vec3 norm_ball_support_point(const NormBall& b, const Vec3& u)
{
    const double p = b.p;
    auto mu = [&](const Vec3& x) { return norm_p(b.w * x, p); };
    auto energy = [&](const Vec3& x) {
        Eigen::VectorXd y = b.w * x;
        double s = 0.0;
        for (Eigen::Index j = 0; j < y.size(); ++j)
            s += std::pow(std::abs(y[j]), p);
        return u.dot(x) - s / p;
    };
    Vec3 x = u / mu(u);
    x *= std::pow(std::max(u.dot(x), 1e-300), 1.0 / (p - 1));
    double e = energy(x);
    for (int it = 0; it < 200; ++it) {
        Eigen::VectorXd y = b.w * x;
        Eigen::VectorXd g(y.size()), d(y.size());
        for (Eigen::Index j = 0; j < y.size(); ++j) {
            const double a = std::max(std::abs(y[j]), 1e-150);
            g[j] = std::copysign(std::pow(a, p - 1), y[j]);
            d[j] = (p - 1) * std::pow(a, p - 2);
        }
        const Vec3 r = u - b.w.transpose() * g;
        if (r.norm() <= 1e-15 * u.norm())
            break;
        const Mat3 h = b.w.transpose() * d.asDiagonal() * b.w;
        const Vec3 dx = h.ldlt().solve(r);
        double step = 1.0;
        Vec3 xn = x + dx;
        double en = energy(xn);
        while (en < e && step > 1e-12) {
            step *= 0.5;
            xn = x + step * dx;
            en = energy(xn);
        }
        const bool tiny = (xn - x).norm() <= 1e-16 * x.norm();
        x = xn;
        e = en;
        if (tiny)
            break;
    }
    return x / mu(x);
}

inline Vec3 numeric_gauge_gradient(const ConvexBody3& k, const Vec3& x)
{
    const double h = 1e-6 * x.norm();
    Vec3 g;
    for (int i = 0; i < 3; ++i) {
        Vec3 e = Vec3::Zero();
        e[i] = h;
        g[i] = (k.gauge(x + e) - k.gauge(x - e)) / (2 * h);
    }
    return g;
}

// Pattern search for max rho(v) u.v on the tabulated surface.
inline Vec3 radial_support_point(const RadialField& r, const Vec3& u)
{
    const Vec3 un = u.normalized();
    Vec3 best = un;
    double fbest = r.radial(un);
    const int si = std::max(1, r.n_alpha / 32), sj = std::max(1, r.n_beta / 64);
    for (int i = 0; i < r.n_alpha; i += si)
        for (int j = 0; j < r.n_beta; j += sj) {
            const Vec3 d = direction(r.alpha[i], r.beta[j]);
            const double f = r.at(i, j) * un.dot(d);
            if (f > fbest) {
                fbest = f;
                best = d;
            }
        }
    auto value = [&](const Vec3& v) { return r.radial(v) * un.dot(v); };
    fbest = value(best);
    double step = 2.0 * kPi / r.n_beta * std::max(si, sj);
    while (step > 1e-11) {
        Vec3 e1 = best.unitOrthogonal();
        Vec3 e2 = best.cross(e1);
        bool moved = false;
        for (const Vec3& d : {e1, Vec3(-e1), e2, Vec3(-e2)}) {
            const Vec3 v = (best + step * d).normalized();
            const double f = value(v);
            if (f > fbest) {
                fbest = f;
                best = v;
                moved = true;
                break;
            }
        }
        if (!moved)
            step *= 0.5;
    }
    return r.radial(best) * best;
}

} // namespace detail

inline double RadialField::radial(const Vec3& x) const
{
    const Vec3 v = x.normalized();
    const double a = std::acos(std::clamp(v.x(), -1.0, 1.0));
    double b = std::atan2(v.z(), v.y());
    if (b < 0)
        b += 2 * kPi;

    // azimuthal bracket, periodic
    int j1 = static_cast<int>(std::upper_bound(beta.begin(), beta.end(), b) - beta.begin());
    int j0 = j1 - 1;
    double b0, b1;
    if (j1 == 0) {
        j0 = n_beta - 1;
        b0 = beta[j0] - 2 * kPi;
        b1 = beta[0];
    } else if (j1 == n_beta) {
        j1 = 0;
        b0 = beta[j0];
        b1 = beta[0] + 2 * kPi;
    } else {
        b0 = beta[j0];
        b1 = beta[j1];
    }
    const double tb = (b - b0) / (b1 - b0);
    auto ring = [&](int i) { return (1 - tb) * at(i, j0) + tb * at(i, j1); };

    if (a <= alpha.front()) {
        const double t = a / alpha.front();
        return (1 - t) * north + t * ring(0);
    }
    if (a >= alpha.back()) {
        const double t = (kPi - a) / (kPi - alpha.back());
        return (1 - t) * south + t * ring(n_alpha - 1);
    }
    const int i1 = static_cast<int>(std::upper_bound(alpha.begin(), alpha.end(), a) - alpha.begin());
    const int i0 = i1 - 1;
    const double ta = (a - alpha[i0]) / (alpha[i1] - alpha[i0]);
    return (1 - ta) * ring(i0) + ta * ring(i1);
}

inline bool ConvexBody3::is_tabulated() const
{
    if (std::holds_alternative<RadialField>(rep_))
        return true;
    if (auto t = std::get_if<Transformed>(&rep_))
        return t->base->is_tabulated();
    if (auto p = std::get_if<PolarOf>(&rep_))
        return p->base->is_tabulated();
    return false;
}

inline double ConvexBody3::gauge(const Vec3& x) const
{
    struct V {
        const Vec3& x;
        double operator()(const Polytope& p) const { return p.gauge(x); }
        double operator()(const LpBall& b) const
        {
            return detail::lp_norm(x.cwiseQuotient(b.axes), b.p);
        }
        double operator()(const Ellipsoid& e) const { return std::sqrt(std::max(0.0, x.dot(e.m * x))); }
        double operator()(const NormBall& b) const { return detail::norm_p(b.w * x, b.p); }
        double operator()(const RadialField& r) const
        {
            const double n = x.norm();
            return n == 0.0 ? 0.0 : n / r.radial(x);
        }
        double operator()(const Transformed& t) const { return t.base->gauge(t.map.inverse() * x); }
        double operator()(const PolarOf& p) const { return p.base->support(x); }
    };
    return std::visit(V{x}, rep_);
}

inline double ConvexBody3::support(const Vec3& u) const
{
    struct V {
        const Vec3& u;
        double operator()(const Polytope& p) const { return p.support(u); }
        double operator()(const LpBall& b) const
        {
            return detail::lp_norm(u.cwiseProduct(b.axes), b.p / (b.p - 1));
        }
        double operator()(const Ellipsoid& e) const { return std::sqrt(std::max(0.0, u.dot(e.m_inv * u))); }
        double operator()(const NormBall& b) const
        {
            return u.norm() == 0.0 ? 0.0 : u.dot(detail::norm_ball_support_point(b, u));
        }
        double operator()(const RadialField& r) const
        {
            // The pattern search is local; searching from both antipodes keeps h even.
            if (u.norm() == 0.0)
                return 0.0;
            return std::max(u.dot(detail::radial_support_point(r, u)), -u.dot(detail::radial_support_point(r, -u)));
        }
        double operator()(const Transformed& t) const
        {
            return t.base->support(t.map.matrix().transpose() * u);
        }
        double operator()(const PolarOf& p) const { return p.base->gauge(u); }
    };
    return std::visit(V{u}, rep_);
}

inline Vec3 ConvexBody3::gauge_gradient(const Vec3& x) const
{
    struct V {
        const ConvexBody3& self;
        const Vec3& x;
        Vec3 operator()(const Polytope& p) const { return p.facets()[p.top_facet(x)].normal; }
        Vec3 operator()(const LpBall& b) const
        {
            return detail::lp_grad(x.cwiseQuotient(b.axes), b.p).cwiseQuotient(b.axes);
        }
        Vec3 operator()(const Ellipsoid& e) const
        {
            const Vec3 mx = e.m * x;
            return mx / std::sqrt(x.dot(mx));
        }
        Vec3 operator()(const NormBall& b) const
        {
            Eigen::VectorXd y = b.w * x;
            const double n = detail::norm_p(y, b.p);
            for (Eigen::Index j = 0; j < y.size(); ++j)
                y[j] = std::copysign(std::pow(std::abs(y[j]) / n, b.p - 1), y[j]);
            return b.w.transpose() * y;
        }
        Vec3 operator()(const RadialField&) const { return detail::numeric_gauge_gradient(self, x); }
        Vec3 operator()(const Transformed& t) const
        {
            return t.map.inverse().transpose() * t.base->gauge_gradient(t.map.inverse() * x);
        }
        Vec3 operator()(const PolarOf& p) const { return p.base->support_point(x); }
    };
    return std::visit(V{*this, x}, rep_);
}

inline Vec3 ConvexBody3::support_point(const Vec3& u) const
{
    struct V {
        const Vec3& u;
        Vec3 operator()(const Polytope& p) const { return p.vertices()[p.top_vertex(u)]; }
        Vec3 operator()(const LpBall& b) const
        {
            const double q = b.p / (b.p - 1);
            return detail::lp_grad(u.cwiseProduct(b.axes), q).cwiseProduct(b.axes);
        }
        Vec3 operator()(const Ellipsoid& e) const
        {
            const Vec3 mu = e.m_inv * u;
            return mu / std::sqrt(u.dot(mu));
        }
        Vec3 operator()(const NormBall& b) const { return detail::norm_ball_support_point(b, u); }
        Vec3 operator()(const RadialField& r) const { return detail::radial_support_point(r, u); }
        Vec3 operator()(const Transformed& t) const
        {
            return t.map(t.base->support_point(t.map.matrix().transpose() * u));
        }
        Vec3 operator()(const PolarOf& p) const { return p.base->gauge_gradient(u); }
    };
    return std::visit(V{u}, rep_);
}

// ---- construction -------------------------------------------------------

inline void check_vertex_symmetry(const std::vector<Vec3>& v)
{
    double scale = 0.0;
    for (const auto& p : v)
        scale = std::max(scale, p.norm());
    for (const auto& p : v) {
        bool found = false;
        for (const auto& q : v)
            if ((p + q).norm() <= 1e-12 * scale) {
                found = true;
                break;
            }
        if (!found)
            throw Error(ErrorKind::NotSymmetric, "vertex without antipode");
    }
}

inline ConvexBody3 make_polytope(const std::vector<Vec3>& vertices, std::string label = "polytope")
{
    check_vertex_symmetry(vertices);
    if (vertices.size() < 6)
        throw Error(ErrorKind::DegenerateBody, "a symmetric polytope needs at least six vertices");
    return ConvexBody3(Polytope::hull(vertices), std::move(label));
}

inline ConvexBody3 make_cube(double r = 1.0)
{
    std::vector<Vec3> v;
    for (int s = 0; s < 8; ++s)
        v.emplace_back(s & 1 ? r : -r, s & 2 ? r : -r, s & 4 ? r : -r);
    return make_polytope(v, "cube");
}

inline ConvexBody3 make_cross_polytope(double r = 1.0)
{
    std::vector<Vec3> v;
    for (int i = 0; i < 3; ++i)
        for (double s : {r, -r}) {
            Vec3 e = Vec3::Zero();
            e[i] = s;
            v.push_back(e);
        }
    return make_polytope(v, "cross-polytope");
}

inline ConvexBody3 make_lp_ball(double p, const Vec3& axes, std::string label = "")
{
    if (label.empty())
        label = "lp";
    if (!(p >= 1.0))
        throw Error(ErrorKind::BadParameter, "p must be at least 1");
    if (!axes.allFinite() || axes.minCoeff() <= 0.0)
        throw Error(ErrorKind::DegenerateBody, "axes must be positive");
    if (p == 1.0) {
        std::vector<Vec3> v;
        for (int i = 0; i < 3; ++i)
            for (double s : {1.0, -1.0}) {
                Vec3 e = Vec3::Zero();
                e[i] = s * axes[i];
                v.push_back(e);
            }
        return make_polytope(v, label);
    }
    if (std::isinf(p)) {
        std::vector<Vec3> v;
        for (int s = 0; s < 8; ++s)
            v.emplace_back(s & 1 ? axes[0] : -axes[0], s & 2 ? axes[1] : -axes[1],
                           s & 4 ? axes[2] : -axes[2]);
        return make_polytope(v, label);
    }
    return ConvexBody3(LpBall{p, axes}, std::move(label));
}

inline ConvexBody3 make_ball(double r = 1.0) { return make_lp_ball(2.0, Vec3::Constant(r), "ball"); }

inline ConvexBody3 make_ellipsoid(const Mat3& m, std::string label = "ellipsoid")
{
    if (!m.allFinite() || (m - m.transpose()).norm() > 1e-12 * m.norm())
        throw Error(ErrorKind::BadParameter, "ellipsoid matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat3> es(m);
    if (es.eigenvalues().minCoeff() <= 1e-12 * es.eigenvalues().maxCoeff())
        throw Error(ErrorKind::DegenerateBody, "ellipsoid matrix must be positive definite");
    const Mat3 sym = 0.5 * (m + m.transpose());
    return ConvexBody3(Ellipsoid{sym, sym.inverse()}, std::move(label));
}

inline ConvexBody3 make_norm_ball(const RowMatrix& w, double p, std::string label = "norm-ball")
{
    if (!(p >= 1.0))
        throw Error(ErrorKind::BadParameter, "p must be at least 1");
    if (!w.allFinite() || w.rows() < 3)
        throw Error(ErrorKind::DegenerateBody, "need at least three finite rows");
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(w);
    const auto& s = svd.singularValues();
    if (s(2) <= 1e-10 * s(0))
        throw Error(ErrorKind::DegenerateBody, "rows do not span space");
    if (p == 2.0)
        return make_ellipsoid(w.transpose() * w, std::move(label));
    if (std::isinf(p) || p == 1.0) {
        // the polar is the hull of the rows (p = inf) or of their signed sums (p = 1)
        std::vector<Vec3> pts;
        if (std::isinf(p)) {
            for (Eigen::Index j = 0; j < w.rows(); ++j) {
                pts.push_back(w.row(j).transpose());
                pts.push_back(-w.row(j).transpose());
            }
        } else {
            if (w.rows() > 16)
                throw Error(ErrorKind::BadParameter, "p = 1 supports at most 16 rows");
            for (long mask = 0; mask < (1L << w.rows()); ++mask) {
                Vec3 v = Vec3::Zero();
                for (Eigen::Index j = 0; j < w.rows(); ++j)
                    v += (mask >> j & 1 ? 1.0 : -1.0) * w.row(j).transpose();
                pts.push_back(v);
            }
        }
        return ConvexBody3(Polytope::hull(pts).polar(), std::move(label));
    }
    return ConvexBody3(NormBall{w, p}, std::move(label));
}

inline ConvexBody3 make_radial_field(int n_alpha, int n_beta, std::vector<double> rho,
                                     std::string label = "radial")
{
    check_grid_size(n_alpha, n_beta);
    if (rho.size() != static_cast<std::size_t>(n_alpha) * n_beta)
        throw Error(ErrorKind::BadParameter, "radial table has the wrong size");
    RadialField r;
    r.n_alpha = n_alpha;
    r.n_beta = n_beta;
    std::vector<double> w;
    alpha_rule(n_alpha, r.alpha, w);
    beta_rule(n_beta, r.beta, w);
    double scale = 0.0;
    for (double v : rho) {
        if (!std::isfinite(v))
            throw Error(ErrorKind::DegenerateBody, "non-finite radial value");
        if (v <= 0.0)
            throw Error(ErrorKind::OriginNotInterior, "radial values must be positive");
        scale = std::max(scale, v);
    }
    r.rho = std::move(rho);
    // antipode of node (i, j) is node (n_alpha-1-i, j + n_beta/2)
    for (int i = 0; i < n_alpha; ++i)
        for (int j = 0; j < n_beta; ++j)
            if (std::abs(r.at(i, j) - r.at(n_alpha - 1 - i, (j + n_beta / 2) % n_beta)) > 1e-12 * scale)
                throw Error(ErrorKind::NotSymmetric, "radial table is not antipodally symmetric");
    double n = 0, s = 0;
    for (int j = 0; j < n_beta; ++j) {
        n += r.at(0, j);
        s += r.at(n_alpha - 1, j);
    }
    r.north = n / n_beta;
    r.south = s / n_beta;
    return ConvexBody3(std::move(r), std::move(label));
}

// ---- operations ---------------------------------------------------------

struct GaugeRadial {
    double gauge;
    double radial;
};

inline GaugeRadial gauge_radial(const ConvexBody3& k, const Vec3& v)
{
    if (!(v.norm() > 0.0))
        throw Error(ErrorKind::ZeroVector, "gauge of the zero vector");
    const double g = k.gauge(v);
    return {g, 1.0 / g};
}

inline double support(const ConvexBody3& k, const Vec3& u)
{
    if (!(u.norm() > 0.0))
        throw Error(ErrorKind::ZeroVector, "support at the zero vector");
    return k.support(u);
}

inline ConvexBody3 apply_linear(const ConvexBody3& k, const LinearMap3& a);

inline ConvexBody3 polar(const ConvexBody3& k)
{
    struct V {
        const ConvexBody3& k;
        ConvexBody3 operator()(const Polytope& p) const { return {p.polar(), k.label()}; }
        ConvexBody3 operator()(const LpBall& b) const
        {
            return {LpBall{b.p / (b.p - 1), b.axes.cwiseInverse()}, k.label()};
        }
        ConvexBody3 operator()(const Ellipsoid& e) const { return {Ellipsoid{e.m_inv, e.m}, k.label()}; }
        ConvexBody3 operator()(const NormBall&) const
        {
            return {PolarOf{std::make_shared<const ConvexBody3>(k)}, k.label()};
        }
        ConvexBody3 operator()(const RadialField&) const
        {
            return {PolarOf{std::make_shared<const ConvexBody3>(k)}, k.label()};
        }
        ConvexBody3 operator()(const Transformed& t) const
        {
            return apply_linear(polar(*t.base), t.map.inverse_transpose());
        }
        ConvexBody3 operator()(const PolarOf& p) const { return *p.base; }
    };
    return std::visit(V{k}, k.rep());
}

inline ConvexBody3 apply_linear(const ConvexBody3& k, const LinearMap3& a)
{
    struct V {
        const ConvexBody3& k;
        const LinearMap3& a;
        ConvexBody3 operator()(const Polytope& p) const { return {p.mapped(a), k.label()}; }
        ConvexBody3 operator()(const LpBall&) const
        {
            return {Transformed{std::make_shared<const ConvexBody3>(k), a}, k.label()};
        }
        ConvexBody3 operator()(const Ellipsoid& e) const
        {
            const Mat3 m = a.inverse().transpose() * e.m * a.inverse();
            const Mat3 sym = 0.5 * (m + m.transpose());
            const Mat3 mi = a.matrix() * e.m_inv * a.matrix().transpose();
            return {Ellipsoid{sym, 0.5 * (mi + mi.transpose())}, k.label()};
        }
        ConvexBody3 operator()(const NormBall& b) const
        {
            return {NormBall{b.w * a.inverse(), b.p}, k.label()};
        }
        ConvexBody3 operator()(const RadialField&) const
        {
            return {Transformed{std::make_shared<const ConvexBody3>(k), a}, k.label()};
        }
        ConvexBody3 operator()(const Transformed& t) const
        {
            return {Transformed{t.base, a * t.map}, k.label()};
        }
        ConvexBody3 operator()(const PolarOf& p) const
        {
            return polar(apply_linear(*p.base, a.inverse_transpose()));
        }
    };
    return std::visit(V{k, a}, k.rep());
}

inline ConvexBody3 apply_linear(const ConvexBody3& k, const Mat3& m) { return apply_linear(k, LinearMap3(m)); }

enum class TieBreak { LowestIndex, DualFaceMean };

// Outward normal map on the boundary, scaled so that Lambda(x).x = 1.
inline Vec3 boundary_map(const ConvexBody3& k, const Vec3& x, TieBreak tie = TieBreak::LowestIndex)
{
    const double g = k.gauge(x);
    if (std::abs(g - 1.0) > 1e-8)
        throw Error(ErrorKind::NotOnBoundary, "gauge is " + std::to_string(g));
    if (auto p = k.polytope(); p && tie == TieBreak::DualFaceMean) {
        Vec3 m = Vec3::Zero();
        const auto act = p->active_facets(x);
        for (int i : act)
            m += p->facets()[i].normal;
        return m / static_cast<double>(act.size());
    }
    return k.gauge_gradient(x);
}

} // namespace mahler
