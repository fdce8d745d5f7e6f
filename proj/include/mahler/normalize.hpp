#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "body.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"

namespace mahler {

struct BalanceAngles {
    double theta_cap = kPi / 2;
    double phi_cap = kPi / 2;
    double psi_cap = kPi / 2;
};

// Coordinates of the rotation domain with theta = s * (pi - Theta(0, phi, psi)).
struct BoxPoint {
    double s = 0;
    double phi = 0;
    double psi = 0;
};

struct FieldValue {
    double f = 0, g = 0, h = 0;
    double norm() const { return std::sqrt(f * f + g * g + h * h); }
};

// Integral of a smooth pi-periodic function from equispaced samples, through
// its trigonometric interpolant.
class PeriodicIntegral {
public:
    explicit PeriodicIntegral(const std::vector<double>& y) : n_(static_cast<int>(y.size()))
    {
        const int half = n_ / 2;
        a_.assign(half + 1, 0.0);
        b_.assign(half + 1, 0.0);
        for (int m = 0; m <= half; ++m) {
            double sa = 0, sb = 0;
            for (int k = 0; k < n_; ++k) {
                const double x = 2.0 * m * kPi * k / n_;
                sa += y[k] * std::cos(x);
                sb += y[k] * std::sin(x);
            }
            const double scale = (m == 0 || (n_ % 2 == 0 && m == half)) ? 1.0 / n_ : 2.0 / n_;
            a_[m] = sa * scale;
            b_[m] = (n_ % 2 == 0 && m == half) ? 0.0 : sb * scale;
        }
    }

    // Sample k sits at k * pi / n.
    static double node(int k, int n) { return kPi * k / n; }

    double value(double x) const
    {
        double s = a_[0];
        for (std::size_t m = 1; m < a_.size(); ++m)
            s += a_[m] * std::cos(2.0 * m * x) + b_[m] * std::sin(2.0 * m * x);
        return s;
    }

    // Integral over [0, x].
    double integral(double x) const
    {
        double s = a_[0] * x;
        for (std::size_t m = 1; m < a_.size(); ++m) {
            const double w = 2.0 * m;
            s += a_[m] * std::sin(w * x) / w - b_[m] * (std::cos(w * x) - 1.0) / w;
        }
        return s;
    }

    double period_integral() const { return a_[0] * kPi; }

private:
    int n_;
    std::vector<double> a_, b_;
};

namespace detail {

template <class F>
double solve_increasing(F&& f, double lo, double hi, double tol = 1e-13)
{
    double flo = f(lo), fhi = f(hi);
    if (flo >= 0)
        return lo;
    if (fhi <= 0)
        return hi;
    std::uintmax_t iters = 200;
    auto r = boost::math::tools::toms748_solve(
        f, lo, hi, flo, fhi, [tol](double a, double b) { return std::abs(b - a) <= tol; }, iters);
    return 0.5 * (r.first + r.second);
}

inline int profile_samples(const SphereGrid& g) { return std::max(64, g.n_beta / 2); }

// beta -> integral over alpha of rho^3 sin(alpha), sampled on [0, pi).
inline PeriodicIntegral azimuth_profile(const ConvexBody3& k, const SphereGrid& g)
{
    const int n = std::max(32, g.n_beta / 2);
    std::vector<double> y(n);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t j) {
        const double b = PeriodicIntegral::node(static_cast<int>(j), n);
        std::vector<double> t(g.n_alpha);
        for (int i = 0; i < g.n_alpha; ++i) {
            const double r = k.radial(direction(g.alpha[i], b));
            t[i] = g.w_alpha[i] * r * r * r;
        }
        y[j] = stable_sum(t);
    });
    return PeriodicIntegral(y);
}

// t -> rho^2(cos t a + sin t b), sampled on [0, pi).
inline PeriodicIntegral circle_profile(const ConvexBody3& k, const Vec3& a, const Vec3& b, int n)
{
    std::vector<double> y(n);
    for (int j = 0; j < n; ++j) {
        const double t = PeriodicIntegral::node(j, n);
        const double r = k.radial(std::cos(t) * a + std::sin(t) * b);
        y[j] = r * r;
    }
    return PeriodicIntegral(y);
}

inline double polytope_theta_residual(const Polytope& p, double th)
{
    const Vec3 up = Vec3::UnitZ();
    const Vec3 cut(0, std::sin(th), -std::cos(th));
    const std::array<Vec3, 2> below{up, cut}, above{up, Vec3(-cut)};
    return p.cone_volume(below) - p.cone_volume(above);
}

inline double sector(const Polytope& p, const Vec3& u, const Vec3& w)
{
    const double c = u.cross(w).norm();
    return c < 1e-15 ? 0.0 : 0.5 * c * p.inverse_square_integral(u, w);
}

inline double polytope_half_circle_residual(const Polytope& p, const Vec3& a, const Vec3& b, double t)
{
    const Vec3 m = std::cos(t) * a + std::sin(t) * b;
    auto part = [&](const Vec3& u, const Vec3& w) {
        if (u.dot(w) < 0) {
            const Vec3 mid = (u + w).norm() > 1e-12 ? Vec3((u + w).normalized()) : b;
            return sector(p, u, mid) + sector(p, mid, w);
        }
        return sector(p, u, w);
    };
    const double half = part(a, b) + part(b, -a);
    return 2.0 * part(a, m) - half;
}

} // namespace detail

// Residual of the Theta balance: half-space volume on [0, th] minus that on [th, pi].
inline double theta_balance_residual(const ConvexBody3& k, const SphereGrid& g, double th)
{
    if (auto p = k.polytope())
        return detail::polytope_theta_residual(*p, th);
    const auto prof = detail::azimuth_profile(k, g);
    return (2.0 * prof.integral(th) - prof.period_integral()) / 3.0;
}

inline double theta_cap(const ConvexBody3& k, const SphereGrid& g)
{
    if (auto p = k.polytope())
        return detail::solve_increasing([&](double t) { return detail::polytope_theta_residual(*p, t); },
                                        0.0, kPi, 1e-13);
    const auto prof = detail::azimuth_profile(k, g);
    const double total = prof.period_integral();
    return detail::solve_increasing([&](double t) { return 2.0 * prof.integral(t) - total; }, 0.0, kPi,
                                    1e-14);
}

// Angle t in (0, pi) splitting the half-disc of the section spanned by
// a (t = 0) and b (t = pi/2) into two parts of equal area.
inline double half_circle_balance(const ConvexBody3& k, const SphereGrid& g, const Vec3& a, const Vec3& b)
{
    if (auto p = k.polytope())
        return detail::solve_increasing(
            [&](double t) { return detail::polytope_half_circle_residual(*p, a, b, t); }, 0.0, kPi, 1e-13);
    const auto prof = detail::circle_profile(k, a, b, detail::profile_samples(g));
    const double total = prof.period_integral();
    return detail::solve_increasing([&](double t) { return 2.0 * prof.integral(t) - total; }, 0.0, kPi,
                                    1e-14);
}

inline BalanceAngles balance_angles(const ConvexBody3& k, const SphereGrid& g)
{
    BalanceAngles out;
    out.theta_cap = theta_cap(k, g);
    out.phi_cap = half_circle_balance(k, g, Vec3::UnitX(), Vec3::UnitY());
    const Vec3 w(0, std::cos(out.theta_cap), std::sin(out.theta_cap));
    out.psi_cap = half_circle_balance(k, g, Vec3::UnitX(), w);
    return out;
}

// Inverse of the unit upper-triangular matrix with entries
// cot Phi, cot Psi / sin Theta, cot Theta.
inline LinearMap3 shear_matrix(const BalanceAngles& a)
{
    const double u12 = std::cos(a.phi_cap) / std::sin(a.phi_cap);
    const double u13 = std::cos(a.psi_cap) / (std::sin(a.psi_cap) * std::sin(a.theta_cap));
    const double u23 = std::cos(a.theta_cap) / std::sin(a.theta_cap);
    Mat3 m;
    m << 1, -u12, u12 * u23 - u13, 0, 1, -u23, 0, 0, 1;
    return LinearMap3(m);
}

inline LinearMap3 shear(const ConvexBody3& k, const SphereGrid& g) { return shear_matrix(balance_angles(k, g)); }

inline Mat3 rotation(double theta, double phi, double psi) { return rot_x(theta) * rot_y(phi) * rot_z(psi); }

inline ConvexBody3 rotate(const ConvexBody3& k, double theta, double phi, double psi)
{
    return apply_linear(k, LinearMap3(rotation(theta, phi, psi)));
}

// Delta_1..Delta_4.
inline std::array<double, 4> upper_octant_volumes(const ConvexBody3& k, const SphereGrid& g)
{
    std::array<double, 4> out{};
    if (auto p = k.polytope()) {
        for (int i = 0; i < 4; ++i) {
            const auto hs = octant_halfspaces(i);
            out[i] = p->cone_volume(hs);
        }
        return out;
    }
    const std::size_t half = static_cast<std::size_t>(g.n_beta / 2);
    std::vector<double> val(static_cast<std::size_t>(g.n_alpha) * half);
    parallel_for(val.size(), [&](std::size_t n) {
        const std::size_t i = n / half, j = n % half;
        const std::size_t node = i * g.n_beta + j;
        const double r = k.radial(g.dirs[node]);
        val[n] = g.weight[node] * r * r * r / 3.0;
    });
    std::array<std::vector<double>, 4> parts;
    for (std::size_t n = 0; n < val.size(); ++n) {
        const std::size_t i = n / half, j = n % half;
        parts[g.octant[i * g.n_beta + j]].push_back(val[n]);
    }
    for (int i = 0; i < 4; ++i)
        out[i] = stable_sum(parts[i]);
    return out;
}

// F, G, H of a body, together with the normalisation data used for it.
struct FieldEval {
    FieldValue value;
    BalanceAngles angles;
    LinearMap3 shear;
};

inline FieldEval field_of_body(const ConvexBody3& l, const SphereGrid& g)
{
    FieldEval out;
    out.angles = balance_angles(l, g);
    out.shear = shear_matrix(out.angles);
    const ConvexBody3 m = apply_linear(l, out.shear);
    const auto d = upper_octant_volumes(m, g);
    const int n = sector_nodes(g);
    const double od = sector_area(m, Vec3::UnitY(), Vec3::UnitZ(), n);
    const double oe = sector_area(m, Vec3::UnitZ(), -Vec3::UnitY(), n);
    out.value = {od - oe, d[0] + d[2] - d[1] - d[3], d[0] + d[3] - d[1] - d[2]};
    return out;
}

inline double box_theta(const ConvexBody3& k, const BoxPoint& p, const SphereGrid& g)
{
    return p.s * (kPi - theta_cap(rotate(k, 0.0, p.phi, p.psi), g));
}

inline FieldValue fgh_at_angles(const ConvexBody3& k, double theta, double phi, double psi, const SphereGrid& g)
{
    return field_of_body(rotate(k, theta, phi, psi), g).value;
}

inline FieldValue fgh(const ConvexBody3& k, const BoxPoint& p, const SphereGrid& g)
{
    return fgh_at_angles(k, box_theta(k, p, g), p.phi, p.psi, g);
}

struct ConditionResiduals {
    std::array<double, 3> r22{}; // |O*f|-|O*g|, |O*h|-|O*i|, D1+D2-D3-D4
    std::array<double, 4> r23{}; // D1-D2, D1-D3, D1-D4, |O*d|-|O*e|

    double max22() const
    {
        double m = 0;
        for (double v : r22)
            m = std::max(m, std::abs(v));
        return m;
    }
    double max23() const
    {
        double m = 0;
        for (double v : r23)
            m = std::max(m, std::abs(v));
        return m;
    }
};

inline ConditionResiduals condition_residuals(const ConvexBody3& k, const SphereGrid& g)
{
    const auto d = upper_octant_volumes(k, g);
    const auto q = quarter_areas(k, g);
    ConditionResiduals r;
    r.r22 = {q[2] - q[3], q[4] - q[5], d[0] + d[1] - d[2] - d[3]};
    r.r23 = {d[0] - d[1], d[0] - d[2], d[0] - d[3], q[0] - q[1]};
    return r;
}

// ---- identities of the field ---------------------------------------------

inline double gamma_psi(const ConvexBody3& k, double psi, double theta, const SphereGrid& g)
{
    return kPi - theta_cap(rotate(k, theta, 0.0, psi), g) + theta;
}

// Reparametrisation of the theta = 0 face onto the theta = pi - Theta face.
inline double t_psi(const ConvexBody3& k, double psi, double s, const SphereGrid& g)
{
    const double top = kPi - theta_cap(rotate(k, 0.0, 0.0, psi), g);
    const double target = kPi - (kPi - top) * s;
    const double th = detail::solve_increasing(
        [&](double t) { return gamma_psi(k, psi, t, g) - target; }, 0.0, top, 1e-13);
    return th / top;
}

enum class ResidualKind { Angle, Measure };

struct SymmetryResidual {
    std::string name;
    ResidualKind kind;
    double value; // absolute difference of the two sides
};

inline std::vector<SymmetryResidual> symmetry_residuals(const ConvexBody3& k, const BoxPoint& p,
                                                        const SphereGrid& g)
{
    std::vector<SymmetryResidual> out;
    auto angle = [&](std::string n, double v) { out.push_back({std::move(n), ResidualKind::Angle, std::abs(v)}); };
    auto measure = [&](std::string n, double v) {
        out.push_back({std::move(n), ResidualKind::Measure, std::abs(v)});
    };

    const double th = box_theta(k, p, g);
    const ConvexBody3 kp = rotate(k, th, p.phi, p.psi);
    const FieldEval base = field_of_body(kp, g);
    const BalanceAngles& a = base.angles;
    const FieldValue& v = base.value;

    {
        const FieldEval l = field_of_body(apply_linear(kp, LinearMap3(rot_x(kPi - a.theta_cap))), g);
        angle("Theta(K)+Theta(X(pi-Theta)K)-pi", a.theta_cap + l.angles.theta_cap - kPi);
        angle("Phi(X(pi-Theta)K)-(pi-Psi(K))", l.angles.phi_cap - (kPi - a.psi_cap));
        angle("Psi(X(pi-Theta)K)-Phi(K)", l.angles.psi_cap - a.phi_cap);
        measure("F(X(pi-Theta)K)+F(K)", l.value.f + v.f);
        measure("G(X(pi-Theta)K)+H(K)", l.value.g + v.h);
        measure("H(X(pi-Theta)K)-G(K)", l.value.h - v.g);
    }
    {
        const FieldEval l = field_of_body(apply_linear(kp, LinearMap3(rot_x(kPi))), g);
        angle("Theta(X(pi)K)-Theta(K)", l.angles.theta_cap - a.theta_cap);
        angle("Phi(X(pi)K)-(pi-Phi(K))", l.angles.phi_cap - (kPi - a.phi_cap));
        angle("Psi(X(pi)K)-(pi-Psi(K))", l.angles.psi_cap - (kPi - a.psi_cap));
        measure("F(X(pi)K)-F(K)", l.value.f - v.f);
        measure("G(X(pi)K)+G(K)", l.value.g + v.g);
        measure("H(X(pi)K)+H(K)", l.value.h + v.h);
    }
    {
        const FieldEval l = field_of_body(apply_linear(kp, LinearMap3(rot_y(kPi))), g);
        angle("Theta(Y(pi)K)-(pi-Theta(K))", l.angles.theta_cap - (kPi - a.theta_cap));
        angle("Phi(Y(pi)K)-(pi-Phi(K))", l.angles.phi_cap - (kPi - a.phi_cap));
        angle("Psi(Y(pi)K)-Psi(K)", l.angles.psi_cap - a.psi_cap);
        measure("F(Y(pi)K)+F(K)", l.value.f + v.f);
        measure("G(Y(pi)K)+G(K)", l.value.g + v.g);
        measure("H(Y(pi)K)-H(K)", l.value.h - v.h);
    }
    {
        const FieldEval l = field_of_body(apply_linear(kp, LinearMap3(rot_z(kPi))), g);
        angle("Theta(Z(pi)K)-(pi-Theta(K))", l.angles.theta_cap - (kPi - a.theta_cap));
        angle("Phi(Z(pi)K)-Phi(K)", l.angles.phi_cap - a.phi_cap);
        angle("Psi(Z(pi)K)-(pi-Psi(K))", l.angles.psi_cap - (kPi - a.psi_cap));
        measure("F(Z(pi)K)+F(K)", l.value.f + v.f);
        measure("G(Z(pi)K)-G(K)", l.value.g - v.g);
        measure("H(Z(pi)K)+H(K)", l.value.h + v.h);
    }

    // faces of the box
    {
        const FieldValue f0 = fgh(k, {0.0, p.phi, p.psi}, g);
        const FieldValue f1 = fgh(k, {1.0, p.phi, p.psi}, g);
        measure("F(1,phi,psi)+F(0,phi,psi)", f1.f + f0.f);
        measure("G(1,phi,psi)+H(0,phi,psi)", f1.g + f0.h);
        measure("H(1,phi,psi)-G(0,phi,psi)", f1.h - f0.g);
    }
    {
        const double t = t_psi(k, p.psi, p.s, g);
        const FieldValue fa = fgh(k, {p.s, kPi, p.psi}, g);
        const FieldValue fb = fgh(k, {t, 0.0, p.psi}, g);
        measure("F(s,pi,psi)-F(T(s),0,psi)", fa.f - fb.f);
        measure("G(s,pi,psi)+H(T(s),0,psi)", fa.g + fb.h);
        measure("H(s,pi,psi)+G(T(s),0,psi)", fa.h + fb.g);
    }
    {
        const FieldValue fa = fgh(k, {p.s, p.phi, kPi}, g);
        const FieldValue fb = fgh(k, {p.s, kPi - p.phi, 0.0}, g);
        measure("F(s,phi,pi)-F(s,pi-phi,0)", fa.f - fb.f);
        measure("G(s,phi,pi)+G(s,pi-phi,0)", fa.g + fb.g);
        measure("H(s,phi,pi)+H(s,pi-phi,0)", fa.h + fb.h);
    }
    {
        const double t00 = theta_cap(rotate(k, 0.0, 0.0, p.psi), g);
        angle("Theta(0,pi,psi)-(pi-Theta(0,0,psi))", theta_cap(rotate(k, 0.0, kPi, p.psi), g) - (kPi - t00));
        angle("Theta(0,phi,pi)-Theta(0,pi-phi,0)",
              theta_cap(rotate(k, 0.0, p.phi, kPi), g) - theta_cap(rotate(k, 0.0, kPi - p.phi, 0.0), g));
        angle("Gamma(pi-Theta(0,0,psi))-pi", gamma_psi(k, p.psi, kPi - t00, g) - kPi);
        angle("T(0)-1", t_psi(k, p.psi, 0.0, g) - 1.0);
        angle("T(1)", t_psi(k, p.psi, 1.0, g));
        angle("T_pi(T_0(s))-s", t_psi(k, kPi, t_psi(k, 0.0, p.s, g), g) - p.s);
    }
    return out;
}

// ---- winding number on the theta = 0 face ----------------------------------

struct WindingSample {
    double t;
    double g;
    double h;
    double angle; // accumulated
};

struct WindingTrace {
    std::vector<WindingSample> samples;
    int winding = 0;
};

// (phi, psi) along the boundary of the theta = 0 face, t in [0, 4 pi].
inline std::array<double, 2> contour_point(double t)
{
    if (t <= kPi)
        return {t, 0.0};
    if (t <= 2 * kPi)
        return {kPi, t - kPi};
    if (t <= 3 * kPi)
        return {3 * kPi - t, kPi};
    return {0.0, 4 * kPi - t};
}

inline WindingTrace winding(const ConvexBody3& k, int n_samples, const SphereGrid& g)
{
    if (n_samples < 4)
        throw Error(ErrorKind::BadParameter, "need at least four contour samples");
    const double vol = volume(k, g);
    constexpr std::size_t cap = std::size_t(1) << 20;

    auto eval = [&](double t) {
        const auto [phi, psi] = contour_point(t);
        const FieldValue v = fgh_at_angles(k, 0.0, phi, psi, g);
        if (std::hypot(v.g, v.h) < 1e-9 * vol)
            throw Error(ErrorKind::NotGeneric, "G and H vanish on the contour at t = " + std::to_string(t));
        return WindingSample{t, v.g, v.h, 0.0};
    };
    auto step = [](const WindingSample& a, const WindingSample& b) {
        return std::atan2(a.g * b.h - a.h * b.g, a.g * b.g + a.h * b.h);
    };

    std::vector<WindingSample> pts(n_samples + 1);
    parallel_for(pts.size(), [&](std::size_t i) { pts[i] = eval(4 * kPi * i / n_samples); });

    std::vector<WindingSample> out;
    out.push_back(pts[0]);
    for (std::size_t i = 1; i < pts.size(); ++i) {
        std::vector<WindingSample> stack{pts[i]};
        while (!stack.empty()) {
            const WindingSample& a = out.back();
            const WindingSample b = stack.back();
            if (std::abs(step(a, b)) >= kPi / 2) {
                if (out.size() + stack.size() + (pts.size() - i) > cap || b.t - a.t < 1e-12)
                    throw Error(ErrorKind::NoConvergence, "contour refinement exceeded its budget");
                stack.push_back(eval(0.5 * (a.t + b.t)));
                continue;
            }
            out.push_back(b);
            stack.pop_back();
        }
    }
    out[0].angle = std::atan2(out[0].h, out[0].g);
    for (std::size_t i = 1; i < out.size(); ++i)
        out[i].angle = out[i - 1].angle + step(out[i - 1], out[i]);
    WindingTrace tr;
    const double total = out.back().angle - out.front().angle;
    tr.winding = static_cast<int>(std::lround(total / (2 * kPi)));
    if (std::abs(total - 2 * kPi * tr.winding) > 1e-6)
        throw Error(ErrorKind::NoConvergence, "contour did not close");
    tr.samples = std::move(out);
    return tr;
}

// ---- zero finder ----------------------------------------------------------

struct NormalizationOptions {
    int scan = 9;
    int max_depth = 12;
    int newton_starts = 6;
    int max_restarts = 3;
    std::uint64_t seed = 1;
};

struct NormalizationResult {
    BoxPoint box;
    std::array<double, 3> angles{}; // theta, phi, psi
    BalanceAngles balance;
    LinearMap3 shear;
    Mat3 pre_rotation = Mat3::Identity();
    std::optional<ConvexBody3> normalized_body;
    ConditionResiduals residuals;
    FieldValue field;
    double fgh_norm = 0;
    double volume = 0;
    int evaluations = 0;
};

namespace detail {

class FieldSampler {
public:
    FieldSampler(const ConvexBody3& k, const SphereGrid& g) : k_(k), g_(g) {}

    FieldValue operator()(const BoxPoint& p)
    {
        ++count;
        return fgh_at_angles(k_, p.s * (kPi - theta0(p.phi, p.psi)), p.phi, p.psi, g_);
    }

    double theta0(double phi, double psi)
    {
        auto key = std::make_pair(phi, psi);
        {
            std::lock_guard lock(mtx_);
            auto it = cache_.find(key);
            if (it != cache_.end())
                return it->second;
        }
        const double t = theta_cap(rotate(k_, 0.0, phi, psi), g_);
        std::lock_guard lock(mtx_);
        cache_[key] = t;
        return t;
    }

    std::atomic<int> count{0};

private:
    const ConvexBody3& k_;
    const SphereGrid& g_;
    std::mutex mtx_;
    std::map<std::pair<double, double>, double> cache_;
};

inline Eigen::Vector3d as_vec(const FieldValue& v) { return {v.f, v.g, v.h}; }

inline BoxPoint clamp_box(const Eigen::Vector3d& x)
{
    return {std::clamp(x[0], 0.0, 1.0), std::clamp(x[1], 0.0, kPi), std::clamp(x[2], 0.0, kPi)};
}

// Damped Newton in box coordinates, central-difference Jacobian.
inline std::pair<BoxPoint, FieldValue> newton(FieldSampler& f, BoxPoint p, FieldValue fp, double target)
{
    constexpr double h = 1e-4;
    for (int it = 0; it < 40 && fp.norm() > target; ++it) {
        Eigen::Matrix3d jac;
        const Eigen::Vector3d x(p.s, p.phi, p.psi);
        const double hi[3] = {1.0, kPi, kPi};
        for (int c = 0; c < 3; ++c) {
            Eigen::Vector3d xp = x, xm = x;
            xp[c] = std::min(x[c] + h, hi[c]);
            xm[c] = std::max(x[c] - h, 0.0);
            jac.col(c) = (as_vec(f(clamp_box(xp))) - as_vec(f(clamp_box(xm)))) / (xp[c] - xm[c]);
        }
        const Eigen::Vector3d dx = jac.completeOrthogonalDecomposition().solve(-as_vec(fp));
        double lambda = 1.0;
        bool improved = false;
        for (int k = 0; k < 20; ++k, lambda *= 0.5) {
            const BoxPoint q = clamp_box(x + lambda * dx);
            const FieldValue fq = f(q);
            if (fq.norm() < fp.norm()) {
                p = q;
                fp = fq;
                improved = true;
                break;
            }
        }
        if (!improved)
            break;
    }
    return {p, fp};
}

// Brouwer degree estimate of the field over a box from its corner values:
// signed solid angles of the image of the twelve boundary triangles.
inline int corner_degree(const std::array<Eigen::Vector3d, 8>& v)
{
    // corner index bits: s, phi, psi
    static const int faces[6][4] = {{0, 2, 6, 4}, {1, 5, 7, 3}, {0, 4, 5, 1},
                                    {2, 3, 7, 6}, {0, 1, 3, 2}, {4, 6, 7, 5}};
    double total = 0.0;
    for (const auto& f : faces) {
        for (int t = 0; t < 2; ++t) {
            const Eigen::Vector3d a = v[f[0]].normalized();
            const Eigen::Vector3d b = v[f[1 + t]].normalized();
            const Eigen::Vector3d c = v[f[2 + t]].normalized();
            total += 2.0 * std::atan2(a.dot(b.cross(c)), 1.0 + a.dot(b) + b.dot(c) + c.dot(a));
        }
    }
    return static_cast<int>(std::lround(total / (4 * kPi)));
}

inline bool signs_straddle(const std::array<Eigen::Vector3d, 8>& v)
{
    for (int c = 0; c < 3; ++c) {
        double lo = 1e300, hi = -1e300;
        for (const auto& x : v) {
            lo = std::min(lo, x[c]);
            hi = std::max(hi, x[c]);
        }
        if (lo > 0 || hi < 0)
            return false;
    }
    return true;
}

struct Cell {
    Eigen::Vector3d lo, hi;
    std::array<Eigen::Vector3d, 8> val;
    int depth;
};

inline Eigen::Vector3d corner(const Cell& c, int bits)
{
    return {bits & 1 ? c.hi[0] : c.lo[0], bits & 2 ? c.hi[1] : c.lo[1], bits & 4 ? c.hi[2] : c.lo[2]};
}

inline std::optional<std::pair<BoxPoint, FieldValue>> search_zero(FieldSampler& f, double vol,
                                                                  const NormalizationOptions& opt)
{
    const double target = 1e-11 * vol;
    const double accept = 1e-8 * vol;
    const int m = std::max(2, opt.scan);
    auto lex_less = [](const BoxPoint& a, const BoxPoint& b) {
        return std::tie(a.s, a.phi, a.psi) < std::tie(b.s, b.phi, b.psi);
    };

    FieldValue origin = f({0, 0, 0});
    if (origin.norm() <= target)
        return std::make_pair(BoxPoint{0, 0, 0}, origin);

    // coarse scan
    std::vector<BoxPoint> pts;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k)
                pts.push_back({double(i) / (m - 1), kPi * j / (m - 1), kPi * k / (m - 1)});
    for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k)
            f.theta0(pts[j * m + k].phi, pts[j * m + k].psi);
    std::vector<FieldValue> val(pts.size());
    parallel_for(pts.size(), [&](std::size_t n) { val[n] = f(pts[n]); });

    std::vector<std::pair<BoxPoint, FieldValue>> zeros;
    auto consider = [&](const std::pair<BoxPoint, FieldValue>& z) {
        if (z.second.norm() > accept)
            return;
        for (const auto& q : zeros)
            if (std::abs(q.first.s - z.first.s) + std::abs(q.first.phi - z.first.phi) +
                    std::abs(q.first.psi - z.first.psi) < 1e-6)
                return;
        zeros.push_back(z);
    };

    std::vector<std::size_t> order(pts.size());
    for (std::size_t n = 0; n < order.size(); ++n)
        order[n] = n;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return val[a].norm() < val[b].norm(); });

    // cells of the scan with a sign-feasible corner pattern
    std::vector<Cell> cells;
    auto idx = [&](int i, int j, int k) { return (static_cast<std::size_t>(i) * m + j) * m + k; };
    for (int i = 0; i + 1 < m; ++i)
        for (int j = 0; j + 1 < m; ++j)
            for (int k = 0; k + 1 < m; ++k) {
                Cell c;
                c.lo = {pts[idx(i, j, k)].s, pts[idx(i, j, k)].phi, pts[idx(i, j, k)].psi};
                c.hi = {pts[idx(i + 1, j + 1, k + 1)].s, pts[idx(i + 1, j + 1, k + 1)].phi,
                        pts[idx(i + 1, j + 1, k + 1)].psi};
                c.depth = 0;
                for (int b = 0; b < 8; ++b)
                    c.val[b] = as_vec(val[idx(i + (b & 1), j + (b >> 1 & 1), k + (b >> 2 & 1))]);
                if (signs_straddle(c.val))
                    cells.push_back(c);
            }
    auto cell_rank = [](const Cell& c) {
        double mn = 1e300;
        for (const auto& v : c.val)
            mn = std::min(mn, v.norm());
        return std::make_pair(corner_degree(c.val) == 0 ? 1 : 0, mn);
    };
    std::stable_sort(cells.begin(), cells.end(),
                     [&](const Cell& a, const Cell& b) { return cell_rank(a) < cell_rank(b); });

    // Newton from the most promising scan points and feasible cell centres
    std::vector<BoxPoint> starts;
    for (std::size_t n = 0; n < order.size() && static_cast<int>(starts.size()) < opt.newton_starts; ++n)
        starts.push_back(pts[order[n]]);
    for (std::size_t n = 0; n < cells.size() && n < 4; ++n) {
        const Eigen::Vector3d c = 0.5 * (cells[n].lo + cells[n].hi);
        starts.push_back({c[0], c[1], c[2]});
    }
    for (const auto& s : starts)
        consider(newton(f, s, f(s), target));

    // subdivision of feasible cells, depth first by rank
    std::vector<Cell> stack(cells.rbegin(), cells.rend());
    int visits = 0;
    while (zeros.empty() && !stack.empty() && visits < 400) {
        Cell c = stack.back();
        stack.pop_back();
        ++visits;
        int best = 0;
        for (int b = 1; b < 8; ++b)
            if (c.val[b].norm() < c.val[best].norm())
                best = b;
        const Eigen::Vector3d x0 = corner(c, best);
        const BoxPoint s0{x0[0], x0[1], x0[2]};
        consider(newton(f, s0, f(s0), target));
        const Eigen::Vector3d mid = 0.5 * (c.lo + c.hi);
        const BoxPoint sm{mid[0], mid[1], mid[2]};
        consider(newton(f, sm, f(sm), target));
        if (!zeros.empty() || c.depth + 1 >= opt.max_depth)
            continue;
        std::vector<Cell> kids;
        for (int b = 0; b < 8; ++b) {
            Cell k;
            k.depth = c.depth + 1;
            for (int d = 0; d < 3; ++d) {
                const bool up = b >> d & 1;
                k.lo[d] = up ? mid[d] : c.lo[d];
                k.hi[d] = up ? c.hi[d] : mid[d];
            }
            for (int q = 0; q < 8; ++q) {
                const Eigen::Vector3d x = corner(k, q);
                k.val[q] = as_vec(f(clamp_box(x)));
            }
            if (signs_straddle(k.val))
                kids.push_back(k);
        }
        std::stable_sort(kids.begin(), kids.end(),
                         [&](const Cell& a, const Cell& b) { return cell_rank(a) < cell_rank(b); });
        for (auto it = kids.rbegin(); it != kids.rend(); ++it)
            stack.push_back(*it);
    }

    if (zeros.empty())
        return std::nullopt;
    // Norms below the Newton target are quadrature noise and count as ties.
    std::stable_sort(zeros.begin(), zeros.end(), [&](const auto& a, const auto& b) {
        const double na = std::max(a.second.norm(), target), nb = std::max(b.second.norm(), target);
        if (na != nb)
            return na < nb;
        return lex_less(a.first, b.first);
    });
    return zeros.front();
}

inline Mat3 random_rotation(std::mt19937_64& rng)
{
    std::normal_distribution<double> n;
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    return q.toRotationMatrix();
}

} // namespace detail

inline NormalizationResult find_normalization(const ConvexBody3& k, const SphereGrid& g,
                                              const NormalizationOptions& opt = {})
{
    const double vol = volume(k, g);
    std::mt19937_64 rng(opt.seed);
    Mat3 pre = Mat3::Identity();
    int evaluations = 0;
    for (int attempt = 0; attempt <= opt.max_restarts; ++attempt) {
        const ConvexBody3 body = attempt == 0 ? k : apply_linear(k, LinearMap3(pre));
        detail::FieldSampler f(body, g);
        std::optional<std::pair<BoxPoint, FieldValue>> z;
        try {
            z = detail::search_zero(f, vol, opt);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::NotGeneric)
                throw;
        }
        evaluations += f.count;
        if (z) {
            NormalizationResult r;
            r.box = z->first;
            r.field = z->second;
            r.fgh_norm = z->second.norm();
            r.volume = vol;
            r.pre_rotation = pre;
            const double th = r.box.s * (kPi - f.theta0(r.box.phi, r.box.psi));
            r.angles = {th, r.box.phi, r.box.psi};
            const ConvexBody3 rotated = rotate(body, th, r.box.phi, r.box.psi);
            r.balance = balance_angles(rotated, g);
            r.shear = shear_matrix(r.balance);
            r.normalized_body = apply_linear(rotated, r.shear);
            r.residuals = condition_residuals(*r.normalized_body, g);
            r.evaluations = evaluations;
            return r;
        }
        pre = detail::random_rotation(rng);
    }
    throw Error(ErrorKind::NoZeroFound, "subdivision exhausted without a zero of the field");
}

struct SweepRow {
    BoxPoint p;
    FieldValue v;
};

// Field values on an n^3 grid of the box.
inline std::vector<SweepRow> sweep(const ConvexBody3& k, int n, const SphereGrid& g)
{
    if (n < 2)
        throw Error(ErrorKind::BadParameter, "sweep needs at least two points per axis");
    detail::FieldSampler f(k, g);
    std::vector<SweepRow> rows;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l)
                rows.push_back({{double(i) / (n - 1), kPi * j / (n - 1), kPi * l / (n - 1)}, {}});
    for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l)
            f.theta0(rows[j * n + l].p.phi, rows[j * n + l].p.psi);
    parallel_for(rows.size(), [&](std::size_t r) { rows[r].v = f(rows[r].p); });
    return rows;
}

} // namespace mahler
