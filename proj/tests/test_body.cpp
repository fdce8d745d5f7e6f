#include <gtest/gtest.h>

#include <random>

#include "mahler/body.hpp"
#include "mahler/quadrature.hpp"
#include "oracles.hpp"

using namespace mahler;
using oracle::error_of;

namespace {

std::vector<Vec3> cube_vertices()
{
    std::vector<Vec3> v;
    for (int s = 0; s < 8; ++s)
        v.emplace_back((s & 1) ? -1 : 1, (s & 2) ? -1 : 1, (s & 4) ? -1 : 1);
    return v;
}

RowMatrix sample_rows()
{
    RowMatrix w(4, 3);
    w << 1, 0.2, 0, 0, 1, 0.3, 0.1, 0, 1, 0.5, 0.5, 0.5;
    return w;
}

// One body of every representation.
std::vector<ConvexBody3> zoo()
{
    std::mt19937_64 rng(11);
    std::vector<ConvexBody3> z;
    z.push_back(make_cube());
    z.push_back(make_cross_polytope());
    z.push_back(oracle::random_polytope(rng, 9));
    z.push_back(make_ball());
    z.push_back(make_lp_ball(3.5, Vec3(1, 0.7, 1.6)));
    z.push_back(make_lp_ball(1.3, Vec3(1.2, 1, 0.8)));
    z.push_back(make_ellipsoid(Vec3(0.25, 1, 4).asDiagonal().toDenseMatrix()));
    z.push_back(make_norm_ball(sample_rows(), 4.0));
    z.push_back(apply_linear(make_lp_ball(3, Vec3::Ones()), oracle::random_map(rng)));
    z.push_back(polar(make_lp_ball(3, Vec3(1, 2, 1))));
    const SphereGrid g = make_grid(16, 32);
    std::vector<double> rho;
    for (const auto& d : g.dirs)
        rho.push_back(1.0 / (1.0 + 0.2 * d.x() * d.x() + 0.1 * d.y() * d.z()));
    z.push_back(make_radial_field(16, 32, rho));
    return z;
}

} // namespace

TEST(Direction, IsUnitAndMatchesParametrisation)
{
    for (double a = 0; a <= kPi; a += 0.1)
        for (double b = 0; b < 2 * kPi; b += 0.1) {
            const Vec3 u = direction(a, b);
            EXPECT_NEAR(u.norm(), 1.0, 1e-14);
            EXPECT_DOUBLE_EQ(u.x(), std::cos(a));
            EXPECT_DOUBLE_EQ(u.z(), std::sin(a) * std::sin(b));
        }
}

TEST(MakeBody, CubeFromSignPatterns)
{
    const ConvexBody3 c = make_polytope(cube_vertices());
    ASSERT_TRUE(c.is_polytope());
    EXPECT_EQ(c.polytope()->facets().size(), 6u);
    EXPECT_EQ(c.polytope()->vertices().size(), 8u);
    EXPECT_NEAR(c.polytope()->volume(), 8.0, 1e-13);
    for (const auto& v : c.polytope()->vertices())
        for (const auto& f : c.polytope()->facets())
            EXPECT_LE(f.normal.dot(v), 1 + 1e-12);
}

TEST(MakeBody, RejectsBadInput)
{
    EXPECT_EQ(error_of([] { make_polytope({Vec3::UnitX(), Vec3::UnitY()}); }), ErrorKind::NotSymmetric);
    EXPECT_EQ(error_of([] {
                  make_polytope({Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0), Vec3(0, -1, 0), Vec3(1, 1, 0),
                                 Vec3(-1, -1, 0)});
              }),
              ErrorKind::DegenerateBody);
    EXPECT_EQ(error_of([] { make_lp_ball(2, Vec3(1, 0, 1)); }), ErrorKind::DegenerateBody);
    EXPECT_EQ(error_of([] { make_lp_ball(0.5, Vec3::Ones()); }), ErrorKind::BadParameter);
    EXPECT_EQ(error_of([] { make_ellipsoid(Vec3(1, -1, 1).asDiagonal().toDenseMatrix()); }),
              ErrorKind::DegenerateBody);
    std::vector<double> rho(16 * 32, 1.0);
    rho[5] = 1.1;
    EXPECT_EQ(error_of([&] { make_radial_field(16, 32, rho); }), ErrorKind::NotSymmetric);
}

TEST(GaugeRadial, Examples)
{
    const auto c = gauge_radial(make_cube(), Vec3(2, 0, 0));
    EXPECT_DOUBLE_EQ(c.gauge, 2.0);
    EXPECT_DOUBLE_EQ(c.radial, 0.5);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i) {
        const auto b = gauge_radial(make_ball(), oracle::random_unit(rng));
        EXPECT_NEAR(b.gauge, 1.0, 1e-15);
        EXPECT_NEAR(b.radial, 1.0, 1e-15);
    }
    EXPECT_EQ(error_of([] { gauge_radial(make_cube(), Vec3::Zero()); }), ErrorKind::ZeroVector);
    EXPECT_EQ(error_of([] { support(make_cube(), Vec3::Zero()); }), ErrorKind::ZeroVector);
}

TEST(GaugeRadial, PolytopeMatchesMembershipBisection)
{
    std::mt19937_64 rng(2);
    for (int t = 0; t < 5; ++t) {
        const ConvexBody3 k = oracle::random_polytope(rng, 6 + 3 * t);
        const auto planes = oracle::brute_planes(k.polytope()->vertices());
        auto member = [&](const Vec3& x) { return oracle::inside(planes, x); };
        for (int i = 0; i < 40; ++i) {
            const Vec3 v = oracle::random_unit(rng) * 1.7;
            EXPECT_NEAR(gauge_radial(k, v).gauge, oracle::bisect_gauge(member, v), 1e-10);
        }
    }
}

TEST(Support, Examples)
{
    EXPECT_DOUBLE_EQ(support(make_cube(), Vec3(1, 1, 1)), 3.0);
    const ConvexBody3 e = make_ellipsoid(Vec3(0.25, 1, 1).asDiagonal().toDenseMatrix());
    EXPECT_NEAR(support(e, Vec3(1, 0, 0)), 2.0, 1e-14);
}

TEST(Support, LpBallMatchesDenseBoundarySampling)
{
    const double p = 3.5;
    const Vec3 axes(1, 0.7, 1.6);
    const ConvexBody3 k = make_lp_ball(p, axes);
    const double q = p / (p - 1);
    std::vector<Vec3> boundary;
    for (int i = 0; i <= 400; ++i)
        for (int j = 0; j < 800; ++j) {
            const Vec3 u = direction(kPi * i / 400, 2 * kPi * j / 800);
            boundary.push_back(u * k.radial(u));
        }
    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
        const Vec3 u = oracle::random_unit(rng);
        const Vec3 s = u.cwiseProduct(axes);
        const double closed = std::pow(std::pow(std::abs(s.x()), q) + std::pow(std::abs(s.y()), q) +
                                           std::pow(std::abs(s.z()), q),
                                       1 / q);
        double best = 0;
        for (const auto& x : boundary)
            best = std::max(best, u.dot(x));
        EXPECT_NEAR(support(k, u), closed, 1e-12);
        EXPECT_LE(best, closed * (1 + 1e-12));
        EXPECT_GT(best, closed * (1 - 1e-4));
    }
}

TEST(Polar, CubeAndCrossPolytope)
{
    const ConvexBody3 p = polar(make_cube());
    ASSERT_TRUE(p.is_polytope());
    const auto& v = p.polytope()->vertices();
    ASSERT_EQ(v.size(), 6u);
    for (const auto& x : v) {
        EXPECT_NEAR(x.norm(), 1.0, 1e-14);
        EXPECT_NEAR(x.cwiseAbs().maxCoeff(), 1.0, 1e-14);
    }
    EXPECT_EQ(polar(make_cross_polytope()).polytope()->vertices().size(), 8u);
}

TEST(Polar, EllipsoidAxesInvert)
{
    const ConvexBody3 e = make_ellipsoid(Vec3(1.0 / 4, 1.0 / 9, 1.0).asDiagonal().toDenseMatrix());
    const ConvexBody3 p = polar(e);
    EXPECT_NEAR(p.radial(Vec3::UnitX()), 0.5, 1e-14);
    EXPECT_NEAR(p.radial(Vec3::UnitY()), 1.0 / 3, 1e-14);
    EXPECT_NEAR(p.radial(Vec3::UnitZ()), 1.0, 1e-14);
}

TEST(Polar, RadialTimesSupportIsOne)
{
    std::mt19937_64 rng(4);
    for (const auto& k : zoo()) {
        const ConvexBody3 p = polar(k);
        for (int i = 0; i < 50; ++i) {
            const Vec3 u = oracle::random_unit(rng);
            EXPECT_NEAR(p.radial(u) * support(k, u), 1.0, 1e-9) << k.label();
        }
    }
}

TEST(Polar, InvolutionOnGrid)
{
    const SphereGrid g = make_grid(64, 128);
    for (const auto& k : zoo()) {
        const ConvexBody3 pp = polar(polar(k));
        const double tol = k.is_tabulated() ? 1e-6 : 1e-10;
        double worst = 0;
        for (const auto& u : g.dirs)
            worst = std::max(worst, std::abs(pp.radial(u) / k.radial(u) - 1));
        EXPECT_LT(worst, tol) << k.label();
    }
}

TEST(Polar, PolytopeVertexFacetCountsSwap)
{
    std::mt19937_64 rng(5);
    for (int t = 0; t < 10; ++t) {
        const ConvexBody3 k = oracle::random_polytope(rng, 4 + t);
        const ConvexBody3 p = polar(k);
        EXPECT_EQ(k.polytope()->vertices().size(), p.polytope()->facets().size());
        EXPECT_EQ(k.polytope()->facets().size(), p.polytope()->vertices().size());
    }
}

TEST(BoundaryMap, BallAndEllipsoid)
{
    std::mt19937_64 rng(6);
    const Mat3 m = Vec3(0.25, 1, 4).asDiagonal();
    const ConvexBody3 e = make_ellipsoid(m);
    for (int i = 0; i < 30; ++i) {
        const Vec3 u = oracle::random_unit(rng);
        EXPECT_LT((boundary_map(make_ball(), u) - u).norm(), 1e-13);
        const Vec3 x = u * e.radial(u);
        EXPECT_LT((boundary_map(e, x) - m * x).norm(), 1e-12);
    }
    EXPECT_EQ(error_of([] { boundary_map(make_ball(), Vec3(2, 0, 0)); }), ErrorKind::NotOnBoundary);
}

TEST(BoundaryMap, LpBallAgreesWithSupportGradient)
{
    const ConvexBody3 k = make_lp_ball(3.0, Vec3(1, 1.3, 0.8));
    std::mt19937_64 rng(7);
    const double h = 1e-6;
    for (int i = 0; i < 30; ++i) {
        // h_K is only C^1.5 across the coordinate planes, so stay clear of them.
        Vec3 u = oracle::random_unit(rng);
        while (u.cwiseAbs().minCoeff() < 0.1)
            u = oracle::random_unit(rng);
        const Vec3 x = u * k.radial(u);
        const Vec3 y = boundary_map(k, x);
        // The gradient of h_K at y is the boundary point x.
        Vec3 fd;
        for (int c = 0; c < 3; ++c) {
            Vec3 d = Vec3::Zero();
            d[c] = h;
            fd[c] = (support(k, y + d) - support(k, y - d)) / (2 * h);
        }
        EXPECT_LT((fd - x).norm(), 1e-6);
        EXPECT_NEAR(polar(k).gauge(y), 1.0, 1e-8);
    }
}

TEST(BoundaryMap, PolytopeFacetNormal)
{
    const ConvexBody3 c = make_cube();
    EXPECT_LT((boundary_map(c, Vec3(1, 0.2, -0.3)) - Vec3::UnitX()).norm(), 1e-15);
    // Edge point: lowest facet index by default, averaged normal on request.
    const Vec3 edge(1, 1, 0.1);
    const Vec3 y = boundary_map(c, edge);
    EXPECT_NEAR(y.dot(edge), 1.0, 1e-14);
    const Vec3 m = boundary_map(c, edge, TieBreak::DualFaceMean);
    EXPECT_LT((m - Vec3(0.5, 0.5, 0)).norm(), 1e-14);
}

TEST(BoundaryMap, DualityPairingOnEveryBody)
{
    std::mt19937_64 rng(8);
    for (const auto& k : zoo()) {
        for (int i = 0; i < 100; ++i) {
            const Vec3 u = oracle::random_unit(rng);
            const Vec3 x = u * k.radial(u);
            EXPECT_NEAR(boundary_map(k, x).dot(x), 1.0, 1e-8) << k.label();
        }
    }
}

TEST(ApplyLinear, Examples)
{
    const ConvexBody3 c = make_cube();
    const ConvexBody3 same = apply_linear(c, LinearMap3());
    std::mt19937_64 rng(9);
    for (int i = 0; i < 20; ++i) {
        const Vec3 u = oracle::random_unit(rng);
        EXPECT_EQ(same.radial(u), c.radial(u));
    }
    const ConvexBody3 box = apply_linear(c, Mat3(Vec3(2, 1, 1).asDiagonal()));
    EXPECT_NEAR(box.polytope()->volume(), 16.0, 1e-12);
    EXPECT_NEAR(box.radial(Vec3::UnitX()), 2.0, 1e-15);
    EXPECT_EQ(error_of([&] { apply_linear(c, Mat3::Zero().eval()); }), ErrorKind::SingularMap);
}

TEST(ApplyLinear, GaugeTransformsPointwise)
{
    std::mt19937_64 rng(10);
    for (const auto& k : zoo()) {
        const Mat3 a = oracle::random_map(rng);
        const ConvexBody3 ak = apply_linear(k, a);
        const Mat3 ai = a.inverse();
        for (int i = 0; i < 30; ++i) {
            const Vec3 x = oracle::random_unit(rng);
            EXPECT_NEAR(ak.gauge(x), k.gauge(ai * x), 1e-10 * k.gauge(ai * x)) << k.label();
        }
    }
}

TEST(ApplyLinear, VolumeProductInvariantForPolytopes)
{
    std::mt19937_64 rng(12);
    for (int t = 0; t < 10; ++t) {
        const ConvexBody3 k = oracle::random_polytope(rng, 8);
        const Mat3 a = oracle::random_map(rng, 0.8);
        const ConvexBody3 ak = apply_linear(k, a);
        EXPECT_NEAR(ak.polytope()->volume(), std::abs(a.determinant()) * k.polytope()->volume(), 1e-10);
        const double p0 = k.polytope()->volume() * polar(k).polytope()->volume();
        const double p1 = ak.polytope()->volume() * polar(ak).polytope()->volume();
        EXPECT_NEAR(p1 / p0, 1.0, 1e-8);
    }
}

TEST(LinearMap, InverseAndSingular)
{
    std::mt19937_64 rng(13);
    const LinearMap3 a(oracle::random_map(rng));
    EXPECT_LT((a.inverse() * a.matrix() - Mat3::Identity()).norm(), 1e-12);
    EXPECT_NEAR(a.det(), a.matrix().determinant(), 1e-14);
    Mat3 s;
    s << 1, 2, 3, 2, 4, 6, 0, 0, 1;
    EXPECT_EQ(error_of([&] { LinearMap3 m(s); }), ErrorKind::SingularMap);
}

TEST(Properties, CentralSymmetryAndHomogeneity)
{
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> lam(0.1, 10);
    for (const auto& k : zoo()) {
        const ConvexBody3 p = polar(k);
        for (int i = 0; i < 1000; ++i) {
            const Vec3 u = oracle::random_unit(rng);
            const double tol = k.is_tabulated() ? 1e-12 : 1e-14;
            EXPECT_NEAR(k.radial(u), k.radial(-u), tol * k.radial(u)) << k.label();
            if (i % 10 == 0) {
                EXPECT_NEAR(p.radial(u), p.radial(-u), 1e-10 * p.radial(u)) << k.label();
                const double l = lam(rng);
                EXPECT_NEAR(k.gauge(l * u), l * k.gauge(u), 1e-12 * l * k.gauge(u)) << k.label();
            }
        }
    }
}
