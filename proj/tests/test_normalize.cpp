#include <gtest/gtest.h>

#include <random>

#include "mahler/normalize.hpp"
#include "oracles.hpp"

using namespace mahler;
using oracle::error_of;

namespace {

ConvexBody3 sheared_cube()
{
    Mat3 a = Mat3::Identity();
    a(1, 2) = 0.3;
    return apply_linear(make_cube(), a);
}

std::vector<ConvexBody3> unconditional_bodies()
{
    return {make_cube(), make_cross_polytope(), make_lp_ball(3.0, Vec3(1, 2, 0.5)),
            make_ellipsoid(Vec3(1.0, 0.25, 4.0).asDiagonal().toDenseMatrix())};
}

// Bodies without any coordinate symmetry.
std::vector<ConvexBody3> generic_bodies(std::uint64_t seed, int n)
{
    std::mt19937_64 rng(seed);
    std::vector<ConvexBody3> out;
    for (int i = 0; i < n; ++i)
        out.push_back(i % 2 ? oracle::random_polytope(rng, 7) : oracle::random_smooth(rng));
    return out;
}

double bound_radius(const ConvexBody3& k)
{
    return std::max({k.support(Vec3::UnitX()), k.support(Vec3::UnitY()), k.support(Vec3::UnitZ())}) * 1.001;
}

bool member(const ConvexBody3& k, const Vec3& x) { return k.gauge(x) <= 1.0; }

} // namespace

TEST(BalanceAngles, UnconditionalBodiesAreRightAngles)
{
    const SphereGrid g = make_grid(32, 64);
    for (const auto& k : unconditional_bodies()) {
        const BalanceAngles a = balance_angles(k, g);
        EXPECT_NEAR(a.theta_cap, kPi / 2, 1e-10) << k.label();
        EXPECT_NEAR(a.phi_cap, kPi / 2, 1e-10) << k.label();
        EXPECT_NEAR(a.psi_cap, kPi / 2, 1e-10) << k.label();
    }
}

TEST(BalanceAngles, ResidualsVanishAtTheAngles)
{
    const SphereGrid g = make_grid(48, 96);
    for (const auto& k : generic_bodies(11, 4)) {
        const BalanceAngles a = balance_angles(k, g);
        const double vol = volume(k, g);
        for (double t : {a.theta_cap, a.phi_cap, a.psi_cap}) {
            EXPECT_GT(t, 0.0);
            EXPECT_LT(t, kPi);
        }
        EXPECT_LT(std::abs(theta_balance_residual(k, g, a.theta_cap)), 1e-10 * vol) << k.label();
    }
}

TEST(BalanceAngles, ReflectionAcrossThetaGivesSupplement)
{
    const SphereGrid g = make_grid(64, 128);
    for (const auto& k : generic_bodies(12, 4)) {
        const double t = theta_cap(k, g);
        const double u = theta_cap(apply_linear(k, LinearMap3(rot_x(kPi - t))), g);
        EXPECT_NEAR(t + u, kPi, 1e-8) << k.label();
    }
}

TEST(BalanceAngles, ShearedCubeAgainstDenseTrapezoid)
{
    const ConvexBody3 k = sheared_cube();
    // beta profile of int rho^3 sin(alpha) d alpha, on 10^4 beta intervals
    const int nb = 10000, na = 4000;
    std::vector<double> prof(nb + 1);
    for (int j = 0; j <= nb; ++j) {
        const double b = kPi * j / nb;
        prof[j] = oracle::trapezoid(
            [&](double a) {
                const double r = k.radial(direction(a, b));
                return r * r * r * std::sin(a);
            },
            0.0, kPi, na);
    }
    std::vector<double> cum(nb + 1, 0.0);
    for (int j = 1; j <= nb; ++j)
        cum[j] = cum[j - 1] + 0.5 * (prof[j - 1] + prof[j]) * kPi / nb;
    auto lhs_minus_rhs = [&](double th) {
        const double x = th / kPi * nb;
        const int j = std::min(nb - 1, static_cast<int>(x));
        const double part = cum[j] + (x - j) * (cum[j + 1] - cum[j]);
        return 2 * part - cum[nb];
    };
    double lo = 0, hi = kPi;
    for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        (lhs_minus_rhs(mid) < 0 ? lo : hi) = mid;
    }
    const double oracle_theta = 0.5 * (lo + hi);
    const double t = theta_cap(k, make_grid(32, 64));
    EXPECT_NEAR(t, oracle_theta, 1e-5);
    // the shear y += 0.3 z tilts the balance line toward the y axis
    EXPECT_LT(t, kPi / 2);
}

TEST(BalanceAngles, ThetaResidualIsIncreasing)
{
    const SphereGrid g = make_grid(32, 64);
    auto bodies = generic_bodies(13, 4);
    bodies.push_back(sheared_cube());
    for (const auto& k : bodies) {
        double prev = -1e300;
        for (int i = 0; i <= 32; ++i) {
            const double r = theta_balance_residual(k, g, kPi * i / 32);
            EXPECT_GT(r, prev) << k.label() << " at sample " << i;
            prev = r;
        }
    }
}

TEST(Shear, UnitDeterminantAndIdentityForUnconditional)
{
    const SphereGrid g = make_grid(32, 64);
    for (const auto& k : unconditional_bodies()) {
        const LinearMap3 a = shear(k, g);
        EXPECT_LT((a.matrix() - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-10) << k.label();
    }
    for (const auto& k : generic_bodies(14, 3))
        EXPECT_NEAR(shear(k, g).det(), 1.0, 1e-14);
}

TEST(Shear, MatrixMatchesFormula)
{
    const SphereGrid g = make_grid(32, 64);
    const BalanceAngles a = balance_angles(sheared_cube(), g);
    Mat3 u;
    u << 1, 1 / std::tan(a.phi_cap), 1 / (std::sin(a.theta_cap) * std::tan(a.psi_cap)), 0, 1,
        1 / std::tan(a.theta_cap), 0, 0, 1;
    EXPECT_LT((shear_matrix(a).matrix() - u.inverse()).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Shear, ProducesPartialCondition)
{
    const SphereGrid g = make_grid(64, 128);
    auto bodies = generic_bodies(15, 4);
    bodies.push_back(sheared_cube());
    for (const auto& k : bodies) {
        const ConvexBody3 m = apply_linear(k, shear(k, g));
        const double vol = volume(k, g);
        EXPECT_LT(condition_residuals(m, g).max22(), 1e-6 * vol) << k.label();
    }
}

TEST(Rotate, Examples)
{
    const ConvexBody3 c = make_cube();
    std::mt19937_64 rng(3);
    const ConvexBody3 same = rotate(c, 0, 0, 0);
    const ConvexBody3 flipped = rotate(c, kPi, 0, 0);
    for (int i = 0; i < 200; ++i) {
        const Vec3 u = oracle::random_unit(rng);
        EXPECT_NEAR(same.radial(u), c.radial(u), 1e-12);
        EXPECT_NEAR(flipped.radial(u), c.radial(u), 1e-12);
    }

    const ConvexBody3 r = rotate(c, kPi / 3, kPi / 5, kPi / 7);
    const Mat3 m = rot_x(kPi / 3) * rot_y(kPi / 5) * rot_z(kPi / 7);
    const auto& got = r.polytope()->vertices();
    ASSERT_EQ(got.size(), 8u);
    for (int s = 0; s < 8; ++s) {
        const Vec3 want = m * Vec3(s & 1 ? -1 : 1, s & 2 ? -1 : 1, s & 4 ? -1 : 1);
        double best = 1e300;
        for (const auto& v : got)
            best = std::min(best, (v - want).norm());
        EXPECT_LT(best, 1e-14);
    }
}

TEST(Field, VanishesOnUnconditionalBodies)
{
    const SphereGrid g = make_grid(32, 64);
    for (const auto& k : unconditional_bodies()) {
        for (double phi : {0.0, kPi / 2}) {
            const FieldValue v = fgh(k, {0.0, phi, 0.0}, g);
            EXPECT_LT(v.norm(), 1e-8) << k.label() << " phi " << phi;
        }
    }
}

TEST(Field, TopFaceNegatesF)
{
    // one of these bodies is strongly anisotropic and needs the fine grid
    const SphereGrid g = make_grid(128, 256);
    std::mt19937_64 rng(16);
    std::uniform_real_distribution<double> u(0, kPi);
    for (const auto& k : generic_bodies(16, 4)) {
        const double phi = u(rng), psi = u(rng);
        const FieldValue a = fgh(k, {0.0, phi, psi}, g);
        const FieldValue b = fgh(k, {1.0, phi, psi}, g);
        EXPECT_NEAR(a.f, -b.f, 1e-6) << k.label();
    }
}

TEST(Field, MatchesMonteCarloVolumes)
{
    std::mt19937_64 rng(17);
    const ConvexBody3 k = oracle::random_smooth(rng);
    const SphereGrid g = make_grid(64, 128);
    const BoxPoint p{0.37, 1.1, 2.3};
    const FieldValue v = fgh(k, p, g);

    const ConvexBody3 rotated = rotate(k, box_theta(k, p, g), p.phi, p.psi);
    const ConvexBody3 l = apply_linear(rotated, shear(rotated, g));
    const double r = bound_radius(l);

    // G and H from one sample of the upper half box
    const long n = 10'000'000;
    std::mt19937_64 mc(18);
    std::uniform_real_distribution<double> ux(-r, r), uz(0, r);
    double sg = 0, sg2 = 0, sh = 0, sh2 = 0;
    for (long i = 0; i < n; ++i) {
        const Vec3 x(ux(mc), ux(mc), uz(mc));
        if (!member(l, x))
            continue;
        const int gx = x.x() > 0 ? 1 : -1, gy = x.y() > 0 ? 1 : -1;
        // upper octants 1..4: (+,+) (-,+) (-,-) (+,-)
        const double cg = gx * gy;
        const double ch = gx;
        sg += cg;
        sg2 += cg * cg;
        sh += ch;
        sh2 += ch * ch;
    }
    const double box = 4 * r * r * r;
    auto est = [&](double s, double s2) {
        const double m = s / n;
        return oracle::Estimate{box * m, box * std::sqrt((s2 / n - m * m) / n)};
    };
    const auto eg = est(sg, sg2), eh = est(sh, sh2);
    EXPECT_NEAR(v.g, eg.mean, 3 * eg.sigma + 1e-9);
    EXPECT_NEAR(v.h, eh.mean, 3 * eh.sigma + 1e-9);

    // F on the x = 0 section
    double sf = 0, sf2 = 0;
    for (long i = 0; i < n; ++i) {
        const Vec3 x(0.0, ux(mc), uz(mc));
        if (!member(l, x))
            continue;
        const double c = x.y() > 0 ? 1 : -1;
        sf += c;
        sf2 += c * c;
    }
    const double m = sf / n, sq = 2 * r * r;
    const double sigma = sq * std::sqrt((sf2 / n - m * m) / n);
    EXPECT_NEAR(v.f, sq * m, 3 * sigma + 1e-9);
}

TEST(ConditionResiduals, CubeIsExactlyBalanced)
{
    const ConditionResiduals r = condition_residuals(make_cube(), make_grid(8, 16));
    EXPECT_EQ(r.max22(), 0.0);
    EXPECT_EQ(r.max23(), 0.0);
}

TEST(ConditionResiduals, ShearedCubeAgainstMonteCarlo)
{
    const ConvexBody3 k = sheared_cube();
    const ConditionResiduals r = condition_residuals(k, make_grid(32, 64));
    // x -> -x is a symmetry, so D1 = D2
    EXPECT_NEAR(r.r23[0], 0.0, 1e-12);
    EXPECT_GT(r.r23[1], 0.0);
    EXPECT_GT(r.r23[2], 0.0);
    EXPECT_GT(r.r23[3], 0.0);

    const double rad = bound_radius(k);
    const long n = 4'000'000;
    auto octant = [&](int i, std::uint64_t seed) {
        const Vec3 s = octant_signs(i);
        const Vec3 lo = s.cwiseMin(Vec3::Zero()) * rad, hi = s.cwiseMax(Vec3::Zero()) * rad;
        return oracle::mc_region([&](const Vec3& x) { return member(k, x); }, lo, hi, n, seed);
    };
    const auto d1 = octant(0, 1), d3 = octant(2, 3), d4 = octant(3, 4);
    EXPECT_NEAR(r.r23[1], d1.mean - d3.mean, 3 * std::hypot(d1.sigma, d3.sigma));
    EXPECT_NEAR(r.r23[2], d1.mean - d4.mean, 3 * std::hypot(d1.sigma, d4.sigma));

    auto quarter = [&](double sy, std::uint64_t seed) {
        std::mt19937_64 mc(seed);
        std::uniform_real_distribution<double> u(0, rad);
        long hits = 0;
        for (long i = 0; i < n; ++i)
            hits += member(k, Vec3(0, sy * u(mc), u(mc)));
        const double p = double(hits) / n;
        return oracle::Estimate{rad * rad * p, rad * rad * std::sqrt(p * (1 - p) / n)};
    };
    const auto od = quarter(1, 5), oe = quarter(-1, 6);
    EXPECT_NEAR(r.r23[3], od.mean - oe.mean, 3 * std::hypot(od.sigma, oe.sigma));
}

TEST(Symmetry, IdentitiesHoldOnGenericBodies)
{
    const SphereGrid g = make_grid(48, 96);
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> us(0, 1), ua(0, kPi);
    for (const auto& k : generic_bodies(20, 2)) {
        const double vol = volume(k, g);
        const BoxPoint p{us(rng), ua(rng), ua(rng)};
        const auto table = symmetry_residuals(k, p, g);
        EXPECT_GE(table.size(), 39u);
        for (const auto& r : table) {
            const double tol = r.kind == ResidualKind::Angle ? 1e-6 : 1e-6 * vol;
            EXPECT_LT(r.value, tol) << k.label() << ": " << r.name;
        }
    }
}

TEST(Symmetry, UnconditionalBodyHasNoResidual)
{
    const SphereGrid g = make_grid(64, 128);
    for (const auto& k : unconditional_bodies()) {
        const double vol = volume(k, g);
        for (const auto& r : symmetry_residuals(k, {0.0, 0.0, 0.0}, g))
            EXPECT_LT(r.value, 1e-8 * std::max(1.0, vol)) << k.label() << ": " << r.name;
    }
}

// These identities hold for the exact integrals, so smooth bodies need a grid
// fine enough for the quadrature error to drop below the tolerance.
TEST(Symmetry, ReparametrisationEndpointsAndInverse)
{
    const SphereGrid g = make_grid(128, 256);
    for (const auto& k : {sheared_cube(), generic_bodies(21, 1)[0]}) {
        for (double psi : {0.0, 1.3, kPi}) {
            EXPECT_NEAR(t_psi(k, psi, 0.0, g), 1.0, 1e-10) << k.label();
            EXPECT_NEAR(t_psi(k, psi, 1.0, g), 0.0, 1e-10) << k.label();
        }
        for (double s : {0.1, 0.35, 0.5, 0.8}) {
            const double t = t_psi(k, 0.0, s, g);
            EXPECT_NEAR(t_psi(k, kPi, t, g), s, 1e-8) << k.label();
        }
    }
}

TEST(Symmetry, GammaIsIncreasingOntoUpperInterval)
{
    const SphereGrid g = make_grid(128, 256);
    for (const auto& k : {sheared_cube(), generic_bodies(22, 1)[0]}) {
        for (double psi : {0.4, 2.2}) {
            const double top = kPi - theta_cap(rotate(k, 0.0, 0.0, psi), g);
            EXPECT_NEAR(gamma_psi(k, psi, 0.0, g), top, 1e-12);
            EXPECT_NEAR(gamma_psi(k, psi, top, g), kPi, 1e-8);
            double prev = -1;
            for (int i = 0; i < 64; ++i) {
                const double v = gamma_psi(k, psi, top * i / 63, g);
                EXPECT_GT(v, prev);
                prev = v;
            }
        }
    }
}

TEST(Winding, OddOnPerturbedCubes)
{
    const SphereGrid g = make_grid(16, 32);
    std::mt19937_64 rng(23);
    for (int i = 0; i < 3; ++i) {
        const ConvexBody3 k = oracle::perturbed_cube(rng, 0.15);
        const WindingTrace tr = winding(k, 64, g);
        EXPECT_NE(tr.winding % 2, 0);
        for (std::size_t j = 1; j < tr.samples.size(); ++j)
            EXPECT_LT(std::abs(tr.samples[j].angle - tr.samples[j - 1].angle), kPi / 2);
        EXPECT_NEAR(tr.samples.back().angle - tr.samples.front().angle, 2 * kPi * tr.winding, 1e-6);
        EXPECT_EQ(winding(k, 128, g).winding, tr.winding);
    }
}

TEST(Winding, UnconditionalBodyIsNotGeneric)
{
    const SphereGrid g = make_grid(16, 32);
    EXPECT_EQ(error_of([&] { winding(make_cube(), 32, g); }), ErrorKind::NotGeneric);
    EXPECT_EQ(error_of([&] { winding(sheared_cube(), 2, g); }), ErrorKind::BadParameter);
}

TEST(FindNormalization, UnconditionalIsImmediate)
{
    const SphereGrid g = make_grid(16, 32);
    for (const auto& k : unconditional_bodies()) {
        const NormalizationResult r = find_normalization(k, g);
        EXPECT_EQ(r.box.s, 0.0);
        EXPECT_EQ(r.box.phi, 0.0);
        EXPECT_EQ(r.box.psi, 0.0);
        EXPECT_LT((r.shear.matrix() - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(FindNormalization, PlaneSymmetricBody)
{
    const SphereGrid g = make_grid(32, 64);
    const ConvexBody3 k = sheared_cube();
    const NormalizationResult r = find_normalization(k, g);
    EXPECT_LT(r.fgh_norm, 1e-6 * r.volume);
    EXPECT_LT(r.residuals.max23(), 1e-6 * r.volume);
    EXPECT_NEAR(volume(*r.normalized_body, g), volume(k, g), 1e-12);
}

TEST(FindNormalization, GenericBodiesReachCondition)
{
    const SphereGrid g = make_grid(48, 96);
    for (const auto& k : generic_bodies(24, 2)) {
        const NormalizationResult r = find_normalization(k, g);
        EXPECT_LT(r.fgh_norm, 1e-6 * r.volume) << k.label();
        EXPECT_LT(r.residuals.max22(), 1e-6 * r.volume) << k.label();
        EXPECT_LT(r.residuals.max23(), 1e-6 * r.volume) << k.label();
        EXPECT_GE(r.box.s, 0.0);
        EXPECT_LE(r.box.s, 1.0);
    }
}

TEST(FindNormalization, StableUnderGridRefinement)
{
    std::mt19937_64 rng(25);
    const ConvexBody3 k = oracle::random_smooth(rng);
    const NormalizationResult a = find_normalization(k, make_grid(48, 96));
    const NormalizationResult b = find_normalization(k, make_grid(96, 192));
    ASSERT_TRUE(a.pre_rotation.isApprox(b.pre_rotation));
    for (int i = 0; i < 3; ++i)
        EXPECT_NEAR(a.angles[i], b.angles[i], 1e-3);
}

TEST(Sweep, CoversTheBox)
{
    const SphereGrid g = make_grid(16, 32);
    const auto rows = sweep(sheared_cube(), 3, g);
    ASSERT_EQ(rows.size(), 27u);
    EXPECT_EQ(rows.front().p.s, 0.0);
    EXPECT_EQ(rows.back().p.s, 1.0);
    EXPECT_DOUBLE_EQ(rows.back().p.psi, kPi);
    EXPECT_EQ(error_of([&] { sweep(sheared_cube(), 1, g); }), ErrorKind::BadParameter);
}
