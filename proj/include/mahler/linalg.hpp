#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "errors.hpp"

namespace mahler {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;

// Unit vector at polar angle alpha from +x, azimuth beta in the yz-plane.
inline Vec3 direction(double alpha, double beta)
{
    const double s = std::sin(alpha);
    return {std::cos(alpha), s * std::cos(beta), s * std::sin(beta)};
}

inline Mat3 rot_x(double t)
{
    const double c = std::cos(t), s = std::sin(t);
    Mat3 m;
    m << 1, 0, 0, 0, c, -s, 0, s, c;
    return m;
}

inline Mat3 rot_y(double t)
{
    const double c = std::cos(t), s = std::sin(t);
    Mat3 m;
    m << c, 0, s, 0, 1, 0, -s, 0, c;
    return m;
}

inline Mat3 rot_z(double t)
{
    const double c = std::cos(t), s = std::sin(t);
    Mat3 m;
    m << c, -s, 0, s, c, 0, 0, 0, 1;
    return m;
}

// Invertible 3x3 map with its inverse and determinant cached.
class LinearMap3 {
public:
    LinearMap3() : m_(Mat3::Identity()), inv_(Mat3::Identity()), det_(1.0) {}

    explicit LinearMap3(const Mat3& m) : m_(m), det_(m.determinant())
    {
        if (!std::isfinite(det_) || std::abs(det_) <= 1e-12)
            throw Error(ErrorKind::SingularMap, "determinant " + std::to_string(det_));
        inv_ = m.inverse();
    }

    const Mat3& matrix() const { return m_; }
    const Mat3& inverse() const { return inv_; }
    double det() const { return det_; }

    Vec3 operator()(const Vec3& x) const { return m_ * x; }
    LinearMap3 operator*(const LinearMap3& o) const { return LinearMap3(m_ * o.m_); }
    LinearMap3 inverted() const { return LinearMap3(inv_); }
    LinearMap3 inverse_transpose() const { return LinearMap3(inv_.transpose()); }

private:
    Mat3 m_;
    Mat3 inv_;
    double det_;
};

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

} // namespace mahler
