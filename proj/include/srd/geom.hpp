// 3D geometry primitives shared by the radar model, the avoidance controller
// and the simulator. Frame-agnostic: callers document which frame a value is
// expressed in.
#pragma once

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace srd {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    constexpr bool operator==(const Vec3&) const = default;

    constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    constexpr Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    constexpr double squared_norm() const { return dot(*this); }
    bool is_finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline std::ostream& operator<<(std::ostream& os, const Vec3& v) {
    return os << '(' << v.x << ", " << v.y << ", " << v.z << ')';
}

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

/// A direction. Construction normalizes; zero or non-finite input throws.
class UnitVec3 {
public:
    static constexpr double kTolerance = 1e-9;

    UnitVec3() = default;  // +X
    explicit UnitVec3(const Vec3& v);
    UnitVec3(double x, double y, double z) : UnitVec3(Vec3{x, y, z}) {}

    const Vec3& vec() const { return v_; }
    operator const Vec3&() const { return v_; }  // NOLINT(google-explicit-constructor)
    double x() const { return v_.x; }
    double y() const { return v_.y; }
    double z() const { return v_.z; }
    UnitVec3 operator-() const { return UnitVec3::trusted(-v_); }
    double dot(const Vec3& o) const { return v_.dot(o); }

    bool operator==(const UnitVec3&) const = default;

private:
    static UnitVec3 trusted(const Vec3& v) {
        UnitVec3 u;
        u.v_ = v;
        return u;
    }
    Vec3 v_{1.0, 0.0, 0.0};
};

/// Straight conductor piece between two distinct points.
class Segment3 {
public:
    static constexpr double kMinLength = 1e-6;

    Segment3(const Vec3& a, const Vec3& b);

    const Vec3& a() const { return a_; }
    const Vec3& b() const { return b_; }
    double length() const { return distance(a_, b_); }
    UnitVec3 direction() const { return UnitVec3(b_ - a_); }
    Vec3 at(double u) const { return a_ + (b_ - a_) * u; }

    bool operator==(const Segment3&) const = default;

private:
    Vec3 a_;
    Vec3 b_;
};

struct Plane {
    UnitVec3 normal;
    Vec3 point;
};

/// Barycentric parameter in [0, 1] of the point of `s` closest to `q`.
double closest_parameter_on_segment(const Vec3& q, const Segment3& s);

Vec3 closest_point_on_segment(const Vec3& q, const Segment3& s);

/// Closest point to `q` on the infinite line supporting `s`.
Vec3 closest_point_on_line(const Vec3& q, const Segment3& s);

/// Removes the component of `v` along the plane normal.
Vec3 project_onto_plane(const Vec3& v, const Plane& pl);

/// Unsigned angle in [0, pi], evaluated as atan2(|a x b|, a . b).
/// Throws std::domain_error when either input has zero length.
double angle_between(const Vec3& a, const Vec3& b);

/// Rotation about +Z by `yaw` radians.
Vec3 rotate_z(const Vec3& v, double yaw);

constexpr double deg2rad(double deg) { return deg * 3.14159265358979323846 / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / 3.14159265358979323846; }

}  // namespace srd
