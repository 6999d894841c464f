#include "srd/geom.hpp"

#include <algorithm>

namespace srd {

UnitVec3::UnitVec3(const Vec3& v) {
    const double n = v.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw std::domain_error("UnitVec3: cannot normalize a zero-length or non-finite vector");
    }
    v_ = v / n;
}

Segment3::Segment3(const Vec3& a, const Vec3& b) : a_(a), b_(b) {
    if (!a.is_finite() || !b.is_finite()) {
        throw std::invalid_argument("Segment3: endpoints must be finite");
    }
    if (distance(a, b) <= kMinLength) {
        throw std::invalid_argument("Segment3: endpoints coincide");
    }
}

double closest_parameter_on_segment(const Vec3& q, const Segment3& s) {
    const Vec3 ab = s.b() - s.a();
    const double u = (q - s.a()).dot(ab) / ab.squared_norm();
    return std::clamp(u, 0.0, 1.0);
}

Vec3 closest_point_on_segment(const Vec3& q, const Segment3& s) {
    return s.at(closest_parameter_on_segment(q, s));
}

Vec3 closest_point_on_line(const Vec3& q, const Segment3& s) {
    const Vec3 ab = s.b() - s.a();
    return s.at((q - s.a()).dot(ab) / ab.squared_norm());
}

Vec3 project_onto_plane(const Vec3& v, const Plane& pl) {
    const Vec3& n = pl.normal;
    return v - n * v.dot(n);
}

double angle_between(const Vec3& a, const Vec3& b) {
    if (a.squared_norm() == 0.0 || b.squared_norm() == 0.0) {
        throw std::domain_error("angle_between: zero-length input");
    }
    return std::atan2(a.cross(b).norm(), a.dot(b));
}

Vec3 rotate_z(const Vec3& v, double yaw) {
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    return {c * v.x - s * v.y, s * v.x + c * v.y, v.z};
}

}  // namespace srd
