#include "srd/radar.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "srd/world.hpp"

namespace srd {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kFovTolerance = 1e-9;  // rad

struct SensorFrame {
    Vec3 forward;
    Vec3 up;
    Vec3 left;
};

SensorFrame sensor_frame(const SensorSpec& s) {
    const Vec3 f = s.boresight;
    const Vec3 u_raw = s.up_reference;
    const UnitVec3 up(u_raw - f * u_raw.dot(f));
    return {f, up, up.vec().cross(f)};
}

struct MountRow {
    SensorId id;
    double yaw_deg;     // boresight in XY plane, 0 = +X
    double pitch_deg;   // +90 = +Z
    Vec3 up_reference;
    double az_fov, el_fov;            // datasheet
    double az_measured, el_measured;  // turntable
    double max_range;
};

// Front is rotated so the wide 120 deg axis sweeps up/down: its azimuth
// plane is XZ, so its up reference is +Y. Top/bottom use +X so azimuth is
// swept in the YZ plane.
constexpr std::array<MountRow, 6> kMounts = {{
    {SensorId::front, 0.0, 0.0, {0, 1, 0}, 120.0, 30.0, 122.0, 41.0, 10.0},
    {SensorId::rear, 180.0, 0.0, {0, 0, 1}, 120.0, 120.0, 75.0, 135.0, 7.0},
    {SensorId::left, 75.0, 0.0, {0, 0, 1}, 120.0, 120.0, 75.0, 104.0, 7.0},
    {SensorId::right, -75.0, 0.0, {0, 0, 1}, 120.0, 120.0, 75.0, 104.0, 7.0},
    {SensorId::top, 0.0, 90.0, {1, 0, 0}, 120.0, 120.0, 76.0, 108.0, 7.0},
    {SensorId::bottom, 0.0, -90.0, {1, 0, 0}, 120.0, 120.0, 76.0, 106.0, 7.0},
}};

constexpr std::array<RangeErrorStats, 6> kRangeErrors = {{
    {SensorId::front, 0.0785, 0.0318, 0.0340, 0.1136, 0.0847},
    {SensorId::rear, 0.0627, 0.0233, 0.0079, 0.1116, 0.0669},
    {SensorId::left, 0.0326, 0.0186, -0.0004, 0.0593, 0.0375},
    {SensorId::right, 0.0426, 0.0106, 0.0145, 0.0704, 0.0439},
    {SensorId::top, 0.0603, 0.0173, 0.0262, 0.0907, 0.0628},
    {SensorId::bottom, 0.0810, 0.0116, 0.0510, 0.0940, 0.0819},
}};

}  // namespace

std::string_view to_string(SensorId id) {
    switch (id) {
        case SensorId::front: return "front";
        case SensorId::rear: return "rear";
        case SensorId::left: return "left";
        case SensorId::right: return "right";
        case SensorId::top: return "top";
        case SensorId::bottom: return "bottom";
    }
    return "unknown";
}

std::optional<SensorId> sensor_id_from_string(std::string_view name) {
    for (SensorId id : kAllSensors) {
        if (to_string(id) == name) return id;
    }
    return std::nullopt;
}

void SensorSpec::validate() const {
    const std::string who = std::string(to_string(id)) + ".";
    auto fov_ok = [](double f) { return f > 0.0 && f <= 180.0; };
    if (!fov_ok(azimuth_fov_deg)) throw std::invalid_argument(who + "azimuth_fov must be in (0, 180]");
    if (!fov_ok(elevation_fov_deg)) throw std::invalid_argument(who + "elevation_fov must be in (0, 180]");
    if (!(max_range > 0.0)) throw std::invalid_argument(who + "max_range must be > 0");
    if (!(noise_sigma >= 0.0)) throw std::invalid_argument(who + "noise_sigma must be >= 0");
    if (!(angular_sigma_deg >= 0.0)) throw std::invalid_argument(who + "angular_sigma must be >= 0");
    if (!(rate_hz > 0.0)) throw std::invalid_argument(who + "rate must be > 0");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument(who + "dropout must be in [0, 1)");
    if (std::abs(boresight.dot(up_reference)) > 1.0 - 1e-6) {
        throw std::invalid_argument(who + "up_reference must not be parallel to boresight");
    }
}

void RadarRig::validate() const {
    std::array<bool, 6> seen{};
    for (const auto& s : sensors) {
        s.validate();
        auto& flag = seen[static_cast<std::size_t>(s.id)];
        if (flag) throw std::invalid_argument("rig: duplicate sensor id " + std::string(to_string(s.id)));
        flag = true;
    }
}

const SensorSpec& RadarRig::sensor(SensorId id) const {
    auto it = std::find_if(sensors.begin(), sensors.end(), [id](const SensorSpec& s) { return s.id == id; });
    if (it == sensors.end()) throw std::out_of_range("rig has no sensor " + std::string(to_string(id)));
    return *it;
}

SensorSpec& RadarRig::sensor(SensorId id) {
    return const_cast<SensorSpec&>(std::as_const(*this).sensor(id));
}

void PaModel::validate() const {
    if (!(theta0_deg >= 0.0 && theta0_deg < 90.0)) throw std::invalid_argument("pa.theta0 must be in [0, 90)");
    if (!(blend_slope >= 0.0)) throw std::invalid_argument("pa.blend_slope must be >= 0");
}

Vec3 world_to_body(const UavPose& pose, const Vec3& p_world) {
    return rotate_z(p_world - pose.position, -pose.yaw);
}
Vec3 body_to_world(const UavPose& pose, const Vec3& p_body) {
    return rotate_z(p_body, pose.yaw) + pose.position;
}
Vec3 world_to_body_dir(const UavPose& pose, const Vec3& v_world) { return rotate_z(v_world, -pose.yaw); }
Vec3 body_to_world_dir(const UavPose& pose, const Vec3& v_body) { return rotate_z(v_body, pose.yaw); }

const std::array<RangeErrorStats, 6>& measured_range_errors() { return kRangeErrors; }

RadarRig default_rig(bool use_measured_fov) {
    RadarRig rig;
    for (const auto& m : kMounts) {
        const double yaw = deg2rad(m.yaw_deg);
        const double pitch = deg2rad(m.pitch_deg);
        SensorSpec s;
        s.id = m.id;
        s.boresight = UnitVec3(std::cos(pitch) * std::cos(yaw), std::cos(pitch) * std::sin(yaw), std::sin(pitch));
        s.up_reference = UnitVec3(m.up_reference);
        s.azimuth_fov_deg = use_measured_fov ? m.az_measured : m.az_fov;
        s.elevation_fov_deg = use_measured_fov ? m.el_measured : m.el_fov;
        s.max_range = m.max_range;
        const auto& err = kRangeErrors[static_cast<std::size_t>(m.id)];
        s.bias_mean = err.mean;
        s.noise_sigma = err.sigma;
        s.angular_sigma_deg = 1.0;
        s.rate_hz = 10.0;
        rig.sensors.push_back(s);
    }
    return rig;
}

SensorAngles sensor_angles(const SensorSpec& s, const Vec3& dir) {
    const SensorFrame fr = sensor_frame(s);
    const double f = dir.dot(fr.forward);
    const double l = dir.dot(fr.left);
    const double u = dir.dot(fr.up);
    return {std::atan2(l, f), std::atan2(u, std::hypot(f, l))};
}

bool in_fov(const SensorSpec& s, const Vec3& p_body, double range_scale) {
    const double r = p_body.norm();
    if (!(r > 0.0) || r > s.max_range * range_scale) return false;
    const SensorAngles a = sensor_angles(s, p_body);
    return std::abs(a.azimuth) <= deg2rad(s.azimuth_fov_deg) / 2.0 + kFovTolerance &&
           std::abs(a.elevation) <= deg2rad(s.elevation_fov_deg) / 2.0 + kFovTolerance;
}

Vec3 pa_ideal_point(const SensorSpec& s, const PaModel& pa, const Segment3& conductor_body) {
    const Vec3 origin{};
    const Vec3 c = closest_point_on_line(origin, conductor_body);
    const double dist = c.norm();
    if (dist < 1e-9) return closest_point_on_segment(origin, conductor_body);

    const Vec3 line_dir = conductor_body.direction();
    const Vec3& b = s.boresight;
    const double theta = angle_between(b, c);
    double along = 0.0;  // signed offset from c along line_dir

    const double theta0 = deg2rad(pa.theta0_deg);
    if (theta > theta0) {
        const double k = b.dot(line_dir);
        const double bc = b.dot(c);
        // Angular position (seen from the sensor) of the point on the line
        // closest to the boresight ray; the detection never slides past it.
        double cap = 0.0;
        if (bc > 0.0) {
            const double denom = 1.0 - k * k;
            cap = denom < 1e-12 ? kPi / 2.0 : std::atan(std::abs(k * bc / denom) / dist);
        }
        const double phi = std::min({pa.blend_slope * (theta - theta0), cap, kPi / 2.0 - 1e-6});
        along = std::copysign(dist * std::tan(phi), k);
    }

    const Vec3 ideal = c + line_dir * along;
    return closest_point_on_segment(ideal, conductor_body);
}

Vec3 apply_measurement_noise(const SensorSpec& s, const Vec3& ideal, Rng& rng) {
    const double r = ideal.norm();
    const Vec3 dir = ideal / r;
    const double range = std::clamp(r + rng.normal(s.bias_mean, s.noise_sigma), 1e-3, s.max_range * 1.2);

    const double tilt = deg2rad(rng.normal(0.0, s.angular_sigma_deg));
    const double roll = 2.0 * kPi * rng.uniform();
    const Vec3 helper = std::abs(dir.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    const Vec3 e1 = UnitVec3(dir.cross(helper));
    const Vec3 e2 = dir.cross(e1);
    const Vec3 offset_axis = e1 * std::cos(roll) + e2 * std::sin(roll);
    const Vec3 jittered = dir * std::cos(tilt) + offset_axis * std::sin(tilt);
    return jittered * range;
}

std::optional<Detection> detect_conductor(const SensorSpec& s, const PaModel& pa, const Segment3& conductor_body,
                                          double detectability, double t, Rng& rng) {
    const Vec3 ideal = pa_ideal_point(s, pa, conductor_body);
    if (!in_fov(s, ideal, detectability)) return std::nullopt;
    if (s.dropout > 0.0 && rng.uniform() < s.dropout) return std::nullopt;
    return Detection{apply_measurement_noise(s, ideal, rng), s.id, t};
}

std::optional<Detection> detect_point_target(const SensorSpec& s, const Vec3& target_body, double t, Rng& rng) {
    if (!in_fov(s, target_body)) return std::nullopt;
    if (s.dropout > 0.0 && rng.uniform() < s.dropout) return std::nullopt;
    return Detection{apply_measurement_noise(s, target_body, rng), s.id, t};
}

std::vector<Detection> sense(const RadarRig& rig, const UavPose& pose, const Scenario& scenario, double t, Rng& rng,
                             const PaModel& pa) {
    std::vector<Detection> out;
    const std::uint64_t tick_seed = rng.next_u64();
    for (const auto& s : rig.sensors) {
        Rng stream(tick_seed, static_cast<std::uint64_t>(s.id));
        for (const auto& cond : scenario.conductors) {
            const Segment3 body(world_to_body(pose, cond.geometry.a()), world_to_body(pose, cond.geometry.b()));
            if (auto d = detect_conductor(s, pa, body, cond.detectability, t, stream)) out.push_back(*d);
        }
    }
    return out;
}

}  // namespace srd
