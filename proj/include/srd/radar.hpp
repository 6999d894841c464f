// Six-sensor mmWave rig model: mount geometry, FoV and range gating, the
// closest-point behaviour of wire returns, and range/angle noise.
//
// Body frame: +X forward, +Y left, +Z up. All sensors sit at the body origin.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "srd/geom.hpp"
#include "srd/rng.hpp"

namespace srd {

struct Scenario;

enum class SensorId : std::uint8_t { front, rear, left, right, top, bottom };

inline constexpr std::array<SensorId, 6> kAllSensors = {
    SensorId::front, SensorId::rear, SensorId::left, SensorId::right, SensorId::top, SensorId::bottom};

std::string_view to_string(SensorId id);
std::optional<SensorId> sensor_id_from_string(std::string_view name);

struct SensorSpec {
    SensorId id = SensorId::front;
    UnitVec3 boresight;
    /// Normal of the azimuth plane. Azimuth is measured about this axis,
    /// elevation towards it.
    UnitVec3 up_reference{0.0, 0.0, 1.0};
    double azimuth_fov_deg = 120.0;
    double elevation_fov_deg = 120.0;
    double max_range = 7.0;
    double bias_mean = 0.0;
    double noise_sigma = 0.0;
    double angular_sigma_deg = 1.0;
    double rate_hz = 10.0;
    double dropout = 0.0;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

struct RadarRig {
    std::vector<SensorSpec> sensors;

    void validate() const;
    const SensorSpec& sensor(SensorId id) const;
    SensorSpec& sensor(SensorId id);
};

struct Detection {
    Vec3 point;  // body frame
    SensorId sensor = SensorId::front;
    double t = 0.0;

    bool operator==(const Detection&) const = default;
};

/// Closest-point plateau and the blend toward the boresight beyond it.
struct PaModel {
    double theta0_deg = 30.0;
    double blend_slope = 1.0;

    void validate() const;
};

/// Pose used for world<->body transforms (yaw only, level flight).
struct UavPose {
    Vec3 position;
    double yaw = 0.0;
};

Vec3 world_to_body(const UavPose& pose, const Vec3& p_world);
Vec3 body_to_world(const UavPose& pose, const Vec3& p_body);
Vec3 world_to_body_dir(const UavPose& pose, const Vec3& v_world);
Vec3 body_to_world_dir(const UavPose& pose, const Vec3& v_body);

/// Front: 120 deg azimuth swept vertically, 30 deg elevation swept
/// horizontally, 10 m. Others 120x120, 7 m. Left/right toed in to +/-75 deg.
/// `use_measured_fov` substitutes the turntable-measured FoVs.
RadarRig default_rig(bool use_measured_fov = false);

/// Table of measured range-error statistics used by default_rig.
struct RangeErrorStats {
    SensorId id;
    double mean;
    double sigma;
    double min;
    double max;
    double rmse;
};
const std::array<RangeErrorStats, 6>& measured_range_errors();
inline constexpr RangeErrorStats kOverallRangeError{SensorId::front, 0.0607, 0.0279, -0.0004, 0.1136, 0.0663};

struct SensorAngles {
    double azimuth;    // rad, about up_reference, + towards up x boresight
    double elevation;  // rad, towards up_reference
};

/// Direction decomposition relative to the sensor frame. `dir` must be nonzero.
SensorAngles sensor_angles(const SensorSpec& s, const Vec3& dir);

/// FoV and range gate. `range_scale` shrinks max_range (conductor detectability).
bool in_fov(const SensorSpec& s, const Vec3& p_body, double range_scale = 1.0);

/// Noise-free detected point for a wire: the closest point on the supporting
/// line while the boresight is within theta0 of it, then sliding toward the
/// boresight/line closest approach (never past it). Clamped to the segment.
Vec3 pa_ideal_point(const SensorSpec& s, const PaModel& pa, const Segment3& conductor_body);

/// Range offset ~ N(bias_mean, noise_sigma) along the ray plus angular jitter
/// ~ N(0, angular_sigma) about a random axis orthogonal to the ray.
Vec3 apply_measurement_noise(const SensorSpec& s, const Vec3& ideal, Rng& rng);

std::optional<Detection> detect_conductor(const SensorSpec& s, const PaModel& pa,
                                          const Segment3& conductor_body, double detectability,
                                          double t, Rng& rng);

/// Ideal point reflector (corner reflector): no extent, detectability 1.
std::optional<Detection> detect_point_target(const SensorSpec& s, const Vec3& target_body, double t,
                                             Rng& rng);

/// All detections at time t. Each sensor draws from its own stream forked
/// off `rng` (stream id = sensor id), so the result is a pure function of
/// the inputs and the rng state.
std::vector<Detection> sense(const RadarRig& rig, const UavPose& pose, const Scenario& scenario,
                             double t, Rng& rng, const PaModel& pa = {});

}  // namespace srd
