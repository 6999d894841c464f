// Bench experiments against the simulated rig: the turntable range-error /
// FoV study and the yaw sweep relating boresight offset to detected-point
// offset.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "srd/radar.hpp"
#include "srd/rng.hpp"

namespace srd {

enum class TurntablePlane { XZ, YZ, XY };

std::string_view to_string(TurntablePlane p);
std::optional<TurntablePlane> plane_from_string(std::string_view name);

struct SweepSample {
    double rig_angle;  // rad
    SensorId sensor;
    Vec3 detection;  // body frame
    Vec3 truth;      // body frame
};

struct SensorStats {
    std::size_t count = 0;
    double mean_err = 0.0;
    double sigma_err = 0.0;  // population standard deviation
    double min_err = 0.0;
    double max_err = 0.0;
    double rmse = 0.0;
    std::optional<double> est_azimuth_fov_deg;
    std::optional<double> est_elevation_fov_deg;
};

struct TurntableResult {
    TurntablePlane plane;
    int steps;
    std::vector<SweepSample> samples;
    std::map<SensorId, SensorStats> stats;  // only sensors that saw the target
};

/// Rotates an ideal point target at `target_range` around the rig in `plane`
/// (`steps` >= 360 positions per revolution) and summarizes range errors and
/// the contiguous detection arc of each sensor.
TurntableResult turntable_experiment(const RadarRig& rig, TurntablePlane plane, double target_range, int steps,
                                     Rng& rng);

/// Range-error statistics over a sample set (all sensors pooled unless a
/// sensor is given). Throws std::domain_error when no sample matches.
SensorStats range_error_stats(const std::vector<SweepSample>& samples, std::optional<SensorId> sensor = {});

/// Angular length (deg) of the longest circular arc whose detection density
/// is at least `min_density`, from per-step detection flags.
double longest_detection_arc_deg(const std::vector<bool>& detected, double min_density = 0.95);

/// Copy of `rig` with all measurement noise removed.
RadarRig noiseless(RadarRig rig);

struct YawSweepPoint {
    double boresight_offset_deg;     // signed, closest point -> boresight, about +Z
    double detected_vs_closest_deg;  // signed, closest point -> detection, about +Z
    SensorId sensor;
};

/// Yaws the rig through a full turn in `yaw_step_deg` increments while
/// hovering in front of `wire` (body frame at zero yaw) and records every
/// detection.
std::vector<YawSweepPoint> yaw_sweep_experiment(const RadarRig& rig, const PaModel& pa, const Segment3& wire,
                                                Rng& rng, double yaw_step_deg = 0.5);

void write_turntable_samples_csv(const TurntableResult& result, std::ostream& os, bool header = true);
/// One row per sensor: count, mu, sigma, min, max, rmse, estimated and
/// configured FoVs. Pass the pooled stats (e.g. over several planes).
void write_sensor_summary_csv(const std::map<SensorId, SensorStats>& stats, const RadarRig& rig,
                              const std::optional<SensorStats>& overall, std::ostream& os);
void write_yaw_sweep_csv(const std::vector<YawSweepPoint>& points, std::ostream& os);

}  // namespace srd
