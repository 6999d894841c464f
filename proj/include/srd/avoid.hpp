// Three-regime wire avoidance: tangential steering around detections, an
// e-brake horizon cone at speed, and proximity rejection inside a safety
// sphere. All vectors are body frame unless stated otherwise.
#pragma once

#include <deque>
#include <optional>
#include <set>
#include <string_view>
#include <utility>
#include <vector>

#include "srd/geom.hpp"
#include "srd/radar.hpp"

namespace srd {

enum class Mode { cruise, tangential, ebraking, rejecting };

std::string_view to_string(Mode m);
std::optional<Mode> mode_from_string(std::string_view name);

enum class RejectionPolicy { closest, sum };

struct AvoidanceParams {
    double r_a = 6.0;        // m, avoidance sphere
    double r_s = 1.5;        // m, safety sphere
    double k_s = 2.0;        // 1/s, rejection gain
    double a_max = 5.0;      // m/s^2, braking acceleration assumed by the horizon
    double s_margin = 2.0;   // m
    double v_eb = 2.0;       // m/s, e-brake arming speed
    double alpha = 0.245;    // rad, horizon cone half-angle, atan(1/4)
    UnitVec3 gravity_down{0.0, 0.0, -1.0};
    RejectionPolicy rejection = RejectionPolicy::closest;

    // Line-direction estimation gates.
    double buffer_window_s = 1.0;
    int n_min = 6;
    double l_min = 0.5;      // m, spread along the principal axis
    double cluster_link = 1.0;  // m, single-linkage radius separating wires

    void validate() const;
};

/// Detection kept for line-direction estimation, stored in the world frame
/// so that points from successive ticks are comparable.
struct BufferedPoint {
    Vec3 point_world;
    double t;
};

struct AvoidanceState {
    Mode mode = Mode::cruise;
    std::deque<BufferedPoint> buffer;
    std::optional<UnitVec3> c_hat;  // body frame
    std::optional<Plane> k_p;       // body frame, through the UAV
};

struct VelocityCommand {
    Vec3 v_out;
    Mode mode = Mode::cruise;
    std::vector<SensorId> contributing;
};

/// Inputs of one controller tick.
struct ControllerInput {
    double t = 0.0;
    std::vector<Detection> detections;  // this tick only, body frame
    Vec3 v_d;                           // current velocity, body frame
    Vec3 v_u;                           // desired velocity, body frame
    UavPose pose;                       // for buffering detections in world frame
};

/// Principal direction of the point set, or empty when fewer than n_min
/// points or the spread along that axis is below l_min. Sign normalized so
/// the first nonzero of (x, y, z) is positive.
std::optional<UnitVec3> estimate_line_direction(const std::vector<Vec3>& points, int n_min = 6,
                                                double l_min = 0.5);
std::optional<UnitVec3> estimate_line_direction(const std::vector<Detection>& buffer, int n_min = 6,
                                                double l_min = 0.5);

/// Keeps detections strictly inside the avoidance sphere.
std::vector<Detection> filter_avoidance_sphere(const std::vector<Detection>& detections, double r_a);

/// Scaled tangent for one detection and one velocity, or empty when the
/// velocity has no component toward the detection. `g_n_hat` is the unit
/// vector opposite gravity. Throws std::domain_error for a zero p_i.
std::optional<Vec3> tangent_for_detection(const Vec3& p_i, const Vec3& v, const UnitVec3& g_n_hat);

/// (sum of tangents + v_u), clamped to |v_u|.
Vec3 combine_output(const std::vector<Vec3>& tangents, const Vec3& v_u);

/// Horizon length v^2 / (2 a_max) + s_margin.
double ebrake_horizon_length(const Vec3& v_d, const AvoidanceParams& params);

bool ebrake_check(const std::vector<Detection>& detections, const Vec3& v_d, const AvoidanceParams& params);

/// Rejection velocity k_s (|p| - r_s) p_hat for the closest detection inside
/// r_s (or summed over all of them with RejectionPolicy::sum).
std::optional<Vec3> proximity_rejection(const std::vector<Detection>& detections, const AvoidanceParams& params);

/// One controller tick. Priority: rejection, then e-brake (sticky until
/// |v_d| <= v_eb), then tangential steering.
std::pair<VelocityCommand, AvoidanceState> step(const AvoidanceState& state, const ControllerInput& in,
                                                const AvoidanceParams& params);

}  // namespace srd
