#pragma once

#include <utility>
#include <vector>

namespace srd {

enum class YawPolicy { fixed, face_desired, scripted };

struct SimConfig {
    double physics_dt = 0.01;       // s
    double radar_rate = 10.0;       // Hz
    double controller_rate = 10.0;  // Hz
    double tau_v = 0.3;             // s, velocity tracking time constant
    double a_max_dyn = 8.0;         // m/s^2, plant limit; >= avoidance a_max
    double v_max_hard = 15.0;       // m/s
    double collision_radius = 0.2;  // m
    YawPolicy yaw_policy = YawPolicy::face_desired;
    std::vector<std::pair<double, double>> yaw_script;  // (t s, yaw rad), zero-order hold

    /// Ticks of physics per controller / radar period; throws when the
    /// rates do not divide 1/physics_dt.
    int physics_steps_per_controller_tick() const;
    int physics_steps_per_radar_tick() const;
    void validate() const;
};

}  // namespace srd
