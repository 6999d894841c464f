// Wire environments and scenario files.
#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "srd/avoid.hpp"
#include "srd/geom.hpp"
#include "srd/radar.hpp"
#include "srd/sim_config.hpp"

namespace srd {

struct Conductor {
    Segment3 geometry;
    double diameter_mm;
    double detectability;  // scales sensor max_range, (0, 1]

    void validate() const;
};

/// 1.0 from 10 mm up, 0.5 below 5 mm, linear in between.
double default_detectability(double diameter_mm);

struct DesiredConstant {
    Vec3 v;
    bool operator==(const DesiredConstant&) const = default;
};
struct DesiredScripted {
    std::vector<std::pair<double, Vec3>> keyframes;  // (t, v) sorted by t, zero-order hold
    bool operator==(const DesiredScripted&) const = default;
};
struct DesiredExternal {
    bool operator==(const DesiredExternal&) const = default;
};
using DesiredVelocitySource = std::variant<DesiredConstant, DesiredScripted, DesiredExternal>;

/// World-frame desired velocity. External sources evaluate to zero (hover)
/// until something overrides them.
Vec3 desired_at(const DesiredVelocitySource& src, double t);

/// Pass/fail conditions a scenario declares for `srd run`.
struct ScenarioAssertions {
    std::optional<double> min_clearance_m;
    std::optional<double> max_final_z;
    std::vector<Mode> require_modes;
};

struct Scenario {
    std::string name;
    std::vector<Conductor> conductors;
    Vec3 uav_start;
    Vec3 uav_start_velocity;
    double uav_start_yaw = 0.0;  // rad
    UnitVec3 gravity_down{0.0, 0.0, -1.0};
    DesiredVelocitySource desired = DesiredConstant{};
    double duration = 10.0;  // s

    std::optional<RadarRig> rig;  // absent: default_rig(false)
    PaModel pa;
    AvoidanceParams avoidance;
    SimConfig sim;
    ScenarioAssertions assertions;

    void validate() const;
    RadarRig effective_rig() const { return rig ? *rig : default_rig(false); }
};

/// Parse failure: carries the line and the offending key path when known.
class ScenarioParseError : public std::runtime_error {
public:
    ScenarioParseError(const std::string& what, int line, std::string field)
        : std::runtime_error(what), line_(line), field_(std::move(field)) {}
    int line() const { return line_; }
    const std::string& field() const { return field_; }

private:
    int line_;
    std::string field_;
};

/// Invariant violation; the message names the field.
class ScenarioValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

Scenario load_scenario(const std::string& config_text);
Scenario load_scenario_file(const std::string& path);
std::string dump_scenario(const Scenario& scenario);

/// Writes `key=value` overrides (avoidance.*, sim.*, pa.*, duration_s,
/// uav.desired_constant=x,y,z) into the scenario. Throws ScenarioValidationError.
void apply_override(Scenario& scenario, const std::string& key, const std::string& value);

std::vector<Scenario> builtin_scenarios();
std::optional<Scenario> builtin_scenario(const std::string& name);

/// "builtin:NAME" or a file path.
Scenario resolve_scenario(const std::string& ref);

}  // namespace srd
