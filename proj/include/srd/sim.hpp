// Closed-loop simulation: point-mass plant with first-order velocity
// tracking, radar ticks, the avoidance controller with zero-order hold, and
// run logs.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "srd/avoid.hpp"
#include "srd/radar.hpp"
#include "srd/rng.hpp"
#include "srd/sim_config.hpp"
#include "srd/world.hpp"

namespace srd {

struct UavState {
    Vec3 position;  // world
    Vec3 velocity;  // world
    double yaw = 0.0;
    double t = 0.0;

    UavPose pose() const { return {position, yaw}; }
};

/// One physics step: dv = (v_cmd - v)(1 - exp(-dt/tau_v)), |dv| <= a_max_dyn dt,
/// then position += v_new dt. v_cmd is clamped to v_max_hard first.
UavState step_dynamics(const UavState& state, const Vec3& v_cmd, const SimConfig& cfg);

/// Logged at every controller tick.
struct TickSample {
    double t = 0.0;
    UavState state;
    Vec3 v_u;    // world
    Vec3 v_out;  // world
    Mode mode = Mode::cruise;
    std::vector<Detection> detections;  // body frame
};

/// Physics-rate trace used for clearance metrics.
struct TracePoint {
    double t;
    Vec3 position;
    Vec3 velocity;
    Mode mode;
};

struct Metrics {
    double min_clearance = 0.0;
    bool collided = false;
    double max_speed = 0.0;
    std::set<Mode> modes_visited;
    double duration = 0.0;
    std::optional<Vec3> final_position;
};

struct RunLog {
    std::string scenario;
    std::uint64_t seed = 0;
    std::vector<TickSample> samples;
    std::vector<TracePoint> trace;
    Metrics metrics;
};

/// Minimum distance from p to any conductor centreline (infinity if none).
double clearance(const Vec3& p, const Scenario& scenario);

/// Metrics from the physics-rate trace against the true conductor geometry.
/// Throws std::domain_error for an empty log.
Metrics compute_metrics(const RunLog& log, const Scenario& scenario);

/// Steppable simulation shared by headless runs and the live service.
class Simulator {
public:
    Simulator(Scenario scenario, std::uint64_t seed);

    void reset();
    void reset(std::uint64_t seed);
    void load(Scenario scenario);

    /// Replace the scenario's desired velocity (world frame) until cleared.
    void set_desired_override(std::optional<Vec3> v_u_world);
    const std::optional<Vec3>& desired_override() const { return override_; }

    /// Runs one controller period: sense and control at the current time,
    /// then integrate physics up to the next controller tick. Returns the
    /// sample logged at the start of the period.
    const TickSample& advance();

    bool finished() const;
    bool collided() const { return collided_; }
    double time() const { return static_cast<double>(step_) * scenario_.sim.physics_dt; }

    const Scenario& scenario() const { return scenario_; }
    const RadarRig& rig() const { return rig_; }
    const UavState& state() const { return state_; }
    const AvoidanceState& controller_state() const { return ctrl_; }
    const RunLog& log() const { return log_; }
    std::uint64_t seed() const { return seed_; }
    Vec3 current_desired() const;

private:
    Scenario scenario_;
    RadarRig rig_;
    std::uint64_t seed_;
    Rng rng_;
    UavState state_;
    AvoidanceState ctrl_;
    std::optional<Vec3> override_;
    Vec3 v_cmd_world_;
    std::vector<Detection> pending_;
    std::int64_t step_ = 0;
    int ctrl_steps_ = 1;
    int radar_steps_ = 1;
    bool collided_ = false;
    RunLog log_;
};

RunLog run(const Scenario& scenario, std::uint64_t seed);
RunLog run(const Scenario& scenario, const RadarRig& rig, const AvoidanceParams& params, const SimConfig& cfg,
           std::uint64_t seed);

/// One JSON object per controller tick: t, pos, vel, yaw, v_u, v_out, mode,
/// detections [{sensor, p}].
void write_jsonl(const RunLog& log, std::ostream& os);

inline constexpr const char* kMetricsCsvHeader =
    "scenario,seed,min_clearance_m,collided,max_speed_mps,duration_s,modes_visited";
void write_metrics_csv(const RunLog& log, std::ostream& os, bool header = true);

/// Scenario-declared assertions; each entry is (name, passed, detail).
struct AssertionResult {
    std::string name;
    bool passed;
    std::string detail;
};
std::vector<AssertionResult> check_assertions(const RunLog& log, const Scenario& scenario);

}  // namespace srd
