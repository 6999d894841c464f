#include "srd/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace srd {

namespace {

Vec3 clamp_norm(const Vec3& v, double max_norm) {
    const double n = v.norm();
    return n > max_norm ? v * (max_norm / n) : v;
}

nlohmann::ordered_json to_json(const Vec3& v) { return nlohmann::ordered_json::array({v.x, v.y, v.z}); }

}  // namespace

UavState step_dynamics(const UavState& state, const Vec3& v_cmd, const SimConfig& cfg) {
    const Vec3 target = clamp_norm(v_cmd, cfg.v_max_hard);
    const double gain = 1.0 - std::exp(-cfg.physics_dt / cfg.tau_v);
    const Vec3 dv = clamp_norm((target - state.velocity) * gain, cfg.a_max_dyn * cfg.physics_dt);
    UavState next = state;
    next.velocity = state.velocity + dv;
    next.position = state.position + next.velocity * cfg.physics_dt;
    next.t = state.t + cfg.physics_dt;
    return next;
}

double clearance(const Vec3& p, const Scenario& scenario) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : scenario.conductors) {
        best = std::min(best, distance(p, closest_point_on_segment(p, c.geometry)));
    }
    return best;
}

Metrics compute_metrics(const RunLog& log, const Scenario& scenario) {
    if (log.trace.empty() || log.samples.empty()) throw std::domain_error("compute_metrics: empty run log");
    Metrics m;
    m.min_clearance = std::numeric_limits<double>::infinity();
    for (const auto& tp : log.trace) {
        m.min_clearance = std::min(m.min_clearance, clearance(tp.position, scenario));
        m.max_speed = std::max(m.max_speed, tp.velocity.norm());
    }
    for (const auto& s : log.samples) m.modes_visited.insert(s.mode);
    m.collided = m.min_clearance < scenario.sim.collision_radius;
    m.duration = log.trace.back().t;
    m.final_position = log.trace.back().position;
    return m;
}

Simulator::Simulator(Scenario scenario, std::uint64_t seed)
    : scenario_(std::move(scenario)), rig_(scenario_.effective_rig()), seed_(seed), rng_(seed) {
    scenario_.validate();
    reset(seed);
}

void Simulator::load(Scenario scenario) {
    scenario.validate();
    scenario_ = std::move(scenario);
    rig_ = scenario_.effective_rig();
    reset(seed_);
}

void Simulator::reset() { reset(seed_); }

void Simulator::reset(std::uint64_t seed) {
    seed_ = seed;
    rng_ = Rng(seed);
    state_ = UavState{scenario_.uav_start, scenario_.uav_start_velocity, scenario_.uav_start_yaw, 0.0};
    ctrl_ = AvoidanceState{};
    v_cmd_world_ = scenario_.uav_start_velocity;
    pending_.clear();
    step_ = 0;
    ctrl_steps_ = scenario_.sim.physics_steps_per_controller_tick();
    radar_steps_ = scenario_.sim.physics_steps_per_radar_tick();
    collided_ = false;
    log_ = RunLog{};
    log_.scenario = scenario_.name;
    log_.seed = seed;
    log_.trace.push_back({0.0, state_.position, state_.velocity, Mode::cruise});
}

void Simulator::set_desired_override(std::optional<Vec3> v_u_world) {
    if (v_u_world) v_u_world = clamp_norm(*v_u_world, scenario_.sim.v_max_hard);
    override_ = v_u_world;
}

Vec3 Simulator::current_desired() const {
    return override_ ? *override_ : desired_at(scenario_.desired, time());
}

bool Simulator::finished() const { return collided_ || time() >= scenario_.duration - 1e-9; }

const TickSample& Simulator::advance() {
    if (finished()) {
        if (log_.samples.empty()) throw std::logic_error("Simulator::advance: nothing to run");
        return log_.samples.back();
    }
    const SimConfig& cfg = scenario_.sim;
    const double t_tick = time();
    const Vec3 v_u_world = current_desired();

    switch (cfg.yaw_policy) {
        case YawPolicy::fixed:
            state_.yaw = scenario_.uav_start_yaw;
            break;
        case YawPolicy::face_desired:
            if (std::hypot(v_u_world.x, v_u_world.y) > 0.1) state_.yaw = std::atan2(v_u_world.y, v_u_world.x);
            break;
        case YawPolicy::scripted: {
            double yaw = scenario_.uav_start_yaw;
            for (const auto& [tk, yk] : cfg.yaw_script) {
                if (tk > t_tick + 1e-9) break;
                yaw = yk;
            }
            state_.yaw = yaw;
            break;
        }
    }

    for (int i = 0; i < ctrl_steps_; ++i) {
        const double t = time();
        if (step_ % radar_steps_ == 0) {
            auto frame = sense(rig_, state_.pose(), scenario_, t, rng_, scenario_.pa);
            pending_.insert(pending_.end(), frame.begin(), frame.end());
        }
        if (i == 0) {
            ControllerInput in;
            in.t = t;
            in.detections = std::move(pending_);
            pending_.clear();
            in.pose = state_.pose();
            in.v_d = world_to_body_dir(in.pose, state_.velocity);
            in.v_u = world_to_body_dir(in.pose, v_u_world);
            auto [cmd, next] = step(ctrl_, in, scenario_.avoidance);
            ctrl_ = std::move(next);
            v_cmd_world_ = body_to_world_dir(in.pose, cmd.v_out);

            TickSample sample;
            sample.t = t;
            sample.state = state_;
            sample.v_u = v_u_world;
            sample.v_out = v_cmd_world_;
            sample.mode = cmd.mode;
            sample.detections = std::move(in.detections);
            log_.samples.push_back(std::move(sample));
        }

        state_ = step_dynamics(state_, v_cmd_world_, cfg);
        ++step_;
        state_.t = time();
        log_.trace.push_back({state_.t, state_.position, state_.velocity, log_.samples.back().mode});
        if (clearance(state_.position, scenario_) < cfg.collision_radius) {
            collided_ = true;
            break;
        }
        if (finished()) break;
    }
    return log_.samples.back();
}

RunLog run(const Scenario& scenario, std::uint64_t seed) {
    Simulator sim(scenario, seed);
    while (!sim.finished()) sim.advance();
    RunLog log = sim.log();
    log.metrics = compute_metrics(log, sim.scenario());
    return log;
}

RunLog run(const Scenario& scenario, const RadarRig& rig, const AvoidanceParams& params, const SimConfig& cfg,
           std::uint64_t seed) {
    Scenario s = scenario;
    s.rig = rig;
    s.avoidance = params;
    s.sim = cfg;
    return run(s, seed);
}

void write_jsonl(const RunLog& log, std::ostream& os) {
    for (const auto& s : log.samples) {
        nlohmann::ordered_json j;
        j["t"] = s.t;
        j["pos"] = to_json(s.state.position);
        j["vel"] = to_json(s.state.velocity);
        j["yaw"] = s.state.yaw;
        j["v_u"] = to_json(s.v_u);
        j["v_out"] = to_json(s.v_out);
        j["mode"] = std::string(to_string(s.mode));
        auto dets = nlohmann::ordered_json::array();
        for (const auto& d : s.detections) {
            nlohmann::ordered_json dj;
            dj["sensor"] = std::string(to_string(d.sensor));
            dj["p"] = to_json(d.point);
            dets.push_back(std::move(dj));
        }
        j["detections"] = std::move(dets);
        os << j.dump() << '\n';
    }
}

void write_metrics_csv(const RunLog& log, std::ostream& os, bool header) {
    if (header) os << kMetricsCsvHeader << '\n';
    const Metrics& m = log.metrics;
    std::string modes;
    for (Mode mode : m.modes_visited) {
        if (!modes.empty()) modes += '|';
        modes += to_string(mode);
    }
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.6f,%s,%.6f,%.6f,", m.min_clearance, m.collided ? "true" : "false", m.max_speed,
                  m.duration);
    os << log.scenario << ',' << log.seed << ',' << buf << modes << '\n';
}

std::vector<AssertionResult> check_assertions(const RunLog& log, const Scenario& scenario) {
    std::vector<AssertionResult> out;
    const Metrics& m = log.metrics;
    char buf[128];
    std::snprintf(buf, sizeof buf, "min_clearance=%.4f", m.min_clearance);
    out.push_back({"no_collision", !m.collided, buf});
    const auto& a = scenario.assertions;
    if (a.min_clearance_m) {
        std::snprintf(buf, sizeof buf, "min_clearance=%.4f required>=%.4f", m.min_clearance, *a.min_clearance_m);
        out.push_back({"min_clearance_m", m.min_clearance >= *a.min_clearance_m, buf});
    }
    if (a.max_final_z) {
        const double z = m.final_position ? m.final_position->z : std::numeric_limits<double>::quiet_NaN();
        std::snprintf(buf, sizeof buf, "final_z=%.4f required<=%.4f", z, *a.max_final_z);
        out.push_back({"max_final_z", z <= *a.max_final_z, buf});
    }
    for (Mode mode : a.require_modes) {
        const bool seen = m.modes_visited.count(mode) > 0;
        out.push_back({"require_mode:" + std::string(to_string(mode)), seen, seen ? "visited" : "not visited"});
    }
    return out;
}

}  // namespace srd
