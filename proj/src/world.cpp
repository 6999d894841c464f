#include "srd/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace srd {

void Conductor::validate() const {
    if (!(diameter_mm > 0.0)) throw ScenarioValidationError("conductor diameter must be > 0 (diameter)");
    if (!(detectability > 0.0 && detectability <= 1.0)) {
        throw ScenarioValidationError("conductor detectability must be in (0, 1] (detectability)");
    }
}

double default_detectability(double diameter_mm) {
    if (diameter_mm >= 10.0) return 1.0;
    if (diameter_mm < 5.0) return 0.5;
    return 0.5 + 0.5 * (diameter_mm - 5.0) / 5.0;
}

Vec3 desired_at(const DesiredVelocitySource& src, double t) {
    if (const auto* c = std::get_if<DesiredConstant>(&src)) return c->v;
    if (const auto* s = std::get_if<DesiredScripted>(&src)) {
        Vec3 v{};
        for (const auto& [tk, vk] : s->keyframes) {
            if (tk > t + 1e-9) break;
            v = vk;
        }
        return v;
    }
    return {};
}

int SimConfig::physics_steps_per_controller_tick() const {
    const double n = 1.0 / (physics_dt * controller_rate);
    const double r = std::round(n);
    if (r < 1.0 || std::abs(n - r) > 1e-6) {
        throw ScenarioValidationError("sim.controller_rate must divide 1/physics_dt evenly");
    }
    return static_cast<int>(r);
}

int SimConfig::physics_steps_per_radar_tick() const {
    const double n = 1.0 / (physics_dt * radar_rate);
    const double r = std::round(n);
    if (r < 1.0 || std::abs(n - r) > 1e-6) {
        throw ScenarioValidationError("sim.radar_rate must divide 1/physics_dt evenly");
    }
    return static_cast<int>(r);
}

void SimConfig::validate() const {
    if (!(physics_dt > 0.0)) throw ScenarioValidationError("sim.physics_dt must be > 0");
    if (!(radar_rate > 0.0)) throw ScenarioValidationError("sim.radar_rate must be > 0");
    if (!(controller_rate > 0.0)) throw ScenarioValidationError("sim.controller_rate must be > 0");
    physics_steps_per_controller_tick();
    physics_steps_per_radar_tick();
    if (!(tau_v > 0.0)) throw ScenarioValidationError("sim.tau_v must be > 0");
    if (!(a_max_dyn > 0.0)) throw ScenarioValidationError("sim.a_max_dyn must be > 0");
    if (!(v_max_hard > 0.0)) throw ScenarioValidationError("sim.v_max_hard must be > 0");
    if (!(collision_radius >= 0.0)) throw ScenarioValidationError("sim.collision_radius must be >= 0");
    if (!std::is_sorted(yaw_script.begin(), yaw_script.end(),
                        [](const auto& a, const auto& b) { return a.first < b.first; })) {
        throw ScenarioValidationError("sim.yaw_script must be sorted by t");
    }
}

void Scenario::validate() const {
    if (name.empty()) throw ScenarioValidationError("name must not be empty");
    if (!(duration > 0.0)) throw ScenarioValidationError("duration_s must be > 0");
    if (conductors.empty() && name != "empty") {
        throw ScenarioValidationError("conductor: at least one conductor required unless name is \"empty\"");
    }
    for (std::size_t i = 0; i < conductors.size(); ++i) {
        try {
            conductors[i].validate();
        } catch (const ScenarioValidationError& e) {
            throw ScenarioValidationError("conductor[" + std::to_string(i) + "]: " + e.what());
        }
    }
    if (!uav_start.is_finite() || !uav_start_velocity.is_finite()) {
        throw ScenarioValidationError("uav.start / uav.start_velocity must be finite");
    }
    if (const auto* s = std::get_if<DesiredScripted>(&desired)) {
        if (!std::is_sorted(s->keyframes.begin(), s->keyframes.end(),
                            [](const auto& a, const auto& b) { return a.first < b.first; })) {
            throw ScenarioValidationError("uav.desired.scripted must be sorted by t");
        }
    }
    try {
        if (rig) rig->validate();
        pa.validate();
        avoidance.validate();
    } catch (const ScenarioValidationError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ScenarioValidationError(e.what());
    }
    sim.validate();
    if (sim.a_max_dyn < avoidance.a_max) {
        throw ScenarioValidationError("sim.a_max_dyn must be >= avoidance.a_max");
    }
    if (!(avoidance.gravity_down == gravity_down)) {
        throw ScenarioValidationError("avoidance gravity_down must match gravity_down");
    }
}

// ---------------------------------------------------------------------------
// Builtin scenarios
//
// Assumed site geometry (only spacing, stack height and span are known):
// conductors run along world Y over a 35 m span, ground at z = 0. The three
// 20 mm phases form an equilateral triangle with 3 m sides, apex down, its
// upper edge at z = 6. The 10 mm top wire sits 3 m above the upper edge,
// putting the top of the stack at 9 m.
// ---------------------------------------------------------------------------

namespace {

constexpr double kSpanHalf = 17.5;

Conductor wire_along_y(double x, double z, double diameter_mm, double half = kSpanHalf) {
    return {Segment3({x, -half, z}, {x, half, z}), diameter_mm, default_detectability(diameter_mm)};
}

std::vector<Conductor> triangle_conductors() {
    const double upper_z = 6.0;
    const double lower_z = upper_z - 3.0 * std::sqrt(3.0) / 2.0;
    return {
        wire_along_y(-1.5, upper_z, 20.0),
        wire_along_y(1.5, upper_z, 20.0),
        wire_along_y(0.0, lower_z, 20.0),
        wire_along_y(0.0, 9.0, 10.0),
    };
}

}  // namespace

std::vector<Scenario> builtin_scenarios() {
    std::vector<Scenario> out;

    {
        Scenario s;
        s.name = "triangle_3phase";
        s.conductors = triangle_conductors();
        // Crosses the gap between the top wire and the upper pair, slightly above its middle.
        s.uav_start = {-20.0, 0.0, 8.1};
        s.desired = DesiredConstant{{5.0, 0.0, 0.0}};
        s.duration = 16.0;
        s.assertions.min_clearance_m = 1.0;
        out.push_back(s);
    }
    {
        Scenario s;
        s.name = "triangle_descent";
        s.conductors = triangle_conductors();
        s.uav_start = {0.5, 0.0, 14.0};
        s.desired = DesiredConstant{{0.0, 0.0, -2.0}};
        s.duration = 8.0;  // reaches z = 0 just before the end
        s.assertions.max_final_z = 0.5;
        out.push_back(s);
    }
    {
        Scenario s;
        s.name = "thin_wire";
        s.conductors = {wire_along_y(0.0, 4.0, 1.2, 10.0)};
        s.uav_start = {-15.0, 0.0, 4.0};
        s.desired = DesiredConstant{{3.0, 0.0, 0.0}};
        s.duration = 12.0;
        out.push_back(s);
    }
    {
        Scenario s;
        s.name = "single_wire_head_on";
        s.conductors = {wire_along_y(0.0, 5.0, 20.0)};
        s.uav_start = {-25.0, 0.0, 5.0};
        s.desired = DesiredConstant{{10.0, 0.0, 0.0}};
        s.duration = 10.0;
        s.assertions.require_modes = {Mode::ebraking, Mode::tangential};
        out.push_back(s);
    }
    {
        Scenario s;
        s.name = "empty";
        s.uav_start = {0.0, 0.0, 5.0};
        s.desired = DesiredConstant{{5.0, 0.0, 0.0}};
        s.duration = 10.0;
        out.push_back(s);
    }
    return out;
}

std::optional<Scenario> builtin_scenario(const std::string& name) {
    for (auto& s : builtin_scenarios()) {
        if (s.name == name) return s;
    }
    return std::nullopt;
}

Scenario resolve_scenario(const std::string& ref) {
    constexpr std::string_view prefix = "builtin:";
    if (ref.rfind(prefix, 0) == 0) {
        const std::string name = ref.substr(prefix.size());
        if (auto s = builtin_scenario(name)) return *s;
        throw ScenarioValidationError("unknown builtin scenario '" + name + "'");
    }
    return load_scenario_file(ref);
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioParseError("cannot open scenario file '" + path + "'", 0, "");
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_scenario(ss.str());
}

}  // namespace srd
