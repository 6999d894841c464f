// Scenario file reader/writer (YAML). Unknown keys are rejected.
#include <yaml-cpp/yaml.h>

#include <charconv>
#include <initializer_list>
#include <set>
#include <sstream>

#include "srd/world.hpp"

namespace srd {

namespace {

[[noreturn]] void fail(const YAML::Node& node, const std::string& path, const std::string& msg) {
    const int line = node.IsDefined() && node.Mark().line >= 0 ? node.Mark().line + 1 : 0;
    std::string what = "scenario: " + path + ": " + msg;
    if (line > 0) what += " (line " + std::to_string(line) + ")";
    throw ScenarioParseError(what, line, path);
}

std::string join(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }

void require_map(const YAML::Node& node, const std::string& path) {
    if (!node.IsMap()) fail(node, path, "expected a table");
}

void check_keys(const YAML::Node& node, const std::string& path, std::initializer_list<const char*> allowed) {
    require_map(node, path);
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!ok.count(key)) fail(kv.first, join(path, key), "unknown key");
    }
}

double read_double(const YAML::Node& node, const std::string& path) {
    if (!node.IsScalar()) fail(node, path, "expected a number");
    try {
        return node.as<double>();
    } catch (const YAML::Exception&) {
        fail(node, path, "expected a number");
    }
}

int read_int(const YAML::Node& node, const std::string& path) {
    if (!node.IsScalar()) fail(node, path, "expected an integer");
    try {
        return node.as<int>();
    } catch (const YAML::Exception&) {
        fail(node, path, "expected an integer");
    }
}

bool read_bool(const YAML::Node& node, const std::string& path) {
    if (!node.IsScalar()) fail(node, path, "expected true/false");
    try {
        return node.as<bool>();
    } catch (const YAML::Exception&) {
        fail(node, path, "expected true/false");
    }
}

std::string read_string(const YAML::Node& node, const std::string& path) {
    if (!node.IsScalar()) fail(node, path, "expected a string");
    return node.as<std::string>();
}

Vec3 read_vec3(const YAML::Node& node, const std::string& path) {
    if (!node.IsSequence() || node.size() != 3) fail(node, path, "expected a 3-element array");
    return {read_double(node[0], path + "[0]"), read_double(node[1], path + "[1]"), read_double(node[2], path + "[2]")};
}

UnitVec3 read_unit(const YAML::Node& node, const std::string& path) {
    const Vec3 v = read_vec3(node, path);
    if (!(v.norm() > 0.0)) throw ScenarioValidationError(path + " must be a nonzero direction");
    return UnitVec3(v);
}

template <typename F>
void optional_field(const YAML::Node& parent, const char* key, const std::string& path, F&& read) {
    const YAML::Node n = parent[key];
    if (n) read(n, join(path, key));
}

void read_sensor(const YAML::Node& node, const std::string& path, RadarRig& rig) {
    check_keys(node, path,
               {"id", "boresight", "up_reference", "azimuth_fov", "elevation_fov", "max_range", "bias_mean",
                "noise_sigma", "angular_sigma", "rate", "dropout"});
    if (!node["id"]) fail(node, path + ".id", "missing sensor id");
    const auto name = read_string(node["id"], path + ".id");
    const auto id = sensor_id_from_string(name);
    if (!id) fail(node["id"], path + ".id", "unknown sensor id '" + name + "'");
    SensorSpec& s = rig.sensor(*id);
    optional_field(node, "boresight", path, [&](auto& n, auto p) { s.boresight = read_unit(n, p); });
    optional_field(node, "up_reference", path, [&](auto& n, auto p) { s.up_reference = read_unit(n, p); });
    optional_field(node, "azimuth_fov", path, [&](auto& n, auto p) { s.azimuth_fov_deg = read_double(n, p); });
    optional_field(node, "elevation_fov", path, [&](auto& n, auto p) { s.elevation_fov_deg = read_double(n, p); });
    optional_field(node, "max_range", path, [&](auto& n, auto p) { s.max_range = read_double(n, p); });
    optional_field(node, "bias_mean", path, [&](auto& n, auto p) { s.bias_mean = read_double(n, p); });
    optional_field(node, "noise_sigma", path, [&](auto& n, auto p) { s.noise_sigma = read_double(n, p); });
    optional_field(node, "angular_sigma", path, [&](auto& n, auto p) { s.angular_sigma_deg = read_double(n, p); });
    optional_field(node, "rate", path, [&](auto& n, auto p) { s.rate_hz = read_double(n, p); });
    optional_field(node, "dropout", path, [&](auto& n, auto p) { s.dropout = read_double(n, p); });
}

RadarRig read_rig(const YAML::Node& node, const std::string& path) {
    check_keys(node, path, {"use_measured_fov", "sensors"});
    bool measured = false;
    optional_field(node, "use_measured_fov", path, [&](auto& n, auto p) { measured = read_bool(n, p); });
    RadarRig rig = default_rig(measured);
    if (const YAML::Node sensors = node["sensors"]) {
        if (!sensors.IsSequence()) fail(sensors, path + ".sensors", "expected a list");
        for (std::size_t i = 0; i < sensors.size(); ++i) {
            read_sensor(sensors[i], path + ".sensors[" + std::to_string(i) + "]", rig);
        }
    }
    return rig;
}

void read_avoidance(const YAML::Node& node, const std::string& path, AvoidanceParams& a) {
    check_keys(node, path,
               {"r_a", "r_s", "k_s", "a_max", "s_margin", "v_eb", "alpha", "rejection", "buffer_window_s", "n_min",
                "l_min", "cluster_link"});
    optional_field(node, "r_a", path, [&](auto& n, auto p) { a.r_a = read_double(n, p); });
    optional_field(node, "r_s", path, [&](auto& n, auto p) { a.r_s = read_double(n, p); });
    optional_field(node, "k_s", path, [&](auto& n, auto p) { a.k_s = read_double(n, p); });
    optional_field(node, "a_max", path, [&](auto& n, auto p) { a.a_max = read_double(n, p); });
    optional_field(node, "s_margin", path, [&](auto& n, auto p) { a.s_margin = read_double(n, p); });
    optional_field(node, "v_eb", path, [&](auto& n, auto p) { a.v_eb = read_double(n, p); });
    optional_field(node, "alpha", path, [&](auto& n, auto p) { a.alpha = read_double(n, p); });
    optional_field(node, "rejection", path, [&](auto& n, auto p) {
        const auto v = read_string(n, p);
        if (v == "closest") a.rejection = RejectionPolicy::closest;
        else if (v == "sum") a.rejection = RejectionPolicy::sum;
        else fail(n, p, "expected 'closest' or 'sum'");
    });
    optional_field(node, "buffer_window_s", path, [&](auto& n, auto p) { a.buffer_window_s = read_double(n, p); });
    optional_field(node, "n_min", path, [&](auto& n, auto p) { a.n_min = read_int(n, p); });
    optional_field(node, "l_min", path, [&](auto& n, auto p) { a.l_min = read_double(n, p); });
    optional_field(node, "cluster_link", path, [&](auto& n, auto p) { a.cluster_link = read_double(n, p); });
}

void read_sim(const YAML::Node& node, const std::string& path, SimConfig& c) {
    check_keys(node, path,
               {"physics_dt", "radar_rate", "controller_rate", "tau_v", "a_max_dyn", "v_max_hard", "collision_radius",
                "yaw_policy", "yaw_script"});
    optional_field(node, "physics_dt", path, [&](auto& n, auto p) { c.physics_dt = read_double(n, p); });
    optional_field(node, "radar_rate", path, [&](auto& n, auto p) { c.radar_rate = read_double(n, p); });
    optional_field(node, "controller_rate", path, [&](auto& n, auto p) { c.controller_rate = read_double(n, p); });
    optional_field(node, "tau_v", path, [&](auto& n, auto p) { c.tau_v = read_double(n, p); });
    optional_field(node, "a_max_dyn", path, [&](auto& n, auto p) { c.a_max_dyn = read_double(n, p); });
    optional_field(node, "v_max_hard", path, [&](auto& n, auto p) { c.v_max_hard = read_double(n, p); });
    optional_field(node, "collision_radius", path, [&](auto& n, auto p) { c.collision_radius = read_double(n, p); });
    optional_field(node, "yaw_policy", path, [&](auto& n, auto p) {
        const auto v = read_string(n, p);
        if (v == "fixed") c.yaw_policy = YawPolicy::fixed;
        else if (v == "face_desired") c.yaw_policy = YawPolicy::face_desired;
        else if (v == "scripted") c.yaw_policy = YawPolicy::scripted;
        else fail(n, p, "expected fixed, face_desired or scripted");
    });
    optional_field(node, "yaw_script", path, [&](auto& n, auto p) {
        if (!n.IsSequence()) fail(n, p, "expected a list");
        c.yaw_script.clear();
        for (std::size_t i = 0; i < n.size(); ++i) {
            const auto ip = p + "[" + std::to_string(i) + "]";
            check_keys(n[i], ip, {"t", "yaw_deg"});
            if (!n[i]["t"] || !n[i]["yaw_deg"]) fail(n[i], ip, "needs t and yaw_deg");
            c.yaw_script.emplace_back(read_double(n[i]["t"], ip + ".t"), deg2rad(read_double(n[i]["yaw_deg"], ip + ".yaw_deg")));
        }
    });
}

DesiredVelocitySource read_desired(const YAML::Node& node, const std::string& path) {
    if (node.IsScalar()) {
        if (node.as<std::string>() == "external") return DesiredExternal{};
        fail(node, path, "expected 'external', {constant: [...]} or {scripted: [...]}");
    }
    check_keys(node, path, {"constant", "scripted"});
    if (node.size() != 1) fail(node, path, "exactly one of constant/scripted");
    if (node["constant"]) return DesiredConstant{read_vec3(node["constant"], path + ".constant")};
    const YAML::Node list = node["scripted"];
    if (!list.IsSequence()) fail(list, path + ".scripted", "expected a list");
    DesiredScripted s;
    for (std::size_t i = 0; i < list.size(); ++i) {
        const auto ip = path + ".scripted[" + std::to_string(i) + "]";
        check_keys(list[i], ip, {"t", "v"});
        if (!list[i]["t"] || !list[i]["v"]) fail(list[i], ip, "needs t and v");
        s.keyframes.emplace_back(read_double(list[i]["t"], ip + ".t"), read_vec3(list[i]["v"], ip + ".v"));
    }
    return s;
}

Conductor read_conductor(const YAML::Node& node, const std::string& path) {
    check_keys(node, path, {"a", "b", "diameter_mm", "detectability"});
    for (const char* k : {"a", "b", "diameter_mm"}) {
        if (!node[k]) fail(node, join(path, k), "missing required key");
    }
    const Vec3 a = read_vec3(node["a"], path + ".a");
    const Vec3 b = read_vec3(node["b"], path + ".b");
    const double diameter = read_double(node["diameter_mm"], path + ".diameter_mm");
    if (distance(a, b) <= Segment3::kMinLength) throw ScenarioValidationError(path + ": a and b coincide (b)");
    double det = diameter > 0.0 ? default_detectability(diameter) : 1.0;
    optional_field(node, "detectability", path, [&](auto& n, auto p) { det = read_double(n, p); });
    Conductor c{Segment3(a, b), diameter, det};
    try {
        c.validate();
    } catch (const ScenarioValidationError& e) {
        throw ScenarioValidationError(path + ": " + e.what());
    }
    return c;
}

void read_assertions(const YAML::Node& node, const std::string& path, ScenarioAssertions& a) {
    check_keys(node, path, {"min_clearance_m", "max_final_z", "require_modes"});
    optional_field(node, "min_clearance_m", path, [&](auto& n, auto p) { a.min_clearance_m = read_double(n, p); });
    optional_field(node, "max_final_z", path, [&](auto& n, auto p) { a.max_final_z = read_double(n, p); });
    optional_field(node, "require_modes", path, [&](auto& n, auto p) {
        if (!n.IsSequence()) fail(n, p, "expected a list");
        a.require_modes.clear();
        for (std::size_t i = 0; i < n.size(); ++i) {
            const auto m = mode_from_string(read_string(n[i], p));
            if (!m) fail(n[i], p, "unknown mode");
            a.require_modes.push_back(*m);
        }
    });
}

// --- writer ---

std::string fmt_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

YAML::Emitter& emit_vec(YAML::Emitter& out, const Vec3& v) {
    out << YAML::Flow << YAML::BeginSeq << fmt_double(v.x) << fmt_double(v.y) << fmt_double(v.z) << YAML::EndSeq;
    return out;
}

void emit_num(YAML::Emitter& out, const char* key, double v) { out << YAML::Key << key << YAML::Value << fmt_double(v); }

void emit_vec_kv(YAML::Emitter& out, const char* key, const Vec3& v) {
    out << YAML::Key << key << YAML::Value;
    emit_vec(out, v);
}

const char* yaw_policy_name(YawPolicy p) {
    switch (p) {
        case YawPolicy::fixed: return "fixed";
        case YawPolicy::face_desired: return "face_desired";
        case YawPolicy::scripted: return "scripted";
    }
    return "face_desired";
}

}  // namespace

Scenario load_scenario(const std::string& config_text) {
    YAML::Node root;
    try {
        root = YAML::Load(config_text);
    } catch (const YAML::ParserException& e) {
        throw ScenarioParseError(std::string("scenario: malformed document: ") + e.what(), e.mark.line + 1, "");
    }
    check_keys(root, "",
               {"name", "duration_s", "gravity_down", "uav", "conductor", "rig", "pa", "avoidance", "sim", "assertions"});

    Scenario s;
    if (!root["name"]) fail(root, "name", "missing required key");
    s.name = read_string(root["name"], "name");
    if (!root["duration_s"]) fail(root, "duration_s", "missing required key");
    s.duration = read_double(root["duration_s"], "duration_s");
    optional_field(root, "gravity_down", "", [&](auto& n, auto p) { s.gravity_down = read_unit(n, p); });

    if (!root["uav"]) fail(root, "uav", "missing required key");
    const YAML::Node uav = root["uav"];
    check_keys(uav, "uav", {"start", "start_velocity", "yaw_deg", "desired"});
    if (!uav["start"]) fail(uav, "uav.start", "missing required key");
    s.uav_start = read_vec3(uav["start"], "uav.start");
    optional_field(uav, "start_velocity", "uav", [&](auto& n, auto p) { s.uav_start_velocity = read_vec3(n, p); });
    optional_field(uav, "yaw_deg", "uav", [&](auto& n, auto p) { s.uav_start_yaw = deg2rad(read_double(n, p)); });
    if (!uav["desired"]) fail(uav, "uav.desired", "missing required key");
    s.desired = read_desired(uav["desired"], "uav.desired");

    if (const YAML::Node list = root["conductor"]) {
        if (!list.IsSequence()) fail(list, "conductor", "expected a list of tables");
        for (std::size_t i = 0; i < list.size(); ++i) {
            s.conductors.push_back(read_conductor(list[i], "conductor[" + std::to_string(i) + "]"));
        }
    }

    optional_field(root, "rig", "", [&](auto& n, auto p) { s.rig = read_rig(n, p); });
    optional_field(root, "pa", "", [&](auto& n, auto p) {
        check_keys(n, p, {"theta0_deg", "blend_slope"});
        optional_field(n, "theta0_deg", p, [&](auto& m, auto q) { s.pa.theta0_deg = read_double(m, q); });
        optional_field(n, "blend_slope", p, [&](auto& m, auto q) { s.pa.blend_slope = read_double(m, q); });
    });
    optional_field(root, "avoidance", "", [&](auto& n, auto p) { read_avoidance(n, p, s.avoidance); });
    optional_field(root, "sim", "", [&](auto& n, auto p) { read_sim(n, p, s.sim); });
    optional_field(root, "assertions", "", [&](auto& n, auto p) { read_assertions(n, p, s.assertions); });

    s.avoidance.gravity_down = s.gravity_down;
    s.validate();
    return s;
}

std::string dump_scenario(const Scenario& s) {
    YAML::Emitter out;
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << s.name;
    emit_num(out, "duration_s", s.duration);
    emit_vec_kv(out, "gravity_down", s.gravity_down);

    out << YAML::Key << "uav" << YAML::Value << YAML::BeginMap;
    emit_vec_kv(out, "start", s.uav_start);
    emit_vec_kv(out, "start_velocity", s.uav_start_velocity);
    emit_num(out, "yaw_deg", rad2deg(s.uav_start_yaw));
    out << YAML::Key << "desired" << YAML::Value;
    if (const auto* c = std::get_if<DesiredConstant>(&s.desired)) {
        out << YAML::BeginMap;
        emit_vec_kv(out, "constant", c->v);
        out << YAML::EndMap;
    } else if (const auto* sc = std::get_if<DesiredScripted>(&s.desired)) {
        out << YAML::BeginMap << YAML::Key << "scripted" << YAML::Value << YAML::BeginSeq;
        for (const auto& [t, v] : sc->keyframes) {
            out << YAML::Flow << YAML::BeginMap;
            emit_num(out, "t", t);
            emit_vec_kv(out, "v", v);
            out << YAML::EndMap;
        }
        out << YAML::EndSeq << YAML::EndMap;
    } else {
        out << "external";
    }
    out << YAML::EndMap;

    out << YAML::Key << "conductor" << YAML::Value << YAML::BeginSeq;
    for (const auto& c : s.conductors) {
        out << YAML::BeginMap;
        emit_vec_kv(out, "a", c.geometry.a());
        emit_vec_kv(out, "b", c.geometry.b());
        emit_num(out, "diameter_mm", c.diameter_mm);
        emit_num(out, "detectability", c.detectability);
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;

    if (s.rig) {
        out << YAML::Key << "rig" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "sensors" << YAML::Value << YAML::BeginSeq;
        for (const auto& sn : s.rig->sensors) {
            out << YAML::BeginMap;
            out << YAML::Key << "id" << YAML::Value << std::string(to_string(sn.id));
            emit_vec_kv(out, "boresight", sn.boresight);
            emit_vec_kv(out, "up_reference", sn.up_reference);
            emit_num(out, "azimuth_fov", sn.azimuth_fov_deg);
            emit_num(out, "elevation_fov", sn.elevation_fov_deg);
            emit_num(out, "max_range", sn.max_range);
            emit_num(out, "bias_mean", sn.bias_mean);
            emit_num(out, "noise_sigma", sn.noise_sigma);
            emit_num(out, "angular_sigma", sn.angular_sigma_deg);
            emit_num(out, "rate", sn.rate_hz);
            emit_num(out, "dropout", sn.dropout);
            out << YAML::EndMap;
        }
        out << YAML::EndSeq << YAML::EndMap;
    }

    out << YAML::Key << "pa" << YAML::Value << YAML::BeginMap;
    emit_num(out, "theta0_deg", s.pa.theta0_deg);
    emit_num(out, "blend_slope", s.pa.blend_slope);
    out << YAML::EndMap;

    const auto& a = s.avoidance;
    out << YAML::Key << "avoidance" << YAML::Value << YAML::BeginMap;
    emit_num(out, "r_a", a.r_a);
    emit_num(out, "r_s", a.r_s);
    emit_num(out, "k_s", a.k_s);
    emit_num(out, "a_max", a.a_max);
    emit_num(out, "s_margin", a.s_margin);
    emit_num(out, "v_eb", a.v_eb);
    emit_num(out, "alpha", a.alpha);
    out << YAML::Key << "rejection" << YAML::Value << (a.rejection == RejectionPolicy::sum ? "sum" : "closest");
    emit_num(out, "buffer_window_s", a.buffer_window_s);
    out << YAML::Key << "n_min" << YAML::Value << a.n_min;
    emit_num(out, "l_min", a.l_min);
    emit_num(out, "cluster_link", a.cluster_link);
    out << YAML::EndMap;

    const auto& c = s.sim;
    out << YAML::Key << "sim" << YAML::Value << YAML::BeginMap;
    emit_num(out, "physics_dt", c.physics_dt);
    emit_num(out, "radar_rate", c.radar_rate);
    emit_num(out, "controller_rate", c.controller_rate);
    emit_num(out, "tau_v", c.tau_v);
    emit_num(out, "a_max_dyn", c.a_max_dyn);
    emit_num(out, "v_max_hard", c.v_max_hard);
    emit_num(out, "collision_radius", c.collision_radius);
    out << YAML::Key << "yaw_policy" << YAML::Value << yaw_policy_name(c.yaw_policy);
    if (!c.yaw_script.empty()) {
        out << YAML::Key << "yaw_script" << YAML::Value << YAML::BeginSeq;
        for (const auto& [t, yaw] : c.yaw_script) {
            out << YAML::Flow << YAML::BeginMap;
            emit_num(out, "t", t);
            emit_num(out, "yaw_deg", rad2deg(yaw));
            out << YAML::EndMap;
        }
        out << YAML::EndSeq;
    }
    out << YAML::EndMap;

    const auto& as = s.assertions;
    if (as.min_clearance_m || as.max_final_z || !as.require_modes.empty()) {
        out << YAML::Key << "assertions" << YAML::Value << YAML::BeginMap;
        if (as.min_clearance_m) emit_num(out, "min_clearance_m", *as.min_clearance_m);
        if (as.max_final_z) emit_num(out, "max_final_z", *as.max_final_z);
        if (!as.require_modes.empty()) {
            out << YAML::Key << "require_modes" << YAML::Value << YAML::Flow << YAML::BeginSeq;
            for (Mode m : as.require_modes) out << std::string(to_string(m));
            out << YAML::EndSeq;
        }
        out << YAML::EndMap;
    }

    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

void apply_override(Scenario& scenario, const std::string& key, const std::string& value) {
    YAML::Node root = YAML::Load(dump_scenario(scenario));
    YAML::Node parsed;
    try {
        parsed = YAML::Load(value);
    } catch (const YAML::Exception& e) {
        throw ScenarioValidationError("override " + key + ": cannot parse value '" + value + "'");
    }
    std::vector<std::string> parts;
    std::stringstream ss(key);
    for (std::string part; std::getline(ss, part, '.');) parts.push_back(part);
    if (parts.empty()) throw ScenarioValidationError("override: empty key");

    YAML::Node node = root;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        // Re-seat the handle on the child; operator= on an existing handle would assign the value.
        YAML::Node child = node[parts[i]];
        if (!child.IsDefined() || child.IsNull()) {
            node[parts[i]] = YAML::Node(YAML::NodeType::Map);
            child.reset(node[parts[i]]);
        }
        node.reset(child);
    }
    node[parts.back()] = parsed;
    try {
        scenario = load_scenario(YAML::Dump(root));
    } catch (const ScenarioParseError& e) {
        throw ScenarioValidationError("override " + key + ": " + e.what());
    }
}

}  // namespace srd
