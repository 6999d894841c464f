#include "srd/service.hpp"

#include <cmath>
#include <limits>

namespace srd::service {

namespace {

Json vec_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

std::optional<std::int64_t> read_seq(const Json& j) {
    if (!j.is_object() || !j.contains("seq")) return std::nullopt;
    const Json& s = j.at("seq");
    if (!s.is_number_integer()) return std::nullopt;
    return s.get<std::int64_t>();
}

Vec3 read_vec(const Json& j, const char* what, std::optional<std::int64_t> seq) {
    if (!j.is_array() || j.size() != 3) throw ProtocolError(std::string(what) + " must be an array of 3 numbers", seq);
    Vec3 v;
    double* out[] = {&v.x, &v.y, &v.z};
    for (std::size_t i = 0; i < 3; ++i) {
        if (!j[i].is_number()) throw ProtocolError(std::string(what) + " must be an array of 3 numbers", seq);
        *out[i] = j[i].get<double>();
    }
    if (!v.is_finite()) throw ProtocolError(std::string(what) + " must be finite", seq);
    return v;
}

std::optional<ControlAction> action_from_string(const std::string& s) {
    if (s == "pause") return ControlAction::pause;
    if (s == "resume") return ControlAction::resume;
    if (s == "reset") return ControlAction::reset;
    if (s == "set_seed") return ControlAction::set_seed;
    if (s == "load_scenario") return ControlAction::load_scenario;
    return std::nullopt;
}

Json conductors_json(const Scenario& s) {
    Json out = Json::array();
    for (const auto& c : s.conductors) {
        out.push_back({{"a", vec_json(c.geometry.a())},
                       {"b", vec_json(c.geometry.b())},
                       {"diameter_mm", c.diameter_mm},
                       {"detectability", c.detectability}});
    }
    return out;
}

}  // namespace

Inbound parse_inbound(std::string_view text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ProtocolError(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ProtocolError("message must be a JSON object");
    const auto seq = read_seq(j);
    if (!seq) throw ProtocolError("message needs an integer seq");
    if (!j.contains("kind") || !j["kind"].is_string()) throw ProtocolError("message needs a string kind", seq);
    const std::string kind = j["kind"];
    const Json payload = j.value("payload", Json::object());
    if (!payload.is_object()) throw ProtocolError("payload must be an object", seq);

    if (kind == "command") {
        if (!payload.contains("v_u")) throw ProtocolError("command needs payload.v_u", seq);
        return CommandMsg{*seq, read_vec(payload["v_u"], "payload.v_u", seq)};
    }
    if (kind == "control") {
        if (!payload.contains("action") || !payload["action"].is_string()) {
            throw ProtocolError("control needs payload.action", seq);
        }
        const auto action = action_from_string(payload["action"]);
        if (!action) throw ProtocolError("unknown control action '" + payload["action"].get<std::string>() + "'", seq);
        ControlMsg msg{*seq, *action, std::nullopt, std::nullopt};
        if (*action == ControlAction::set_seed) {
            if (!payload.contains("seed") || !payload["seed"].is_number_unsigned()) {
                throw ProtocolError("set_seed needs a non-negative integer payload.seed", seq);
            }
            msg.seed = payload["seed"].get<std::uint64_t>();
        }
        if (*action == ControlAction::load_scenario) {
            if (!payload.contains("scenario") || !payload["scenario"].is_string()) {
                throw ProtocolError("load_scenario needs a string payload.scenario", seq);
            }
            msg.scenario = payload["scenario"].get<std::string>();
        }
        return msg;
    }
    throw ProtocolError("unknown kind '" + kind + "'", seq);
}

Json envelope(std::string_view kind, std::int64_t seq, double t, Json payload) {
    Json j;
    j["kind"] = std::string(kind);
    j["seq"] = seq;
    j["t"] = t;
    j["payload"] = std::move(payload);
    return j;
}

Json error_payload(const std::string& message, std::optional<std::int64_t> in_reply_to) {
    Json p;
    p["message"] = message;
    p["in_reply_to"] = in_reply_to ? Json(*in_reply_to) : Json(nullptr);
    return p;
}

Session::Session(Scenario scenario, std::uint64_t seed, ScenarioResolver resolver)
    : sim_(std::move(scenario), seed), resolver_(std::move(resolver)) {}

void Session::submit(const Inbound& msg) {
    std::optional<Scenario> loaded;
    if (const auto* c = std::get_if<ControlMsg>(&msg); c && c->action == ControlAction::load_scenario) {
        try {
            loaded = resolver_(*c->scenario);
            loaded->validate();
        } catch (const std::exception& e) {
            throw ProtocolError("load_scenario: " + std::string(e.what()), c->seq);
        }
    }
    if (const auto* cmd = std::get_if<CommandMsg>(&msg)) last_command_seq_ = cmd->seq;
    queue_.emplace_back(msg, std::move(loaded));
}

void Session::restart() { desired_log_.clear(); }

void Session::apply(const Inbound& msg) {
    if (const auto* cmd = std::get_if<CommandMsg>(&msg)) {
        sim_.set_desired_override(cmd->v_u);
        return;
    }
    const auto& c = std::get<ControlMsg>(msg);
    switch (c.action) {
        case ControlAction::pause: paused_ = true; break;
        case ControlAction::resume: paused_ = false; break;
        case ControlAction::reset:
            sim_.reset();
            restart();
            break;
        case ControlAction::set_seed:
            sim_.reset(*c.seed);
            restart();
            break;
        case ControlAction::load_scenario: break;  // handled in tick with the resolved scenario
    }
}

void Session::tick() {
    auto pending = std::move(queue_);
    queue_.clear();
    for (auto& [msg, loaded] : pending) {
        if (loaded) {
            sim_.load(std::move(*loaded));
            restart();
        } else {
            apply(msg);
        }
    }
    if (paused_ || sim_.finished()) return;

    const double t = sim_.time();
    const Vec3 v = sim_.current_desired();
    if (desired_log_.empty() || !(desired_log_.back().second == v)) desired_log_.emplace_back(t, v);
    sim_.advance();
}

void Session::clear_override() { sim_.set_desired_override(std::nullopt); }

Json Session::hello_payload() const {
    const Scenario& s = sim_.scenario();
    Json p;
    p["protocol"] = kProtocolVersion;
    p["scenario"] = s.name;
    p["seed"] = sim_.seed();
    p["controller_rate"] = s.sim.controller_rate;
    p["duration"] = s.duration;
    p["conductors"] = conductors_json(s);
    p["r_a"] = s.avoidance.r_a;
    p["r_s"] = s.avoidance.r_s;
    p["v_max_hard"] = s.sim.v_max_hard;
    return p;
}

Json Session::state_payload() const {
    const Scenario& s = sim_.scenario();
    const UavState& st = sim_.state();
    const auto& samples = sim_.log().samples;
    const TickSample* last = samples.empty() ? nullptr : &samples.back();

    Json p;
    p["t"] = sim_.time();
    p["position"] = vec_json(st.position);
    p["velocity"] = vec_json(st.velocity);
    p["yaw"] = st.yaw;
    p["v_u"] = vec_json(last ? last->v_u : sim_.current_desired());
    p["v_out"] = vec_json(last ? last->v_out : Vec3{});
    p["mode"] = std::string(to_string(last ? last->mode : Mode::cruise));

    Json dets = Json::array();
    if (last) {
        const UavPose pose = last->state.pose();
        for (const auto& d : last->detections) {
            dets.push_back({{"sensor", std::string(to_string(d.sensor))}, {"p", vec_json(body_to_world(pose, d.point))}});
        }
    }
    p["detections"] = std::move(dets);

    const AvoidanceParams& a = s.avoidance;
    const double speed = st.velocity.norm();
    Json cone;
    cone["apex"] = vec_json(st.position);
    cone["axis"] = vec_json(speed > 0.0 ? st.velocity / speed : Vec3{});
    cone["length"] = ebrake_horizon_length(st.velocity, a);
    cone["half_angle"] = a.alpha;
    cone["armed"] = speed > a.v_eb;
    cone["active"] = last && last->mode == Mode::ebraking;
    p["ebrake_cone"] = std::move(cone);
    p["r_a"] = a.r_a;
    p["r_s"] = a.r_s;
    p["last_command_seq"] = last_command_seq_ ? Json(*last_command_seq_) : Json(nullptr);
    p["paused"] = paused_;
    p["finished"] = sim_.finished();
    p["collided"] = sim_.collided();
    return p;
}

Scenario Session::replay_scenario() const {
    Scenario s = sim_.scenario();
    s.name += "_replay";
    if (!desired_log_.empty()) s.desired = DesiredScripted{desired_log_};
    if (sim_.time() > 0.0) s.duration = sim_.time();
    return s;
}

}  // namespace srd::service
