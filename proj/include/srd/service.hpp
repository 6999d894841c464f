// Live telemetry/command service. `Session` owns the simulation and speaks
// the JSON protocol; `Server` puts it behind a WebSocket endpoint.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "srd/sim.hpp"

namespace srd::service {

using Json = nlohmann::ordered_json;

inline constexpr const char* kProtocolVersion = "1";

struct CommandMsg {
    std::int64_t seq = 0;
    Vec3 v_u;  // world frame, m/s
};

enum class ControlAction { pause, resume, reset, set_seed, load_scenario };

struct ControlMsg {
    std::int64_t seq = 0;
    ControlAction action = ControlAction::pause;
    std::optional<std::uint64_t> seed;    // set_seed
    std::optional<std::string> scenario;  // load_scenario: "builtin:NAME" or a path
};

using Inbound = std::variant<CommandMsg, ControlMsg>;

/// Malformed inbound message. `seq` is set when the message carried one.
class ProtocolError : public std::runtime_error {
public:
    ProtocolError(const std::string& what, std::optional<std::int64_t> seq = {})
        : std::runtime_error(what), seq_(seq) {}
    const std::optional<std::int64_t>& seq() const { return seq_; }

private:
    std::optional<std::int64_t> seq_;
};

/// Parses one client text frame. Throws ProtocolError.
Inbound parse_inbound(std::string_view text);

/// {"kind", "seq", "t", "payload"}
Json envelope(std::string_view kind, std::int64_t seq, double t, Json payload);
Json error_payload(const std::string& message, std::optional<std::int64_t> in_reply_to = {});

using ScenarioResolver = std::function<Scenario(const std::string&)>;

/// Simulation owner for serve mode. Inbound messages are queued by
/// `submit` and applied at the start of the next `tick`, so the control
/// path only changes at controller ticks.
class Session {
public:
    Session(Scenario scenario, std::uint64_t seed, ScenarioResolver resolver = resolve_scenario);

    /// Queues a message. load_scenario is resolved here, so a bad reference
    /// is reported to the sender right away. Throws ProtocolError.
    void submit(const Inbound& msg);

    /// Applies queued messages and, unless paused or finished, advances one
    /// controller period.
    void tick();

    /// Drops the v_u override (e.g. when the last client disconnects).
    void clear_override();

    Json hello_payload() const;
    Json state_payload() const;

    double controller_period() const { return 1.0 / sim_.scenario().sim.controller_rate; }
    bool paused() const { return paused_; }
    const Simulator& simulator() const { return sim_; }
    std::optional<std::int64_t> last_command_seq() const { return last_command_seq_; }

    /// The session's desired-velocity history since the last reset, as a
    /// scenario with a scripted source. Running it headless with `seed()`
    /// reproduces the session's controller outputs.
    Scenario replay_scenario() const;
    std::uint64_t seed() const { return sim_.seed(); }

private:
    void apply(const Inbound& msg);
    void restart();

    Simulator sim_;
    ScenarioResolver resolver_;
    std::vector<std::pair<Inbound, std::optional<Scenario>>> queue_;
    std::vector<std::pair<double, Vec3>> desired_log_;
    std::optional<std::int64_t> last_command_seq_;
    bool paused_ = false;
};

struct ServeOptions {
    std::string address = "127.0.0.1";
    unsigned short port = 8765;  // 0 picks a free port
    double state_rate_hz = 20.0;
    double speed = 1.0;  // simulated seconds per wall-clock second
    std::string record_path;  // replay scenario written on shutdown when set
};

/// Port could not be bound.
class BindError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// WebSocket endpoint around a Session. One thread runs everything: the
/// simulation timer, the state broadcast timer and all connections.
class Server {
public:
    /// Binds immediately; throws BindError.
    Server(Session& session, const ServeOptions& options);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    unsigned short port() const;
    /// Blocks until stop() or SIGINT/SIGTERM (when handle_signals).
    void run(bool handle_signals = false);
    /// Thread-safe.
    void stop();

    struct Impl;

private:
    std::unique_ptr<Impl> impl_;
};

}  // namespace srd::service
