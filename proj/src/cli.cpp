#include "srd/cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "srd/characterize.hpp"
#include "srd/service.hpp"
#include "srd/sim.hpp"
#include "srd/world.hpp"

namespace srd::cli {

namespace {

namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kAssertionFailed = 1;
constexpr int kConfigError = 2;

// Any failure that should end the command with exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void init_logging() {
    static std::once_flag once;
    std::call_once(once, [] {
        auto logger = spdlog::stderr_logger_mt("srd");
        spdlog::set_default_logger(logger);
        spdlog::set_pattern("[%H:%M:%S.%e] [%l] %v");
        spdlog::set_level(spdlog::level::warn);
        if (const char* env = std::getenv("SRD_LOG_LEVEL")) spdlog::set_level(spdlog::level::from_str(env));
    });
}

Scenario load_with_params(const std::string& ref, const std::vector<std::string>& params) {
    Scenario s = resolve_scenario(ref);
    for (const auto& kv : params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--param expects key=value, got '" + kv + "'");
        apply_override(s, kv.substr(0, eq), kv.substr(eq + 1));
    }
    return s;
}

fs::path prepare_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
    return fs::path(dir);
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write '" + path.string() + "'");
    return f;
}

bool all_passed(const std::vector<AssertionResult>& results) {
    return std::all_of(results.begin(), results.end(), [](const AssertionResult& r) { return r.passed; });
}

nlohmann::ordered_json assertions_json(const RunLog& log, const std::vector<AssertionResult>& results) {
    nlohmann::ordered_json j;
    j["scenario"] = log.scenario;
    j["seed"] = log.seed;
    j["passed"] = all_passed(results);
    auto list = nlohmann::ordered_json::array();
    for (const auto& r : results) list.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
    j["assertions"] = std::move(list);
    return j;
}

std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(spec);
    for (std::string part; std::getline(ss, part, ',');) {
        try {
            const auto dash = part.find('-');
            if (dash == std::string::npos) {
                seeds.push_back(std::stoull(part));
            } else {
                const auto lo = std::stoull(part.substr(0, dash));
                const auto hi = std::stoull(part.substr(dash + 1));
                if (hi < lo) throw ConfigError("empty seed range '" + part + "'");
                for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
            }
        } catch (const std::logic_error&) {
            throw ConfigError("bad seed list '" + spec + "'");
        }
    }
    if (seeds.empty()) throw ConfigError("no seeds given");
    return seeds;
}

struct RunArgs {
    std::string scenario;
    std::uint64_t seed = 1;
    std::string out = ".";
    std::vector<std::string> params;
};

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
    const Scenario sc = load_with_params(a.scenario, a.params);
    const fs::path dir = prepare_out_dir(a.out);
    const RunLog log = run(sc, a.seed);
    const auto results = check_assertions(log, sc);
    {
        auto f = open_out(dir / "run.jsonl");
        write_jsonl(log, f);
    }
    {
        auto f = open_out(dir / "metrics.csv");
        write_metrics_csv(log, f);
    }
    {
        auto f = open_out(dir / "assertions.json");
        f << assertions_json(log, results).dump(2) << '\n';
    }
    write_metrics_csv(log, out);
    for (const auto& r : results) {
        out << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.detail << ")\n";
    }
    if (!all_passed(results)) {
        err << "srd run: assertion failure in scenario " << sc.name << "\n";
        return kAssertionFailed;
    }
    return kOk;
}

struct SweepArgs {
    std::string scenario;
    std::string seeds = "1-20";
    std::string out = ".";
    std::vector<std::string> params;
    unsigned jobs = 0;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
    const Scenario sc = load_with_params(a.scenario, a.params);
    const auto seeds = parse_seeds(a.seeds);
    const fs::path dir = prepare_out_dir(a.out);

    std::vector<RunLog> logs(seeds.size());
    std::atomic<std::size_t> next{0};
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned jobs = std::min<std::size_t>(a.jobs ? a.jobs : hw, seeds.size());
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i; (i = next++) < seeds.size();) {
                RunLog log = run(sc, seeds[i]);
                log.samples.clear();  // only metrics are kept
                log.trace.clear();
                logs[i] = std::move(log);
            }
        });
    }
    for (auto& t : workers) t.join();

    auto f = open_out(dir / "sweep_metrics.csv");
    std::size_t failed = 0;
    for (std::size_t i = 0; i < logs.size(); ++i) {
        write_metrics_csv(logs[i], f, i == 0);
        if (!all_passed(check_assertions(logs[i], sc))) ++failed;
    }
    out << sc.name << ": " << (logs.size() - failed) << "/" << logs.size() << " seeds passed\n";
    if (failed > 0) {
        err << "srd sweep: " << failed << " seed(s) failed assertions\n";
        return kAssertionFailed;
    }
    return kOk;
}

struct TurntableArgs {
    std::string plane = "all";
    int samples = 3600;
    double range = 1.0;
    std::uint64_t seed = 1;
    bool measured_fov = false;
    bool noiseless = false;
    std::string out = ".";
};

int cmd_turntable(const TurntableArgs& a, std::ostream& out) {
    const fs::path dir = prepare_out_dir(a.out);
    RadarRig rig = default_rig(a.measured_fov);
    if (a.noiseless) rig = noiseless(rig);
    std::vector<TurntablePlane> planes;
    if (a.plane == "all") {
        planes = {TurntablePlane::XY, TurntablePlane::XZ, TurntablePlane::YZ};
    } else {
        planes = {*plane_from_string(a.plane)};
    }

    Rng rng(a.seed);
    std::vector<SweepSample> pooled;
    std::map<SensorId, SensorStats> merged;
    auto samples_csv = open_out(dir / "turntable_samples.csv");
    bool header = true;
    for (TurntablePlane plane : planes) {
        Rng stream = rng.fork(static_cast<std::uint64_t>(plane));
        const TurntableResult res = turntable_experiment(rig, plane, a.range, a.samples, stream);
        write_turntable_samples_csv(res, samples_csv, header);
        header = false;
        pooled.insert(pooled.end(), res.samples.begin(), res.samples.end());
        out << "plane " << to_string(plane) << ": " << res.stats.size() << " sensors detect the target (";
        bool first = true;
        for (const auto& [id, st] : res.stats) {
            out << (first ? "" : ", ") << to_string(id);
            first = false;
            auto& m = merged[id];
            if (st.est_azimuth_fov_deg) m.est_azimuth_fov_deg = st.est_azimuth_fov_deg;
            if (st.est_elevation_fov_deg) m.est_elevation_fov_deg = st.est_elevation_fov_deg;
        }
        out << ")\n";
    }
    for (auto& [id, m] : merged) {
        SensorStats st = range_error_stats(pooled, id);
        st.est_azimuth_fov_deg = m.est_azimuth_fov_deg;
        st.est_elevation_fov_deg = m.est_elevation_fov_deg;
        m = st;
    }
    std::optional<SensorStats> overall;
    if (!pooled.empty()) overall = range_error_stats(pooled);
    auto summary = open_out(dir / "turntable_summary.csv");
    write_sensor_summary_csv(merged, rig, overall, summary);
    if (overall) {
        out << "overall: mean " << overall->mean_err << " m, sigma " << overall->sigma_err << " m, rmse "
            << overall->rmse << " m over " << overall->count << " samples\n";
    }
    return kOk;
}

struct YawSweepArgs {
    double step = 0.5;
    double distance = 5.0;
    double theta0 = 30.0;
    double slope = 1.0;
    std::uint64_t seed = 1;
    bool noiseless = false;
    std::string out = ".";
};

int cmd_yawsweep(const YawSweepArgs& a, std::ostream& out) {
    const fs::path dir = prepare_out_dir(a.out);
    PaModel pa{a.theta0, a.slope};
    pa.validate();
    RadarRig rig = default_rig(false);
    if (a.noiseless) rig = noiseless(rig);
    const Segment3 wire({a.distance, -30.0, 0.0}, {a.distance, 30.0, 0.0});
    Rng rng(a.seed);
    const auto points = yaw_sweep_experiment(rig, pa, wire, rng, a.step);
    auto f = open_out(dir / "yawsweep.csv");
    write_yaw_sweep_csv(points, f);
    out << "yaw sweep: " << points.size() << " detections written\n";
    return kOk;
}

struct ServeArgs {
    std::string scenario;
    std::uint64_t seed = 1;
    std::vector<std::string> params;
    service::ServeOptions opt;
};

int cmd_serve(const ServeArgs& a, std::ostream& out) {
    service::Session session(load_with_params(a.scenario, a.params), a.seed);
    service::Server server(session, a.opt);
    out << "serving ws://" << a.opt.address << ":" << server.port() << "/ (protocol "
        << service::kProtocolVersion << ")" << std::endl;
    server.run(true);
    return kOk;
}

}  // namespace

int main(int argc, const char* const argv[], std::ostream& out, std::ostream& err) {
    init_logging();
    CLI::App app{"Radar-based wire avoidance simulator", "srd"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run_cmd = app.add_subcommand("run", "Run one scenario headless");
    run_cmd->add_option("--scenario", run_args.scenario, "Scenario file or builtin:NAME")->required();
    run_cmd->add_option("--seed", run_args.seed, "RNG seed");
    run_cmd->add_option("--out", run_args.out, "Output directory");
    run_cmd->add_option("--param", run_args.params, "Override key=value (repeatable)");

    SweepArgs sweep_args;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run one scenario over many seeds in parallel");
    sweep_cmd->add_option("--scenario", sweep_args.scenario, "Scenario file or builtin:NAME")->required();
    sweep_cmd->add_option("--seeds", sweep_args.seeds, "Seeds, e.g. 1-20 or 1,4,9");
    sweep_cmd->add_option("--out", sweep_args.out, "Output directory");
    sweep_cmd->add_option("--param", sweep_args.params, "Override key=value (repeatable)");
    sweep_cmd->add_option("--jobs", sweep_args.jobs, "Worker threads (default: all cores)");

    auto* char_cmd = app.add_subcommand("characterize", "Bench experiments on the simulated rig");
    char_cmd->require_subcommand(1);
    TurntableArgs tt;
    auto* tt_cmd = char_cmd->add_subcommand("turntable", "Point target rotated around the rig");
    tt_cmd->add_option("--plane", tt.plane, "XY, XZ, YZ or all")->check(CLI::IsMember({"XY", "XZ", "YZ", "all"}));
    tt_cmd->add_option("--samples", tt.samples, "Angular steps per revolution")->check(CLI::Range(360, 100000000));
    tt_cmd->add_option("--range", tt.range, "Target distance (m)")->check(CLI::PositiveNumber);
    tt_cmd->add_option("--seed", tt.seed, "RNG seed");
    tt_cmd->add_flag("--measured-fov", tt.measured_fov, "Use the measured FoV table");
    tt_cmd->add_flag("--noiseless", tt.noiseless, "Disable measurement noise");
    tt_cmd->add_option("--out", tt.out, "Output directory");
    YawSweepArgs ys;
    auto* ys_cmd = char_cmd->add_subcommand("yawsweep", "Yaw the rig in front of a wire");
    ys_cmd->add_option("--step", ys.step, "Yaw step (deg)")->check(CLI::PositiveNumber);
    ys_cmd->add_option("--distance", ys.distance, "Wire distance (m)")->check(CLI::PositiveNumber);
    ys_cmd->add_option("--theta0", ys.theta0, "Closest-point plateau half-width (deg)");
    ys_cmd->add_option("--slope", ys.slope, "Blend slope beyond the plateau");
    ys_cmd->add_option("--seed", ys.seed, "RNG seed");
    ys_cmd->add_flag("--noiseless", ys.noiseless, "Disable measurement noise");
    ys_cmd->add_option("--out", ys.out, "Output directory");

    ServeArgs sv;
    auto* serve_cmd = app.add_subcommand("serve", "Live WebSocket telemetry and command service");
    serve_cmd->add_option("--scenario", sv.scenario, "Scenario file or builtin:NAME")->required();
    serve_cmd->add_option("--port", sv.opt.port, "TCP port (0 picks one)");
    serve_cmd->add_option("--address", sv.opt.address, "Listen address");
    serve_cmd->add_option("--rate", sv.opt.state_rate_hz, "State messages per second")->check(CLI::PositiveNumber);
    serve_cmd->add_option("--speed", sv.opt.speed, "Simulated seconds per wall-clock second")
        ->check(CLI::PositiveNumber);
    serve_cmd->add_option("--seed", sv.seed, "RNG seed");
    serve_cmd->add_option("--param", sv.params, "Override key=value (repeatable)");
    serve_cmd->add_option("--record", sv.opt.record_path, "Write a replay scenario here on shutdown");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "srd: " << e.what() << "\n";
        return kConfigError;
    }

    try {
        if (run_cmd->parsed()) return cmd_run(run_args, out, err);
        if (sweep_cmd->parsed()) return cmd_sweep(sweep_args, out, err);
        if (tt_cmd->parsed()) return cmd_turntable(tt, out);
        if (ys_cmd->parsed()) return cmd_yawsweep(ys, out);
        if (serve_cmd->parsed()) return cmd_serve(sv, out);
    } catch (const ScenarioParseError& e) {
        err << "srd: " << e.what() << "\n";
        return kConfigError;
    } catch (const ScenarioValidationError& e) {
        err << "srd: invalid scenario: " << e.what() << "\n";
        return kConfigError;
    } catch (const service::BindError& e) {
        err << "srd serve: " << e.what() << "\n";
        return kConfigError;
    } catch (const ConfigError& e) {
        err << "srd: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        err << "srd: " << e.what() << "\n";
        return kConfigError;
    }
    return kConfigError;
}

}  // namespace srd::cli
