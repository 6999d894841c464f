// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. `--only A4` runs a single criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "srd/avoid.hpp"
#include "srd/characterize.hpp"
#include "srd/cli.hpp"
#include "srd/sim.hpp"
#include "srd/world.hpp"

using namespace srd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    std::string id;
    std::string title;
    double budget_s;
    std::function<Outcome()> check;
};

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

Vec3 random_in_box(Rng& rng, double lo, double hi) {
    auto u = [&] { return lo + (hi - lo) * rng.uniform(); };
    return {u(), u(), u()};
}

Vec3 random_unit(Rng& rng) {
    for (;;) {
        const Vec3 v = random_in_box(rng, -1.0, 1.0);
        const double n = v.norm();
        if (n > 0.1 && n <= 1.0) return v / n;
    }
}

// ---------------------------------------------------------------------------

Outcome a1_tangent_identity() {
    Rng rng(101);
    const Vec3 g{0.0, 0.0, -1.0};
    double worst = 0.0, worst_dir = 0.0;
    int n = 0;
    while (n < 1000) {
        const Vec3 p = random_unit(rng);
        if (std::abs(p.dot(g)) > std::cos(deg2rad(1.0))) continue;  // degenerate: p parallel to g
        ++n;
        const Vec3 lhs = p.cross(g).cross(p);
        const Vec3 rhs = g - p * g.dot(p);
        worst = std::max(worst, distance(lhs, rhs));

        // The controller's tangent lies along the same direction.
        const Vec3 v = p + random_in_box(rng, -0.5, 0.5);
        if (const auto t = tangent_for_detection(p * 3.0, v, UnitVec3(g))) {
            const Vec3 d = rhs / rhs.norm();
            const Vec3 th = *t / t->norm();
            worst_dir = std::max(worst_dir, std::min(distance(th, d), distance(th, -d)));
        }
    }
    return {worst <= 1e-9 && worst_dir <= 1e-9,
            "max |lhs-rhs| " + fmt("%.1e", worst) + ", tangent direction error " + fmt("%.1e", worst_dir)};
}

Outcome a2_clamp_contract() {
    Rng rng(202);
    const AvoidanceParams params;
    const UnitVec3 g = params.gravity_down;
    double worst_excess = -std::numeric_limits<double>::infinity();
    int passthrough_bad = 0, passthrough_cases = 0;
    for (int i = 0; i < 10000; ++i) {
        const Vec3 v_u = random_in_box(rng, -10.0, 10.0);
        const Vec3 v_d = random_in_box(rng, -3.0, 3.0);
        std::vector<Vec3> tangents;
        const int k = static_cast<int>(rng.uniform() * 8);
        for (int j = 0; j < k; ++j) {
            const Vec3 p = random_in_box(rng, -8.0, 8.0);
            if (p.norm() < 1e-3) continue;
            if (auto t = tangent_for_detection(p, v_d, g)) tangents.push_back(*t);
            if (auto t = tangent_for_detection(p, v_u, g)) tangents.push_back(*t);
        }
        const Vec3 out = combine_output(tangents, v_u);
        worst_excess = std::max(worst_excess, out.norm() - v_u.norm());

        // Detections that fail the sphere or the heading test leave v_u untouched.
        ControllerInput in;
        in.t = 0.0;
        in.v_d = v_d;
        in.v_u = v_u;
        const int m = 1 + static_cast<int>(rng.uniform() * 5);  // below n_min: no line estimate
        for (int j = 0; j < m; ++j) {
            Vec3 p;
            if (rng.uniform() < 0.5) {
                p = random_unit(rng) * (params.r_a + 0.01 + 10.0 * rng.uniform());
            } else {
                // Inside r_a (outside r_s) but behind both v_d and v_u.
                Vec3 back = -(v_d / std::max(v_d.norm(), 1e-9) + v_u / std::max(v_u.norm(), 1e-9));
                if (back.norm() < 1e-6) back = random_unit(rng);
                p = back / back.norm() * (params.r_s + 0.1 + (params.r_a - params.r_s - 0.2) * rng.uniform());
                if (p.dot(v_d) >= 0.0 || p.dot(v_u) >= 0.0) continue;
            }
            in.detections.push_back({p, SensorId::front, 0.0});
        }
        ++passthrough_cases;
        const auto [cmd, next] = step(AvoidanceState{}, in, params);
        (void)next;
        if (!(cmd.v_out == v_u)) ++passthrough_bad;
    }
    return {worst_excess <= 1e-9 && passthrough_bad == 0,
            "max ||v_out||-||v_u|| " + fmt("%.1e", worst_excess) + ", pass-through mismatches " +
                std::to_string(passthrough_bad) + "/" + std::to_string(passthrough_cases)};
}

Outcome a3_ebrake_stopping() {
    Scenario sc = resolve_scenario("builtin:single_wire_head_on");
    RadarRig rig = sc.effective_rig();
    for (auto& s : rig.sensors) {
        if (s.id == SensorId::front) s.max_range = 10.0;
    }
    AvoidanceParams params = sc.avoidance;
    params.a_max = 5.0;
    params.s_margin = 2.0;
    const double v0 = std::get<DesiredConstant>(sc.desired).v.norm();

    bool ok = v0 == 10.0;
    std::ostringstream detail;
    detail << "v_u " << v0 << " m/s;";
    for (double tau : {0.1, 0.3, 0.5}) {
        SimConfig cfg = sc.sim;
        cfg.tau_v = tau;
        const RunLog log = run(sc, rig, params, cfg, 1);
        const auto& s = log.samples;
        const auto eb = std::find_if(s.begin(), s.end(), [](const TickSample& x) { return x.mode == Mode::ebraking; });
        const bool after = eb != s.end() && std::any_of(eb, s.end(), [](const TickSample& x) {
                               return x.mode == Mode::tangential || x.mode == Mode::rejecting;
                           });
        const bool pass = !log.metrics.collided && log.metrics.min_clearance >= 0.5 && after;
        ok = ok && pass;
        detail << " tau " << tau << ": closest " << fmt("%.3f", log.metrics.min_clearance) << " m"
               << (after ? "" : " (no ebraking->tangential|rejecting)") << (log.metrics.collided ? " COLLIDED" : "")
               << ";";
    }
    return {ok, detail.str()};
}

Outcome a4_triangle_clearance() {
    const Scenario sc = resolve_scenario("builtin:triangle_3phase");
    const Vec3 v_u = std::get<DesiredConstant>(sc.desired).v;
    int ge1 = 0, ge05 = 0, collisions = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const RunLog log = run(sc, seed);
        const double c = log.metrics.min_clearance;
        worst = std::min(worst, c);
        ge1 += c >= 1.0;
        ge05 += c >= 0.5;
        collisions += log.metrics.collided;
    }
    const bool horizontal = v_u.z == 0.0 && std::abs(v_u.norm() - 5.0) < 1e-12;
    return {horizontal && collisions == 0 && ge1 >= 18 && ge05 == 20,
            std::to_string(ge1) + "/20 seeds >= 1.0 m, " + std::to_string(ge05) + "/20 >= 0.5 m, worst " +
                fmt("%.3f", worst) + " m, collisions " + std::to_string(collisions)};
}

// Horizontal distance from p to the nearest conductor centreline.
double horizontal_clearance(const Vec3& p, const Scenario& sc) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : sc.conductors) {
        const Vec3 a = c.geometry.a(), b = c.geometry.b();
        const Segment3 flat({a.x, a.y, 0.0}, {b.x, b.y, 0.0});
        const Vec3 q{p.x, p.y, 0.0};
        best = std::min(best, distance(q, closest_point_on_segment(q, flat)));
    }
    return best;
}

Outcome a5_descent() {
    const Scenario sc = resolve_scenario("builtin:triangle_descent");
    const Vec3 v_u = std::get<DesiredConstant>(sc.desired).v;
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& c : sc.conductors) top = std::max({top, c.geometry.a().z, c.geometry.b().z});
    bool ok = v_u == Vec3{0.0, 0.0, -2.0} && sc.uav_start.z > top && horizontal_clearance(sc.uav_start, sc) < 1.0;
    std::ostringstream detail;
    detail << "start z " << sc.uav_start.z << " above stack top " << top << ";";
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const RunLog log = run(sc, seed);
        const Vec3 end = *log.metrics.final_position;
        const double lateral = horizontal_clearance(end, sc);
        const bool pass = !log.metrics.collided && end.z <= 0.5 && lateral >= sc.avoidance.r_s;
        ok = ok && pass;
        detail << " seed " << seed << ": final z " << fmt("%.2f", end.z) << ", lateral " << fmt("%.2f", lateral)
               << " m, closest " << fmt("%.2f", log.metrics.min_clearance) << (pass ? "" : " FAIL") << ";";
    }
    return {ok, detail.str()};
}

Outcome a6_thin_wire() {
    const Scenario sc = resolve_scenario("builtin:thin_wire");
    bool ok = sc.conductors.size() == 1 && sc.conductors[0].diameter_mm == 1.2 &&
              sc.conductors[0].detectability == 0.5 &&
              std::abs(std::get<DesiredConstant>(sc.desired).v.norm() - 3.0) < 1e-12;
    double worst = std::numeric_limits<double>::infinity();
    int collisions = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const RunLog log = run(sc, seed);
        worst = std::min(worst, log.metrics.min_clearance);
        collisions += log.metrics.collided;
    }
    ok = ok && collisions == 0;
    return {ok, "10 seeds, collisions " + std::to_string(collisions) + ", worst clearance " + fmt("%.3f", worst) +
                    " m (1.2 mm, detectability " + fmt("%.2f", sc.conductors[0].detectability) + ")"};
}

Outcome a7_range_error_recovery() {
    const RadarRig rig = default_rig(false);
    Rng rng(707);
    std::map<SensorId, std::vector<SweepSample>> per_sensor;
    for (auto plane : {TurntablePlane::XY, TurntablePlane::XZ, TurntablePlane::YZ}) {
        Rng stream = rng.fork(static_cast<std::uint64_t>(plane));
        const auto res = turntable_experiment(rig, plane, 1.0, 36000, stream);
        for (const auto& s : res.samples) per_sensor[s.sensor].push_back(s);
    }
    constexpr std::size_t kPerSensor = 10000;
    bool ok = per_sensor.size() == 6;
    std::vector<SweepSample> pooled;
    std::ostringstream detail;
    for (const auto& spec : rig.sensors) {
        auto& v = per_sensor[spec.id];
        if (v.size() < kPerSensor) {
            ok = false;
            detail << to_string(spec.id) << " only " << v.size() << " samples; ";
            continue;
        }
        v.resize(kPerSensor);
        pooled.insert(pooled.end(), v.begin(), v.end());
        const SensorStats st = range_error_stats(v);
        const bool mean_ok = std::abs(st.mean_err - spec.bias_mean) <= 0.002;
        const double r2 = st.rmse * st.rmse;
        const bool rmse_ok = std::abs(r2 - (st.mean_err * st.mean_err + st.sigma_err * st.sigma_err)) <= 0.01 * r2;
        ok = ok && mean_ok && rmse_ok;
        detail << to_string(spec.id) << " " << fmt("%.4f", st.mean_err) << "/" << fmt("%.4f", spec.bias_mean)
               << (mean_ok && rmse_ok ? "" : "!") << " ";
    }
    if (!pooled.empty()) {
        const SensorStats all = range_error_stats(pooled);
        const bool overall_ok = std::abs(all.mean_err - 0.0607) <= 0.003;
        ok = ok && overall_ok;
        detail << "overall " << fmt("%.4f", all.mean_err) << " (target 0.0607 +- 0.003)";
    }
    return {ok, detail.str()};
}

// Checks every configured FoV is recovered within `tol`, and four sensors per plane.
Outcome fov_recovery(const RadarRig& rig, double tol, std::uint64_t seed) {
    std::map<std::pair<SensorId, char>, double> err;
    bool four = true;
    std::ostringstream counts;
    Rng rng(seed);
    for (auto plane : {TurntablePlane::XY, TurntablePlane::XZ, TurntablePlane::YZ}) {
        Rng stream = rng.fork(static_cast<std::uint64_t>(plane));
        const auto res = turntable_experiment(rig, plane, 1.0, 3600, stream);
        four = four && res.stats.size() == 4;
        counts << to_string(plane) << ":" << res.stats.size() << " ";
        for (const auto& [id, st] : res.stats) {
            const auto& spec = rig.sensor(id);
            if (st.est_azimuth_fov_deg) {
                auto& e = err[{id, 'a'}];
                e = std::max(e, std::abs(*st.est_azimuth_fov_deg - spec.azimuth_fov_deg));
            }
            if (st.est_elevation_fov_deg) {
                auto& e = err[{id, 'e'}];
                e = std::max(e, std::abs(*st.est_elevation_fov_deg - spec.elevation_fov_deg));
            }
        }
    }
    double worst = 0.0;
    for (const auto& [k, e] : err) worst = std::max(worst, e);
    const bool all_axes = err.size() == 12;
    return {four && all_axes && worst <= tol, "sensors per plane " + counts.str() + "; " +
                                                  std::to_string(err.size()) + "/12 FoVs estimated, worst error " +
                                                  fmt("%.2f", worst) + " deg (tol " + fmt("%.1f", tol) + ")"};
}

Outcome a8_fov_recovery() {
    Outcome clean = fov_recovery(noiseless(default_rig(false)), 0.5, 808);
    Outcome noisy = fov_recovery(default_rig(false), 2.0, 809);
    // The measured FoV table is recovered the same way.
    Outcome measured = fov_recovery(noiseless(default_rig(true)), 0.5, 810);
    return {clean.pass && noisy.pass && measured.pass,
            "noiseless: " + clean.detail + " | noisy: " + noisy.detail + " | measured table: " + measured.detail};
}

Outcome a9_yaw_sweep() {
    bool ok = true;
    std::ostringstream detail;
    for (double slope : {PaModel{}.blend_slope, 0.5}) {
        const PaModel pa{30.0, slope};
        Rng rng(909);
        const auto pts =
            yaw_sweep_experiment(noiseless(default_rig(false)), pa, Segment3({5, -30, 0}, {5, 30, 0}), rng, 0.5);
        std::map<SensorId, std::map<long, double>> curves;  // offset in half degrees -> detected offset
        for (const auto& p : pts) curves[p.sensor][std::lround(p.boresight_offset_deg * 2.0)] = p.detected_vs_closest_deg;
        double plateau = 0.0, linear = 0.0, asym = 0.0, slope_err = 0.0;
        int outside = 0;
        bool edges = false;
        for (auto& [id, curve] : curves) {
            edges = edges || (curve.count(60) && curve.count(-60) && curve.count(61));
            for (const auto& [k, d] : curve) {
                const double a = k / 2.0;
                if (std::abs(a) <= 30.0) {
                    plateau = std::max(plateau, std::abs(d));
                } else {
                    ++outside;
                    const double expect = std::copysign(std::min(slope * (std::abs(a) - 30.0), std::abs(a)), a);
                    linear = std::max(linear, std::abs(d - expect));
                    // Finite-difference slope away from the cap.
                    if (a > 30.0 && curve.count(k + 1) && slope * (a + 0.5 - 30.0) < a) {
                        slope_err = std::max(slope_err, std::abs((curve.at(k + 1) - d) / 0.5 - slope));
                    }
                }
                if (curve.count(-k)) asym = std::max(asym, std::abs(d + curve.at(-k)));
            }
        }
        const bool pass = plateau <= 1e-9 && linear <= 1e-6 && slope_err <= 1e-6 && asym <= 1e-9 && outside > 10 && edges;
        ok = ok && pass;
        detail << "slope " << slope << ": plateau max " << fmt("%.1e", plateau) << ", piecewise err "
               << fmt("%.1e", linear) << ", slope err " << fmt("%.1e", slope_err) << ", asymmetry "
               << fmt("%.1e", asym) << "; ";
    }
    return {ok, detail.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Outcome a10_determinism() {
    const fs::path root = fs::temp_directory_path() / ("srd_accept_" + std::to_string(::getpid()));
    fs::remove_all(root);
    std::string logs[2];
    for (int i = 0; i < 2; ++i) {
        const std::string dir = (root / std::to_string(i)).string();
        const char* argv[] = {"srd", "run", "--scenario", "builtin:triangle_3phase", "--seed", "7", "--out", dir.c_str()};
        std::ostringstream out, err;
        const int code = cli::main(8, argv, out, err);
        if (code != 0) {
            fs::remove_all(root);
            return {false, "run exited " + std::to_string(code) + ": " + err.str()};
        }
        logs[i] = slurp(fs::path(dir) / "run.jsonl");
    }
    fs::remove_all(root);
    const bool same = !logs[0].empty() && logs[0] == logs[1];
    return {same, std::to_string(logs[0].size()) + " bytes, identical: " + (same ? "yes" : "no")};
}

Outcome a11_closest_point() {
    Rng rng(1111);
    constexpr int kSweep = 200000;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Vec3 a = random_in_box(rng, -5.0, 5.0);
        Vec3 b = random_in_box(rng, -5.0, 5.0);
        if (distance(a, b) < 0.01) b = a + Vec3{1, 0, 0};
        const Segment3 seg(a, b);
        const Vec3 q = random_in_box(rng, -8.0, 8.0);
        double best_d = std::numeric_limits<double>::infinity();
        Vec3 best_p;
        for (int k = 0; k <= kSweep; ++k) {
            const Vec3 p = a + (b - a) * (static_cast<double>(k) / kSweep);
            const double d = (p - q).squared_norm();
            if (d < best_d) {
                best_d = d;
                best_p = p;
            }
        }
        worst = std::max(worst, distance(closest_point_on_segment(q, seg), best_p));
    }
    return {worst <= 1e-4, "1000 cases, max deviation from dense sweep " + fmt("%.2e", worst) + " m"};
}

}  // namespace

int main(int argc, char** argv) {
    std::string only;
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--only") only = argv[i + 1];
    }

    const std::vector<Criterion> criteria = {
        {"A1", "tangent identity", 1.0, a1_tangent_identity},
        {"A2", "clamp contract", 5.0, a2_clamp_contract},
        {"A3", "e-brake stopping", 10.0, a3_ebrake_stopping},
        {"A4", "three-phase clearance", 120.0, a4_triangle_clearance},
        {"A5", "descent avoidance", 30.0, a5_descent},
        {"A6", "thin wire", 30.0, a6_thin_wire},
        {"A7", "range error recovery", 30.0, a7_range_error_recovery},
        {"A8", "FoV recovery", 30.0, a8_fov_recovery},
        {"A9", "yaw sweep curve", 5.0, a9_yaw_sweep},
        {"A10", "determinism", 10.0, a10_determinism},
        {"A11", "closest point oracle", 5.0, a11_closest_point},
    };

    int failed = 0, ran = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && c.id != only) continue;
        ++ran;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs <= c.budget_s;
        const bool pass = o.pass && in_time;
        failed += !pass;
        std::cout << c.id << " " << (pass ? "PASS" : "FAIL") << " " << c.title << ": " << o.detail << " ["
                  << fmt("%.2f", secs) << " s of " << fmt("%.0f", c.budget_s) << " s" << (in_time ? "" : ", over budget")
                  << "]" << std::endl;
    }
    if (ran == 0) {
        std::cerr << "unknown criterion '" << only << "'\n";
        return 2;
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criterion(s) failed") << std::endl;
    return failed == 0 ? 0 : 1;
}
