#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "srd/world.hpp"
#include "test_support.hpp"

using namespace srd;
using srd::test::check_vec_near;

namespace {

const char* kMinimal = R"(name: one_wire
duration_s: 5
uav:
  start: [0, 0, 5]
  desired:
    constant: [2, 0, 0]
conductor:
  - a: [5, -10, 5]
    b: [5, 10, 5]
    diameter_mm: 20
)";

// Segment-segment distance by dense sampling of one segment against the
// exact closest point on the other.
double segment_distance(const Segment3& s, const Segment3& t) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 20000; ++i) {
        const Vec3 p = s.at(i / 20000.0);
        best = std::min(best, distance(p, closest_point_on_segment(p, t)));
    }
    return best;
}

void check_same(const Scenario& a, const Scenario& b) {
    CHECK(a.name == b.name);
    CHECK(a.duration == doctest::Approx(b.duration).epsilon(1e-12));
    REQUIRE(a.conductors.size() == b.conductors.size());
    for (std::size_t i = 0; i < a.conductors.size(); ++i) {
        check_vec_near(a.conductors[i].geometry.a(), b.conductors[i].geometry.a(), 1e-9);
        check_vec_near(a.conductors[i].geometry.b(), b.conductors[i].geometry.b(), 1e-9);
        CHECK(std::abs(a.conductors[i].diameter_mm - b.conductors[i].diameter_mm) <= 1e-9);
        CHECK(std::abs(a.conductors[i].detectability - b.conductors[i].detectability) <= 1e-9);
    }
    check_vec_near(a.uav_start, b.uav_start, 1e-9);
    check_vec_near(a.uav_start_velocity, b.uav_start_velocity, 1e-9);
    CHECK(std::abs(a.uav_start_yaw - b.uav_start_yaw) <= 1e-9);
    check_vec_near(a.gravity_down, b.gravity_down, 1e-9);
    CHECK(a.desired == b.desired);
    CHECK(a.rig.has_value() == b.rig.has_value());
    CHECK(a.pa.theta0_deg == b.pa.theta0_deg);
    CHECK(a.pa.blend_slope == b.pa.blend_slope);
    CHECK(a.avoidance.r_a == b.avoidance.r_a);
    CHECK(a.avoidance.alpha == b.avoidance.alpha);
    CHECK(a.avoidance.n_min == b.avoidance.n_min);
    CHECK(a.sim.tau_v == b.sim.tau_v);
    CHECK(a.sim.a_max_dyn == b.sim.a_max_dyn);
    CHECK(a.sim.yaw_policy == b.sim.yaw_policy);
    CHECK(a.assertions.min_clearance_m == b.assertions.min_clearance_m);
    CHECK(a.assertions.max_final_z == b.assertions.max_final_z);
    CHECK(a.assertions.require_modes == b.assertions.require_modes);
}

template <typename E>
std::string error_of(const std::string& text) {
    try {
        load_scenario(text);
    } catch (const E& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_SUITE("world") {
    TEST_CASE("minimal file loads") {
        const Scenario s = load_scenario(kMinimal);
        CHECK(s.name == "one_wire");
        REQUIRE(s.conductors.size() == 1);
        CHECK(s.conductors[0].diameter_mm == 20.0);
        CHECK(s.conductors[0].detectability == 1.0);
        CHECK(std::get<DesiredConstant>(s.desired).v == Vec3{2, 0, 0});
        CHECK_FALSE(s.rig);
    }

    TEST_CASE("zero diameter is rejected by name") {
        std::string text = kMinimal;
        text.replace(text.find("diameter_mm: 20"), 15, "diameter_mm: 0");
        const std::string msg = error_of<ScenarioValidationError>(text);
        CHECK(msg.find("diameter") != std::string::npos);
    }

    TEST_CASE("unknown keys are rejected with their path") {
        std::string text = std::string(kMinimal) + "colour: red\n";
        try {
            load_scenario(text);
            FAIL("expected a parse error");
        } catch (const ScenarioParseError& e) {
            CHECK(e.field() == "colour");
            CHECK(e.line() == 11);
        }
        std::string nested = kMinimal;
        nested.replace(nested.find("    diameter_mm: 20"), 19, "    diameter_mm: 20\n    sag: 1");
        try {
            load_scenario(nested);
            FAIL("expected a parse error");
        } catch (const ScenarioParseError& e) {
            CHECK(e.field() == "conductor[0].sag");
        }
    }

    TEST_CASE("type errors and malformed documents report a line") {
        std::string text = kMinimal;
        text.replace(text.find("duration_s: 5"), 13, "duration_s: soon");
        try {
            load_scenario(text);
            FAIL("expected a parse error");
        } catch (const ScenarioParseError& e) {
            CHECK(e.field() == "duration_s");
            CHECK(e.line() == 2);
        }
        CHECK_THROWS_AS(load_scenario("name: [unclosed\n"), ScenarioParseError);
        CHECK_THROWS_AS(load_scenario_file("/nonexistent/missing.yaml"), ScenarioParseError);
    }

    TEST_CASE("other invariants") {
        std::string no_wires = "name: x\nduration_s: 1\nuav:\n  start: [0, 0, 0]\n  desired:\n    constant: [0, 0, 0]\n";
        CHECK(error_of<ScenarioValidationError>(no_wires).find("conductor") != std::string::npos);
        std::string neg = kMinimal;
        neg.replace(neg.find("duration_s: 5"), 13, "duration_s: -1");
        CHECK(error_of<ScenarioValidationError>(neg).find("duration_s") != std::string::npos);
        std::string det = std::string(kMinimal) + "    detectability: 1.5\n";
        CHECK(error_of<ScenarioValidationError>(det).find("detectability") != std::string::npos);
        std::string rs = std::string(kMinimal) + "avoidance:\n  r_s: 7\n";
        CHECK(error_of<ScenarioValidationError>(rs).find("r_s") != std::string::npos);
    }

    TEST_CASE("desired velocity variants") {
        std::string scripted = kMinimal;
        scripted.replace(scripted.find("    constant: [2, 0, 0]"), 23,
                         "    scripted:\n      - {t: 0, v: [1, 0, 0]}\n      - {t: 2, v: [0, 1, 0]}");
        const Scenario s = load_scenario(scripted);
        CHECK(desired_at(s.desired, 0.0) == Vec3{1, 0, 0});
        CHECK(desired_at(s.desired, 1.99) == Vec3{1, 0, 0});
        CHECK(desired_at(s.desired, 2.0) == Vec3{0, 1, 0});
        CHECK(desired_at(s.desired, 50.0) == Vec3{0, 1, 0});

        std::string external = kMinimal;
        external.replace(external.find("  desired:\n    constant: [2, 0, 0]"), 34, "  desired: external");
        const Scenario e = load_scenario(external);
        CHECK(std::holds_alternative<DesiredExternal>(e.desired));
        CHECK(desired_at(e.desired, 3.0) == Vec3{});
    }

    TEST_CASE("rig overrides") {
        const std::string text = std::string(kMinimal) +
                                 "rig:\n  use_measured_fov: true\n  sensors:\n    - id: front\n      max_range: 12\n";
        const Scenario s = load_scenario(text);
        REQUIRE(s.rig);
        CHECK(s.rig->sensor(SensorId::front).max_range == 12.0);
        CHECK(s.rig->sensor(SensorId::rear).elevation_fov_deg == 135.0);
        CHECK(error_of<ScenarioParseError>(std::string(kMinimal) + "rig:\n  sensors:\n    - id: nose\n")
                  .find("unknown sensor") != std::string::npos);
    }

    TEST_CASE("default detectability") {
        CHECK(default_detectability(20.0) == 1.0);
        CHECK(default_detectability(10.0) == 1.0);
        CHECK(default_detectability(1.2) == 0.5);
        CHECK(default_detectability(7.5) == doctest::Approx(0.75));
    }

    TEST_CASE("builtin site: four conductors, 35 m spans, 3 m minimum spacing, 9 m stack") {
        const Scenario s = *builtin_scenario("triangle_3phase");
        REQUIRE(s.conductors.size() == 4);
        double min_pair = std::numeric_limits<double>::infinity();
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(s.conductors[i].geometry.length() == doctest::Approx(35.0));
            lo = std::min(lo, s.conductors[i].geometry.a().z);
            hi = std::max(hi, s.conductors[i].geometry.a().z);
            for (std::size_t j = i + 1; j < 4; ++j) {
                min_pair = std::min(min_pair, segment_distance(s.conductors[i].geometry, s.conductors[j].geometry));
            }
        }
        CHECK(std::abs(min_pair - 3.0) <= 0.01);
        CHECK(hi == doctest::Approx(9.0));
        const auto d20 = std::count_if(s.conductors.begin(), s.conductors.end(),
                                       [](const Conductor& c) { return c.diameter_mm == 20.0; });
        CHECK(d20 == 3);
        CHECK(s.conductors[3].diameter_mm == 10.0);
    }

    TEST_CASE("other builtins") {
        const Scenario thin = *builtin_scenario("thin_wire");
        REQUIRE(thin.conductors.size() == 1);
        CHECK(thin.conductors[0].diameter_mm == 1.2);
        CHECK(thin.conductors[0].detectability == 0.5);
        CHECK(builtin_scenario("empty")->conductors.empty());
        CHECK(builtin_scenario("single_wire_head_on"));
        CHECK_FALSE(builtin_scenario("nope"));
        CHECK(resolve_scenario("builtin:thin_wire").name == "thin_wire");
        CHECK_THROWS_AS(resolve_scenario("builtin:nope"), ScenarioValidationError);
    }

    TEST_CASE("every builtin round-trips through the file format") {
        for (const auto& s : builtin_scenarios()) {
            CAPTURE(s.name);
            CHECK_NOTHROW(s.validate());
            check_same(s, load_scenario(dump_scenario(s)));
        }
    }

    TEST_CASE("round-trip keeps non-default sections") {
        Scenario s = *builtin_scenario("single_wire_head_on");
        s.rig = default_rig(true);
        s.rig->sensor(SensorId::left).dropout = 0.25;
        s.pa.blend_slope = 0.7;
        s.avoidance.rejection = RejectionPolicy::sum;
        s.sim.yaw_policy = YawPolicy::scripted;
        s.sim.yaw_script = {{0.0, 0.1}, {2.0, -0.4}};
        s.desired = DesiredScripted{{{0.0, {1, 2, 3}}, {1.5, {0.1, 0.2, 1.0 / 3.0}}}};
        s.uav_start_yaw = 0.3;
        const Scenario back = load_scenario(dump_scenario(s));
        check_same(s, back);
        REQUIRE(back.rig);
        CHECK(back.rig->sensor(SensorId::left).dropout == 0.25);
        CHECK(back.rig->sensor(SensorId::rear).azimuth_fov_deg == 75.0);
        CHECK(back.avoidance.rejection == RejectionPolicy::sum);
        REQUIRE(back.sim.yaw_script.size() == 2);
        CHECK(back.sim.yaw_script[1].second == doctest::Approx(-0.4).epsilon(1e-12));
    }

    TEST_CASE("overrides") {
        Scenario s = *builtin_scenario("triangle_3phase");
        apply_override(s, "sim.tau_v", "0.5");
        apply_override(s, "avoidance.r_s", "1.2");
        apply_override(s, "uav.desired.constant", "[4, 0, 0]");
        apply_override(s, "duration_s", "3");
        CHECK(s.sim.tau_v == 0.5);
        CHECK(s.avoidance.r_s == 1.2);
        CHECK(std::get<DesiredConstant>(s.desired).v == Vec3{4, 0, 0});
        CHECK(s.duration == 3.0);
        CHECK(s.conductors.size() == 4);
        CHECK_THROWS_AS(apply_override(s, "sim.warp", "1"), ScenarioValidationError);
        CHECK_THROWS_AS(apply_override(s, "sim.tau_v", "-1"), ScenarioValidationError);
        CHECK(s.sim.tau_v == 0.5);
    }

    TEST_CASE("scenario files on disk") {
        const std::string path = "srd_test_world_scenario.yaml";
        {
            std::ofstream(path) << kMinimal;
        }
        CHECK(resolve_scenario(path).name == "one_wire");
        std::remove(path.c_str());
    }
}
