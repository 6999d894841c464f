#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "srd/avoid.hpp"
#include "srd/characterize.hpp"
#include "srd/geom.hpp"
#include "srd/sim.hpp"
#include "srd/world.hpp"

namespace py = pybind11;
using namespace srd;

// Vec3 <-> any 3-sequence of floats / 3-tuple.
namespace pybind11::detail {
template <>
struct type_caster<Vec3> {
    PYBIND11_TYPE_CASTER(Vec3, const_name("tuple[float, float, float]"));

    bool load(handle src, bool convert) {
        if (!src || !isinstance<sequence>(src) || isinstance<str>(src)) return false;
        const auto seq = reinterpret_borrow<sequence>(src);
        if (seq.size() != 3) return false;
        double out[3];
        for (std::size_t i = 0; i < 3; ++i) {
            make_caster<double> c;
            if (!c.load(seq[i], convert)) return false;
            out[i] = cast_op<double>(c);
        }
        value = Vec3{out[0], out[1], out[2]};
        return true;
    }

    static handle cast(const Vec3& v, return_value_policy, handle) {
        return py::make_tuple(v.x, v.y, v.z).release();
    }
};
}  // namespace pybind11::detail

namespace {

std::vector<Detection> as_detections(const std::vector<Vec3>& points) {
    std::vector<Detection> out;
    out.reserve(points.size());
    for (const auto& p : points) out.push_back({p, SensorId::front, 0.0});
    return out;
}

py::dict stats_dict(const SensorStats& s) {
    py::dict d;
    d["count"] = s.count;
    d["mean"] = s.mean_err;
    d["sigma"] = s.sigma_err;
    d["min"] = s.min_err;
    d["max"] = s.max_err;
    d["rmse"] = s.rmse;
    d["azimuth_fov_deg"] = s.est_azimuth_fov_deg;
    d["elevation_fov_deg"] = s.est_elevation_fov_deg;
    return d;
}

}  // namespace

PYBIND11_MODULE(_srd, m) {
    m.doc() = "Radar wire-avoidance simulator core";

    py::register_exception<ScenarioParseError>(m, "ScenarioParseError", PyExc_ValueError);
    py::register_exception<ScenarioValidationError>(m, "ScenarioValidationError", PyExc_ValueError);

    m.def(
        "closest_point_on_segment",
        [](const Vec3& q, const Vec3& a, const Vec3& b) { return closest_point_on_segment(q, Segment3(a, b)); },
        py::arg("q"), py::arg("a"), py::arg("b"));

    py::class_<AvoidanceParams>(m, "AvoidanceParams")
        .def(py::init<>())
        .def_readwrite("r_a", &AvoidanceParams::r_a)
        .def_readwrite("r_s", &AvoidanceParams::r_s)
        .def_readwrite("k_s", &AvoidanceParams::k_s)
        .def_readwrite("a_max", &AvoidanceParams::a_max)
        .def_readwrite("s_margin", &AvoidanceParams::s_margin)
        .def_readwrite("v_eb", &AvoidanceParams::v_eb)
        .def_readwrite("alpha", &AvoidanceParams::alpha)
        .def("validate", &AvoidanceParams::validate);

    m.def(
        "tangent_for_detection",
        [](const Vec3& p, const Vec3& v, const Vec3& g) { return tangent_for_detection(p, v, UnitVec3(g)); },
        py::arg("p"), py::arg("v"), py::arg("gravity_down") = Vec3{0.0, 0.0, -1.0},
        "Scaled tangent for one detection, or None when the detection is not ahead.");
    m.def("combine_output", &combine_output, py::arg("tangents"), py::arg("v_u"));
    m.def("ebrake_horizon_length", &ebrake_horizon_length, py::arg("v_d"), py::arg("params") = AvoidanceParams{});
    m.def(
        "ebrake_check",
        [](const std::vector<Vec3>& pts, const Vec3& v_d, const AvoidanceParams& p) {
            return ebrake_check(as_detections(pts), v_d, p);
        },
        py::arg("points"), py::arg("v_d"), py::arg("params") = AvoidanceParams{});
    m.def(
        "proximity_rejection",
        [](const std::vector<Vec3>& pts, const AvoidanceParams& p) { return proximity_rejection(as_detections(pts), p); },
        py::arg("points"), py::arg("params") = AvoidanceParams{});
    m.def(
        "estimate_line_direction",
        [](const std::vector<Vec3>& pts, int n_min, double l_min) -> std::optional<Vec3> {
            if (auto d = estimate_line_direction(pts, n_min, l_min)) return d->vec();
            return std::nullopt;
        },
        py::arg("points"), py::arg("n_min") = 6, py::arg("l_min") = 0.5);

    py::class_<Scenario>(m, "Scenario")
        .def_readonly("name", &Scenario::name)
        .def_readwrite("duration", &Scenario::duration)
        .def_readwrite("uav_start", &Scenario::uav_start)
        .def_readwrite("avoidance", &Scenario::avoidance)
        .def_property_readonly("conductor_count", [](const Scenario& s) { return s.conductors.size(); })
        .def("set", &apply_override, py::arg("key"), py::arg("value"), "Apply a key=value override.")
        .def("dump", &dump_scenario)
        .def("validate", &Scenario::validate)
        .def("__repr__", [](const Scenario& s) { return "<Scenario " + s.name + ">"; });

    m.def("load_scenario", &load_scenario, py::arg("text"));
    m.def("resolve_scenario", &resolve_scenario, py::arg("ref"), "'builtin:NAME' or a file path");
    m.def("builtin_names", [] {
        std::vector<std::string> names;
        for (const auto& s : builtin_scenarios()) names.push_back(s.name);
        return names;
    });

    py::class_<RunLog>(m, "RunLog")
        .def_readonly("scenario", &RunLog::scenario)
        .def_readonly("seed", &RunLog::seed)
        .def_property_readonly("min_clearance", [](const RunLog& l) { return l.metrics.min_clearance; })
        .def_property_readonly("collided", [](const RunLog& l) { return l.metrics.collided; })
        .def_property_readonly("max_speed", [](const RunLog& l) { return l.metrics.max_speed; })
        .def_property_readonly("final_position", [](const RunLog& l) { return l.metrics.final_position; })
        .def_property_readonly("modes_visited",
                               [](const RunLog& l) {
                                   std::vector<std::string> out;
                                   for (Mode md : l.metrics.modes_visited) out.emplace_back(to_string(md));
                                   return out;
                               })
        .def_property_readonly("times",
                               [](const RunLog& l) {
                                   std::vector<double> out;
                                   for (const auto& s : l.samples) out.push_back(s.t);
                                   return out;
                               })
        .def_property_readonly("positions",
                               [](const RunLog& l) {
                                   std::vector<Vec3> out;
                                   for (const auto& s : l.samples) out.push_back(s.state.position);
                                   return out;
                               })
        .def_property_readonly("v_out",
                               [](const RunLog& l) {
                                   std::vector<Vec3> out;
                                   for (const auto& s : l.samples) out.push_back(s.v_out);
                                   return out;
                               })
        .def_property_readonly("modes",
                               [](const RunLog& l) {
                                   std::vector<std::string> out;
                                   for (const auto& s : l.samples) out.emplace_back(to_string(s.mode));
                                   return out;
                               })
        .def("jsonl",
             [](const RunLog& l) {
                 std::ostringstream os;
                 write_jsonl(l, os);
                 return os.str();
             })
        .def("metrics_csv", [](const RunLog& l) {
            std::ostringstream os;
            write_metrics_csv(l, os);
            return os.str();
        });

    m.def(
        "run", [](const Scenario& s, std::uint64_t seed) { return run(s, seed); }, py::arg("scenario"),
        py::arg("seed") = 1, py::call_guard<py::gil_scoped_release>());

    m.def(
        "turntable",
        [](const std::string& plane, int steps, double target_range, std::uint64_t seed, bool noise,
           bool measured_fov) {
            const auto p = plane_from_string(plane);
            if (!p) throw py::value_error("plane must be XY, XZ or YZ");
            RadarRig rig = default_rig(measured_fov);
            if (!noise) rig = noiseless(rig);
            Rng rng(seed);
            const TurntableResult res = turntable_experiment(rig, *p, target_range, steps, rng);
            py::dict out;
            for (const auto& [id, st] : res.stats) out[py::str(std::string(to_string(id)))] = stats_dict(st);
            return out;
        },
        py::arg("plane"), py::arg("steps") = 3600, py::arg("target_range") = 1.0, py::arg("seed") = 1,
        py::arg("noise") = true, py::arg("measured_fov") = false,
        "Per-sensor range-error statistics and FoV estimates for one turntable plane.");

    m.def(
        "yaw_sweep",
        [](double step_deg, double theta0_deg, double slope, double distance, std::uint64_t seed, bool noise) {
            PaModel pa{theta0_deg, slope};
            pa.validate();
            RadarRig rig = default_rig(false);
            if (!noise) rig = noiseless(rig);
            Rng rng(seed);
            const auto pts = yaw_sweep_experiment(rig, pa, Segment3({distance, -30, 0}, {distance, 30, 0}), rng, step_deg);
            std::vector<std::tuple<double, double, std::string>> out;
            for (const auto& p : pts) {
                out.emplace_back(p.boresight_offset_deg, p.detected_vs_closest_deg, std::string(to_string(p.sensor)));
            }
            return out;
        },
        py::arg("step_deg") = 0.5, py::arg("theta0_deg") = 30.0, py::arg("slope") = 1.0, py::arg("distance") = 5.0,
        py::arg("seed") = 1, py::arg("noise") = false,
        "(boresight offset, detected-vs-closest offset, sensor) per detection, in degrees.");
}
