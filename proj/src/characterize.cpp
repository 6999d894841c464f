#include "srd/characterize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace srd {

namespace {

constexpr double kTwoPi = 6.283185307179586476925;

Vec3 plane_point(TurntablePlane plane, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    switch (plane) {
        case TurntablePlane::XZ: return {c, 0.0, s};
        case TurntablePlane::YZ: return {0.0, c, s};
        case TurntablePlane::XY: return {c, s, 0.0};
    }
    return {};
}

Vec3 plane_normal(TurntablePlane plane) {
    switch (plane) {
        case TurntablePlane::XZ: return {0, 1, 0};
        case TurntablePlane::YZ: return {1, 0, 0};
        case TurntablePlane::XY: return {0, 0, 1};
    }
    return {};
}

double signed_angle_about(const Vec3& from, const Vec3& to, const Vec3& axis) {
    return std::atan2(from.cross(to).dot(axis), from.dot(to));
}

std::string fmt(double v, const char* spec = "%.6f") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    std::string s = buf;
    // "-0.0000" for tiny negatives
    if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

}  // namespace

std::string_view to_string(TurntablePlane p) {
    switch (p) {
        case TurntablePlane::XZ: return "XZ";
        case TurntablePlane::YZ: return "YZ";
        case TurntablePlane::XY: return "XY";
    }
    return "?";
}

std::optional<TurntablePlane> plane_from_string(std::string_view name) {
    for (auto p : {TurntablePlane::XZ, TurntablePlane::YZ, TurntablePlane::XY}) {
        if (to_string(p) == name) return p;
    }
    return std::nullopt;
}

RadarRig noiseless(RadarRig rig) {
    for (auto& s : rig.sensors) {
        s.bias_mean = 0.0;
        s.noise_sigma = 0.0;
        s.angular_sigma_deg = 0.0;
        s.dropout = 0.0;
    }
    return rig;
}

SensorStats range_error_stats(const std::vector<SweepSample>& samples, std::optional<SensorId> sensor) {
    SensorStats st;
    double sum = 0.0;
    double sum_sq = 0.0;
    st.min_err = std::numeric_limits<double>::infinity();
    st.max_err = -std::numeric_limits<double>::infinity();
    for (const auto& s : samples) {
        if (sensor && s.sensor != *sensor) continue;
        const double e = s.detection.norm() - s.truth.norm();
        ++st.count;
        sum += e;
        sum_sq += e * e;
        st.min_err = std::min(st.min_err, e);
        st.max_err = std::max(st.max_err, e);
    }
    if (st.count == 0) throw std::domain_error("range_error_stats: no samples");
    const double n = static_cast<double>(st.count);
    st.mean_err = sum / n;
    double var = 0.0;
    for (const auto& s : samples) {
        if (sensor && s.sensor != *sensor) continue;
        const double d = s.detection.norm() - s.truth.norm() - st.mean_err;
        var += d * d;
    }
    st.sigma_err = std::sqrt(var / n);
    st.rmse = std::sqrt(sum_sq / n);
    return st;
}

double longest_detection_arc_deg(const std::vector<bool>& detected, double min_density) {
    const std::size_t n = detected.size();
    if (n == 0) return 0.0;
    struct Run {
        std::size_t start, len;
    };
    std::vector<Run> runs;
    for (std::size_t i = 0; i < n; ++i) {
        if (detected[i] && (i == 0 || !detected[i - 1])) {
            std::size_t j = i;
            while (j < n && detected[j]) ++j;
            runs.push_back({i, j - i});
        }
    }
    if (runs.empty()) return 0.0;
    if (runs.size() == 1 && runs[0].len == n) return 360.0;
    // A run touching both ends wraps around.
    if (runs.size() > 1 && detected[0] && detected[n - 1]) {
        runs.back().len += runs.front().len;
        runs.erase(runs.begin());
    }

    const std::size_t r = runs.size();
    std::size_t best = 0;
    for (std::size_t i = 0; i < r; ++i) {
        std::size_t hits = 0;
        for (std::size_t k = 0; k < r; ++k) {
            const Run& last = runs[(i + k) % r];
            hits += last.len;
            const std::size_t span = (last.start + last.len + n - runs[i].start - 1) % n + 1;
            if (span > n) break;
            if (static_cast<double>(hits) >= min_density * static_cast<double>(span)) best = std::max(best, span);
        }
    }
    return 360.0 * static_cast<double>(best) / static_cast<double>(n);
}

TurntableResult turntable_experiment(const RadarRig& rig, TurntablePlane plane, double target_range, int steps,
                                     Rng& rng) {
    if (!(target_range > 0.0)) throw std::invalid_argument("turntable: target_range must be > 0");
    if (steps < 360) throw std::invalid_argument("turntable: steps must be >= 360");

    TurntableResult res{plane, steps, {}, {}};
    const Vec3 normal = plane_normal(plane);
    for (const auto& sensor : rig.sensors) {
        Rng stream = rng.fork(static_cast<std::uint64_t>(sensor.id));
        std::vector<bool> hit(static_cast<std::size_t>(steps), false);
        const std::size_t first = res.samples.size();
        for (int k = 0; k < steps; ++k) {
            const double angle = kTwoPi * k / steps;
            const Vec3 target = plane_point(plane, angle) * target_range;
            if (auto d = detect_point_target(sensor, target, static_cast<double>(k), stream)) {
                hit[static_cast<std::size_t>(k)] = true;
                res.samples.push_back({angle, sensor.id, d->point, target});
            }
        }
        if (res.samples.size() == first) continue;

        SensorStats st = range_error_stats(res.samples, sensor.id);
        const double arc = longest_detection_arc_deg(hit);
        // The plane cuts the azimuth FoV when its normal is the sensor's up axis.
        if (std::abs(normal.dot(sensor.up_reference)) > 0.5) {
            st.est_azimuth_fov_deg = arc;
        } else {
            st.est_elevation_fov_deg = arc;
        }
        res.stats[sensor.id] = st;
    }
    return res;
}

std::vector<YawSweepPoint> yaw_sweep_experiment(const RadarRig& rig, const PaModel& pa, const Segment3& wire,
                                                Rng& rng, double yaw_step_deg) {
    if (!(yaw_step_deg > 0.0)) throw std::invalid_argument("yaw sweep: step must be > 0");
    std::vector<YawSweepPoint> out;
    const Vec3 up{0, 0, 1};
    const int n = static_cast<int>(std::round(360.0 / yaw_step_deg));
    for (int k = 0; k < n; ++k) {
        const double yaw = deg2rad(-180.0 + k * yaw_step_deg);
        const UavPose pose{{}, yaw};
        const Segment3 body(world_to_body(pose, wire.a()), world_to_body(pose, wire.b()));
        const Vec3 closest = closest_point_on_line({}, body);
        Rng tick = rng.fork(static_cast<std::uint64_t>(k));
        for (const auto& s : rig.sensors) {
            Rng stream = tick.fork(static_cast<std::uint64_t>(s.id));
            auto d = detect_conductor(s, pa, body, 1.0, static_cast<double>(k), stream);
            if (!d) continue;
            out.push_back({rad2deg(signed_angle_about(closest, s.boresight, up)),
                           rad2deg(signed_angle_about(closest, d->point, up)), s.id});
        }
    }
    return out;
}

void write_turntable_samples_csv(const TurntableResult& result, std::ostream& os, bool header) {
    if (header) os << "plane,rig_angle_deg,sensor,det_x,det_y,det_z,truth_x,truth_y,truth_z,range_error\n";
    for (const auto& s : result.samples) {
        os << to_string(result.plane) << ',' << fmt(rad2deg(s.rig_angle), "%.4f") << ',' << to_string(s.sensor) << ','
           << fmt(s.detection.x) << ',' << fmt(s.detection.y) << ',' << fmt(s.detection.z) << ',' << fmt(s.truth.x)
           << ',' << fmt(s.truth.y) << ',' << fmt(s.truth.z) << ',' << fmt(s.detection.norm() - s.truth.norm())
           << '\n';
    }
}

void write_sensor_summary_csv(const std::map<SensorId, SensorStats>& stats, const RadarRig& rig,
                              const std::optional<SensorStats>& overall, std::ostream& os) {
    os << "sensor,samples,mu,sigma,min,max,rmse,est_elevation_fov_deg,expected_elevation_fov_deg,"
          "est_azimuth_fov_deg,expected_azimuth_fov_deg\n";
    auto opt = [](const std::optional<double>& v) { return v ? fmt(*v, "%.1f") : std::string(); };
    for (const auto& [id, st] : stats) {
        const auto& spec = rig.sensor(id);
        os << to_string(id) << ',' << st.count << ',' << fmt(st.mean_err, "%.4f") << ',' << fmt(st.sigma_err, "%.4f")
           << ',' << fmt(st.min_err, "%.4f") << ',' << fmt(st.max_err, "%.4f") << ',' << fmt(st.rmse, "%.4f") << ','
           << opt(st.est_elevation_fov_deg) << ',' << fmt(spec.elevation_fov_deg, "%.1f") << ','
           << opt(st.est_azimuth_fov_deg) << ',' << fmt(spec.azimuth_fov_deg, "%.1f") << '\n';
    }
    if (overall) {
        os << "overall," << overall->count << ',' << fmt(overall->mean_err, "%.4f") << ','
           << fmt(overall->sigma_err, "%.4f") << ',' << fmt(overall->min_err, "%.4f") << ','
           << fmt(overall->max_err, "%.4f") << ',' << fmt(overall->rmse, "%.4f") << ",,,,\n";
    }
}

void write_yaw_sweep_csv(const std::vector<YawSweepPoint>& points, std::ostream& os) {
    os << "boresight_offset_deg,detected_vs_closest_deg\n";
    for (const auto& p : points) {
        os << fmt(p.boresight_offset_deg, "%.4f") << ',' << fmt(p.detected_vs_closest_deg, "%.4f") << '\n';
    }
}

}  // namespace srd
