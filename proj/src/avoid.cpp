#include "srd/avoid.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace srd {

namespace {

constexpr double kDegenerateTangentDeg = 0.5;

void add_unique(std::vector<SensorId>& ids, SensorId id) {
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
}

// Single-linkage clustering; returns one point list per cluster.
std::vector<std::vector<Vec3>> cluster_points(const std::vector<Vec3>& pts, double link) {
    const std::size_t n = pts.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    const double link2 = link * link;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if ((pts[i] - pts[j]).squared_norm() <= link2) parent[find(i)] = find(j);
        }
    }
    std::vector<std::vector<Vec3>> clusters;
    std::vector<std::size_t> slot(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t root = find(i);
        if (slot[root] == n) {
            slot[root] = clusters.size();
            clusters.emplace_back();
        }
        clusters[slot[root]].push_back(pts[i]);
    }
    return clusters;
}

// Line direction from the buffered world-frame points, taken from the
// largest wire cluster that passes the spread gate.
std::optional<UnitVec3> buffered_line_direction(const std::deque<BufferedPoint>& buffer,
                                                const AvoidanceParams& params) {
    std::vector<Vec3> pts;
    pts.reserve(buffer.size());
    for (const auto& b : buffer) pts.push_back(b.point_world);
    auto clusters = cluster_points(pts, params.cluster_link);
    std::stable_sort(clusters.begin(), clusters.end(),
                     [](const auto& a, const auto& b) { return a.size() > b.size(); });
    for (const auto& c : clusters) {
        if (auto dir = estimate_line_direction(c, params.n_min, params.l_min)) return dir;
    }
    return std::nullopt;
}

}  // namespace

std::string_view to_string(Mode m) {
    switch (m) {
        case Mode::cruise: return "cruise";
        case Mode::tangential: return "tangential";
        case Mode::ebraking: return "ebraking";
        case Mode::rejecting: return "rejecting";
    }
    return "unknown";
}

std::optional<Mode> mode_from_string(std::string_view name) {
    for (Mode m : {Mode::cruise, Mode::tangential, Mode::ebraking, Mode::rejecting}) {
        if (to_string(m) == name) return m;
    }
    return std::nullopt;
}

void AvoidanceParams::validate() const {
    if (!(r_s > 0.0 && r_s < r_a)) throw std::invalid_argument("avoidance: require 0 < r_s < r_a");
    if (!(k_s > 0.0)) throw std::invalid_argument("avoidance.k_s must be > 0");
    if (!(a_max > 0.0)) throw std::invalid_argument("avoidance.a_max must be > 0");
    if (!(s_margin >= 0.0)) throw std::invalid_argument("avoidance.s_margin must be >= 0");
    if (!(v_eb > 0.0)) throw std::invalid_argument("avoidance.v_eb must be > 0");
    if (!(alpha > 0.0 && alpha < 3.14159265358979323846 / 2.0)) {
        throw std::invalid_argument("avoidance.alpha must be in (0, pi/2)");
    }
    if (!(buffer_window_s > 0.0)) throw std::invalid_argument("avoidance.buffer_window_s must be > 0");
    if (n_min < 2) throw std::invalid_argument("avoidance.n_min must be >= 2");
    if (!(l_min > 0.0)) throw std::invalid_argument("avoidance.l_min must be > 0");
    if (!(cluster_link > 0.0)) throw std::invalid_argument("avoidance.cluster_link must be > 0");
}

std::optional<UnitVec3> estimate_line_direction(const std::vector<Vec3>& points, int n_min, double l_min) {
    if (points.size() < static_cast<std::size_t>(std::max(n_min, 2))) return std::nullopt;

    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& p : points) mean += Eigen::Vector3d(p.x, p.y, p.z);
    mean /= static_cast<double>(points.size());

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& p : points) {
        const Eigen::Vector3d d = Eigen::Vector3d(p.x, p.y, p.z) - mean;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(points.size());

    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    const Eigen::Vector3d axis = eig.eigenvectors().col(2);  // eigenvalues ascending
    Vec3 dir{axis.x(), axis.y(), axis.z()};

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& p : points) {
        const double s = (Eigen::Vector3d(p.x, p.y, p.z) - mean).dot(axis);
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    if (hi - lo < l_min) return std::nullopt;

    for (double c : {dir.x, dir.y, dir.z}) {
        if (std::abs(c) > 1e-12) {
            if (c < 0.0) dir = -dir;
            break;
        }
    }
    return UnitVec3(dir);
}

std::optional<UnitVec3> estimate_line_direction(const std::vector<Detection>& buffer, int n_min, double l_min) {
    std::vector<Vec3> pts;
    pts.reserve(buffer.size());
    for (const auto& d : buffer) pts.push_back(d.point);
    return estimate_line_direction(pts, n_min, l_min);
}

std::vector<Detection> filter_avoidance_sphere(const std::vector<Detection>& detections, double r_a) {
    std::vector<Detection> kept;
    std::copy_if(detections.begin(), detections.end(), std::back_inserter(kept),
                 [r_a](const Detection& d) { return d.point.norm() < r_a; });
    return kept;
}

std::optional<Vec3> tangent_for_detection(const Vec3& p_i, const Vec3& v, const UnitVec3& g_n_hat) {
    const double p_norm = p_i.norm();
    if (!(p_norm > 0.0)) throw std::domain_error("tangent_for_detection: zero-length detection");
    const double v_norm = v.norm();
    if (v_norm == 0.0) return std::nullopt;

    const Vec3 p_hat = p_i / p_norm;
    const double parallelity = p_hat.dot(v / v_norm);
    if (parallelity <= 0.0) return std::nullopt;

    const Vec3& g = g_n_hat;
    const double off_vertical = angle_between(p_hat, g);
    Vec3 t_hat;
    if (off_vertical < deg2rad(kDegenerateTangentDeg) || off_vertical > deg2rad(180.0 - kDegenerateTangentDeg)) {
        // Wire straight above or below: sidestep horizontally, along v where possible.
        Vec3 h = v - g * v.dot(g);
        if (h.norm() < 1e-12) {
            const Vec3 helper = std::abs(g.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
            h = helper - g * helper.dot(g);
        }
        t_hat = UnitVec3(h - p_hat * h.dot(p_hat));
        if (t_hat.dot(v) < 0.0) t_hat = -t_hat;
    } else {
        const Vec3 t = p_hat.cross(g).cross(p_hat);
        t_hat = UnitVec3(t).vec();
        if (t.dot(v) < 0.0) t_hat = -t_hat;  // tie keeps +t
    }
    return t_hat * parallelity;
}

Vec3 combine_output(const std::vector<Vec3>& tangents, const Vec3& v_u) {
    if (tangents.empty()) return v_u;
    Vec3 t_s{};
    for (const auto& t : tangents) t_s += t;
    const Vec3 raw = t_s + v_u;
    const double raw_norm = raw.norm();
    if (raw_norm == 0.0) return {};
    return raw * std::min(1.0, v_u.norm() / raw_norm);
}

double ebrake_horizon_length(const Vec3& v_d, const AvoidanceParams& params) {
    return v_d.squared_norm() / (2.0 * params.a_max) + params.s_margin;
}

namespace {
bool in_horizon(const Vec3& p, const Vec3& v_d, double l_h, double alpha) {
    return l_h > p.norm() && alpha > std::atan2(v_d.cross(p).norm(), v_d.dot(p));
}
}  // namespace

bool ebrake_check(const std::vector<Detection>& detections, const Vec3& v_d, const AvoidanceParams& params) {
    if (v_d.norm() <= params.v_eb) return false;
    const double l_h = ebrake_horizon_length(v_d, params);
    return std::any_of(detections.begin(), detections.end(),
                       [&](const Detection& d) { return in_horizon(d.point, v_d, l_h, params.alpha); });
}

std::optional<Vec3> proximity_rejection(const std::vector<Detection>& detections, const AvoidanceParams& params) {
    std::optional<Vec3> out;
    double closest = params.r_s;
    for (const auto& d : detections) {
        const double r = d.point.norm();
        if (!(r < params.r_s) || r == 0.0) continue;
        const Vec3 v = (d.point / r) * (params.k_s * (r - params.r_s));
        if (params.rejection == RejectionPolicy::sum) {
            out = out.value_or(Vec3{}) + v;
        } else if (r < closest) {
            closest = r;
            out = v;
        }
    }
    return out;
}

std::pair<VelocityCommand, AvoidanceState> step(const AvoidanceState& state, const ControllerInput& in,
                                                const AvoidanceParams& params) {
    AvoidanceState next = state;

    // Line direction from the recent world-frame history.
    for (const auto& d : in.detections) next.buffer.push_back({body_to_world(in.pose, d.point), in.t});
    while (!next.buffer.empty() && next.buffer.front().t < in.t - params.buffer_window_s - 1e-9) {
        next.buffer.pop_front();
    }
    if (auto c_world = buffered_line_direction(next.buffer, params)) {
        const UnitVec3 c_body(world_to_body_dir(in.pose, *c_world));
        next.c_hat = c_body;
        next.k_p = Plane{c_body, Vec3{}};
    } else {
        next.c_hat.reset();
        next.k_p.reset();
    }

    VelocityCommand cmd;

    if (auto rejection = proximity_rejection(in.detections, params)) {
        cmd.v_out = *rejection;
        cmd.mode = Mode::rejecting;
        for (const auto& d : in.detections) {
            if (d.point.norm() < params.r_s) add_unique(cmd.contributing, d.sensor);
        }
        next.mode = cmd.mode;
        return {cmd, next};
    }

    const bool still_braking = state.mode == Mode::ebraking && in.v_d.norm() > params.v_eb;
    if (still_braking || ebrake_check(in.detections, in.v_d, params)) {
        cmd.v_out = Vec3{};
        cmd.mode = Mode::ebraking;
        if (in.v_d.norm() > params.v_eb) {
            const double l_h = ebrake_horizon_length(in.v_d, params);
            for (const auto& d : in.detections) {
                if (in_horizon(d.point, in.v_d, l_h, params.alpha)) add_unique(cmd.contributing, d.sensor);
            }
        }
        next.mode = cmd.mode;
        return {cmd, next};
    }

    auto project = [&](const Vec3& v) { return next.k_p ? project_onto_plane(v, *next.k_p) : v; };
    const Vec3 v_d = project(in.v_d);
    const Vec3 v_u = project(in.v_u);
    const UnitVec3 g_n = -params.gravity_down;

    std::vector<Vec3> tangents;
    for (const auto& d : filter_avoidance_sphere(in.detections, params.r_a)) {
        const Vec3 p = project(d.point);
        if (p.norm() < 1e-9) continue;
        bool used = false;
        for (const Vec3& v : {v_d, v_u}) {
            if (auto t = tangent_for_detection(p, v, g_n)) {
                tangents.push_back(*t);
                used = true;
            }
        }
        if (used) add_unique(cmd.contributing, d.sensor);
    }

    cmd.v_out = combine_output(tangents, in.v_u);
    cmd.mode = tangents.empty() ? Mode::cruise : Mode::tangential;
    next.mode = cmd.mode;
    return {cmd, next};
}

}  // namespace srd
