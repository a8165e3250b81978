#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <variant>
#include <string>
#include <vector>

#include <json.hpp>

#include "demoplan/btree/tree.hpp"
#include "demoplan/harness/scene.hpp"

namespace demoplan::harness {

struct Waypoint {
    RigidTransform pose;       ///< world frame
    double duration = 0.0;     ///< seconds to reach it from the previous waypoint
    std::string path;          ///< ExecTrajectory node it came from
    int index = 0;             ///< target-pose index within that node
};

struct GripperEvent {
    std::size_t before_waypoint = 0; ///< fires before moving towards this waypoint
    bt::GraspAction action = bt::GraspAction::close;
};

struct WaypointPlan {
    std::vector<Waypoint> waypoints;
    std::vector<GripperEvent> gripper;
};

/// World poses of every target pose: scene pose of the reference object composed with the target.
inline WaypointPlan plan_waypoints(const bt::BehaviorTree& exe, const Scene& scene) {
    if (exe.variant != bt::Variant::executable) throw bt::VariantError("only executable trees have waypoints");
    bt::validate(exe);
    const RigidTransform& reference = scene.pose_of(scene.reference);
    WaypointPlan out;
    bt::for_each_node(exe.root, [&](const bt::Node& node, const std::string& path) {
        if (const auto* g = node.grasp()) {
            out.gripper.push_back({out.waypoints.size(), g->action});
        } else if (const auto* exec = node.trajectory()) {
            for (const auto& t : exec->targets) out.waypoints.push_back({reference * t.transform(), t.duration, path, t.index});
        }
    });
    return out;
}

struct SimulationConfig {
    double timestep = 0.01;         ///< seconds
    std::string contact_surface;    ///< surface name; empty disables contact flags
    double contact_tolerance = 0.005;
};

struct TraceSample {
    double time = 0.0;
    RigidTransform pose;
    std::size_t waypoint = 0; ///< index of the waypoint being approached (0 at the start)
    bool contact = false;
    bool collision = false;
};

struct ExecutionTrace {
    std::vector<TraceSample> samples;
    std::vector<double> arrival; ///< arrival time at each waypoint
};

inline RigidTransform interpolate(const RigidTransform& a, const RigidTransform& b, double s) {
    if (s <= 0.0) return a;
    if (s >= 1.0) return b;
    const Vec3 p = a.translation() + s * (b.translation() - a.translation());
    const Quaternion q = a.quaternion().slerp(s, b.quaternion()).normalized();
    return RigidTransform::from_quaternion(q, p);
}

/// Straight-line translation and slerp rotation between consecutive waypoints,
/// sampled every `timestep` plus one final sample on the last waypoint.
inline ExecutionTrace simulate(const WaypointPlan& plan, const Scene& scene, const SimulationConfig& cfg = {}) {
    if (plan.waypoints.empty()) throw ValidationError("simulation needs at least one waypoint");
    if (!(cfg.timestep > 0.0)) throw ValidationError("simulation timestep must be positive");
    std::optional<double> surface;
    if (!cfg.contact_surface.empty()) surface = scene.surface(cfg.contact_surface);

    const auto& wp = plan.waypoints;
    ExecutionTrace trace;
    trace.arrival.push_back(0.0);
    for (std::size_t i = 1; i < wp.size(); ++i) trace.arrival.push_back(trace.arrival.back() + wp[i].duration);
    const double total = trace.arrival.back();

    const auto flag = [&](TraceSample& s) {
        const Vec3 p = s.pose.translation();
        if (surface) s.contact = std::abs(p.z() - *surface) <= cfg.contact_tolerance;
        for (const auto& [name, box] : scene.boxes)
            if (!box.touchable && box.contains_strictly(p)) s.collision = true;
    };

    std::size_t segment = 1;
    for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * cfg.timestep;
        if (t >= total) break;
        while (segment + 1 < wp.size() && t >= trace.arrival[segment]) ++segment;
        TraceSample s;
        s.time = t;
        if (wp.size() == 1 || t == 0.0) {
            s.pose = wp.front().pose;
            s.waypoint = 0;
        } else {
            const double span = trace.arrival[segment] - trace.arrival[segment - 1];
            s.pose = interpolate(wp[segment - 1].pose, wp[segment].pose, (t - trace.arrival[segment - 1]) / span);
            s.waypoint = segment;
        }
        flag(s);
        trace.samples.push_back(s);
    }
    TraceSample last;
    last.time = total;
    last.pose = wp.back().pose;
    last.waypoint = wp.size() - 1;
    flag(last);
    trace.samples.push_back(last);
    return trace;
}

// ---- checks -----------------------------------------------------------------

struct NoCollision {};

/// Fraction of samples in contact between arrival at `from_waypoint` and at `to_waypoint`.
struct ContactRatio {
    double min_ratio = 0.95;
    std::size_t from_waypoint = 0;
    std::optional<std::size_t> to_waypoint;
};

/// Largest |z - target| over the same kind of waypoint interval.
struct MaxZError {
    double target = 0.0;
    double tolerance = 0.005;
    std::size_t from_waypoint = 0;
    std::optional<std::size_t> to_waypoint;
};

using Check = std::variant<NoCollision, ContactRatio, MaxZError>;

struct CheckResult {
    std::string name;
    bool passed = true;
    double value = 0.0;
    std::optional<std::size_t> counterexample; ///< first offending sample
};

struct TraceReport {
    std::vector<CheckResult> results;
    bool passed() const {
        for (const auto& r : results)
            if (!r.passed) return false;
        return true;
    }
};

namespace detail {

inline std::pair<double, double> window(const ExecutionTrace& trace, std::size_t from, std::optional<std::size_t> to) {
    if (from >= trace.arrival.size() || (to && (*to >= trace.arrival.size() || *to < from)))
        throw ValidationError("check refers to a waypoint the trace does not reach");
    return {trace.arrival[from], to ? trace.arrival[*to] : trace.arrival.back()};
}

} // namespace detail

inline TraceReport check_trace(const ExecutionTrace& trace, const std::vector<Check>& checks) {
    TraceReport report;
    for (const auto& check : checks) {
        CheckResult r;
        if (std::holds_alternative<NoCollision>(check)) {
            r.name = "no_collision";
            for (std::size_t i = 0; i < trace.samples.size(); ++i)
                if (trace.samples[i].collision) {
                    r.passed = false;
                    r.counterexample = i;
                    ++r.value;
                }
        } else if (const auto* c = std::get_if<ContactRatio>(&check)) {
            r.name = "contact_ratio";
            const auto [lo, hi] = detail::window(trace, c->from_waypoint, c->to_waypoint);
            std::size_t total = 0, touching = 0;
            for (std::size_t i = 0; i < trace.samples.size(); ++i) {
                const auto& s = trace.samples[i];
                if (s.time < lo || s.time > hi) continue;
                ++total;
                if (s.contact) ++touching;
                else if (!r.counterexample) r.counterexample = i;
            }
            r.value = total ? static_cast<double>(touching) / static_cast<double>(total) : 0.0;
            r.passed = total > 0 && r.value >= c->min_ratio;
        } else {
            const auto& z = std::get<MaxZError>(check);
            r.name = "max_z_error";
            const auto [lo, hi] = detail::window(trace, z.from_waypoint, z.to_waypoint);
            for (std::size_t i = 0; i < trace.samples.size(); ++i) {
                const auto& s = trace.samples[i];
                if (s.time < lo || s.time > hi) continue;
                const double err = std::abs(s.pose.translation().z() - z.target);
                if (err > z.tolerance && !r.counterexample) r.counterexample = i;
                r.value = std::max(r.value, err);
            }
            r.passed = r.value <= z.tolerance;
        }
        report.results.push_back(r);
    }
    return report;
}

// ---- serialization ----------------------------------------------------------

/// [{"type": "no_collision"}, {"type": "contact_ratio", "min": 0.95, "from_waypoint": 2},
///  {"type": "max_z_error", "target": 0.04, "tolerance": 0.005, "from_waypoint": 2}]
inline std::vector<Check> checks_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw SchemaError("checks must be a JSON array");
    std::vector<Check> out;
    for (const auto& c : j) {
        const auto type = c.value("type", std::string{});
        std::optional<std::size_t> to;
        if (c.contains("to_waypoint")) to = c["to_waypoint"].get<std::size_t>();
        if (type == "no_collision") out.emplace_back(NoCollision{});
        else if (type == "contact_ratio")
            out.emplace_back(ContactRatio{c.value("min", 0.95), c.value("from_waypoint", std::size_t{0}), to});
        else if (type == "max_z_error") {
            if (!c.contains("target")) throw SchemaError("max_z_error check needs a target height");
            out.emplace_back(MaxZError{c["target"].get<double>(), c.value("tolerance", 0.005),
                                       c.value("from_waypoint", std::size_t{0}), to});
        } else
            throw SchemaError("unknown check type \"" + type + "\"");
    }
    return out;
}

inline nlohmann::json report_to_json(const TraceReport& report) {
    nlohmann::json j;
    j["passed"] = report.passed();
    j["checks"] = nlohmann::json::array();
    for (const auto& r : report.results) {
        nlohmann::json c{{"name", r.name}, {"passed", r.passed}, {"value", r.value}};
        c["counterexample"] = r.counterexample ? nlohmann::json(*r.counterexample) : nlohmann::json(nullptr);
        j["checks"].push_back(c);
    }
    return j;
}

inline nlohmann::json trace_summary(const ExecutionTrace& trace) {
    double zmin = std::numeric_limits<double>::infinity(), zmax = -zmin;
    std::size_t contact = 0, collision = 0;
    for (const auto& s : trace.samples) {
        zmin = std::min(zmin, s.pose.translation().z());
        zmax = std::max(zmax, s.pose.translation().z());
        contact += s.contact;
        collision += s.collision;
    }
    return {{"samples", trace.samples.size()},
            {"duration", trace.arrival.back()},
            {"z_min", zmin},
            {"z_max", zmax},
            {"contact_samples", contact},
            {"collision_samples", collision}};
}

/// Columns t,x,y,z,qw,qx,qy,qz,contact,collision.
inline void write_trace_csv(std::ostream& out, const ExecutionTrace& trace) {
    out << "t,x,y,z,qw,qx,qy,qz,contact,collision\n";
    out.precision(10);
    for (const auto& s : trace.samples) {
        const Vec3 p = s.pose.translation();
        const auto q = s.pose.quaternion();
        out << s.time << ',' << p.x() << ',' << p.y() << ',' << p.z() << ',' << q.w() << ',' << q.x() << ',' << q.y()
            << ',' << q.z() << ',' << int(s.contact) << ',' << int(s.collision) << '\n';
    }
}

} // namespace demoplan::harness
