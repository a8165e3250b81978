#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "demoplan/btree/tree.hpp"
#include "demoplan/core/demonstration.hpp"
#include "demoplan/core/errors.hpp"
#include "demoplan/semcodec/semantic_pose.hpp"

namespace demoplan::semcodec {

struct CodecConfig {
    double z_th = 0.01;    ///< meters; |dz| up to this is "touching"
    double z_above = 0.15; ///< meters added to the IP height for "above"
    double z_below = -0.15;
    double eps_z = 0.0; ///< meters added for "touching"

    void validate() const {
        if (!(z_th >= 0.0 && z_above > z_th && -z_th > z_below) || !std::isfinite(z_above) || !std::isfinite(z_below))
            throw ValidationError("codec config needs z_above > z_th >= 0 > -z_th > z_below");
        if (!(std::abs(eps_z) <= z_th)) throw ValidationError("codec config needs |eps_z| <= z_th");
    }
};

/// Label of the interaction point closest to `position`; the first declared wins ties.
inline const InteractionPoint& nearest_interaction_point(const Vec3& position, const ObjectModel& model) {
    const auto& points = model.interaction_points();
    if (points.empty()) throw ValidationError("object model '" + model.name() + "' has no interaction points");
    const InteractionPoint* best = &points.front();
    double best_dist = (position - best->offset).squaredNorm();
    for (const auto& p : points) {
        const double d = (position - p.offset).squaredNorm();
        if (d < best_dist) {
            best = &p;
            best_dist = d;
        }
    }
    return *best;
}

inline Vertical classify_vertical(double delta_z, const CodecConfig& cfg) {
    if (delta_z > cfg.z_th) return Vertical::above;
    if (delta_z < -cfg.z_th) return Vertical::below;
    return Vertical::touching;
}

inline double height_offset(Vertical v, const CodecConfig& cfg) {
    switch (v) {
    case Vertical::above: return cfg.z_above;
    case Vertical::below: return cfg.z_below;
    case Vertical::touching: return cfg.eps_z;
    }
    return cfg.eps_z;
}

inline RigidTransform axis_rotation(RotationAxis axis, double degrees) {
    const double rad = deg_to_rad(degrees);
    switch (axis) {
    case RotationAxis::side_bending: return RigidTransform::rotation_x(rad);
    case RotationAxis::tilting: return RigidTransform::rotation_y(rad);
    case RotationAxis::turning: return RigidTransform::rotation_z(rad);
    }
    return RigidTransform::rotation_z(rad);
}

/// Zero rotation has no axis; all zero-angle labels collapse onto "turning 0".
inline SemanticTargetPose canonical(SemanticTargetPose p) {
    p.angle = normalize_degrees(p.angle);
    if (p.angle == 0) p.axis = RotationAxis::turning;
    return p;
}

struct DominantRotation {
    RotationAxis axis = RotationAxis::turning;
    int angle = 0;                 ///< snapped, degrees
    Vec3 euler = Vec3::Zero();     ///< intrinsic x-y-z angles, degrees
    bool gimbal_degenerate = false;
};

namespace detail {

inline double wrap_pi(double a) {
    constexpr double pi = std::numbers::pi;
    while (a > pi) a -= 2 * pi;
    while (a <= -pi) a += 2 * pi;
    return a;
}

} // namespace detail

/// Intrinsic x-y-z Euler angles (radians) of R = Rx(a) Ry(b) Rz(c). Of the two
/// solutions the one with the smaller total magnitude is returned.
inline Vec3 euler_xyz(const Mat3& r, bool* gimbal = nullptr) {
    const double b = std::atan2(r(0, 2), std::hypot(r(0, 0), r(0, 1)));
    if (std::abs(std::abs(b) - std::numbers::pi / 2) < 1e-6) {
        if (gimbal) *gimbal = true;
        return {0.0, b, std::atan2(r(1, 0), r(1, 1))};
    }
    if (gimbal) *gimbal = false;
    const Vec3 first(std::atan2(-r(1, 2), r(2, 2)), b, std::atan2(-r(0, 1), r(0, 0)));
    const Vec3 second(detail::wrap_pi(first.x() + std::numbers::pi), detail::wrap_pi(std::numbers::pi - b),
                      detail::wrap_pi(first.z() + std::numbers::pi));
    return second.cwiseAbs().sum() < first.cwiseAbs().sum() ? second : first;
}

/// Largest single-axis component of rotation(prev)^T rotation(cur), snapped.
inline DominantRotation dominant_rotation(const RigidTransform& prev, const RigidTransform& cur) {
    const Mat3 rel = prev.rotation().transpose() * cur.rotation();
    DominantRotation out;
    const Vec3 e = euler_xyz(rel, &out.gimbal_degenerate);
    out.euler = e * (180.0 / std::numbers::pi);
    int axis = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(e[i]) > std::abs(e[axis])) axis = i;
    out.axis = axis == 0 ? RotationAxis::side_bending : axis == 1 ? RotationAxis::tilting : RotationAxis::turning;
    out.angle = snap_angle(out.euler[axis]);
    if (out.angle == 0) out.axis = RotationAxis::turning;
    return out;
}

/// Identifies one target pose inside a tree: node path plus target index.
struct EntryKey {
    std::string path;
    int index = 0;
    friend auto operator<=>(const EntryKey&, const EntryKey&) = default;
};

struct SidecarEntry {
    SemanticTargetPose triplet;
    bt::NumericPose original;
    friend bool operator==(const SidecarEntry&, const SidecarEntry&) = default;
};

using Sidecar = std::map<EntryKey, SidecarEntry>;

struct Encoded {
    bt::BehaviorTree tree;
    Sidecar sidecar;
    std::vector<std::string> notes;
};

struct Decoded {
    bt::BehaviorTree tree;
    std::vector<std::string> notes;
};

/// Triplet for a target pose given the pose of the previous entry in its trajectory.
inline SemanticTargetPose describe(const RigidTransform& prev, const RigidTransform& cur, const ObjectModel& background,
                                   const CodecConfig& cfg, DominantRotation* rotation = nullptr) {
    const Vec3 p = cur.translation();
    const auto& ip = nearest_interaction_point(p, background);
    const auto rot = dominant_rotation(prev, cur);
    if (rotation) *rotation = rot;
    return {ip.label, classify_vertical(p.z() - ip.offset.z(), cfg), rot.axis, rot.angle};
}

/// Replaces every numeric payload by its triplet; originals go to the sidecar.
inline Encoded encode_plan(const bt::BehaviorTree& exe, const ObjectModel& background, const CodecConfig& cfg = {}) {
    cfg.validate();
    if (exe.variant != bt::Variant::executable) throw bt::VariantError("encode_plan needs an executable tree");
    bt::validate(exe);
    Encoded out{exe, {}, {}};
    out.tree.variant = bt::Variant::semantic;
    bt::for_each_node(out.tree.root, [&](bt::Node& node, const std::string& path) {
        auto* exec = node.trajectory();
        if (!exec) return;
        RigidTransform prev;
        for (auto& entry : exec->targets) {
            const bt::NumericPose original = entry.numeric();
            const RigidTransform cur = original.transform();
            DominantRotation rot;
            auto triplet = describe(prev, cur, background, cfg, &rot);
            if (rot.gimbal_degenerate)
                out.notes.push_back("target pose " + std::to_string(entry.index) + " at " + path +
                                    ": rotation is gimbal-degenerate, roll folded into yaw");
            out.sidecar[{path, entry.index}] = {triplet, original};
            entry.pose = std::move(triplet);
            prev = cur;
        }
    });
    return out;
}

inline Encoded encode_plan(const bt::BehaviorTree& exe, const Demonstration& demo, const CodecConfig& cfg = {}) {
    return encode_plan(exe, demo.model(demo.background), cfg);
}

/// Numeric pose for a triplet following `prev`, ignoring any sidecar.
inline bt::NumericPose synthesize(const SemanticTargetPose& t, const RigidTransform& prev, const ObjectModel& background,
                                  const CodecConfig& cfg) {
    const auto* ip = background.find(t.ip_label);
    if (!ip) {
        std::string valid;
        for (const auto& label : background.labels()) valid += (valid.empty() ? "" : ", ") + label;
        throw ValidationError("unknown interaction point \"" + t.ip_label + "\" on '" + background.name() +
                              "'; valid labels: " + valid);
    }
    const Vec3 position(ip->offset.x(), ip->offset.y(), ip->offset.z() + height_offset(t.vertical, cfg));
    const Mat3 rotation = prev.rotation() * axis_rotation(t.axis, snap_angle(t.angle)).rotation();
    return bt::NumericPose::from(RigidTransform(rotation, position));
}

/// Numeric tree for a semantic one. Entries whose triplet still matches the
/// sidecar keep their original pose; the rest are rebuilt from their labels.
inline Decoded decode_plan(const bt::BehaviorTree& sem, const ObjectModel& background, const CodecConfig& cfg = {},
                           const Sidecar& sidecar = {}) {
    cfg.validate();
    if (sem.variant != bt::Variant::semantic) throw bt::VariantError("decode_plan needs a semantic tree");
    bt::validate(sem);
    Decoded out{sem, {}};
    out.tree.variant = bt::Variant::executable;
    bt::for_each_node(out.tree.root, [&](bt::Node& node, const std::string& path) {
        auto* exec = node.trajectory();
        if (!exec) return;
        RigidTransform prev;
        for (auto& entry : exec->targets) {
            const SemanticTargetPose triplet = entry.semantic();
            const auto kept = sidecar.find({path, entry.index});
            bt::NumericPose pose;
            if (kept != sidecar.end() && kept->second.triplet == triplet) {
                pose = kept->second.original;
            } else {
                if (!is_snapped(triplet.angle))
                    out.notes.push_back("target pose " + std::to_string(entry.index) + " at " + path + ": snapped " +
                                        std::string(to_string(triplet.axis)) + " " + std::to_string(triplet.angle) +
                                        " to " + std::to_string(snap_angle(triplet.angle)));
                pose = synthesize(triplet, prev, background, cfg);
            }
            prev = pose.transform();
            entry.pose = pose;
        }
    });
    return out;
}

inline Decoded decode_plan(const bt::BehaviorTree& sem, const Demonstration& demo, const CodecConfig& cfg = {},
                           const Sidecar& sidecar = {}) {
    return decode_plan(sem, demo.model(demo.background), cfg, sidecar);
}

} // namespace demoplan::semcodec
