#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "demoplan/core/errors.hpp"
#include "demoplan/core/transform.hpp"
#include "demoplan/semcodec/semantic_pose.hpp"

namespace demoplan::bt {

enum class Variant { executable, semantic };
enum class GraspAction { open, close };
enum class Stiffness { low, medium, high };

inline constexpr double kDefaultDuration = 2.0;

/// Ticking a semantic tree or mixing payload kinds.
class VariantError : public Error {
public:
    using Error::Error;
};

inline std::string_view to_string(Variant v) { return v == Variant::executable ? "executable" : "semantic"; }
inline std::string_view to_string(GraspAction a) { return a == GraspAction::open ? "open" : "close"; }
inline std::string_view to_string(Stiffness s) {
    switch (s) {
    case Stiffness::low: return "low";
    case Stiffness::medium: return "medium";
    case Stiffness::high: return "high";
    }
    return "medium";
}

/// Controller stiffness in N/m.
inline double stiffness_newton_per_meter(Stiffness s) {
    switch (s) {
    case Stiffness::low: return 1000.0;
    case Stiffness::medium: return 1500.0;
    case Stiffness::high: return 2000.0;
    }
    return 1500.0;
}

/// Numeric target pose as written in executable XML: position and unit
/// quaternion (w, x, y, z). The quaternion is the stored form so that text
/// round-trips are exact.
struct NumericPose {
    Vec3 position = Vec3::Zero();
    Quaternion orientation = Quaternion::Identity();

    static NumericPose from(const RigidTransform& t) { return {t.translation(), t.quaternion()}; }
    RigidTransform transform() const { return RigidTransform::from_quaternion(orientation, position); }

    friend bool operator==(const NumericPose& a, const NumericPose& b) {
        return a.position == b.position && a.orientation.coeffs() == b.orientation.coeffs();
    }
};

using Payload = std::variant<NumericPose, SemanticTargetPose>;

struct TargetEntry {
    int index = 0;
    Payload pose;
    double duration = kDefaultDuration; ///< seconds

    bool is_semantic() const noexcept { return std::holds_alternative<SemanticTargetPose>(pose); }
    const NumericPose& numeric() const { return std::get<NumericPose>(pose); }
    RigidTransform transform() const { return numeric().transform(); }
    const SemanticTargetPose& semantic() const { return std::get<SemanticTargetPose>(pose); }

    friend bool operator==(const TargetEntry&, const TargetEntry&) = default;
};

struct Node;

struct Sequence {
    std::vector<Node> children;
    friend bool operator==(const Sequence&, const Sequence&) = default;
};

struct Grasp {
    GraspAction action = GraspAction::close;
    friend bool operator==(const Grasp&, const Grasp&) = default;
};

struct ExecTrajectory {
    std::vector<TargetEntry> targets;
    Stiffness stiffness = Stiffness::medium;
    friend bool operator==(const ExecTrajectory&, const ExecTrajectory&) = default;
};

struct Node {
    std::variant<Sequence, Grasp, ExecTrajectory> kind;

    Node() : kind(Sequence{}) {}
    Node(Sequence s) : kind(std::move(s)) {}
    Node(Grasp g) : kind(g) {}
    Node(ExecTrajectory e) : kind(std::move(e)) {}

    bool is_leaf() const noexcept { return !std::holds_alternative<Sequence>(kind); }
    const Sequence* sequence() const { return std::get_if<Sequence>(&kind); }
    const Grasp* grasp() const { return std::get_if<Grasp>(&kind); }
    const ExecTrajectory* trajectory() const { return std::get_if<ExecTrajectory>(&kind); }
    Sequence* sequence() { return std::get_if<Sequence>(&kind); }
    ExecTrajectory* trajectory() { return std::get_if<ExecTrajectory>(&kind); }

    friend bool operator==(const Node&, const Node&) = default;
};

struct BehaviorTree {
    Variant variant = Variant::executable;
    Node root;

    friend bool operator==(const BehaviorTree&, const BehaviorTree&) = default;
};

/// Child-index path of a node, "/" for the root and e.g. "/1" for its second child.
inline std::string child_path(const std::string& parent, std::size_t index) {
    return (parent == "/" ? std::string("/") : parent + "/") + std::to_string(index);
}

/// Visits every node depth-first with its path.
template <typename Visitor>
void for_each_node(const Node& node, Visitor&& visit, const std::string& path = "/") {
    visit(node, path);
    if (const auto* seq = node.sequence())
        for (std::size_t i = 0; i < seq->children.size(); ++i) for_each_node(seq->children[i], visit, child_path(path, i));
}

template <typename Visitor>
void for_each_node(Node& node, Visitor&& visit, const std::string& path = "/") {
    visit(node, path);
    if (auto* seq = node.sequence())
        for (std::size_t i = 0; i < seq->children.size(); ++i) for_each_node(seq->children[i], visit, child_path(path, i));
}

/// Throws ValidationError / VariantError if a structural invariant fails.
inline void validate(const BehaviorTree& tree) {
    if (!tree.root.sequence()) throw ValidationError("behavior tree root must be a Sequence");
    for_each_node(tree.root, [&](const Node& node, const std::string& path) {
        if (const auto* seq = node.sequence()) {
            if (seq->children.empty()) throw ValidationError("empty Sequence at " + path);
        } else if (const auto* exec = node.trajectory()) {
            if (exec->targets.empty()) throw ValidationError("ExecTrajectory at " + path + " has no target poses");
            for (std::size_t i = 0; i < exec->targets.size(); ++i) {
                const auto& t = exec->targets[i];
                if (t.index != static_cast<int>(i))
                    throw ValidationError("ExecTrajectory at " + path + ": target-pose indices are not consecutive from 0");
                if (!(t.duration > 0.0) || !std::isfinite(t.duration))
                    throw ValidationError("ExecTrajectory at " + path + ": target pose " + std::to_string(i) +
                                          " has non-positive duration");
                if (t.is_semantic() != (tree.variant == Variant::semantic))
                    throw VariantError(std::string("target pose ") + std::to_string(i) + " at " + path +
                                       " does not match the " + std::string(to_string(tree.variant)) + " variant");
            }
        }
    });
}

/// Leaves in depth-first order.
inline std::vector<const Node*> leaves(const BehaviorTree& tree) {
    std::vector<const Node*> out;
    for_each_node(tree.root, [&](const Node& n, const std::string&) {
        if (n.is_leaf()) out.push_back(&n);
    });
    return out;
}

} // namespace demoplan::bt
