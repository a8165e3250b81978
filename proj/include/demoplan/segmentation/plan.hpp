#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "demoplan/btree/tree.hpp"
#include "demoplan/core/demonstration.hpp"
#include "demoplan/segmentation/key_instants.hpp"
#include "demoplan/segmentation/mi_series.hpp"

namespace demoplan::segmentation {

struct PlanConfig {
    WindowConfig window;
    double approach_threshold = 0.15; ///< d_th, meters
    double lift_height = 0.10;        ///< TP_0 offset along world z, meters
    double lift_duration = bt::kDefaultDuration;
    double min_duration = 0.1;        ///< seconds
};

struct GeneratedPlan {
    bt::BehaviorTree tree;
    MISeries series;
    FrameInterval interaction;
    KeyInstant approach;
    std::vector<KeyInstant> minima;
    std::vector<FrameInterval> all_interactions;
};

namespace detail {

inline double interval_mass(const MISeries& s, const FrameInterval& iv) {
    return std::accumulate(s.smoothed.begin() + static_cast<std::ptrdiff_t>(iv.first_entry),
                           s.smoothed.begin() + static_cast<std::ptrdiff_t>(iv.last_entry) + 1, 0.0);
}

} // namespace detail

/// Segments the demonstration and builds the executable plan
///   Sequence[Grasp(close), ExecTrajectory[TP_0, TP_1, TP_2..TP_n], Grasp(open)]
/// where TP_0 lifts the object from its grasp pose, TP_1 is the approach pose
/// and TP_2.. are the MI minima after the approach. Without minima the pose at
/// release closes the trajectory instead.
inline GeneratedPlan generate_plan(const Demonstration& demo, const PlanConfig& cfg = {}) {
    if (demo.hand.empty()) throw Error("nothing demonstrated: the recording has no samples");
    demo.validate();
    const auto& om = demo.manipulated_trajectory();
    const auto& obkg = demo.background_trajectory();

    GeneratedPlan plan;
    plan.series = mi_series(demo.hand, om, cfg.window);
    plan.all_interactions = detect_interaction(plan.series, cfg.window);
    if (plan.all_interactions.empty())
        throw Error("nothing demonstrated: the hand never interacts with '" + demo.manipulated + "'");
    plan.interaction = *std::max_element(
        plan.all_interactions.begin(), plan.all_interactions.end(), [&](const FrameInterval& a, const FrameInterval& b) {
            return detail::interval_mass(plan.series, a) < detail::interval_mass(plan.series, b);
        });

    const auto grasp_frame = plan.interaction.first;
    const auto release_frame = plan.interaction.last;
    plan.approach = detect_approach_instant(om, obkg, cfg.window, cfg.approach_threshold, grasp_frame);

    const auto minima = detect_key_instants(plan.series, plan.interaction, cfg.window, om, obkg);
    for (const auto& m : minima)
        if (m.frame > plan.approach.frame) plan.minima.push_back(m);
    if (!minima.empty() && plan.minima.empty())
        throw Error("approach instant at frame " + std::to_string(plan.approach.frame) +
                    " comes after the last MI minimum at frame " + std::to_string(minima.back().frame));

    const auto time_at = [&](std::int64_t frame) { return om[om.index_of(frame)].time(); };
    const auto duration = [&](double dt) { return std::max(cfg.min_duration, dt); };

    const auto& grasp_world = om[om.index_of(grasp_frame)].pose();
    const RigidTransform lifted = grasp_world.with_translation(grasp_world.translation() + Vec3(0.0, 0.0, cfg.lift_height));
    const RigidTransform lift_tp = relative_pose(lifted, obkg[obkg.index_of(grasp_frame)].pose());

    bt::ExecTrajectory exec;
    exec.stiffness = bt::Stiffness::medium;
    auto append = [&](const RigidTransform& tp, double seconds) {
        exec.targets.push_back({static_cast<int>(exec.targets.size()), bt::NumericPose::from(tp), seconds});
    };
    append(lift_tp, cfg.lift_duration);
    append(plan.approach.tp, duration(time_at(plan.approach.frame) - time_at(grasp_frame)));
    std::int64_t previous = plan.approach.frame;
    for (const auto& m : plan.minima) {
        append(m.tp, duration(time_at(m.frame) - time_at(previous)));
        previous = m.frame;
    }
    if (plan.minima.empty() && release_frame > plan.approach.frame)
        append(target_pose_at(om, obkg, release_frame), duration(time_at(release_frame) - time_at(previous)));

    bt::Sequence root;
    root.children.emplace_back(bt::Grasp{bt::GraspAction::close});
    root.children.emplace_back(std::move(exec));
    root.children.emplace_back(bt::Grasp{bt::GraspAction::open});
    plan.tree = {bt::Variant::executable, bt::Node(std::move(root))};
    bt::validate(plan.tree);
    return plan;
}

} // namespace demoplan::segmentation
