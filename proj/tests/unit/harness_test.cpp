#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "demoplan/core/recording.hpp"
#include "demoplan/harness/scenarios.hpp"
#include "demoplan/harness/simulate.hpp"
#include "demoplan/semcodec/codec.hpp"

using namespace demoplan;
using namespace demoplan::harness;

namespace {

RigidTransform random_pose(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Quaternion q(u(rng), u(rng), u(rng), u(rng));
    q.normalize();
    return RigidTransform::from_quaternion(q, Vec3(u(rng), u(rng), u(rng)));
}

bt::BehaviorTree plan_of(FixtureKind kind) {
    const auto s = scenario_setup(kind);
    return segmentation::generate_plan(s.fixture.demo, s.plan).tree;
}

std::vector<bt::TargetEntry>& targets(bt::BehaviorTree& tree) { return tree.root.sequence()->children[1].trajectory()->targets; }

} // namespace

TEST(PlanWaypoints, IdentityPlacementKeepsTargets) {
    const auto tree = plan_of(FixtureKind::pouring);
    Scene scene;
    scene.reference = "glass";
    scene.objects["glass"] = RigidTransform{};
    const auto plan = plan_waypoints(tree, scene);
    const auto& t = tree.root.sequence()->children[1].trajectory()->targets;
    ASSERT_EQ(plan.waypoints.size(), t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        EXPECT_EQ(plan.waypoints[i].pose, t[i].transform());
        EXPECT_EQ(plan.waypoints[i].duration, t[i].duration);
    }
    ASSERT_EQ(plan.gripper.size(), 2u);
    EXPECT_EQ(plan.gripper[0].before_waypoint, 0u);
    EXPECT_EQ(plan.gripper[0].action, bt::GraspAction::close);
    EXPECT_EQ(plan.gripper[1].before_waypoint, t.size());
}

TEST(PlanWaypoints, TranslatedLayoutTranslatesWaypoints) {
    const auto tree = plan_of(FixtureKind::pick_and_place);
    const auto scene = fixture_scene(FixtureKind::pick_and_place);
    const auto base = plan_waypoints(tree, scene);
    const auto shifted = plan_waypoints(tree, moved(scene, {0.3, 0.2, 0.0}));
    for (std::size_t i = 0; i < base.waypoints.size(); ++i) {
        EXPECT_EQ(shifted.waypoints[i].pose.rotation(), base.waypoints[i].pose.rotation());
        EXPECT_LT((shifted.waypoints[i].pose.translation() - base.waypoints[i].pose.translation() - Vec3(0.3, 0.2, 0.0)).norm(), 1e-15);
    }
}

TEST(PlanWaypoints, RelativePosesSurviveRandomLayouts) {
    const auto tree = plan_of(FixtureKind::zigzag_cleaning);
    const auto& t = tree.root.sequence()->children[1].trajectory()->targets;
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        Scene scene;
        scene.reference = "tray";
        scene.objects["tray"] = random_pose(rng);
        const auto plan = plan_waypoints(tree, scene);
        for (std::size_t i = 0; i < t.size(); ++i)
            EXPECT_TRUE(approx_equal(relative_pose(plan.waypoints[i].pose, scene.objects["tray"]), t[i].transform(), 1e-9));
    }
}

TEST(PlanWaypoints, MissingReferenceObject) {
    Scene scene;
    scene.reference = "glass";
    EXPECT_THROW(plan_waypoints(plan_of(FixtureKind::pouring), scene), ValidationError);
}

TEST(Simulate, SingleWaypointIsConstant) {
    WaypointPlan plan;
    plan.waypoints.push_back({RigidTransform::from_translation({0.1, 0.2, 0.3}), 2.0, "/1", 0});
    const auto trace = simulate(plan, fixture_scene(FixtureKind::pouring));
    ASSERT_FALSE(trace.samples.empty());
    for (const auto& s : trace.samples) EXPECT_EQ(s.pose, plan.waypoints[0].pose);
}

TEST(Simulate, EndpointsAreExactWaypoints) {
    const auto scene = fixture_scene(FixtureKind::pouring);
    const auto plan = plan_waypoints(plan_of(FixtureKind::pouring), scene);
    for (double dt : {0.01, 0.007, 0.3}) {
        SimulationConfig cfg;
        cfg.timestep = dt;
        const auto trace = simulate(plan, scene, cfg);
        EXPECT_EQ(trace.samples.front().pose, plan.waypoints.front().pose);
        EXPECT_EQ(trace.samples.back().pose, plan.waypoints.back().pose);
        EXPECT_DOUBLE_EQ(trace.samples.back().time, trace.arrival.back());
        for (std::size_t i = 1; i < trace.samples.size(); ++i) EXPECT_LT(trace.samples[i - 1].time, trace.samples[i].time);
    }
}

TEST(Simulate, SegmentMidpointsAreRotations) {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 200; ++i) {
        const auto mid = interpolate(random_pose(rng), random_pose(rng), 0.5);
        EXPECT_NEAR(mid.rotation().determinant(), 1.0, 1e-9);
        EXPECT_LT((mid.rotation().transpose() * mid.rotation() - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(Simulate, UncorrectedPouringHitsTheGlass) {
    const auto scene = fixture_scene(FixtureKind::pouring);
    const auto trace = simulate(plan_waypoints(plan_of(FixtureKind::pouring), scene), scene);
    const auto report = check_trace(trace, {NoCollision{}});
    EXPECT_FALSE(report.passed());
    ASSERT_TRUE(report.results[0].counterexample.has_value());
    EXPECT_TRUE(scene.boxes.at("glass").contains_strictly(trace.samples[*report.results[0].counterexample].pose.translation()));
}

TEST(Simulate, CleaningContactDependsOnTouchingLabels) {
    const auto setup = scenario_setup(FixtureKind::zigzag_cleaning);
    const auto exe = segmentation::generate_plan(setup.fixture.demo, setup.plan).tree;
    SimulationConfig cfg;
    cfg.contact_surface = "tray";
    const std::vector<Check> checks{ContactRatio{0.95, 2, std::nullopt}, MaxZError{0.04, 0.005, 2, std::nullopt}};

    const auto raw = check_trace(simulate(plan_waypoints(exe, setup.scene), setup.scene, cfg), checks);
    EXPECT_FALSE(raw.results[0].passed);
    EXPECT_TRUE(raw.results[0].counterexample.has_value());

    const auto tray = setup.fixture.demo.model("tray");
    auto enc = semcodec::encode_plan(exe, tray);
    for (std::size_t i = 2; i < targets(enc.tree).size(); ++i) {
        auto t = targets(enc.tree)[i].semantic();
        t.vertical = Vertical::touching;
        targets(enc.tree)[i].pose = t;
    }
    const auto touching = semcodec::decode_plan(enc.tree, tray, {}, enc.sidecar).tree;
    const auto fixed = check_trace(simulate(plan_waypoints(touching, setup.scene), setup.scene, cfg), checks);
    EXPECT_TRUE(fixed.passed());
    EXPECT_GE(fixed.results[0].value, 0.95);
    EXPECT_LE(fixed.results[1].value, 0.005);
}

TEST(CheckTrace, EmptySpecPasses) {
    const auto report = check_trace(ExecutionTrace{}, {});
    EXPECT_TRUE(report.passed());
    EXPECT_TRUE(report.results.empty());
}

TEST(CheckTrace, ChecksFromJson) {
    const auto checks = checks_from_json(nlohmann::json::parse(
        R"([{"type": "no_collision"}, {"type": "contact_ratio", "min": 0.9, "from_waypoint": 2},
            {"type": "max_z_error", "target": 0.04, "tolerance": 0.004, "from_waypoint": 1, "to_waypoint": 3}])"));
    ASSERT_EQ(checks.size(), 3u);
    EXPECT_EQ(std::get<ContactRatio>(checks[1]).from_waypoint, 2u);
    EXPECT_EQ(std::get<MaxZError>(checks[2]).to_waypoint, std::optional<std::size_t>(3));
    EXPECT_THROW(checks_from_json(nlohmann::json::parse(R"([{"type": "fly"}])")), SchemaError);
}

TEST(Scene, JsonRoundTrip) {
    for (auto kind : {FixtureKind::pick_and_place, FixtureKind::zigzag_cleaning, FixtureKind::pouring}) {
        const auto scene = fixture_scene(kind);
        EXPECT_EQ(scene_from_json(scene_to_json(scene)), scene);
    }
    EXPECT_THROW(scene_from_json(nlohmann::json::parse(R"({"reference": "x", "objects": {}})")), ValidationError);
}

TEST(Simulate, TraceCsvColumns) {
    const auto scene = fixture_scene(FixtureKind::pouring);
    std::ostringstream out;
    write_trace_csv(out, simulate(plan_waypoints(plan_of(FixtureKind::pouring), scene), scene));
    EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "t,x,y,z,qw,qx,qy,qz,contact,collision");
}

TEST(Fixtures, SameSeedIsBitIdentical) {
    FixtureParams params;
    params.noise_sigma = 0.002;
    for (auto kind : {FixtureKind::pick_and_place, FixtureKind::zigzag_cleaning, FixtureKind::pouring}) {
        const auto a = serialize_demonstration(generate_fixture(kind, params, 42).demo);
        EXPECT_EQ(a, serialize_demonstration(generate_fixture(kind, params, 42).demo));
        EXPECT_NE(a, serialize_demonstration(generate_fixture(kind, params, 43).demo));
    }
}

TEST(Fixtures, GroundTruthBookkeeping) {
    EXPECT_EQ(generate_fixture(FixtureKind::zigzag_cleaning).turning_frames.size(), 5u);
    EXPECT_EQ(generate_fixture(FixtureKind::pouring).turning_frames.size(), 2u);
    EXPECT_TRUE(generate_fixture(FixtureKind::pick_and_place).turning_frames.empty());
}

TEST(Fixtures, InvalidParamsRejected) {
    FixtureParams params;
    params.noise_sigma = -1.0;
    EXPECT_THROW(generate_fixture(FixtureKind::pouring, params), ValidationError);
    params = {};
    params.reversal_z_errors = {0.01};
    EXPECT_THROW(generate_fixture(FixtureKind::zigzag_cleaning, params), ValidationError);
}
