#pragma once

#include "demoplan/harness/fixtures.hpp"
#include "demoplan/harness/scene.hpp"
#include "demoplan/segmentation/plan.hpp"

namespace demoplan::harness {

/// Fixture, segmentation settings and execution scene of one scripted scenario.
struct ScenarioSetup {
    Fixture fixture;
    segmentation::PlanConfig plan;
    Scene scene;
};

inline constexpr std::uint64_t kScenarioSeed = 1;
inline constexpr double kScenarioNoise = 0.002;

inline ScenarioSetup scenario_setup(FixtureKind kind) {
    FixtureParams params;
    params.noise_sigma = kind == FixtureKind::pick_and_place ? 0.0 : kScenarioNoise;
    ScenarioSetup s{generate_fixture(kind, params, kScenarioSeed), {}, fixture_scene(kind)};
    if (kind == FixtureKind::zigzag_cleaning) s.plan.approach_threshold = 0.25;
    return s;
}

} // namespace demoplan::harness
