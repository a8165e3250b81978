// Refines the zigzag cleaning plan in process and checks the result in the
// kinematic harness.
//   cleaning_in_process <cleaning script.json>
#include <iostream>

#include "demoplan/harness/scenarios.hpp"
#include "demoplan/harness/simulate.hpp"
#include "demoplan/refiner/session.hpp"
#include "demoplan/segmentation/plan.hpp"

using namespace demoplan;

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: cleaning_in_process <script.json>\n";
        return 2;
    }
    const auto setup = harness::scenario_setup(harness::FixtureKind::zigzag_cleaning);
    const auto& demo = setup.fixture.demo;
    const auto plan = segmentation::generate_plan(demo, setup.plan);

    auto session = refiner::RefinementSession::from_plan(plan.tree, demo.model(demo.background), refiner::load_guidelines());
    auto backend = refiner::ScriptedBackend::load(argv[1]);
    std::cout << bt::to_xml(session.current().tree) << "\n";

    for (const char* request : {"This task is cleaning a tray with a sponge", "Continue the zigzag to cover the whole tray"}) {
        const auto& version = session.refine(request, backend);
        std::cout << "> " << request << "\n" << bt::to_xml(version.tree) << "\n";
        for (const auto& line : version.repair_log) std::cout << "  repaired: " << line << "\n";
    }

    const auto final_plan = session.finalize();
    std::cout << final_plan.metadata.dump() << "\n";

    harness::SimulationConfig sim;
    sim.contact_surface = "tray";
    const auto trace = harness::simulate(harness::plan_waypoints(final_plan.tree, setup.scene), setup.scene, sim);
    const auto report = harness::check_trace(trace, {harness::ContactRatio{0.95, 2, std::nullopt},
                                                     harness::MaxZError{0.04, 0.005, 2, std::nullopt}});
    for (const auto& r : report.results)
        std::cout << (r.passed ? "pass " : "fail ") << r.name << " " << r.value << "\n";
    return report.passed() ? 0 : 1;
}
