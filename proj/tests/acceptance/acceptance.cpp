// Acceptance checks, one line per criterion:
//   acceptance            run all criteria
//   acceptance --only N   run criterion N (exit status reflects it)
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <unistd.h>

#include "demoplan/btree/repair.hpp"
#include "demoplan/harness/scenarios.hpp"
#include "demoplan/harness/simulate.hpp"
#include "demoplan/refiner/session.hpp"
#include "demoplan/segmentation/plan.hpp"
#include "demoplan/semcodec/codec.hpp"
#include "demoplan/service/api.hpp"
#include "support/oracles.hpp"

using namespace demoplan;
namespace fs = std::filesystem;

namespace {

// ---- pinned tolerances ----------------------------------------------------------

constexpr int kMiWindows = 1000;
constexpr double kMiTolerance = 1e-9;
constexpr double kMiRuntime = 10.0;

constexpr int kIndependentPairs = 100;
constexpr double kIndependentMeanMax = 0.15;

constexpr double kIntervalTolerance = 2.0;
constexpr double kReversalTolerance = 3.0;
constexpr int kZigzagSeeds = 20;
constexpr double kZigzagSuccessRate = 0.90;
constexpr double kSegmentationRuntime = 30.0;

constexpr int kApproachSeeds = 50;
constexpr double kApproachThreshold = 0.1;

constexpr double kCodecRuntime = 5.0;

constexpr double kSpoutClearance = 0.15;
constexpr double kContactRatioMin = 0.95;
constexpr double kTrayHeight = 0.04;
constexpr double kTrayZTolerance = 0.005;

constexpr int kTickMaxLeaves = 4;
constexpr int kTickMaxDepth = 3;

const fs::path kData = DEMOPLAN_TEST_DATA;

struct Outcome {
    bool passed = true;
    std::string detail;
};

/// Collects failed conditions; the first few are reported.
class Checker {
public:
    void expect(bool ok, const std::string& what) {
        if (ok) return;
        ++failures_;
        if (failures_ <= 3) messages_ += (messages_.empty() ? "" : "; ") + what;
    }
    Outcome outcome(const std::string& summary) const {
        if (failures_ == 0) return {true, summary};
        return {false, summary + "; " + std::to_string(failures_) + " failed check(s): " + messages_};
    }

private:
    int failures_ = 0;
    std::string messages_;
};

std::string fmt(double v, int precision = 4) {
    std::ostringstream s;
    s << std::setprecision(precision) << v;
    return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

const std::vector<bt::TargetEntry>& targets(const bt::BehaviorTree& tree) {
    return tree.root.sequence()->children[1].trajectory()->targets;
}

std::string read(const fs::path& p) { return refiner::detail::read_file(p); }

// ---- 1 ------------------------------------------------------------------------

Outcome mi_oracle_equivalence() {
    Checker c;
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> length(8, 64), bins(2, 16);
    double worst = 0.0;
    for (int i = 0; i < kMiWindows; ++i) {
        const auto n = static_cast<std::size_t>(length(rng));
        const int b = bins(rng);
        auto x = oracle::uniform_series(rng, n);
        auto y = oracle::uniform_series(rng, n);
        if (i % 3 == 0)
            for (std::size_t k = 0; k < n; ++k) y[k] = 0.6 * x[k] + 0.4 * y[k];
        const double mi = segmentation::mutual_information(x, y, b);
        worst = std::max(worst, std::abs(mi - oracle::dense_mi(x, y, b)));
        c.expect(mi == segmentation::mutual_information(y, x, b), "asymmetric at window " + std::to_string(i));
        c.expect(mi >= 0.0, "negative at window " + std::to_string(i));
    }
    const double elapsed = seconds_since(start);
    c.expect(worst <= kMiTolerance, "max deviation " + fmt(worst) + " bits");
    c.expect(elapsed < kMiRuntime, "took " + fmt(elapsed) + " s");
    return c.outcome(std::to_string(kMiWindows) + " windows, max |MI - oracle| = " + fmt(worst, 3) + " bits, " +
                     fmt(elapsed, 3) + " s");
}

// ---- 2 ------------------------------------------------------------------------

Outcome independence_and_identity() {
    Checker c;
    const int w = 31, bins = 8;
    double plug_in_sum = 0.0, corrected_sum = 0.0;
    std::size_t windows = 0;
    for (int seed = 0; seed < kIndependentPairs; ++seed) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
        const auto x = oracle::uniform_series(rng, 100);
        const auto y = oracle::uniform_series(rng, 100);
        for (std::size_t j = 0; j + w <= x.size(); ++j) {
            const std::span<const double> xs(x.data() + j, w), ys(y.data() + j, w);
            plug_in_sum += segmentation::mutual_information(xs, ys, bins);
            const auto ci = segmentation::mutual_information_with_baseline(xs, ys, bins);
            corrected_sum += std::max(0.0, ci.plug_in - ci.expected);
            ++windows;
        }
    }
    const double mean = plug_in_sum / static_cast<double>(windows);
    const double corrected = corrected_sum / static_cast<double>(windows);
    c.expect(mean <= kIndependentMeanMax, "mean plug-in MI " + fmt(mean) + " bits exceeds " + fmt(kIndependentMeanMax));

    std::mt19937_64 rng(99);
    int exact = 0;
    for (int i = 0; i < 100; ++i) {
        const auto x = oracle::uniform_series(rng, 100);
        exact += segmentation::mutual_information(x, x, bins) == segmentation::entropy(x, bins);
    }
    c.expect(exact == 100, "MI(X:X) != H(X) on " + std::to_string(100 - exact) + " series");
    return c.outcome("mean plug-in MI " + fmt(mean) + " bits over " + std::to_string(windows) +
                     " windows (chance-corrected " + fmt(corrected, 3) + ", informational); MI(X:X)=H(X) on " +
                     std::to_string(exact) + "/100");
}

// ---- 3 ------------------------------------------------------------------------

Outcome segmentation_recovery() {
    Checker c;
    const auto start = std::chrono::steady_clock::now();
    segmentation::WindowConfig cfg;

    const auto pnp = harness::generate_fixture(harness::FixtureKind::pick_and_place);
    const auto& cup = pnp.demo.object("cup");
    const auto series = segmentation::mi_series(pnp.demo.hand, cup, cfg);
    const auto intervals = segmentation::detect_interaction(series, cfg);
    c.expect(intervals.size() == 1, "pick and place gave " + std::to_string(intervals.size()) + " intervals");
    if (intervals.size() == 1) {
        const auto& iv = intervals[0];
        c.expect(std::abs(static_cast<double>(iv.first - pnp.grasp_frame)) <= kIntervalTolerance, "grasp frame off");
        c.expect(std::abs(static_cast<double>(iv.last - pnp.release_frame)) <= kIntervalTolerance, "release frame off");
        c.expect(segmentation::detect_key_instants(series, iv, cfg, cup, pnp.demo.object("plate")).empty(),
                 "pick and place has interior key instants");
    }

    int ok = 0;
    harness::FixtureParams params;
    params.noise_sigma = 0.002;
    for (int seed = 0; seed < kZigzagSeeds; ++seed) {
        const auto fx = harness::generate_fixture(harness::FixtureKind::zigzag_cleaning, params, static_cast<std::uint64_t>(seed));
        const auto& sponge = fx.demo.object("sponge");
        const auto s = segmentation::mi_series(fx.demo.hand, sponge, cfg);
        const auto iv = segmentation::detect_interaction(s, cfg);
        if (iv.size() != 1) continue;
        const auto minima = segmentation::detect_key_instants(s, iv[0], cfg, sponge, fx.demo.object("tray"));
        bool hit = minima.size() == fx.turning_frames.size() && minima.size() == 5;
        for (std::size_t i = 0; hit && i < minima.size(); ++i)
            hit = std::abs(static_cast<double>(minima[i].frame - fx.turning_frames[i])) <= kReversalTolerance;
        ok += hit;
    }
    const double rate = static_cast<double>(ok) / kZigzagSeeds;
    const double elapsed = seconds_since(start);
    c.expect(rate >= kZigzagSuccessRate, "zigzag success " + fmt(rate));
    c.expect(elapsed < kSegmentationRuntime, "took " + fmt(elapsed) + " s");
    return c.outcome("pick and place interval " +
                     (intervals.empty() ? std::string("none")
                                        : std::to_string(intervals[0].first) + ".." + std::to_string(intervals[0].last)) +
                     " (truth " + std::to_string(pnp.grasp_frame) + ".." + std::to_string(pnp.release_frame) +
                     "); zigzag " + std::to_string(ok) + "/" + std::to_string(kZigzagSeeds) + " seeds; " + fmt(elapsed, 3) + " s");
}

// ---- 4 ------------------------------------------------------------------------

Outcome approach_instant() {
    Checker c;
    segmentation::WindowConfig cfg;
    int exact = 0;
    for (int seed = 0; seed < kApproachSeeds; ++seed) {
        const auto demo = harness::linear_approach(static_cast<std::uint64_t>(seed), 100, 0.5, 0.01);
        const auto& om = demo.object("object");
        const auto& bkg = demo.object("target");
        const auto expected = oracle::approach_frame(om, bkg, cfg.window_length, kApproachThreshold);
        std::int64_t got = -2;
        try {
            got = segmentation::detect_approach_instant(om, bkg, cfg, kApproachThreshold).frame;
        } catch (const Error&) {
        }
        exact += got == expected && expected >= 0;
        c.expect(got == expected, "seed " + std::to_string(seed) + ": got " + std::to_string(got) + ", oracle " + std::to_string(expected));
    }
    return c.outcome(std::to_string(exact) + "/" + std::to_string(kApproachSeeds) + " seeds match the windowed-mean oracle");
}

// ---- 5 ------------------------------------------------------------------------

Outcome codec_grid() {
    using namespace semcodec;
    Checker c;
    const auto tray = harness::tray_model();
    CodecConfig cfg;
    c.expect(cfg.z_th == 0.01 && cfg.z_above == 0.15 && cfg.z_below == -0.15 && cfg.eps_z == 0.0, "codec defaults changed");
    const auto start = std::chrono::steady_clock::now();
    int cases = 0, identical = 0;
    for (const auto& label : tray.labels())
        for (auto v : {Vertical::above, Vertical::touching, Vertical::below})
            for (auto axis : {RotationAxis::side_bending, RotationAxis::tilting, RotationAxis::turning})
                for (int angle : kSnapAngles) {
                    const SemanticTargetPose t{label, v, axis, angle};
                    bt::ExecTrajectory exec;
                    exec.targets.push_back({0, t, 1.0});
                    bt::Sequence root;
                    root.children = {bt::Grasp{bt::GraspAction::close}, std::move(exec), bt::Grasp{bt::GraspAction::open}};
                    const bt::BehaviorTree sem{bt::Variant::semantic, bt::Node(std::move(root))};
                    const auto back = encode_plan(decode_plan(sem, tray, cfg).tree, tray, cfg);
                    const bool same = targets(back.tree)[0].semantic() == canonical(t);
                    identical += same;
                    c.expect(same, format_desc(t));
                    ++cases;
                }
    const double elapsed = seconds_since(start);
    c.expect(cases == 648, std::to_string(cases) + " cases");
    c.expect(elapsed < kCodecRuntime, "took " + fmt(elapsed) + " s");
    return c.outcome(std::to_string(identical) + "/" + std::to_string(cases) + " triplets round-trip, " + fmt(elapsed, 3) + " s");
}

// ---- 6 ------------------------------------------------------------------------

Outcome numeric_round_trip() {
    Checker c;
    int plans = 0;
    for (auto kind : {harness::FixtureKind::pick_and_place, harness::FixtureKind::pouring, harness::FixtureKind::zigzag_cleaning})
        for (std::uint64_t seed : {0, 1, 2, 3, 4}) {
            harness::FixtureParams params;
            params.noise_sigma = kind == harness::FixtureKind::pick_and_place ? 0.0 : 0.002;
            const auto fx = harness::generate_fixture(kind, params, seed);
            segmentation::PlanConfig cfg;
            if (kind == harness::FixtureKind::zigzag_cleaning) cfg.approach_threshold = 0.25;
            const auto exe = segmentation::generate_plan(fx.demo, cfg).tree;
            const auto& model = fx.demo.model(fx.demo.background);
            const auto enc = semcodec::encode_plan(exe, model);
            const auto dec = semcodec::decode_plan(enc.tree, model, {}, enc.sidecar);
            c.expect(dec.tree == exe, std::string(harness::to_string(kind)) + " seed " + std::to_string(seed));
            ++plans;
        }
    return c.outcome(std::to_string(plans) + " fixture plans decode(encode(exeBT_0)) == exeBT_0 bit-exactly");
}

// ---- 7, 8 ---------------------------------------------------------------------

struct Scenario {
    harness::ScenarioSetup setup;
    bt::BehaviorTree exe0;
    refiner::RefinementSession session;
    refiner::ScriptedBackend mock;
};

Scenario open_scenario(harness::FixtureKind kind, const std::string& script) {
    auto setup = harness::scenario_setup(kind);
    auto exe0 = segmentation::generate_plan(setup.fixture.demo, setup.plan).tree;
    auto session = refiner::RefinementSession::from_plan(exe0, setup.fixture.demo.model(setup.fixture.demo.background),
                                                         refiner::load_guidelines());
    return {std::move(setup), std::move(exe0), std::move(session),
            refiner::ScriptedBackend::load(kData / "scenarios" / script)};
}

harness::TraceReport run(const bt::BehaviorTree& exe, const harness::Scene& scene, const std::vector<harness::Check>& checks,
                         const std::string& surface = {}) {
    harness::SimulationConfig cfg;
    cfg.contact_surface = surface;
    return harness::check_trace(harness::simulate(harness::plan_waypoints(exe, scene), scene, cfg), checks);
}

Outcome golden_pouring() {
    using namespace semcodec;
    Checker c;
    auto s = open_scenario(harness::FixtureKind::pouring, "pouring/script.json");
    const std::vector<harness::Check> no_collision{harness::NoCollision{}};
    const bool collided_before = !run(s.exe0, s.setup.scene, no_collision).passed();
    c.expect(collided_before, "uncorrected plan does not collide");

    s.session.refine("You are touching the glass while pouring, keep the jug away from it", s.mock);
    s.session.refine("After pouring go back to the starting orientation", s.mock);
    const auto& sem = targets(s.session.current().tree);
    c.expect(sem.size() == 5, "expected 5 entries after two refinements");
    double spout_error = -1.0;
    bool collides_after = true;
    if (sem.size() == 5) {
        c.expect(sem[2].semantic().vertical == Vertical::above, "TP_2 is not above");
        c.expect(sem[4].semantic().ip_label == sem[1].semantic().ip_label && sem[4].semantic().vertical == sem[1].semantic().vertical,
                 "TP_4 label differs from TP_1");
        const auto fin = s.session.finalize();
        const auto& exe = targets(fin.tree);
        c.expect((exe[4].transform().rotation() - exe[1].transform().rotation()).cwiseAbs().maxCoeff() < 1e-9,
                 "TP_4 orientation differs from TP_1");
        const Vec3 rim = harness::glass_model().find("right rim")->offset;
        spout_error = (exe[2].transform().translation() - Vec3(rim.x(), rim.y(), rim.z() + kSpoutClearance)).cwiseAbs().maxCoeff();
        c.expect(spout_error == 0.0, "spout misplaced by " + fmt(spout_error));
        collides_after = !run(fin.tree, s.setup.scene, no_collision).passed();
        c.expect(!collides_after, "corrected plan collides");
    }

    const int tilt_before = sem.size() > 3 ? sem[3].semantic().angle : 0;
    s.session.refine("Pour less water", s.mock);
    const auto fin3 = s.session.finalize();
    const auto& exe3 = targets(fin3.tree);
    const auto tilt = dominant_rotation(exe3[2].transform(), exe3[3].transform());
    c.expect(tilt.axis == RotationAxis::tilting, "third refinement changed the rotation axis");
    c.expect(std::abs(tilt.angle) < std::abs(tilt_before), "tilt magnitude not reduced");
    c.expect(is_snapped(tilt.angle), "decoded tilt is off the grid");
    return c.outcome(std::string("collision before ") + (collided_before ? "yes" : "no") + ", after " +
                     (collides_after ? "yes" : "no") + "; spout z error " + fmt(spout_error) + " m; tilt " +
                     std::to_string(tilt_before) + " -> " + std::to_string(tilt.angle));
}

Outcome golden_cleaning() {
    Checker c;
    auto s = open_scenario(harness::FixtureKind::zigzag_cleaning, "cleaning/script.json");
    const auto& v1 = s.session.refine("This task is cleaning a tray with a sponge", s.mock);
    const auto& exec = *v1.tree.root.sequence()->children[1].trajectory();
    c.expect(exec.stiffness == bt::Stiffness::low, "stiffness not low");
    for (std::size_t i = 2; i < exec.targets.size(); ++i)
        c.expect(exec.targets[i].semantic().vertical == Vertical::touching, "TP_" + std::to_string(i) + " not touching");
    const double npm = s.session.finalize().metadata["stiffness"][0]["newton_per_meter"].get<double>();
    c.expect(npm == 1000.0, "exported " + fmt(npm) + " N/m");
    const std::size_t before = exec.targets.size();

    s.session.refine("Continue the zigzag to cover the whole tray", s.mock);
    const auto fin = s.session.finalize();
    const auto count = targets(fin.tree).size();
    c.expect(count == before + 3, "second refinement gave " + std::to_string(count) + " entries");
    const auto report = run(fin.tree, s.setup.scene,
                            {harness::ContactRatio{kContactRatioMin, 2, std::nullopt},
                             harness::MaxZError{kTrayHeight, kTrayZTolerance, 2, std::nullopt}},
                            "tray");
    c.expect(report.passed(), "simulation checks failed");
    return c.outcome(fmt(npm) + " N/m; " + std::to_string(before) + " -> " + std::to_string(count) +
                     " entries; contact ratio " + fmt(report.results[0].value) + ", max |z - 0.04| " + fmt(report.results[1].value) + " m");
}

// ---- 9 ------------------------------------------------------------------------

Outcome repair_suite() {
    Checker c;
    int repaired = 0, rejected = 0;
    std::vector<fs::path> files;
    for (const auto& f : fs::directory_iterator(kData / "repair")) files.push_back(f.path());
    std::sort(files.begin(), files.end());
    auto s = open_scenario(harness::FixtureKind::pouring, "pouring/script.json");
    for (const auto& path : files) {
        const auto name = path.filename().string();
        const auto raw = read(path);
        if (name.rfind("irreparable", 0) == 0) {
            const auto before = s.session.to_json();
            bool threw = false;
            try {
                s.session.accept("irreparable", raw);
            } catch (const bt::RepairError&) {
                threw = true;
            }
            c.expect(threw, name + " accepted");
            c.expect(s.session.to_json() == before, name + " changed the history");
            rejected += threw;
            continue;
        }
        try {
            const auto r = bt::validate_and_repair(raw, bt::Variant::semantic);
            bt::validate(r.tree);
            const auto again = bt::validate_and_repair(bt::to_xml(r.tree), bt::Variant::semantic);
            c.expect(again.tree == r.tree && again.log.empty(), name + " repair not idempotent");
            ++repaired;
        } catch (const std::exception& e) {
            c.expect(false, name + ": " + e.what());
        }
    }
    c.expect(repaired == 20, std::to_string(repaired) + " repairable fixtures");
    c.expect(rejected == 3, std::to_string(rejected) + " irreparable fixtures rejected");
    return c.outcome(std::to_string(repaired) + "/20 repaired and idempotent, " + std::to_string(rejected) +
                     "/3 irreparable rejected without history change");
}

// ---- 10 -----------------------------------------------------------------------

class GatedBackend : public refiner::LLMBackend {
public:
    explicit GatedBackend(std::shared_ptr<refiner::LLMBackend> inner) : inner_(std::move(inner)) {}
    std::string complete(const refiner::Prompt& p) override {
        std::unique_lock lock(m_);
        cv_.wait(lock, [&] { return open_; });
        return inner_->complete(p);
    }
    std::string name() const override { return "gated"; }
    void release() {
        {
            std::lock_guard lock(m_);
            open_ = true;
        }
        cv_.notify_all();
    }

private:
    std::shared_ptr<refiner::LLMBackend> inner_;
    std::mutex m_;
    std::condition_variable cv_;
    bool open_ = false;
};

Outcome session_semantics() {
    Checker c;
    // restore after refine gives back the same lineage
    auto s = open_scenario(harness::FixtureKind::pouring, "pouring/script.json");
    int identities = 0;
    for (const char* request : {"stop touching the glass", "go back to the start", "pour less"}) {
        const auto lineage = s.session.versions();
        s.session.refine(request, s.mock);
        s.session.restore();
        const bool same = s.session.versions() == lineage;
        c.expect(same, std::string("restore after \"") + request + "\" differs");
        identities += same;
        s.session.refine(request, s.mock);
    }

    const auto tmp = fs::temp_directory_path() / ("demoplan_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(tmp);
    const service::Clock clock = [] { return std::string("2026-01-01T00:00:00Z"); };
    const auto script = "mock:" + (kData / "scenarios" / "cleaning" / "script.json").string();
    const auto demo = serialize_demonstration(harness::scenario_setup(harness::FixtureKind::zigzag_cleaning).fixture.demo);
    const auto log = tmp / "requests.jsonl";
    std::string first_state;
    {
        service::Api api(std::make_shared<service::SessionStore>(tmp / "a", clock), refiner::make_backend(script));
        api.record_requests(log);
        const auto d = api.handle("POST", "/demonstrations", demo).body["demonstration_id"];
        nlohmann::json plan{{"demonstration_id", d}, {"config", {{"approach_threshold", 0.25}}}};
        api.handle("POST", "/plans", plan.dump());
        api.handle("POST", "/sessions/session-0001/refine", R"({"request": "This task is cleaning a tray", "async": true})");
        api.wait_idle("session-0001");
        api.handle("POST", "/sessions/session-0001/refine", R"({"request": "Clean the whole tray"})");
        api.handle("POST", "/sessions/session-0001/rate", R"({"version": 2, "rating": "satisfied"})");
        api.handle("POST", "/sessions/session-0001/restore", "");
        api.handle("POST", "/sessions/session-0001/refine", R"({"request": "continue"})");
        first_state = read(tmp / "a" / "sessions" / "session-0001" / "session.json");
    }
    bool replay_identical = false;
    {
        service::Api api(std::make_shared<service::SessionStore>(tmp / "b", clock), refiner::make_backend(script));
        service::replay_request_log(api, log);
        replay_identical = read(tmp / "b" / "sessions" / "session-0001" / "session.json") == first_state;
        c.expect(replay_identical, "replayed store differs");
    }

    int conflict = 0;
    {
        auto gate = std::make_shared<GatedBackend>(refiner::make_backend(script));
        service::Api api(std::make_shared<service::SessionStore>(tmp / "c", clock), gate);
        const auto d = api.handle("POST", "/demonstrations", demo).body["demonstration_id"];
        api.handle("POST", "/plans", nlohmann::json{{"demonstration_id", d}, {"config", {{"approach_threshold", 0.25}}}}.dump());
        const auto pending = api.handle("POST", "/sessions/session-0001/refine", R"({"request": "clean the tray", "async": true})");
        conflict = api.handle("POST", "/sessions/session-0001/refine", R"({"request": "clean the tray"})").status;
        c.expect(pending.status == 202, "async refine returned " + std::to_string(pending.status));
        c.expect(conflict == 409, "refine during refine returned " + std::to_string(conflict));
        gate->release();
        api.wait_idle("session-0001");
    }
    fs::remove_all(tmp);
    return c.outcome(std::to_string(identities) + "/3 restore-after-refine identities; replay " +
                     (replay_identical ? "bit-identical" : "differs") + "; refine during refine -> " + std::to_string(conflict));
}

// ---- 11 -----------------------------------------------------------------------

Outcome tick_semantics() {
    Checker c;
    const auto sweep = oracle::sweep_tick_semantics(kTickMaxLeaves, kTickMaxDepth);
    c.expect(sweep.mismatches == 0, std::to_string(sweep.mismatches) + " mismatching cases");
    return c.outcome(std::to_string(sweep.trees) + " trees, " + std::to_string(sweep.cases) + " two-tick cases, " +
                     std::to_string(sweep.mismatches) + " mismatches");
}

struct Criterion {
    int number;
    const char* title;
    std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria{
        {1, "MI oracle equivalence", mi_oracle_equivalence},
        {2, "independence and identity behavior", independence_and_identity},
        {3, "segmentation recovery", segmentation_recovery},
        {4, "approach instant", approach_instant},
        {5, "codec exhaustive round trip", codec_grid},
        {6, "numeric round trip", numeric_round_trip},
        {7, "golden pouring scenario", golden_pouring},
        {8, "golden cleaning scenario", golden_cleaning},
        {9, "repair suite", repair_suite},
        {10, "session semantics", session_semantics},
        {11, "tick semantics", tick_semantics},
    };
    int only = 0;
    for (int i = 1; i < argc; ++i)
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);

    int failed = 0;
    for (const auto& criterion : criteria) {
        if (only && criterion.number != only) continue;
        Outcome o;
        try {
            o = criterion.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += !o.passed;
        std::cout << (o.passed ? "PASS" : "FAIL") << "  criterion " << std::setw(2) << criterion.number << "  "
                  << criterion.title << ": " << o.detail << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
