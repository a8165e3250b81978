#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "demoplan/core/demonstration.hpp"
#include "demoplan/core/errors.hpp"

namespace demoplan::harness {

enum class FixtureKind { pick_and_place, pouring, zigzag_cleaning };

inline std::string_view to_string(FixtureKind k) {
    switch (k) {
    case FixtureKind::pick_and_place: return "pick_and_place";
    case FixtureKind::pouring: return "pouring";
    case FixtureKind::zigzag_cleaning: return "zigzag_cleaning";
    }
    return "?";
}

inline FixtureKind fixture_kind_from_string(std::string_view s) {
    for (auto k : {FixtureKind::pick_and_place, FixtureKind::pouring, FixtureKind::zigzag_cleaning})
        if (to_string(k) == s) return k;
    throw ValidationError("unknown fixture kind '" + std::string(s) + "'");
}

struct FixtureParams {
    double noise_sigma = 0.0; ///< meters, added to hand and manipulated-object positions
    double fps = 30.0;
    int dwell = 0;            ///< frames paused at each turning point; 0 picks the kind's default
    int stroke = 40;          ///< frames per zigzag stroke
    int transport = 50;       ///< frames from the pick-up point to the first target
    /// Height error at each zigzag reversal, meters; simulates a biased z estimate.
    std::vector<double> reversal_z_errors = {0.03, -0.03, 0.03, -0.05, 0.02};

    void validate() const {
        if (!(noise_sigma >= 0.0)) throw ValidationError("noise sigma must be non-negative");
        if (!(fps > 0.0)) throw ValidationError("fps must be positive");
        if (dwell < 0 || (dwell > 0 && dwell % 2 == 0)) throw ValidationError("dwell must be a positive odd frame count");
        if (stroke < 10) throw ValidationError("stroke must be at least 10 frames");
        if (transport < 10) throw ValidationError("transport must be at least 10 frames");
        if (reversal_z_errors.size() != 5) throw ValidationError("zigzag needs one z error per reversal (5)");
    }
};

/// A synthetic demonstration together with its ground truth.
struct Fixture {
    Demonstration demo;
    std::int64_t grasp_frame = 0;   ///< first frame the manipulated object moves
    std::int64_t release_frame = 0; ///< last frame it moves
    std::vector<std::int64_t> turning_frames;
};

/// Minimum-jerk time scaling on [0, 1].
inline double min_jerk(double t) { return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t); }

namespace detail {

/// Frame-by-frame pose track with helpers for holds and minimum-jerk moves.
class Track {
public:
    explicit Track(Vec3 start, double angle = 0.0) : position_(std::move(start)), angle_(angle) {}

    void hold(int frames) {
        for (int i = 0; i < frames; ++i) push(position_, angle_);
    }

    /// `frames` samples of a minimum-jerk move, excluding the start point.
    /// `bump` adds a sine-shaped offset along z, `angle_from` delays the rotation.
    void move(const Vec3& target, int frames, double target_angle, double bump = 0.0, double angle_from = 0.0) {
        const Vec3 p0 = position_;
        const double a0 = angle_;
        for (int i = 1; i <= frames; ++i) {
            const double u = static_cast<double>(i) / frames;
            const double s = min_jerk(u);
            Vec3 p = p0 + (target - p0) * s;
            p.z() += bump * std::sin(std::numbers::pi * s);
            const double r = angle_from >= 1.0 ? (u >= 1.0 ? 1.0 : 0.0)
                                               : std::clamp((s - angle_from) / (1.0 - angle_from), 0.0, 1.0);
            push(p, a0 + (target_angle - a0) * r);
        }
        position_ = target;
        angle_ = target_angle;
    }

    void push(const Vec3& p, double angle) {
        positions.push_back(p);
        angles.push_back(angle);
    }

    std::size_t size() const { return positions.size(); }
    const Vec3& position() const { return position_; }

    std::vector<Vec3> positions;
    std::vector<double> angles;

private:
    Vec3 position_;
    double angle_;
};

enum class Axis { x, y, z };

inline RigidTransform rotation_about(Axis axis, double angle) {
    switch (axis) {
    case Axis::x: return RigidTransform::rotation_x(angle);
    case Axis::y: return RigidTransform::rotation_y(angle);
    case Axis::z: return RigidTransform::rotation_z(angle);
    }
    return {};
}

inline Trajectory make_trajectory(const std::string& id, const std::vector<Vec3>& positions,
                                  const std::vector<double>& angles, Axis axis, double fps) {
    std::vector<PoseSample> samples;
    samples.reserve(positions.size());
    for (std::size_t k = 0; k < positions.size(); ++k) {
        const RigidTransform pose = rotation_about(axis, angles.empty() ? 0.0 : angles[k]).with_translation(positions[k]);
        samples.emplace_back(static_cast<std::int64_t>(k), static_cast<double>(k) / fps, pose);
    }
    return Trajectory(id, std::move(samples));
}

inline void add_noise(std::vector<Vec3>& positions, double sigma, std::mt19937_64& rng) {
    if (sigma <= 0.0) return;
    std::normal_distribution<double> noise(0.0, sigma);
    for (auto& p : positions)
        for (int i = 0; i < 3; ++i) p[i] += noise(rng);
}

inline std::vector<Vec3> constant(const Vec3& p, std::size_t n) { return std::vector<Vec3>(n, p); }

} // namespace detail

/// Interaction points of the tray, 0.30 x 0.20 m, 0.04 m tall, centroid frame in its middle.
inline ObjectModel tray_model() {
    const double z = 0.02;
    return ObjectModel("tray", {{"bottom-left corner", {-0.15, -0.10, z}},
                                {"bottom-right corner", {0.15, -0.10, z}},
                                {"top-left corner", {-0.15, 0.10, z}},
                                {"top-right corner", {0.15, 0.10, z}},
                                {"bottom-edge mid point", {0.0, -0.10, z}},
                                {"top-edge mid point", {0.0, 0.10, z}},
                                {"left-edge mid point", {-0.15, 0.0, z}},
                                {"right-edge mid point", {0.15, 0.0, z}},
                                {"center", {0.0, 0.0, z}}});
}

/// Glass of radius 0.04 m and height 0.12 m, centroid frame at half height.
inline ObjectModel glass_model() {
    return ObjectModel("glass", {{"left rim", {-0.04, 0.0, 0.06}}, {"right rim", {0.04, 0.0, 0.06}}, {"center", {0.0, 0.0, 0.0}}});
}

inline ObjectModel plate_model() {
    return ObjectModel("plate", {{"plate center", {0.0, 0.0, 0.04}},
                                 {"left rim", {-0.1, 0.0, 0.04}},
                                 {"right rim", {0.1, 0.0, 0.04}},
                                 {"front rim", {0.0, -0.1, 0.04}},
                                 {"back rim", {0.0, 0.1, 0.04}}});
}

inline ObjectModel point_model(const std::string& name, const std::string& label) {
    return ObjectModel(name, {{label, Vec3::Zero()}});
}

inline const Vec3 kPlateWorld{0.5, 0.0, 0.01};
inline const Vec3 kGlassWorld{0.5, 0.0, 0.06};
inline const Vec3 kTrayWorld{0.5, 0.0, 0.02};

namespace detail {

inline Demonstration assemble(const std::string& om, const std::string& obkg, std::vector<Vec3> hand,
                              std::vector<Vec3> object, const std::vector<double>& object_angles, Axis axis,
                              const Vec3& background, std::map<std::string, ObjectModel> models,
                              const FixtureParams& params, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    add_noise(hand, params.noise_sigma, rng);
    add_noise(object, params.noise_sigma, rng);
    Demonstration demo;
    demo.hand = make_trajectory("hand", hand, {}, Axis::z, params.fps);
    demo.objects.emplace(om, make_trajectory(om, object, object_angles, axis, params.fps));
    demo.objects.emplace(obkg, make_trajectory(obkg, constant(background, hand.size()), {}, Axis::z, params.fps));
    demo.models = std::move(models);
    demo.manipulated = om;
    demo.background = obkg;
    demo.validate();
    return demo;
}

inline Fixture pick_and_place(const FixtureParams& params, std::uint64_t seed) {
    const Vec3 rest(0.0, 0.3, 0.2);
    const Vec3 pick(0.2, 0.0, 0.05);
    const Vec3 place = kPlateWorld + Vec3(0.0, 0.0, 0.04);

    Track hand(rest);
    hand.hold(20);
    hand.move(pick, 49, 0.0);
    hand.hold(11);
    Track cup(pick);
    cup.hold(static_cast<int>(hand.size()));
    const auto grasp = static_cast<std::int64_t>(cup.size());
    cup.move(place, 89, std::numbers::pi / 2.0, 0.0, 0.75);
    const auto release = static_cast<std::int64_t>(cup.size()) - 1;
    for (std::size_t k = hand.size(); k < cup.size(); ++k) hand.push(cup.positions[k], 0.0);
    Track after(place);
    after.hold(10);
    after.move(rest, 49, 0.0);
    after.hold(20);
    for (const auto& p : after.positions) hand.push(p, 0.0);
    cup.hold(static_cast<int>(hand.size() - cup.size()));

    Fixture f;
    f.grasp_frame = grasp;
    f.release_frame = release;
    f.demo = assemble("cup", "plate", hand.positions, cup.positions, cup.angles, Axis::z, kPlateWorld,
                      {{"cup", point_model("cup", "cup centroid")}, {"plate", plate_model()}}, params, seed);
    return f;
}

inline Fixture zigzag_cleaning(const FixtureParams& params, std::uint64_t seed) {
    const int dwell = params.dwell > 0 ? params.dwell : 11;
    const double top = kTrayWorld.z() + 0.02;
    auto on_tray = [&](double x, double y, double dz) { return Vec3(kTrayWorld.x() + x, kTrayWorld.y() + y, top + dz); };
    const auto& e = params.reversal_z_errors;
    const std::vector<Vec3> reversals = {on_tray(-0.15, -0.10, e[0]), on_tray(0.0, -0.06, e[1]),
                                         on_tray(-0.15, -0.02, e[2]), on_tray(0.0, 0.02, e[3]),
                                         on_tray(-0.15, 0.06, e[4])};
    const Vec3 finish = on_tray(0.0, 0.10, 0.0);
    const Vec3 rest(0.95, 0.3, 0.25);
    const Vec3 start(0.9, 0.08, 0.03);

    Track hand(rest);
    hand.hold(20);
    hand.move(start, 39, 0.0);
    hand.hold(10);
    Track sponge(start);
    sponge.hold(static_cast<int>(hand.size()));
    const auto grasp = static_cast<std::int64_t>(sponge.size());
    sponge.move(reversals[0], params.transport - 1, 0.0, 0.06);
    std::vector<std::int64_t> turning;
    for (std::size_t i = 0; i < reversals.size(); ++i) {
        turning.push_back(static_cast<std::int64_t>(sponge.size()) + dwell / 2);
        sponge.hold(dwell);
        sponge.move(i + 1 < reversals.size() ? reversals[i + 1] : finish, params.stroke - 1, 0.0);
    }
    const auto release = static_cast<std::int64_t>(sponge.size()) - 1;
    for (std::size_t k = hand.size(); k < sponge.size(); ++k) hand.push(sponge.positions[k], 0.0);
    Track after(finish);
    after.hold(10);
    after.move(rest, 39, 0.0);
    after.hold(20);
    for (const auto& p : after.positions) hand.push(p, 0.0);
    sponge.hold(static_cast<int>(hand.size() - sponge.size()));

    Fixture f;
    f.grasp_frame = grasp;
    f.release_frame = release;
    f.turning_frames = turning;
    f.demo = assemble("sponge", "tray", hand.positions, sponge.positions, sponge.angles, Axis::z, kTrayWorld,
                      {{"sponge", point_model("sponge", "front edge")}, {"tray", tray_model()}}, params, seed);
    return f;
}

/// The jug is reduced to its spout; the hand holds it at a fixed offset in the jug frame.
inline Fixture pouring(const FixtureParams& params, std::uint64_t seed) {
    const int dwell = params.dwell > 0 ? params.dwell : 7;
    const Vec3 grip(-0.06, 0.0, -0.03);
    const Vec3 start = kGlassWorld + Vec3(-0.3, 0.2, 0.20);
    const Vec3 first_pour = kGlassWorld + Vec3(0.035, 0.0, 0.04);
    const Vec3 second_pour = kGlassWorld + Vec3(0.06, 0.0, 0.14);
    const Vec3 finish = kGlassWorld + Vec3(-0.3, -0.2, 0.09);
    const double first_tilt = -std::numbers::pi / 4.0;
    const double second_tilt = -3.0 * std::numbers::pi / 4.0;
    auto hand_at = [&](const Vec3& spout, double tilt) {
        return Vec3(RigidTransform::rotation_y(tilt).rotation() * grip + spout);
    };
    const Vec3 rest = hand_at(start, 0.0) + Vec3(-0.1, 0.2, 0.1);

    Track hand(rest);
    hand.hold(20);
    hand.move(hand_at(start, 0.0), 39, 0.0);
    hand.hold(10);
    Track jug(start);
    jug.hold(static_cast<int>(hand.size()));
    const auto grasp = static_cast<std::int64_t>(jug.size());
    std::vector<std::int64_t> turning;
    jug.move(first_pour, 69, first_tilt, 0.0, 0.7);
    turning.push_back(static_cast<std::int64_t>(jug.size()) + dwell / 2);
    jug.hold(dwell);
    jug.move(second_pour, 34, second_tilt);
    turning.push_back(static_cast<std::int64_t>(jug.size()) + dwell / 2);
    jug.hold(dwell);
    jug.move(finish, 59, 0.0);
    const auto release = static_cast<std::int64_t>(jug.size()) - 1;
    for (std::size_t k = hand.size(); k < jug.size(); ++k) hand.push(hand_at(jug.positions[k], jug.angles[k]), 0.0);
    const Vec3 last_hand = hand.positions.back();
    Track after(last_hand);
    after.hold(10);
    after.move(rest, 39, 0.0);
    after.hold(20);
    for (const auto& p : after.positions) hand.push(p, 0.0);
    jug.hold(static_cast<int>(hand.size() - jug.size()));

    Fixture f;
    f.grasp_frame = grasp;
    f.release_frame = release;
    f.turning_frames = turning;
    f.demo = assemble("jug", "glass", hand.positions, jug.positions, jug.angles, Axis::y, kGlassWorld,
                      {{"jug", point_model("jug", "spout")}, {"glass", glass_model()}}, params, seed);
    return f;
}

} // namespace detail

inline Fixture generate_fixture(FixtureKind kind, const FixtureParams& params = {}, std::uint64_t seed = 0) {
    params.validate();
    switch (kind) {
    case FixtureKind::pick_and_place: return detail::pick_and_place(params, seed);
    case FixtureKind::pouring: return detail::pouring(params, seed);
    case FixtureKind::zigzag_cleaning: return detail::zigzag_cleaning(params, seed);
    }
    throw ValidationError("unknown fixture kind");
}

/// Manipulated object moving in a straight line towards a static background
/// object, from `start_distance` to zero over `frames` frames.
inline Demonstration linear_approach(std::uint64_t seed, int frames = 100, double start_distance = 0.5,
                                     double noise_sigma = 0.0, double fps = 30.0) {
    if (frames < 2) throw ValidationError("linear approach needs at least 2 frames");
    std::vector<Vec3> object, hand;
    for (int k = 0; k < frames; ++k) {
        const double d = start_distance * (1.0 - static_cast<double>(k) / (frames - 1));
        object.emplace_back(d, 0.0, 0.0);
        hand.emplace_back(d, 0.0, 0.05);
    }
    FixtureParams params;
    params.noise_sigma = noise_sigma;
    params.fps = fps;
    return detail::assemble("object", "target", hand, object, {}, detail::Axis::z, Vec3::Zero(),
                            {{"object", point_model("object", "centroid")}, {"target", point_model("target", "centroid")}},
                            params, seed);
}

} // namespace demoplan::harness
