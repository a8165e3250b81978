#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "demoplan/core/errors.hpp"
#include "demoplan/core/transform.hpp"
#include "demoplan/harness/fixtures.hpp"

namespace demoplan::harness {

/// Axis-aligned box in world coordinates.
struct Box {
    Vec3 min = Vec3::Zero();
    Vec3 max = Vec3::Zero();
    bool touchable = false; ///< entering it counts as contact rather than collision

    bool contains_strictly(const Vec3& p) const {
        return (p.array() > min.array()).all() && (p.array() < max.array()).all();
    }
    friend bool operator==(const Box&, const Box&) = default;
};

struct Scene {
    std::string reference; ///< background object the plan's target poses are relative to
    std::map<std::string, RigidTransform> objects;
    std::map<std::string, Box> boxes;
    std::map<std::string, double> surfaces; ///< surface heights, meters

    const RigidTransform& pose_of(const std::string& name) const {
        const auto it = objects.find(name);
        if (it == objects.end()) throw ValidationError("scene has no object '" + name + "'");
        return it->second;
    }

    double surface(const std::string& name) const {
        const auto it = surfaces.find(name);
        if (it == surfaces.end()) throw ValidationError("scene has no surface '" + name + "'");
        return it->second;
    }

    void validate() const {
        if (reference.empty()) throw ValidationError("scene needs a reference object");
        pose_of(reference);
        for (const auto& [name, box] : boxes)
            if (!(box.min.array() <= box.max.array()).all())
                throw ValidationError("scene box '" + name + "' has min above max");
    }

    friend bool operator==(const Scene&, const Scene&) = default;
};

/// The same scene with every object and box moved by `t`.
inline Scene moved(const Scene& scene, const Vec3& t) {
    Scene out = scene;
    for (auto& [name, pose] : out.objects) pose = pose.with_translation(pose.translation() + t);
    for (auto& [name, box] : out.boxes) {
        box.min += t;
        box.max += t;
    }
    for (auto& [name, h] : out.surfaces) h += t.z();
    return out;
}

namespace detail {

inline Vec3 vec3_from(const nlohmann::json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 3) throw SchemaError(what + " must be an array of 3 numbers");
    Vec3 v;
    for (int i = 0; i < 3; ++i) {
        if (!j[i].is_number()) throw SchemaError(what + " must be an array of 3 numbers");
        v[i] = j[i].get<double>();
    }
    return v;
}

inline nlohmann::json to_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

} // namespace detail

/// {"reference": name, "objects": {name: {"position": [x,y,z], "orientation": [w,x,y,z]}},
///  "boxes": {name: {"min": [...], "max": [...], "touchable": bool}}, "surfaces": {name: height}}
inline Scene scene_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw SchemaError("scene must be a JSON object");
    Scene s;
    if (!j.contains("reference") || !j["reference"].is_string()) throw SchemaError("scene needs a \"reference\" string");
    s.reference = j["reference"].get<std::string>();
    if (!j.contains("objects") || !j["objects"].is_object()) throw SchemaError("scene needs an \"objects\" map");
    for (const auto& [name, obj] : j["objects"].items()) {
        if (!obj.is_object() || !obj.contains("position")) throw SchemaError("scene object '" + name + "' needs a position");
        const Vec3 p = detail::vec3_from(obj["position"], "position of '" + name + "'");
        Quaternion q = Quaternion::Identity();
        if (obj.contains("orientation")) {
            const auto& o = obj["orientation"];
            if (!o.is_array() || o.size() != 4) throw SchemaError("orientation of '" + name + "' must be [w, x, y, z]");
            q = Quaternion(o[0].get<double>(), o[1].get<double>(), o[2].get<double>(), o[3].get<double>());
            if (std::abs(q.norm() - 1.0) > 1e-6) throw ValidationError("orientation of '" + name + "' is not a unit quaternion");
            q.normalize();
        }
        s.objects.emplace(name, RigidTransform::from_quaternion(q, p));
    }
    if (j.contains("boxes"))
        for (const auto& [name, b] : j["boxes"].items()) {
            Box box{detail::vec3_from(b.at("min"), "min of box '" + name + "'"),
                    detail::vec3_from(b.at("max"), "max of box '" + name + "'"), b.value("touchable", false)};
            s.boxes.emplace(name, box);
        }
    if (j.contains("surfaces"))
        for (const auto& [name, h] : j["surfaces"].items()) {
            if (!h.is_number()) throw SchemaError("surface '" + name + "' height must be a number");
            s.surfaces.emplace(name, h.get<double>());
        }
    s.validate();
    return s;
}

inline nlohmann::json scene_to_json(const Scene& s) {
    nlohmann::json j;
    j["reference"] = s.reference;
    j["objects"] = nlohmann::json::object();
    for (const auto& [name, pose] : s.objects) {
        const auto q = pose.quaternion();
        j["objects"][name] = {{"position", detail::to_json(pose.translation())},
                              {"orientation", {q.w(), q.x(), q.y(), q.z()}}};
    }
    j["boxes"] = nlohmann::json::object();
    for (const auto& [name, b] : s.boxes)
        j["boxes"][name] = {{"min", detail::to_json(b.min)}, {"max", detail::to_json(b.max)}, {"touchable", b.touchable}};
    j["surfaces"] = nlohmann::json::object();
    for (const auto& [name, h] : s.surfaces) j["surfaces"][name] = h;
    return j;
}

inline Scene load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open scene file " + path);
    try {
        return scene_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("scene file " + path + ": " + e.what());
    }
}

/// Layout the fixture was recorded in, with the background object as reference.
inline Scene fixture_scene(FixtureKind kind) {
    Scene s;
    switch (kind) {
    case FixtureKind::pick_and_place:
        s.reference = "plate";
        s.objects["plate"] = RigidTransform::from_translation(kPlateWorld);
        s.boxes["plate"] = {kPlateWorld + Vec3(-0.1, -0.1, -0.01), kPlateWorld + Vec3(0.1, 0.1, 0.04), true};
        s.surfaces["plate"] = kPlateWorld.z() + 0.04;
        break;
    case FixtureKind::zigzag_cleaning:
        s.reference = "tray";
        s.objects["tray"] = RigidTransform::from_translation(kTrayWorld);
        s.boxes["tray"] = {Vec3(0.35, -0.1, 0.0), Vec3(0.65, 0.1, 0.04), true};
        s.surfaces["tray"] = 0.04;
        break;
    case FixtureKind::pouring:
        s.reference = "glass";
        s.objects["glass"] = RigidTransform::from_translation(kGlassWorld);
        s.boxes["glass"] = {Vec3(0.46, -0.04, 0.0), Vec3(0.54, 0.04, 0.12), false};
        break;
    }
    return s;
}

} // namespace demoplan::harness
