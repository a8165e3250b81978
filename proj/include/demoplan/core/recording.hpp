#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "demoplan/core/demonstration.hpp"
#include "demoplan/core/errors.hpp"

// Demonstration recordings are JSON Lines: a header object followed by one
// pose sample per line.
//   {"hand": id, "manipulated": name, "background": name,
//    "models": {name: {"interaction_points": [{"label": s, "offset": [x,y,z]}]}}}
//   {"k": frame, "t": seconds, "entity": id, "p": [x,y,z], "q": [w,x,y,z]}

namespace demoplan {

inline constexpr double kQuaternionNormTolerance = 1e-6;

namespace detail {

inline Vec3 read_vec3(const nlohmann::json& j, const char* what, std::size_t line) {
    if (!j.is_array() || j.size() != 3) throw ParseError(std::string("'") + what + "' must be an array of 3 numbers", line);
    Vec3 v;
    for (int i = 0; i < 3; ++i) {
        if (!j[i].is_number()) throw ParseError(std::string("'") + what + "' must be an array of 3 numbers", line);
        v[i] = j[i].get<double>();
    }
    return v;
}

inline Quaternion read_quaternion(const nlohmann::json& j, std::size_t line) {
    if (!j.is_array() || j.size() != 4) throw ParseError("'q' must be an array [w,x,y,z]", line);
    double c[4];
    for (int i = 0; i < 4; ++i) {
        if (!j[i].is_number()) throw ParseError("'q' must be an array [w,x,y,z]", line);
        c[i] = j[i].get<double>();
    }
    Quaternion q(c[0], c[1], c[2], c[3]);
    const double norm = q.norm();
    if (std::abs(norm - 1.0) > kQuaternionNormTolerance)
        throw ValidationError("line " + std::to_string(line) + ": quaternion norm " + std::to_string(norm) +
                              " deviates from 1 by more than 1e-6");
    if (std::abs(norm - 1.0) > 1e-12) q.normalize();
    return q;
}

inline nlohmann::json models_to_json(const std::map<std::string, ObjectModel>& models) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [name, model] : models) {
        nlohmann::json points = nlohmann::json::array();
        for (const auto& ip : model.interaction_points())
            points.push_back({{"label", ip.label}, {"offset", {ip.offset.x(), ip.offset.y(), ip.offset.z()}}});
        out[name] = {{"interaction_points", points}};
    }
    return out;
}

inline std::map<std::string, ObjectModel> models_from_json(const nlohmann::json& j, std::size_t line) {
    std::map<std::string, ObjectModel> out;
    if (!j.is_object()) throw SchemaError("header 'models' must be an object");
    for (const auto& [name, body] : j.items()) {
        if (!body.is_object() || !body.contains("interaction_points") || !body["interaction_points"].is_array())
            throw SchemaError("model '" + name + "' lacks an interaction_points array");
        std::vector<InteractionPoint> points;
        for (const auto& p : body["interaction_points"]) {
            if (!p.is_object() || !p.contains("label") || !p["label"].is_string() || !p.contains("offset"))
                throw ParseError("interaction point of '" + name + "' needs a label and an offset", line);
            points.push_back({p["label"].get<std::string>(), read_vec3(p["offset"], "offset", line)});
        }
        out.emplace(name, ObjectModel(name, std::move(points)));
    }
    return out;
}

} // namespace detail

inline Demonstration parse_demonstration(std::istream& in) {
    std::string text;
    std::size_t line_no = 0;
    nlohmann::json header;
    bool have_header = false;
    std::map<std::string, std::vector<PoseSample>> by_entity;

    while (std::getline(in, text)) {
        ++line_no;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
        }
        if (!j.is_object()) throw ParseError("expected a JSON object", line_no);
        if (!have_header) {
            header = std::move(j);
            have_header = true;
            continue;
        }
        for (const char* key : {"k", "t", "entity", "p", "q"})
            if (!j.contains(key)) throw ParseError(std::string("sample lacks field '") + key + "'", line_no);
        if (!j["k"].is_number_integer()) throw ParseError("'k' must be an integer", line_no);
        if (!j["t"].is_number()) throw ParseError("'t' must be a number", line_no);
        if (!j["entity"].is_string()) throw ParseError("'entity' must be a string", line_no);
        by_entity[j["entity"].get<std::string>()].emplace_back(j["k"].get<std::int64_t>(), j["t"].get<double>(),
                                                               detail::read_vec3(j["p"], "p", line_no),
                                                               detail::read_quaternion(j["q"], line_no));
    }
    if (!have_header) throw SchemaError("recording is empty");

    for (const char* key : {"hand", "manipulated", "background"})
        if (!header.contains(key) || !header[key].is_string())
            throw SchemaError(std::string("header lacks the '") + key + "' declaration");
    if (!header.contains("models")) throw SchemaError("header lacks the 'models' declaration");

    Demonstration demo;
    demo.manipulated = header["manipulated"].get<std::string>();
    demo.background = header["background"].get<std::string>();
    demo.models = detail::models_from_json(header["models"], 1);
    const auto hand_id = header["hand"].get<std::string>();

    auto hand_it = by_entity.find(hand_id);
    if (hand_it == by_entity.end()) throw SchemaError("no samples for hand '" + hand_id + "'");
    demo.hand = Trajectory(hand_id, std::move(hand_it->second));
    by_entity.erase(hand_it);
    for (auto& [name, samples] : by_entity) demo.objects.emplace(name, Trajectory(name, std::move(samples)));
    demo.validate();
    return demo;
}

inline Demonstration load_demonstration(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open recording " + path.string());
    return parse_demonstration(in);
}

inline void write_demonstration(const Demonstration& demo, std::ostream& out) {
    nlohmann::json header = {{"hand", demo.hand.entity_id()},
                             {"manipulated", demo.manipulated},
                             {"background", demo.background},
                             {"models", detail::models_to_json(demo.models)}};
    out << header.dump() << '\n';
    auto emit = [&out](const std::string& entity, const PoseSample& s) {
        const Vec3& p = s.position();
        const Quaternion& q = s.orientation();
        nlohmann::json line = {{"k", s.frame()},
                               {"t", s.time()},
                               {"entity", entity},
                               {"p", {p.x(), p.y(), p.z()}},
                               {"q", {q.w(), q.x(), q.y(), q.z()}}};
        out << line.dump() << '\n';
    };
    for (std::size_t i = 0; i < demo.hand.size(); ++i) {
        emit(demo.hand.entity_id(), demo.hand[i]);
        for (const auto& [name, traj] : demo.objects) emit(name, traj[i]);
    }
}

inline std::string serialize_demonstration(const Demonstration& demo) {
    std::ostringstream out;
    write_demonstration(demo, out);
    return out.str();
}

inline Demonstration parse_demonstration(const std::string& text) {
    std::istringstream in(text);
    return parse_demonstration(in);
}

inline void save_demonstration(const Demonstration& demo, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write recording " + path.string());
    write_demonstration(demo, out);
}

} // namespace demoplan
