#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

#include "demoplan/core/errors.hpp"

namespace demoplan {

enum class Vertical { above, touching, below };
enum class RotationAxis { side_bending, tilting, turning };

inline constexpr std::array<int, 8> kSnapAngles = {0, 45, -45, 90, -90, 135, -135, 180};

inline std::string_view to_string(Vertical v) {
    switch (v) {
    case Vertical::above: return "above";
    case Vertical::touching: return "touching";
    case Vertical::below: return "below";
    }
    return "touching";
}

inline std::string_view to_string(RotationAxis a) {
    switch (a) {
    case RotationAxis::side_bending: return "side bending";
    case RotationAxis::tilting: return "tilting";
    case RotationAxis::turning: return "turning";
    }
    return "turning";
}

/// Integer degrees folded into (-180, 180].
inline int normalize_degrees(long long deg) {
    long long d = deg % 360;
    if (d <= -180) d += 360;
    if (d > 180) d -= 360;
    return static_cast<int>(d);
}

inline bool is_snapped(int deg) {
    return std::find(kSnapAngles.begin(), kSnapAngles.end(), deg) != kSnapAngles.end();
}

/// Nearest predefined angle on the circle; ties go to the smaller magnitude.
inline int snap_angle(double deg) {
    double d = std::fmod(deg, 360.0);
    if (d <= -180.0) d += 360.0;
    if (d > 180.0) d -= 360.0;
    int best = 0;
    double best_dist = 1e300;
    for (int candidate : kSnapAngles) {
        double dist = std::abs(d - candidate);
        dist = std::min(dist, 360.0 - dist);
        if (dist < best_dist || (dist == best_dist && std::abs(candidate) < std::abs(best))) {
            best = candidate;
            best_dist = dist;
        }
    }
    return best;
}

/// Interaction-point label, vertical relation and dominant rotation of one target pose.
struct SemanticTargetPose {
    std::string ip_label;
    Vertical vertical = Vertical::touching;
    RotationAxis axis = RotationAxis::turning;
    int angle = 0; ///< degrees in (-180, 180]

    friend bool operator==(const SemanticTargetPose&, const SemanticTargetPose&) = default;
};

/// "plate center, touching, turning 90"
inline std::string format_desc(const SemanticTargetPose& p) {
    std::string out = p.ip_label;
    out += ", ";
    out += to_string(p.vertical);
    out += ", ";
    out += to_string(p.axis);
    out += ' ';
    out += std::to_string(p.angle);
    return out;
}

namespace detail {

inline std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

inline std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline std::string collapse_spaces(std::string_view s) {
    std::string out;
    bool space = false;
    for (char c : s) {
        if (c == ' ' || c == '\t' || c == '_' || c == '-') {
            space = true;
            continue;
        }
        if (space && !out.empty()) out += ' ';
        space = false;
        out += c;
    }
    return out;
}

} // namespace detail

/// Parses the triplet sentence. Keywords are case-insensitive; a trailing
/// degree sign or "deg" after the angle is accepted.
inline SemanticTargetPose parse_desc(std::string_view text) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto comma = text.find(',', start);
        parts.push_back(detail::trim(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    const auto fail = [&](const std::string& why) -> ValidationError {
        return ValidationError("bad target description \"" + std::string(text) + "\": " + why);
    };
    if (parts.size() != 3) throw fail("expected \"<interaction point>, <vertical>, <rotation> <angle>\"");

    SemanticTargetPose out;
    out.ip_label = parts[0];
    if (out.ip_label.empty()) throw fail("empty interaction point label");

    const auto vertical = detail::lower(parts[1]);
    if (vertical == "above") out.vertical = Vertical::above;
    else if (vertical == "touching") out.vertical = Vertical::touching;
    else if (vertical == "below") out.vertical = Vertical::below;
    else throw fail("vertical relation must be above, touching or below");

    std::string rotation = detail::lower(parts[2]);
    for (const std::string_view suffix : {"\xc2\xb0", "degrees", "degree", "deg"}) {
        if (rotation.size() >= suffix.size() && rotation.compare(rotation.size() - suffix.size(), suffix.size(), suffix) == 0) {
            rotation = detail::trim(rotation.substr(0, rotation.size() - suffix.size()));
            break;
        }
    }
    const auto space = rotation.find_last_of(' ');
    if (space == std::string::npos) throw fail("rotation needs an axis and an angle");
    const auto axis = detail::collapse_spaces(detail::trim(rotation.substr(0, space)));
    std::string number = detail::trim(rotation.substr(space + 1));
    if (!number.empty() && number.front() == '+') number.erase(0, 1);
    if (axis == "side bending") out.axis = RotationAxis::side_bending;
    else if (axis == "tilting") out.axis = RotationAxis::tilting;
    else if (axis == "turning") out.axis = RotationAxis::turning;
    else throw fail("rotation axis must be side bending, tilting or turning");

    long long value = 0;
    const auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), value);
    if (ec != std::errc{} || ptr != number.data() + number.size() || number.empty())
        throw fail("angle must be a signed integer number of degrees");
    out.angle = normalize_degrees(value);
    return out;
}

} // namespace demoplan
