#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "demoplan/btree/xml.hpp"

namespace demoplan::bt {

struct RepairResult {
    BehaviorTree tree;
    std::vector<std::string> log;
};

namespace detail {

inline bool opens_known_tag(std::string_view text, std::size_t at) {
    if (text.substr(at, 5) == "<?xml") return true;
    if (at + 1 >= text.size() || text[at] != '<') return false;
    std::size_t end = at + 1;
    while (end < text.size() && is_name_char(text[end])) ++end;
    return known_tag(text.substr(at + 1, end - at - 1), true).has_value();
}

inline bool closes_known_tag(std::string_view text, std::size_t gt) {
    // "/>" of a self-closing element, or ">" ending "</Known".
    const auto lt = text.rfind('<', gt);
    if (lt == std::string_view::npos) return false;
    std::size_t name_start = lt + 1;
    if (name_start < text.size() && text[name_start] == '/') ++name_start;
    std::size_t name_end = name_start;
    while (name_end < text.size() && is_name_char(text[name_end])) ++name_end;
    return known_tag(text.substr(name_start, name_end - name_start), true).has_value();
}

/// True when `s` holds anything besides whitespace and fence lines such as "```xml".
inline bool has_prose_outside_fences(std::string_view s) {
    std::size_t pos = 0;
    while (pos < s.size()) {
        auto end = s.find('\n', pos);
        if (end == std::string_view::npos) end = s.size();
        auto line = s.substr(pos, end - pos);
        const auto first = line.find_first_not_of(" \t\r");
        if (first != std::string_view::npos) {
            line = line.substr(first);
            if (line.substr(0, 3) != "```") return true;
            auto tag = line.substr(3);
            tag = tag.substr(0, tag.find_last_not_of(" \t\r") + 1);
            if (tag.find_first_of(" \t") != std::string_view::npos) return true;
        }
        pos = end + 1;
    }
    return false;
}

} // namespace detail

/// Cuts the span from the first behavior-tree tag to the last one, dropping
/// prose and markdown fences around it.
inline std::string strip_wrappers(std::string_view raw, Diagnostics& diag) {
    std::size_t first = std::string_view::npos;
    for (std::size_t i = raw.find('<'); i != std::string_view::npos; i = raw.find('<', i + 1))
        if (detail::opens_known_tag(raw, i)) {
            first = i;
            break;
        }
    if (first == std::string_view::npos) diag.fail({1, 1}, "no recognizable behavior tree element");

    std::size_t last = std::string_view::npos;
    for (std::size_t i = raw.rfind('>'); i != std::string_view::npos && i >= first; i = i == 0 ? std::string_view::npos : raw.rfind('>', i - 1))
        if (detail::closes_known_tag(raw, i)) {
            last = i;
            break;
        }
    if (last == std::string_view::npos) last = raw.size() - 1;

    const auto before = raw.substr(0, first);
    const auto after = raw.substr(last + 1);
    auto non_blank = [](std::string_view s) { return s.find_first_not_of(" \t\r\n") != std::string_view::npos; };
    const bool fenced = raw.find("```") != std::string_view::npos;
    if (non_blank(before) || non_blank(after)) {
        std::string what = fenced ? "stripped markdown code fence" : "stripped non-XML text";
        if (fenced && (detail::has_prose_outside_fences(before) || detail::has_prose_outside_fences(after)))
            what += " and surrounding prose";
        diag.fix(RepairRule::strip_prose, {1, 1}, what);
    }
    return std::string(raw.substr(first, last - first + 1));
}

/// Parses possibly malformed behavior-tree XML, fixing what the rule set
/// covers and logging each fix. Throws RepairError when no valid tree can be
/// recovered; already canonical input comes back unchanged with an empty log.
inline RepairResult validate_and_repair(std::string_view raw, Variant variant) {
    Diagnostics diag(false, std::string(raw));
    const std::string body = strip_wrappers(raw, diag);
    RepairResult result;
    try {
        result.tree = detail::parse_tree(body, diag, variant);
    } catch (const ValidationError& e) {
        throw RepairError(std::string("repaired tree is still invalid: ") + e.what(), std::string(raw));
    } catch (const VariantError& e) {
        throw RepairError(e.what(), std::string(raw));
    }
    result.log = diag.log();
    return result;
}

} // namespace demoplan::bt
