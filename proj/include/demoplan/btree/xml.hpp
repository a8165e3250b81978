#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "demoplan/btree/tree.hpp"
#include "demoplan/btree/xml_lexer.hpp"

namespace demoplan::bt {

enum class Tag { behavior_tree, sequence, grasp, exec_trajectory, target_pose, unknown };

inline std::string_view tag_name(Tag t) {
    switch (t) {
    case Tag::behavior_tree: return "BehaviorTree";
    case Tag::sequence: return "Sequence";
    case Tag::grasp: return "Grasp";
    case Tag::exec_trajectory: return "ExecTrajectory";
    case Tag::target_pose: return "TargetPose";
    case Tag::unknown: break;
    }
    return "?";
}

/// Shortest decimal text that parses back to the same double; integral values keep a ".0".
inline std::string format_number(double v) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    std::string out(buf.data(), ptr);
    if (out.find_first_of(".eEn") == std::string::npos) out += ".0";
    return out;
}

inline std::optional<double> parse_number(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::optional<std::vector<double>> parse_numbers(std::string_view s, std::size_t count) {
    std::vector<double> out;
    std::string text(s);
    for (auto& c : text)
        if (c == ',') c = ' ';
    std::istringstream in(text);
    std::string word;
    while (in >> word) {
        const auto v = parse_number(word);
        if (!v) return std::nullopt;
        out.push_back(*v);
    }
    if (out.size() != count) return std::nullopt;
    return out;
}

namespace detail {

struct Element {
    Tag tag = Tag::unknown;
    std::string name;
    std::vector<XmlAttribute> attributes;
    std::vector<Element> children;
    Location at;
    bool closed = false;
};

inline std::optional<Tag> known_tag(std::string_view name, bool case_insensitive) {
    for (Tag t : {Tag::behavior_tree, Tag::sequence, Tag::grasp, Tag::exec_trajectory, Tag::target_pose}) {
        const auto canonical = tag_name(t);
        if (name == canonical) return t;
        if (case_insensitive && name.size() == canonical.size() &&
            std::equal(name.begin(), name.end(), canonical.begin(), [](char a, char b) {
                return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
            }))
            return t;
    }
    return std::nullopt;
}

/// Whether `child` may appear directly inside `parent` (Tag::unknown stands for the document).
inline bool accepts(Tag parent, Tag child) {
    switch (parent) {
    case Tag::unknown: return child != Tag::target_pose;
    case Tag::behavior_tree:
    case Tag::sequence: return child == Tag::sequence || child == Tag::grasp || child == Tag::exec_trajectory;
    case Tag::exec_trajectory: return child == Tag::target_pose;
    case Tag::grasp:
    case Tag::target_pose: return false;
    }
    return false;
}

/// Turns the token stream into an element tree, closing unclosed elements,
/// dropping stray closing tags and unwrapping unknown elements.
class ElementBuilder {
public:
    explicit ElementBuilder(Diagnostics& diag) : diag_(diag) {}

    Element build(const std::vector<XmlToken>& tokens) {
        Element document;
        document.name = "#document";
        stack_.push_back({&document, Tag::unknown, ""});
        for (const auto& tok : tokens) {
            switch (tok.kind) {
            case XmlToken::Kind::text: on_text(tok); break;
            case XmlToken::Kind::open: on_open(tok); break;
            case XmlToken::Kind::close: on_close(tok); break;
            }
        }
        while (stack_.size() > 1) {
            const auto& top = stack_.back();
            diag_.fix(RepairRule::close_tags, top.element ? top.element->at : Location{},
                      "closed unclosed <" + top.name + "> at end of input");
            stack_.pop_back();
        }
        return document;
    }

private:
    struct Open {
        Element* element; ///< nullptr for an unknown, unwrapped element
        Tag tag;
        std::string name;
    };

    Element* parent() {
        for (auto it = stack_.rbegin(); it != stack_.rend(); ++it)
            if (it->element) return it->element;
        return nullptr;
    }

    void on_text(const XmlToken& tok) {
        if (tok.name.find_first_not_of(" \t\r\n") == std::string::npos) return;
        std::string excerpt = tok.name.substr(tok.name.find_first_not_of(" \t\r\n"), 40);
        if (const auto nl = excerpt.find('\n'); nl != std::string::npos) excerpt.resize(nl);
        diag_.fix(RepairRule::drop_unknown, tok.at, "dropped stray text \"" + excerpt + "\"");
    }

    void on_open(const XmlToken& tok) {
        auto tag = known_tag(tok.name, false);
        if (!tag) {
            tag = known_tag(tok.name, !diag_.strict());
            if (tag)
                diag_.fix(RepairRule::normalize_values, tok.at,
                          "renamed <" + tok.name + "> to <" + std::string(tag_name(*tag)) + ">");
        }
        // Open elements that cannot hold the new one are closed, provided an
        // enclosing element can.
        if (tag) {
            auto holder = stack_.size() - 1;
            while (holder > 0 && (!stack_[holder].element || !accepts(stack_[holder].tag, *tag))) --holder;
            if (holder > 0 || accepts(Tag::unknown, *tag))
                while (stack_.size() - 1 > holder && stack_.back().element) {
                    diag_.fix(RepairRule::close_tags, tok.at, "closed unclosed <" + stack_.back().name + ">");
                    stack_.pop_back();
                }
        }
        if (!tag) {
            if (diag_.strict()) diag_.fail(tok.at, "unknown tag <" + tok.name + ">");
            diag_.fix(RepairRule::drop_unknown, tok.at, "dropped unknown tag <" + tok.name + ">");
            if (!tok.self_closing) stack_.push_back({nullptr, Tag::unknown, tok.name});
            return;
        }
        Element* into = parent();
        Element el;
        el.tag = *tag;
        el.name = std::string(tag_name(*tag));
        el.attributes = tok.attributes;
        el.at = tok.at;
        el.closed = tok.self_closing;
        into->children.push_back(std::move(el));
        if (!tok.self_closing) stack_.push_back({&into->children.back(), *tag, std::string(tag_name(*tag))});
    }

    void on_close(const XmlToken& tok) {
        auto tag = known_tag(tok.name, !diag_.strict());
        const std::string name = tag ? std::string(tag_name(*tag)) : tok.name;
        auto match = stack_.size();
        for (auto i = stack_.size(); i-- > 1;) {
            if (stack_[i].name == name || (!stack_[i].element && stack_[i].name == tok.name)) {
                match = i;
                break;
            }
        }
        if (match == stack_.size()) {
            diag_.fix(RepairRule::close_tags, tok.at, "dropped stray closing tag </" + tok.name + ">");
            return;
        }
        while (stack_.size() - 1 > match) {
            diag_.fix(RepairRule::close_tags, tok.at,
                      "closed unclosed <" + stack_.back().name + "> before </" + tok.name + ">");
            stack_.pop_back();
        }
        if (stack_.back().element) stack_.back().element->closed = true;
        stack_.pop_back();
    }

    Diagnostics& diag_;
    std::vector<Open> stack_;
};

inline std::string lower_copy(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

/// Converts the element tree to a typed behavior tree.
class TreeConverter {
public:
    TreeConverter(Diagnostics& diag, std::optional<Variant> expected) : diag_(diag), expected_(expected) {}

    BehaviorTree convert(const Element& document) {
        std::vector<const Element*> top;
        const Element* bt_element = nullptr;
        for (const auto& child : document.children) {
            if (child.tag == Tag::behavior_tree) {
                if (bt_element) diag_.fail(child.at, "more than one <BehaviorTree> element");
                bt_element = &child;
            } else {
                top.push_back(&child);
            }
        }

        BehaviorTree tree;
        std::vector<const Element*> body;
        Location root_at = document.children.empty() ? Location{} : document.children.front().at;
        if (!bt_element) {
            if (top.empty()) diag_.fail(root_at, "no recognizable behavior tree element");
            diag_.fix(RepairRule::wrap_orphans, root_at, "added missing <BehaviorTree> root");
            if (!expected_) diag_.fail(root_at, "behavior tree variant is unknown");
            tree.variant = *expected_;
            body = top;
        } else {
            root_at = bt_element->at;
            tree.variant = read_variant(*bt_element);
            for (const auto& attr : bt_element->attributes)
                if (attr.name != "variant") drop_attribute(attr, "BehaviorTree");
            if (!top.empty())
                diag_.fix(RepairRule::wrap_orphans, top.front()->at,
                          "moved " + std::to_string(top.size()) + " element(s) into <BehaviorTree>");
            for (const auto& child : bt_element->children) body.push_back(&child);
            body.insert(body.end(), top.begin(), top.end());
        }
        variant_ = tree.variant;

        if (body.empty()) diag_.fail(root_at, "<BehaviorTree> has no nodes");
        if (body.size() == 1 && body.front()->tag == Tag::sequence) {
            auto root = convert_sequence(*body.front());
            if (!root) diag_.fail(root_at, "behavior tree has no action nodes");
            tree.root = std::move(*root);
        } else {
            diag_.fix(RepairRule::wrap_orphans, body.front()->at,
                      "wrapped " + std::to_string(body.size()) + " orphan sibling(s) in a <Sequence>");
            Element wrapper;
            wrapper.tag = Tag::sequence;
            wrapper.name = "Sequence";
            wrapper.at = body.front()->at;
            for (const auto* e : body) wrapper.children.push_back(*e);
            auto root = convert_sequence(wrapper);
            if (!root) diag_.fail(root_at, "behavior tree has no action nodes");
            tree.root = std::move(*root);
        }
        return tree;
    }

private:
    Variant read_variant(const Element& bt) {
        const XmlAttribute* attr = find(bt, "variant");
        if (!attr) {
            if (!expected_) diag_.fail(bt.at, "<BehaviorTree> lacks the variant attribute");
            diag_.fix(RepairRule::wrap_orphans, bt.at, "added variant=\"" + std::string(to_string(*expected_)) + "\"");
            return *expected_;
        }
        std::optional<Variant> v;
        if (attr->value == "executable") v = Variant::executable;
        else if (attr->value == "semantic") v = Variant::semantic;
        else {
            const auto low = lower_copy(attr->value);
            if (low == "executable" || low == "semantic") {
                v = low == "executable" ? Variant::executable : Variant::semantic;
                diag_.fix(RepairRule::normalize_values, attr->at, "normalized variant=\"" + attr->value + "\"");
            }
        }
        if (!v) diag_.fail(attr->at, "unknown behavior tree variant \"" + attr->value + "\"");
        if (expected_ && *v != *expected_) {
            if (diag_.strict())
                throw VariantError("expected a " + std::string(to_string(*expected_)) + " behavior tree, got " +
                                   std::string(to_string(*v)));
            diag_.fix(RepairRule::wrap_orphans, attr->at,
                      "changed variant=\"" + attr->value + "\" to \"" + std::string(to_string(*expected_)) + "\"");
            return *expected_;
        }
        return *v;
    }

    static const XmlAttribute* find(const Element& e, std::string_view name) {
        for (const auto& a : e.attributes)
            if (a.name == name) return &a;
        return nullptr;
    }

    void drop_attribute(const XmlAttribute& attr, std::string_view tag) {
        diag_.fix(RepairRule::drop_unknown, attr.at,
                  "dropped unknown attribute '" + attr.name + "' of <" + std::string(tag) + ">");
    }

    std::optional<Node> convert_node(const Element& e) {
        switch (e.tag) {
        case Tag::sequence: return convert_sequence(e);
        case Tag::grasp: return Node(convert_grasp(e));
        case Tag::exec_trajectory: return Node(convert_trajectory(e));
        case Tag::target_pose: diag_.fail(e.at, "<TargetPose> outside an <ExecTrajectory>");
        case Tag::behavior_tree: diag_.fail(e.at, "nested <BehaviorTree>");
        case Tag::unknown: break;
        }
        diag_.fail(e.at, "unexpected element <" + e.name + ">");
    }

    std::optional<Node> convert_sequence(const Element& e) {
        for (const auto& attr : e.attributes) drop_attribute(attr, "Sequence");
        Sequence seq;
        for (const auto& child : e.children)
            if (auto node = convert_node(child)) seq.children.push_back(std::move(*node));
        if (seq.children.empty()) {
            diag_.fix(RepairRule::prune_empty, e.at, "removed empty <Sequence>");
            return std::nullopt;
        }
        return Node(std::move(seq));
    }

    Grasp convert_grasp(const Element& e) {
        if (!e.children.empty()) diag_.fail(e.at, "<Grasp> cannot contain elements");
        const XmlAttribute* action = nullptr;
        for (const auto& attr : e.attributes) {
            if (attr.name == "action") action = &attr;
            else drop_attribute(attr, "Grasp");
        }
        if (!action) diag_.fail(e.at, "<Grasp> lacks the action attribute");
        const auto low = lower_copy(action->value);
        if (low != "open" && low != "close") diag_.fail(action->at, "unknown grasp action \"" + action->value + "\"");
        if (low != action->value) diag_.fix(RepairRule::normalize_values, action->at, "normalized action=\"" + action->value + "\"");
        return Grasp{low == "open" ? GraspAction::open : GraspAction::close};
    }

    ExecTrajectory convert_trajectory(const Element& e) {
        ExecTrajectory exec;
        const XmlAttribute* stiffness = nullptr;
        for (const auto& attr : e.attributes) {
            if (attr.name == "stiffness") stiffness = &attr;
            else drop_attribute(attr, "ExecTrajectory");
        }
        if (!stiffness) {
            diag_.fix(RepairRule::normalize_values, e.at, "added default stiffness=\"medium\" to <ExecTrajectory>");
        } else {
            const auto low = lower_copy(stiffness->value);
            if (low == "low") exec.stiffness = Stiffness::low;
            else if (low == "medium") exec.stiffness = Stiffness::medium;
            else if (low == "high") exec.stiffness = Stiffness::high;
            else diag_.fail(stiffness->at, "unknown stiffness \"" + stiffness->value + "\" (expected low, medium or high)");
            if (low != stiffness->value)
                diag_.fix(RepairRule::normalize_values, stiffness->at, "normalized stiffness=\"" + stiffness->value + "\"");
        }

        std::vector<std::string> seen;
        bool consecutive = true;
        for (const auto& child : e.children) {
            if (child.tag != Tag::target_pose)
                diag_.fail(child.at, "<" + child.name + "> inside <ExecTrajectory>");
            auto [entry, index_text] = convert_target(child);
            const auto expected_index = std::to_string(exec.targets.size());
            if (index_text != expected_index) consecutive = false;
            seen.push_back(index_text.empty() ? "?" : index_text);
            entry.index = static_cast<int>(exec.targets.size());
            exec.targets.push_back(std::move(entry));
        }
        if (exec.targets.empty()) diag_.fail(e.at, "<ExecTrajectory> has no <TargetPose> entries");
        if (!consecutive) {
            std::string from, to;
            for (std::size_t i = 0; i < seen.size(); ++i) {
                from += (i ? "," : "") + seen[i];
                to += (i ? "," : "") + std::to_string(i);
            }
            diag_.fix(RepairRule::renumber, e.at, "renumbered target-pose indices " + from + " to " + to);
        }
        return exec;
    }

    std::pair<TargetEntry, std::string> convert_target(const Element& e) {
        if (!e.children.empty()) diag_.fail(e.at, "<TargetPose> cannot contain elements");
        TargetEntry entry;
        std::string index_text;
        const XmlAttribute *desc = nullptr, *p = nullptr, *q = nullptr;
        for (const auto& attr : e.attributes) {
            if (attr.name == "i") {
                index_text = attr.value;
                if (const auto v = parse_number(attr.value); v && *v == std::floor(*v))
                    index_text = std::to_string(static_cast<long long>(*v));
            } else if (attr.name == "duration") {
                const auto v = parse_number(attr.value);
                if (!v || !(*v > 0.0)) diag_.fail(attr.at, "duration must be a positive number of seconds");
                entry.duration = *v;
            } else if (attr.name == "desc") {
                desc = &attr;
            } else if (attr.name == "p") {
                p = &attr;
            } else if (attr.name == "q") {
                q = &attr;
            } else {
                drop_attribute(attr, "TargetPose");
            }
        }
        if (index_text.empty() && diag_.strict()) diag_.fail(e.at, "<TargetPose> lacks the index attribute i");

        if (variant_ == Variant::semantic) {
            if (!desc) {
                if (p || q) mixed(e.at, "numeric pose in a semantic tree");
                diag_.fail(e.at, "<TargetPose> lacks the desc attribute");
            }
            for (const auto* numeric : {p, q})
                if (numeric) {
                    if (diag_.strict()) mixed(numeric->at, "numeric pose in a semantic tree");
                    drop_attribute(*numeric, "TargetPose");
                }
            try {
                entry.pose = parse_desc(desc->value);
            } catch (const ValidationError& err) {
                diag_.fail(desc->at, err.what());
            }
        } else {
            if (!p || !q) {
                if (desc) mixed(e.at, "semantic description in an executable tree");
                diag_.fail(e.at, "<TargetPose> needs both p and q");
            }
            if (desc) {
                if (diag_.strict()) mixed(desc->at, "semantic description in an executable tree");
                drop_attribute(*desc, "TargetPose");
            }
            const auto position = parse_numbers(p->value, 3);
            if (!position) diag_.fail(p->at, "p must hold three numbers \"x y z\"");
            const auto quat = parse_numbers(q->value, 4);
            if (!quat) diag_.fail(q->at, "q must hold four numbers \"w x y z\"");
            Quaternion qq((*quat)[0], (*quat)[1], (*quat)[2], (*quat)[3]);
            if (std::abs(qq.norm() - 1.0) > 1e-6) diag_.fail(q->at, "q is not a unit quaternion");
            if (std::abs(qq.norm() - 1.0) > 1e-12) qq.normalize();
            entry.pose = NumericPose{Vec3((*position)[0], (*position)[1], (*position)[2]), qq};
        }
        return {std::move(entry), index_text};
    }

    [[noreturn]] void mixed(Location at, const std::string& what) {
        if (diag_.strict())
            throw VariantError("line " + std::to_string(at.line) + ", column " + std::to_string(at.column) + ": " + what);
        diag_.fail(at, what);
    }

    Diagnostics& diag_;
    std::optional<Variant> expected_;
    Variant variant_ = Variant::executable;
};

inline void write_node(std::ostream& out, const Node& node, int depth) {
    const std::string indent(static_cast<std::size_t>(depth) * 2, ' ');
    if (const auto* seq = node.sequence()) {
        out << indent << "<Sequence>\n";
        for (const auto& child : seq->children) write_node(out, child, depth + 1);
        out << indent << "</Sequence>\n";
    } else if (const auto* grasp = node.grasp()) {
        out << indent << "<Grasp action=\"" << to_string(grasp->action) << "\"/>\n";
    } else if (const auto* exec = node.trajectory()) {
        out << indent << "<ExecTrajectory stiffness=\"" << to_string(exec->stiffness) << "\">\n";
        for (const auto& t : exec->targets) {
            out << indent << "  <TargetPose i=\"" << t.index << "\" duration=\"" << format_number(t.duration) << '"';
            if (t.is_semantic()) {
                out << " desc=\"" << escape_xml(format_desc(t.semantic())) << '"';
            } else {
                const Quaternion& qq = t.numeric().orientation;
                const Vec3& pp = t.numeric().position;
                out << " p=\"" << format_number(pp.x()) << ' ' << format_number(pp.y()) << ' ' << format_number(pp.z())
                    << "\" q=\"" << format_number(qq.w()) << ' ' << format_number(qq.x()) << ' '
                    << format_number(qq.y()) << ' ' << format_number(qq.z()) << '"';
            }
            out << "/>\n";
        }
        out << indent << "</ExecTrajectory>\n";
    }
}

} // namespace detail

inline std::string to_xml(const BehaviorTree& tree) {
    std::ostringstream out;
    out << "<BehaviorTree variant=\"" << to_string(tree.variant) << "\">\n";
    detail::write_node(out, tree.root, 1);
    out << "</BehaviorTree>\n";
    return out.str();
}

namespace detail {

inline BehaviorTree parse_tree(std::string_view xml, Diagnostics& diag, std::optional<Variant> expected) {
    XmlLexer lexer(xml, diag);
    const auto tokens = lexer.tokenize();
    ElementBuilder builder(diag);
    const auto document = builder.build(tokens);
    TreeConverter converter(diag, expected);
    auto tree = converter.convert(document);
    validate(tree);
    return tree;
}

} // namespace detail

/// Strict parse of canonical XML. Any deviation is a ParseError with its location.
inline BehaviorTree from_xml(std::string_view xml, std::optional<Variant> expected = std::nullopt) {
    Diagnostics diag(true);
    return detail::parse_tree(xml, diag, expected);
}

} // namespace demoplan::bt
