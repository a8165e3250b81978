#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "demoplan/core/errors.hpp"

namespace demoplan::bt {

/// The LLM output could not be turned into a behavior tree. Carries the raw
/// text so it can be shown back to the user.
class RepairError : public Error {
public:
    RepairError(const std::string& what, std::string raw) : Error(what), raw_(std::move(raw)) {}
    const std::string& raw_text() const noexcept { return raw_; }

private:
    std::string raw_;
};

struct Location {
    std::size_t line = 1;
    std::size_t column = 1;
};

/// Repair rules in the order their log entries are reported.
enum class RepairRule {
    strip_prose = 0,
    close_tags = 1,
    drop_unknown = 2,
    normalize_values = 3,
    renumber = 4,
    wrap_orphans = 5,
    prune_empty = 6,
};

/// Receives every deviation from the canonical schema. In strict mode the
/// first one becomes a ParseError; otherwise fixable ones are logged and
/// unfixable ones raise RepairError.
class Diagnostics {
public:
    explicit Diagnostics(bool strict, std::string raw = {}) : strict_(strict), raw_(std::move(raw)) {}

    bool strict() const noexcept { return strict_; }

    void fix(RepairRule rule, Location at, const std::string& message) {
        if (strict_) throw ParseError(message, at.line, at.column);
        entries_.push_back({rule, message});
    }

    [[noreturn]] void fail(Location at, const std::string& message) const {
        if (strict_) throw ParseError(message, at.line, at.column);
        throw RepairError("irreparable behavior tree (line " + std::to_string(at.line) + "): " + message, raw_);
    }

    /// Log entries grouped by rule, document order within a rule.
    std::vector<std::string> log() const {
        auto sorted = entries_;
        std::stable_sort(sorted.begin(), sorted.end(),
                         [](const Entry& a, const Entry& b) { return a.rule < b.rule; });
        std::vector<std::string> out;
        for (const auto& e : sorted) out.push_back(e.message);
        return out;
    }

private:
    struct Entry {
        RepairRule rule;
        std::string message;
    };

    bool strict_;
    std::string raw_;
    std::vector<Entry> entries_;
};

struct XmlAttribute {
    std::string name;
    std::string value;
    Location at;
};

struct XmlToken {
    enum class Kind { open, close, text };
    Kind kind = Kind::text;
    std::string name; ///< tag name, or text content
    std::vector<XmlAttribute> attributes;
    bool self_closing = false;
    Location at;
};

namespace detail {

inline bool is_name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == ':'; }
inline bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == ':' || c == '-' || c == '.';
}

inline std::string decode_entities(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '&') {
            out += s[i];
            continue;
        }
        const auto semi = s.find(';', i);
        const auto entity = semi == std::string_view::npos ? std::string_view{} : s.substr(i + 1, semi - i - 1);
        if (entity == "amp") out += '&';
        else if (entity == "lt") out += '<';
        else if (entity == "gt") out += '>';
        else if (entity == "quot") out += '"';
        else if (entity == "apos") out += '\'';
        else {
            out += s[i];
            continue;
        }
        i = semi;
    }
    return out;
}

} // namespace detail

inline std::string escape_xml(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

/// Splits XML text into tags and text runs. Comments, processing
/// instructions and DOCTYPE declarations are skipped.
class XmlLexer {
public:
    XmlLexer(std::string_view text, Diagnostics& diag) : text_(text), diag_(diag) {}

    std::vector<XmlToken> tokenize() {
        std::vector<XmlToken> out;
        std::string pending;
        Location pending_at;
        auto flush_text = [&] {
            if (!pending.empty()) out.push_back({XmlToken::Kind::text, detail::decode_entities(pending), {}, false, pending_at});
            pending.clear();
        };
        while (pos_ < text_.size()) {
            if (starts_with("<!--")) {
                flush_text();
                skip_past("-->", "unterminated comment");
            } else if (starts_with("<![CDATA[")) {
                const auto at = here();
                const auto end = text_.find("]]>", pos_);
                if (end == std::string_view::npos) diag_.fail(at, "unterminated CDATA section");
                if (pending.empty()) pending_at = at;
                pending += text_.substr(pos_ + 9, end - pos_ - 9);
                advance_to(end + 3);
            } else if (starts_with("<?") || starts_with("<!")) {
                flush_text();
                skip_past(">", "unterminated declaration");
            } else if (starts_with("</") && pos_ + 2 < text_.size() && detail::is_name_start(text_[pos_ + 2])) {
                flush_text();
                out.push_back(closing_tag());
            } else if (text_[pos_] == '<' && pos_ + 1 < text_.size() && detail::is_name_start(text_[pos_ + 1])) {
                flush_text();
                out.push_back(opening_tag());
            } else {
                if (pending.empty()) pending_at = here();
                pending += text_[pos_];
                advance_to(pos_ + 1);
            }
        }
        flush_text();
        return out;
    }

private:
    bool starts_with(std::string_view s) const { return text_.substr(pos_, s.size()) == s; }

    Location here() const { return {line_, column_}; }

    void advance_to(std::size_t target) {
        while (pos_ < target && pos_ < text_.size()) {
            if (text_[pos_] == '\n') {
                ++line_;
                column_ = 1;
            } else {
                ++column_;
            }
            ++pos_;
        }
    }

    void skip_past(std::string_view terminator, const char* error) {
        const auto at = here();
        const auto end = text_.find(terminator, pos_);
        if (end == std::string_view::npos) diag_.fail(at, error);
        advance_to(end + terminator.size());
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) advance_to(pos_ + 1);
    }

    std::string name() {
        const auto start = pos_;
        while (pos_ < text_.size() && detail::is_name_char(text_[pos_])) advance_to(pos_ + 1);
        return std::string(text_.substr(start, pos_ - start));
    }

    XmlToken closing_tag() {
        XmlToken tok;
        tok.kind = XmlToken::Kind::close;
        tok.at = here();
        advance_to(pos_ + 2);
        tok.name = name();
        skip_space();
        if (pos_ >= text_.size() || text_[pos_] != '>') diag_.fail(tok.at, "malformed closing tag </" + tok.name);
        advance_to(pos_ + 1);
        return tok;
    }

    XmlToken opening_tag() {
        XmlToken tok;
        tok.kind = XmlToken::Kind::open;
        tok.at = here();
        advance_to(pos_ + 1);
        tok.name = name();
        while (true) {
            skip_space();
            if (pos_ >= text_.size()) diag_.fail(tok.at, "unterminated tag <" + tok.name);
            if (text_[pos_] == '>') {
                advance_to(pos_ + 1);
                return tok;
            }
            if (starts_with("/>")) {
                tok.self_closing = true;
                advance_to(pos_ + 2);
                return tok;
            }
            if (!detail::is_name_start(text_[pos_]))
                diag_.fail(here(), std::string("unexpected character '") + text_[pos_] + "' in tag <" + tok.name + ">");
            tok.attributes.push_back(attribute(tok.name));
        }
    }

    XmlAttribute attribute(const std::string& tag) {
        XmlAttribute attr;
        attr.at = here();
        attr.name = name();
        skip_space();
        if (pos_ >= text_.size() || text_[pos_] != '=')
            diag_.fail(attr.at, "attribute '" + attr.name + "' of <" + tag + "> has no value");
        advance_to(pos_ + 1);
        skip_space();
        if (pos_ < text_.size() && (text_[pos_] == '"' || text_[pos_] == '\'')) {
            const char quote = text_[pos_];
            const auto end = text_.find(quote, pos_ + 1);
            if (end == std::string_view::npos) diag_.fail(attr.at, "unterminated value of attribute '" + attr.name + "'");
            attr.value = detail::decode_entities(text_.substr(pos_ + 1, end - pos_ - 1));
            advance_to(end + 1);
            return attr;
        }
        const auto start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != '>' &&
               !starts_with("/>"))
            advance_to(pos_ + 1);
        if (start == pos_) diag_.fail(attr.at, "attribute '" + attr.name + "' of <" + tag + "> has no value");
        attr.value = detail::decode_entities(text_.substr(start, pos_ - start));
        diag_.fix(RepairRule::normalize_values, attr.at, "quoted the value of attribute '" + attr.name + "'");
        return attr;
    }

    std::string_view text_;
    Diagnostics& diag_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t column_ = 1;
};

} // namespace demoplan::bt
