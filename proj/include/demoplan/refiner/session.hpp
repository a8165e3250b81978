#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "demoplan/btree/repair.hpp"
#include "demoplan/btree/xml.hpp"
#include "demoplan/core/recording.hpp"
#include "demoplan/refiner/backend.hpp"
#include "demoplan/semcodec/codec.hpp"

#ifndef DEMOPLAN_ASSET_DIR
#define DEMOPLAN_ASSET_DIR "assets"
#endif

namespace demoplan::refiner {

enum class Rating { unrated, not_satisfied, quite_satisfied, satisfied };

inline std::string_view to_string(Rating r) {
    switch (r) {
    case Rating::unrated: return "unrated";
    case Rating::not_satisfied: return "not_satisfied";
    case Rating::quite_satisfied: return "quite_satisfied";
    case Rating::satisfied: return "satisfied";
    }
    return "unrated";
}

inline Rating rating_from_string(std::string_view s) {
    for (auto r : {Rating::unrated, Rating::not_satisfied, Rating::quite_satisfied, Rating::satisfied})
        if (s == to_string(r)) return r;
    throw ValidationError("rating must be satisfied, quite_satisfied or not_satisfied, got \"" + std::string(s) + "\"");
}

/// Directory holding the shipped assets; DEMOPLAN_ASSETS overrides the build-time location.
inline std::filesystem::path asset_dir() {
    const char* env = std::getenv("DEMOPLAN_ASSETS");
    return env && *env ? std::filesystem::path(env) : std::filesystem::path(DEMOPLAN_ASSET_DIR);
}

inline constexpr const char* kGuidelinesVersion = "v1";

inline std::string load_guidelines(const std::string& version = kGuidelinesVersion) {
    return detail::read_file(asset_dir() / "guidelines" / (version + ".md"));
}

struct Version {
    bt::BehaviorTree tree;
    std::string request;
    std::string raw_output;
    std::vector<std::string> repair_log;
    Rating rating = Rating::unrated;

    friend bool operator==(const Version&, const Version&) = default;
};

/// A version taken out of the active lineage by restore.
struct AuditEntry {
    std::size_t position = 0; ///< index it held in the lineage
    Version version;

    friend bool operator==(const AuditEntry&, const AuditEntry&) = default;
};

struct Finalized {
    bt::BehaviorTree tree;
    std::vector<std::string> notes;
    nlohmann::json metadata;
};

/// Version history of one plan under refinement. versions()[0] is the plan
/// produced from the demonstration; every later version is an accepted LLM
/// answer to one request.
class RefinementSession {
public:
    RefinementSession(bt::BehaviorTree sem0, ObjectModel background, semcodec::Sidecar sidecar, std::string guidelines,
                      semcodec::CodecConfig codec = {})
        : background_(std::move(background)), sidecar_(std::move(sidecar)), guidelines_(std::move(guidelines)),
          codec_(codec) {
        if (sem0.variant != bt::Variant::semantic) throw bt::VariantError("a session starts from a semantic tree");
        bt::validate(sem0);
        semcodec::decode_plan(sem0, background_, codec_, sidecar_);
        versions_.push_back({std::move(sem0), {}, {}, {}, Rating::unrated});
    }

    /// Encodes an executable plan and opens a session on it.
    static RefinementSession from_plan(const bt::BehaviorTree& exe, const ObjectModel& background, std::string guidelines,
                                       semcodec::CodecConfig codec = {}) {
        auto enc = semcodec::encode_plan(exe, background, codec);
        return RefinementSession(std::move(enc.tree), background, std::move(enc.sidecar), std::move(guidelines), codec);
    }

    const std::vector<Version>& versions() const noexcept { return versions_; }
    const Version& current() const noexcept { return versions_.back(); }
    std::size_t iteration() const noexcept { return versions_.size() - 1; }
    const std::vector<AuditEntry>& audit() const noexcept { return audit_; }
    const ObjectModel& background() const noexcept { return background_; }
    const semcodec::Sidecar& sidecar() const noexcept { return sidecar_; }
    const std::string& guidelines() const noexcept { return guidelines_; }
    const semcodec::CodecConfig& codec() const noexcept { return codec_; }

    /// System text: guidelines plus the interaction-point labels. User text:
    /// the latest plan and the request verbatim.
    Prompt build_prompt(const std::string& request) const {
        if (request.find_first_not_of(" \t\r\n") == std::string::npos) throw ValidationError("request is empty");
        std::string system = guidelines_;
        if (!system.empty() && system.back() != '\n') system += '\n';
        system += "\nInteraction points of the " + background_.name() + ":\n";
        for (const auto& label : background_.labels()) system += "- " + label + "\n";
        std::string user = "Current plan:\n" + bt::to_xml(current().tree) + "\nInstruction:\n" + request + "\n";
        return {std::move(system), std::move(user), request};
    }

    /// Validates an LLM answer and appends it as the next version. Throws
    /// RepairError (history untouched) when it cannot become a valid plan.
    const Version& accept(const std::string& request, const std::string& raw_output) {
        if (request.find_first_not_of(" \t\r\n") == std::string::npos) throw ValidationError("request is empty");
        auto repaired = bt::validate_and_repair(raw_output, bt::Variant::semantic);
        auto log = std::move(repaired.log);
        canonicalize_labels(repaired.tree, raw_output, log);
        try {
            auto decoded = semcodec::decode_plan(repaired.tree, background_, codec_, sidecar_);
            log.insert(log.end(), decoded.notes.begin(), decoded.notes.end());
        } catch (const ValidationError& e) {
            throw bt::RepairError(e.what(), raw_output);
        }
        versions_.push_back({std::move(repaired.tree), request, raw_output, std::move(log), Rating::unrated});
        return versions_.back();
    }

    const Version& refine(const std::string& request, LLMBackend& backend) {
        const auto prompt = build_prompt(request);
        return accept(request, backend.complete(prompt));
    }

    /// Drops the latest version from the lineage; it stays in the audit trail.
    void restore() {
        if (iteration() == 0) throw ValidationError("nothing to restore");
        audit_.push_back({iteration(), std::move(versions_.back())});
        versions_.pop_back();
    }

    void rate(std::size_t version, Rating rating) {
        if (version == 0) throw ValidationError("version 0 has no request to rate");
        if (version > iteration())
            throw ValidationError("version " + std::to_string(version) + " does not exist (latest is " +
                                  std::to_string(iteration()) + ")");
        versions_[version].rating = rating;
    }

    /// Executable tree for the current version plus controller metadata.
    Finalized finalize() const {
        auto decoded = semcodec::decode_plan(current().tree, background_, codec_, sidecar_);
        Finalized out{std::move(decoded.tree), std::move(decoded.notes), nlohmann::json::object()};
        auto& stiffness = out.metadata["stiffness"] = nlohmann::json::array();
        bt::for_each_node(out.tree.root, [&](const bt::Node& node, const std::string& path) {
            if (const auto* exec = node.trajectory())
                stiffness.push_back({{"path", path},
                                     {"level", bt::to_string(exec->stiffness)},
                                     {"newton_per_meter", bt::stiffness_newton_per_meter(exec->stiffness)},
                                     {"targets", exec->targets.size()}});
        });
        out.metadata["version"] = iteration();
        return out;
    }

    /// One entry per rated version: request and rating.
    nlohmann::json ratings_report() const {
        nlohmann::json out = nlohmann::json::array();
        for (std::size_t j = 1; j < versions_.size(); ++j)
            if (versions_[j].rating != Rating::unrated)
                out.push_back({{"version", j}, {"request", versions_[j].request}, {"rating", to_string(versions_[j].rating)}});
        return out;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["guidelines"] = guidelines_;
        j["codec"] = {{"z_th", codec_.z_th}, {"z_above", codec_.z_above}, {"z_below", codec_.z_below}, {"eps_z", codec_.eps_z}};
        j["background"] = demoplan::detail::models_to_json({{background_.name(), background_}});
        j["sidecar"] = nlohmann::json::array();
        for (const auto& [key, entry] : sidecar_) {
            const auto& q = entry.original.orientation;
            const auto& p = entry.original.position;
            j["sidecar"].push_back({{"path", key.path},
                                    {"index", key.index},
                                    {"desc", format_desc(entry.triplet)},
                                    {"position", {p.x(), p.y(), p.z()}},
                                    {"orientation", {q.w(), q.x(), q.y(), q.z()}}});
        }
        j["versions"] = nlohmann::json::array();
        for (const auto& v : versions_) j["versions"].push_back(version_json(v));
        j["audit"] = nlohmann::json::array();
        for (const auto& a : audit_) j["audit"].push_back({{"position", a.position}, {"version", version_json(a.version)}});
        return j;
    }

    static RefinementSession from_json(const nlohmann::json& j) {
        try {
            semcodec::CodecConfig codec{j.at("codec").at("z_th").get<double>(), j.at("codec").at("z_above").get<double>(),
                                        j.at("codec").at("z_below").get<double>(), j.at("codec").at("eps_z").get<double>()};
            auto models = demoplan::detail::models_from_json(j.at("background"), 0);
            if (models.size() != 1) throw SchemaError("session must name exactly one background model");
            semcodec::Sidecar sidecar;
            for (const auto& e : j.at("sidecar")) {
                const auto& p = e.at("position");
                const auto& q = e.at("orientation");
                bt::NumericPose pose{Vec3(p[0].get<double>(), p[1].get<double>(), p[2].get<double>()),
                                     Quaternion(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>())};
                sidecar[{e.at("path").get<std::string>(), e.at("index").get<int>()}] = {parse_desc(e.at("desc").get<std::string>()), pose};
            }
            const auto& versions = j.at("versions");
            if (!versions.is_array() || versions.empty()) throw SchemaError("session has no versions");
            RefinementSession s(version_from_json(versions[0]).tree, models.begin()->second, std::move(sidecar),
                                j.at("guidelines").get<std::string>(), codec);
            s.versions_.clear();
            for (const auto& v : versions) s.versions_.push_back(version_from_json(v));
            for (const auto& a : j.at("audit"))
                s.audit_.push_back({a.at("position").get<std::size_t>(), version_from_json(a.at("version"))});
            return s;
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(std::string("malformed session record: ") + e.what());
        }
    }

private:
    static nlohmann::json version_json(const Version& v) {
        return {{"tree", bt::to_xml(v.tree)},
                {"request", v.request},
                {"raw_output", v.raw_output},
                {"repair_log", v.repair_log},
                {"rating", to_string(v.rating)}};
    }

    static Version version_from_json(const nlohmann::json& j) {
        return {bt::from_xml(j.at("tree").get<std::string>(), bt::Variant::semantic), j.at("request").get<std::string>(),
                j.at("raw_output").get<std::string>(), j.at("repair_log").get<std::vector<std::string>>(),
                rating_from_string(j.at("rating").get<std::string>())};
    }

    /// Rewrites labels that differ from a known one only in case, spacing or
    /// hyphenation; anything else is rejected.
    void canonicalize_labels(bt::BehaviorTree& tree, const std::string& raw, std::vector<std::string>& log) const {
        const auto key = [](std::string_view s) {
            return demoplan::detail::collapse_spaces(demoplan::detail::lower(demoplan::detail::trim(s)));
        };
        bt::for_each_node(tree.root, [&](bt::Node& node, const std::string& path) {
            auto* exec = node.trajectory();
            if (!exec) return;
            for (auto& entry : exec->targets) {
                auto triplet = entry.semantic();
                if (background_.find(triplet.ip_label)) continue;
                const InteractionPoint* match = nullptr;
                for (const auto& ip : background_.interaction_points())
                    if (key(ip.label) == key(triplet.ip_label)) match = &ip;
                if (!match) {
                    std::string valid;
                    for (const auto& label : background_.labels()) valid += (valid.empty() ? "" : ", ") + label;
                    throw bt::RepairError("target pose " + std::to_string(entry.index) + " at " + path +
                                              " names unknown interaction point \"" + triplet.ip_label +
                                              "\"; valid labels: " + valid,
                                          raw);
                }
                log.push_back("canonicalized interaction point \"" + triplet.ip_label + "\" to \"" + match->label + "\"");
                triplet.ip_label = match->label;
                entry.pose = triplet;
            }
        });
    }

    std::vector<Version> versions_;
    std::vector<AuditEntry> audit_;
    ObjectModel background_;
    semcodec::Sidecar sidecar_;
    std::string guidelines_;
    semcodec::CodecConfig codec_;
};

} // namespace demoplan::refiner
