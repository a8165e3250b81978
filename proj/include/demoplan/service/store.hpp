#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "demoplan/core/recording.hpp"
#include "demoplan/refiner/session.hpp"

namespace demoplan::service {

namespace fs = std::filesystem;

/// Returns the timestamp stamped on records.
using Clock = std::function<std::string()>;

inline std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Called at named points of a write; tests throw from it to simulate a crash.
using CrashHook = std::function<void(const std::string& stage)>;

/// Writes `data` next to `path`, flushes it to disk and renames it over `path`.
inline void atomic_write(const fs::path& path, const std::string& data, const CrashHook& hook = {}) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
        out.flush();
        if (!out) throw Error("short write to " + tmp.string());
    }
    if (const int fd = ::open(tmp.c_str(), O_RDONLY); fd >= 0) {
        ::fsync(fd);
        ::close(fd);
    }
    if (hook) hook("written " + path.filename().string());
    fs::rename(tmp, path);
    if (hook) hook("renamed " + path.filename().string());
}

inline std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct SessionRecord {
    std::string id;
    std::string demonstration_id;
    std::string created;
    std::string updated;
    std::optional<nlohmann::json> scene;
    refiner::RefinementSession session;

    nlohmann::json to_json() const {
        return {{"id", id},
                {"demonstration_id", demonstration_id},
                {"created", created},
                {"updated", updated},
                {"scene", scene ? *scene : nlohmann::json(nullptr)},
                {"session", session.to_json()}};
    }

    static SessionRecord from_json(const nlohmann::json& j) {
        std::optional<nlohmann::json> scene;
        if (!j.at("scene").is_null()) scene = j.at("scene");
        return {j.at("id").get<std::string>(),       j.at("demonstration_id").get<std::string>(),
                j.at("created").get<std::string>(),  j.at("updated").get<std::string>(),
                std::move(scene),                     refiner::RefinementSession::from_json(j.at("session"))};
    }
};

/// Progress of the latest refinement request of a session.
struct RefinementStatus {
    enum class State { idle, pending, complete, failed };
    State state = State::idle;
    std::string request;
    std::optional<std::size_t> version;
    int error_status = 0; ///< HTTP status of the failure
    nlohmann::json error;  ///< failure body
};

inline std::string_view to_string(RefinementStatus::State s) {
    switch (s) {
    case RefinementStatus::State::idle: return "idle";
    case RefinementStatus::State::pending: return "pending";
    case RefinementStatus::State::complete: return "complete";
    case RefinementStatus::State::failed: return "failed";
    }
    return "idle";
}

/// Directory-backed store. Layout under the root:
///   demonstrations/<id>.jsonl
///   sessions/<id>/{session.json, recording.jsonl, v<j>.xml}
///   quarantine/<id>/...        entries that failed to load
/// session.json is the commit point of every change.
class SessionStore {
public:
    explicit SessionStore(fs::path root, Clock clock = utc_now) : root_(std::move(root)), clock_(std::move(clock)) {
        fs::create_directories(root_ / "demonstrations");
        fs::create_directories(root_ / "sessions");
        for (const auto& dir : fs::directory_iterator(root_ / "sessions")) {
            if (!dir.is_directory()) continue;
            for (const auto& f : fs::directory_iterator(dir.path()))
                if (f.path().extension() == ".tmp") fs::remove(f.path());
            const std::string id = dir.path().filename().string();
            try {
                auto record = SessionRecord::from_json(nlohmann::json::parse(read_text(dir.path() / "session.json")));
                if (record.id != id) throw SchemaError("record id " + record.id + " does not match its directory");
                auto entry = std::make_shared<Entry>();
                entry->snapshot = std::make_shared<const SessionRecord>(std::move(record));
                sessions_.emplace(id, std::move(entry));
            } catch (const std::exception& e) {
                quarantine(id, e.what());
            }
            bump(session_counter_, id, "session-");
        }
        for (const auto& f : fs::directory_iterator(root_ / "demonstrations"))
            bump(demo_counter_, f.path().stem().string(), "demo-");
    }

    const fs::path& root() const noexcept { return root_; }
    std::string now() const { return clock_(); }

    /// Messages about entries moved to quarantine since the store was opened.
    std::vector<std::string> quarantined() const {
        std::lock_guard lock(mutex_);
        return quarantine_log_;
    }

    void set_crash_hook(CrashHook hook) { hook_ = std::move(hook); }

    // ---- demonstrations ----------------------------------------------------------

    std::string add_demonstration(const Demonstration& demo) {
        std::string id;
        {
            std::lock_guard lock(mutex_);
            id = next_id("demo-", demo_counter_);
        }
        atomic_write(root_ / "demonstrations" / (id + ".jsonl"), serialize_demonstration(demo), hook_);
        return id;
    }

    Demonstration demonstration(const std::string& id) const {
        const auto path = root_ / "demonstrations" / (id + ".jsonl");
        if (!valid_id(id) || !fs::exists(path)) throw NotFoundError("unknown demonstration " + id);
        return parse_demonstration(read_text(path));
    }

    // ---- sessions ----------------------------------------------------------------

    std::string create_session(const std::string& demonstration_id, refiner::RefinementSession session,
                               const Demonstration& demo) {
        std::string id;
        {
            std::lock_guard lock(mutex_);
            id = next_id("session-", session_counter_);
        }
        const std::string stamp = now();
        SessionRecord record{id, demonstration_id, stamp, stamp, std::nullopt, std::move(session)};
        fs::create_directories(root_ / "sessions" / id);
        atomic_write(root_ / "sessions" / id / "recording.jsonl", serialize_demonstration(demo), hook_);
        persist(record);
        auto entry = std::make_shared<Entry>();
        entry->snapshot = std::make_shared<const SessionRecord>(std::move(record));
        std::lock_guard lock(mutex_);
        sessions_.emplace(id, std::move(entry));
        return id;
    }

    /// Last committed state; never waits for a mutation in progress.
    std::shared_ptr<const SessionRecord> get(const std::string& id) const {
        auto entry = find(id);
        std::lock_guard lock(entry->snapshot_mutex);
        return entry->snapshot;
    }

    std::vector<std::string> session_ids() const {
        std::lock_guard lock(mutex_);
        std::vector<std::string> out;
        for (const auto& [id, e] : sessions_) out.push_back(id);
        return out;
    }

    /// Applies `change` to a copy of the record, persists it and publishes it.
    /// Mutations of one session are serialized. Throws ConflictError while a
    /// refinement is pending unless `during_refinement` is set.
    template <typename Change>
    std::shared_ptr<const SessionRecord> update(const std::string& id, Change&& change, bool during_refinement = false) {
        auto entry = find(id);
        std::lock_guard write(entry->write_mutex);
        if (!during_refinement && entry->status.state == RefinementStatus::State::pending)
            throw ConflictError("a refinement is in progress for session " + id);
        auto record = std::make_shared<SessionRecord>(*get(id));
        change(*record);
        record->updated = now();
        persist(*record);
        std::shared_ptr<const SessionRecord> published = record;
        std::lock_guard lock(entry->snapshot_mutex);
        entry->snapshot = published;
        return published;
    }

    /// Marks a refinement as in flight; ConflictError if one already is.
    void begin_refinement(const std::string& id, const std::string& request) {
        auto entry = find(id);
        std::lock_guard write(entry->write_mutex);
        if (entry->status.state == RefinementStatus::State::pending)
            throw ConflictError("a refinement is already in progress for session " + id);
        entry->status = {RefinementStatus::State::pending, request, std::nullopt, 0, nullptr};
    }

    void end_refinement(const std::string& id, RefinementStatus status) {
        auto entry = find(id);
        std::lock_guard write(entry->write_mutex);
        entry->status = std::move(status);
    }

    RefinementStatus refinement_status(const std::string& id) const {
        auto entry = find(id);
        std::lock_guard write(entry->write_mutex);
        return entry->status;
    }

private:
    struct Entry {
        mutable std::mutex write_mutex;
        mutable std::mutex snapshot_mutex;
        std::shared_ptr<const SessionRecord> snapshot;
        RefinementStatus status;
    };

    static bool valid_id(const std::string& id) {
        return !id.empty() && id.find_first_not_of("abcdefghijklmnopqrstuvwxyz0123456789-") == std::string::npos;
    }

    static void bump(std::size_t& counter, const std::string& id, const std::string& prefix) {
        if (id.rfind(prefix, 0) != 0) return;
        try {
            counter = std::max(counter, static_cast<std::size_t>(std::stoul(id.substr(prefix.size()))));
        } catch (const std::exception&) {
        }
    }

    static std::string next_id(const std::string& prefix, std::size_t& counter) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04zu", ++counter);
        return prefix + buf;
    }

    std::shared_ptr<Entry> find(const std::string& id) const {
        std::lock_guard lock(mutex_);
        const auto it = sessions_.find(id);
        if (it == sessions_.end()) throw NotFoundError("unknown session " + id);
        return it->second;
    }

    void persist(const SessionRecord& record) const {
        const auto dir = root_ / "sessions" / record.id;
        const auto& versions = record.session.versions();
        for (std::size_t j = 0; j < versions.size(); ++j) {
            const auto path = dir / ("v" + std::to_string(j) + ".xml");
            const auto xml = bt::to_xml(versions[j].tree);
            if (!fs::exists(path) || read_text(path) != xml) atomic_write(path, xml, hook_);
        }
        atomic_write(dir / "session.json", record.to_json().dump(2) + "\n", hook_);
        for (std::size_t j = versions.size(); fs::exists(dir / ("v" + std::to_string(j) + ".xml")); ++j)
            fs::remove(dir / ("v" + std::to_string(j) + ".xml"));
    }

    void quarantine(const std::string& id, const std::string& why) {
        fs::create_directories(root_ / "quarantine");
        auto target = root_ / "quarantine" / id;
        for (int n = 1; fs::exists(target); ++n) target = root_ / "quarantine" / (id + "." + std::to_string(n));
        fs::rename(root_ / "sessions" / id, target);
        quarantine_log_.push_back("session " + id + " quarantined: " + why);
    }

    fs::path root_;
    Clock clock_;
    CrashHook hook_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
    std::vector<std::string> quarantine_log_;
    std::size_t demo_counter_ = 0;
    std::size_t session_counter_ = 0;
};

} // namespace demoplan::service
