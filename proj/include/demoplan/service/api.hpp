#pragma once

#include <algorithm>
#include <chrono>
#include <fstream>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "demoplan/harness/simulate.hpp"
#include "demoplan/segmentation/plan.hpp"
#include "demoplan/service/store.hpp"

namespace demoplan::service {

struct Response {
    int status = 200;
    nlohmann::json body;
    std::string route; ///< matched route template, e.g. "POST /sessions/{id}/refine"
};

/// Reads segmentation and codec settings; absent keys keep their defaults.
inline std::pair<segmentation::PlanConfig, semcodec::CodecConfig> plan_config_from_json(const nlohmann::json& j) {
    segmentation::PlanConfig plan;
    semcodec::CodecConfig codec;
    if (j.is_null()) return {plan, codec};
    if (!j.is_object()) throw SchemaError("config must be a JSON object");
    auto& w = plan.window;
    w.window_length = j.value("window_length", w.window_length);
    w.bins = j.value("bins", w.bins);
    w.mi_zero_tol = j.value("mi_zero_tol", w.mi_zero_tol);
    w.smoothing_halfwidth = j.value("smoothing_halfwidth", w.smoothing_halfwidth);
    w.min_prominence = j.value("min_prominence", w.min_prominence);
    w.prominence_fraction = j.value("prominence_fraction", w.prominence_fraction);
    plan.approach_threshold = j.value("approach_threshold", plan.approach_threshold);
    plan.lift_height = j.value("lift_height", plan.lift_height);
    plan.lift_duration = j.value("lift_duration", plan.lift_duration);
    plan.min_duration = j.value("min_duration", plan.min_duration);
    codec.z_th = j.value("z_th", codec.z_th);
    codec.z_above = j.value("z_above", codec.z_above);
    codec.z_below = j.value("z_below", codec.z_below);
    codec.eps_z = j.value("eps_z", codec.eps_z);
    w.validate();
    codec.validate();
    return {plan, codec};
}

/// The JSON API over a SessionStore. handle() is safe to call from many threads.
class Api {
public:
    Api(std::shared_ptr<SessionStore> store, std::shared_ptr<refiner::LLMBackend> backend,
        std::string guidelines = refiner::load_guidelines())
        : store_(std::move(store)), backend_(std::move(backend)), guidelines_(std::move(guidelines)) {}

    ~Api() {
        std::lock_guard lock(workers_mutex_);
        for (auto& t : workers_)
            if (t.joinable()) t.join();
    }

    Api(const Api&) = delete;
    Api& operator=(const Api&) = delete;

    SessionStore& store() { return *store_; }

    /// Appends every POST to a JSON-lines log that replay_request_log() can re-run.
    void record_requests(fs::path log) { request_log_ = std::move(log); }

    Response handle(const std::string& method, const std::string& path, const std::string& body) {
        Response r;
        try {
            r = dispatch(method, split(path), body);
        } catch (const NotFoundError& e) {
            r = error(404, "not_found", e.what());
        } catch (const ConflictError& e) {
            r = error(409, "conflict", e.what());
        } catch (const bt::RepairError& e) {
            r = error(422, "repair_failed", e.what());
            r.body["raw_output"] = e.raw_text();
        } catch (const TransportError& e) {
            r = error(502, "backend_unavailable", e.what());
        } catch (const nlohmann::json::exception& e) {
            r = error(400, "bad_request", std::string("malformed JSON body: ") + e.what());
        } catch (const Error& e) {
            r = error(422, "invalid", e.what());
        }
        if (r.route.empty()) r.route = method + " " + path;
        if (method == "POST" && !request_log_.empty()) {
            std::lock_guard lock(log_mutex_);
            std::ofstream out(request_log_, std::ios::app);
            out << nlohmann::json{{"method", method}, {"path", path}, {"body", body}}.dump() << '\n';
        }
        return r;
    }

    /// Blocks until no refinement of `session_id` is pending.
    void wait_idle(const std::string& session_id) {
        while (store_->refinement_status(session_id).state == RefinementStatus::State::pending)
            std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }

private:
    static std::vector<std::string> split(const std::string& path) {
        std::vector<std::string> out;
        std::string part;
        const auto q = path.find('?');
        for (char c : path.substr(0, q)) {
            if (c == '/') {
                if (!part.empty()) out.push_back(std::move(part));
                part.clear();
            } else {
                part += c;
            }
        }
        if (!part.empty()) out.push_back(std::move(part));
        return out;
    }

    static Response error(int status, const std::string& kind, const std::string& message) {
        return {status, {{"error", message}, {"kind", kind}}, {}};
    }

    static nlohmann::json parse_body(const std::string& body) {
        if (body.find_first_not_of(" \t\r\n") == std::string::npos) return nlohmann::json::object();
        auto j = nlohmann::json::parse(body);
        if (!j.is_object()) throw nlohmann::json::type_error::create(302, "request body must be a JSON object", nullptr);
        return j;
    }

    Response dispatch(const std::string& method, const std::vector<std::string>& p, const std::string& body) {
        const auto route = [&](const char* r) { return method + " " + r; };
        if (p.size() == 1 && p[0] == "health" && method == "GET") return {200, {{"status", "ok"}, {"backend", backend_->name()}}, route("/health")};
        if (p.size() == 1 && p[0] == "demonstrations" && method == "POST") return post_demonstration(body);
        if (p.size() == 2 && p[0] == "demonstrations" && method == "GET") return get_demonstration(p[1]);
        if (p.size() == 1 && p[0] == "plans" && method == "POST") return post_plan(parse_body(body));
        if (p.size() == 1 && p[0] == "sessions" && method == "GET") return {200, {{"sessions", store_->session_ids()}}, route("/sessions")};
        if (p.size() == 2 && p[0] == "sessions" && method == "GET") return get_session(p[1]);
        if (p.size() == 3 && p[0] == "sessions") {
            const auto& id = p[1];
            const auto& action = p[2];
            if (method == "POST" && action == "refine") return refine(id, parse_body(body));
            if (method == "GET" && action == "refinement") return refinement(id);
            if (method == "POST" && action == "restore") return restore(id);
            if (method == "POST" && action == "rate") return rate(id, parse_body(body));
            if (method == "POST" && action == "finalize") return finalize(id, parse_body(body));
            if (method == "POST" && action == "simulate") return simulate(id, parse_body(body));
        }
        if (known_path(p)) return error(405, "method_not_allowed", method + " is not supported on /" + join(p));
        throw NotFoundError("no route for " + method + " /" + join(p));
    }

    static bool known_path(const std::vector<std::string>& p) {
        static const std::vector<std::string> actions{"refine", "refinement", "restore", "rate", "finalize", "simulate"};
        if (p.size() == 1) return p[0] == "health" || p[0] == "demonstrations" || p[0] == "plans" || p[0] == "sessions";
        if (p.size() == 2) return p[0] == "demonstrations" || p[0] == "sessions";
        return p.size() == 3 && p[0] == "sessions" && std::find(actions.begin(), actions.end(), p[2]) != actions.end();
    }

    static std::string join(const std::vector<std::string>& p) {
        std::string out;
        for (const auto& s : p) out += (out.empty() ? "" : "/") + s;
        return out;
    }

    Response post_demonstration(const std::string& body) {
        const auto demo = parse_demonstration(body);
        const auto id = store_->add_demonstration(demo);
        return {201, {{"demonstration_id", id}, {"frames", demo.hand.size()}}, "POST /demonstrations"};
    }

    Response get_demonstration(const std::string& id) {
        const auto demo = store_->demonstration(id);
        nlohmann::json objects = nlohmann::json::array();
        for (const auto& [name, t] : demo.objects) objects.push_back(name);
        return {200,
                {{"demonstration_id", id},
                 {"frames", demo.hand.size()},
                 {"objects", objects},
                 {"manipulated", demo.manipulated},
                 {"background", demo.background}},
                "GET /demonstrations/{id}"};
    }

    Response post_plan(const nlohmann::json& j) {
        const auto demo_id = j.at("demonstration_id").get<std::string>();
        const auto demo = store_->demonstration(demo_id);
        const auto [plan_cfg, codec] = plan_config_from_json(j.contains("config") ? j["config"] : nlohmann::json());
        const auto plan = segmentation::generate_plan(demo, plan_cfg);
        auto session = refiner::RefinementSession::from_plan(plan.tree, demo.model(demo.background), guidelines_, codec);
        const auto sem0 = bt::to_xml(session.current().tree);
        const auto id = store_->create_session(demo_id, std::move(session), demo);
        nlohmann::json minima = nlohmann::json::array();
        for (const auto& k : plan.minima) minima.push_back(k.frame);
        return {201,
                {{"session_id", id},
                 {"sem_bt_0", sem0},
                 {"segmentation",
                  {{"interaction", {plan.interaction.first, plan.interaction.last}},
                   {"approach_frame", plan.approach.frame},
                   {"minima_frames", minima}}}},
                "POST /plans"};
    }

    static nlohmann::json version_json(const refiner::Version& v, std::size_t j) {
        return {{"version", j},
                {"request", v.request},
                {"rating", refiner::to_string(v.rating)},
                {"repair_log", v.repair_log},
                {"sem_bt", bt::to_xml(v.tree)}};
    }

    static nlohmann::json status_json(const RefinementStatus& s) {
        nlohmann::json j{{"status", to_string(s.state)}, {"request", s.request}};
        j["version"] = s.version ? nlohmann::json(*s.version) : nlohmann::json(nullptr);
        j["error"] = s.state == RefinementStatus::State::failed ? s.error : nlohmann::json(nullptr);
        return j;
    }

    Response get_session(const std::string& id) {
        const auto record = store_->get(id);
        const auto& s = record->session;
        nlohmann::json versions = nlohmann::json::array();
        for (std::size_t j = 0; j < s.versions().size(); ++j) versions.push_back(version_json(s.versions()[j], j));
        nlohmann::json audit = nlohmann::json::array();
        for (const auto& a : s.audit()) audit.push_back(version_json(a.version, a.position));
        return {200,
                {{"session_id", id},
                 {"demonstration_id", record->demonstration_id},
                 {"created", record->created},
                 {"updated", record->updated},
                 {"iteration", s.iteration()},
                 {"sem_bt", bt::to_xml(s.current().tree)},
                 {"versions", versions},
                 {"restored", audit},
                 {"ratings", s.ratings_report()},
                 {"refinement", status_json(store_->refinement_status(id))}},
                "GET /sessions/{id}"};
    }

    /// Calls the backend for `request` and commits the answer.
    Response run_refinement(const std::string& id, const std::string& request, const refiner::Prompt& prompt) {
        Response r;
        try {
            const auto raw = backend_->complete(prompt);
            const auto record = store_->update(id, [&](SessionRecord& rec) { rec.session.accept(request, raw); }, true);
            const auto j = record->session.iteration();
            r = {200, version_json(record->session.current(), j), {}};
            store_->end_refinement(id, {RefinementStatus::State::complete, request, j, 0, nullptr});
        } catch (const bt::RepairError& e) {
            r = error(422, "repair_failed", e.what());
            r.body["raw_output"] = e.raw_text();
        } catch (const TransportError& e) {
            r = error(502, "backend_unavailable", e.what());
        } catch (const std::exception& e) {
            r = error(422, "invalid", e.what());
        }
        if (r.status != 200) store_->end_refinement(id, {RefinementStatus::State::failed, request, std::nullopt, r.status, r.body});
        r.route = "POST /sessions/{id}/refine";
        return r;
    }

    Response refine(const std::string& id, const nlohmann::json& j) {
        const auto request = j.at("request").get<std::string>();
        const bool async = j.value("async", false);
        store_->begin_refinement(id, request);
        refiner::Prompt prompt;
        try {
            prompt = store_->get(id)->session.build_prompt(request);
        } catch (...) {
            store_->end_refinement(id, {});
            throw;
        }
        if (!async) return run_refinement(id, request, prompt);
        std::lock_guard lock(workers_mutex_);
        workers_.emplace_back([this, id, request, prompt] { run_refinement(id, request, prompt); });
        return {202, status_json(store_->refinement_status(id)), "POST /sessions/{id}/refine"};
    }

    Response refinement(const std::string& id) {
        return {200, status_json(store_->refinement_status(id)), "GET /sessions/{id}/refinement"};
    }

    Response restore(const std::string& id) {
        const auto record = store_->update(id, [](SessionRecord& rec) { rec.session.restore(); });
        return {200,
                {{"iteration", record->session.iteration()}, {"sem_bt", bt::to_xml(record->session.current().tree)}},
                "POST /sessions/{id}/restore"};
    }

    Response rate(const std::string& id, const nlohmann::json& j) {
        const auto version = j.at("version").get<std::size_t>();
        const auto rating = refiner::rating_from_string(j.at("rating").get<std::string>());
        store_->update(id, [&](SessionRecord& rec) { rec.session.rate(version, rating); });
        return {200, {{"version", version}, {"rating", refiner::to_string(rating)}}, "POST /sessions/{id}/rate"};
    }

    /// Scene from the body (remembered for later calls) or the one stored earlier.
    std::optional<harness::Scene> scene_for(const std::string& id, const nlohmann::json& j) {
        if (j.contains("scene")) {
            auto scene = harness::scene_from_json(j["scene"]);
            store_->update(id, [&](SessionRecord& rec) { rec.scene = harness::scene_to_json(scene); });
            return scene;
        }
        const auto record = store_->get(id);
        if (record->scene) return harness::scene_from_json(*record->scene);
        return std::nullopt;
    }

    Response finalize(const std::string& id, const nlohmann::json& j) {
        const auto scene = scene_for(id, j);
        const auto record = store_->get(id);
        const auto fin = record->session.finalize();
        nlohmann::json body{{"version", record->session.iteration()},
                            {"exe_bt", bt::to_xml(fin.tree)},
                            {"metadata", fin.metadata},
                            {"notes", fin.notes}};
        if (scene) {
            nlohmann::json waypoints = nlohmann::json::array();
            for (const auto& w : harness::plan_waypoints(fin.tree, *scene).waypoints) {
                const auto q = w.pose.quaternion();
                const auto t = w.pose.translation();
                waypoints.push_back({{"position", {t.x(), t.y(), t.z()}},
                                     {"orientation", {q.w(), q.x(), q.y(), q.z()}},
                                     {"duration", w.duration}});
            }
            body["waypoints"] = waypoints;
        }
        return {200, body, "POST /sessions/{id}/finalize"};
    }

    Response simulate(const std::string& id, const nlohmann::json& j) {
        const auto scene = scene_for(id, j);
        if (!scene) throw ValidationError("simulate needs a scene (none given and none stored for " + id + ")");
        const auto fin = store_->get(id)->session.finalize();
        harness::SimulationConfig cfg;
        cfg.timestep = j.value("timestep", cfg.timestep);
        cfg.contact_surface = j.value("contact_surface", cfg.contact_surface);
        cfg.contact_tolerance = j.value("contact_tolerance", cfg.contact_tolerance);
        const auto checks = harness::checks_from_json(j.contains("checks") ? j["checks"] : nlohmann::json::array());
        const auto trace = harness::simulate(harness::plan_waypoints(fin.tree, *scene), *scene, cfg);
        const auto report = harness::check_trace(trace, checks);
        nlohmann::json body{{"summary", harness::trace_summary(trace)}, {"report", harness::report_to_json(report)}};
        if (j.value("include_trace", false)) {
            nlohmann::json samples = nlohmann::json::array();
            for (const auto& s : trace.samples) {
                const auto t = s.pose.translation();
                samples.push_back({{"t", s.time}, {"position", {t.x(), t.y(), t.z()}}, {"contact", s.contact}, {"collision", s.collision}});
            }
            body["trace"] = samples;
        }
        return {200, body, "POST /sessions/{id}/simulate"};
    }

    std::shared_ptr<SessionStore> store_;
    std::shared_ptr<refiner::LLMBackend> backend_;
    std::string guidelines_;
    fs::path request_log_;
    std::mutex log_mutex_;
    std::mutex workers_mutex_;
    std::vector<std::thread> workers_;
};

/// Re-issues a request log written by Api::record_requests, waiting for each
/// asynchronous refinement before the next request.
inline std::vector<Response> replay_request_log(Api& api, const fs::path& log) {
    std::ifstream in(log);
    if (!in) throw Error("cannot open request log " + log.string());
    std::vector<Response> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto j = nlohmann::json::parse(line);
        const auto path = j.at("path").get<std::string>();
        out.push_back(api.handle(j.at("method").get<std::string>(), path, j.at("body").get<std::string>()));
        if (out.back().status == 202) {
            const auto parts = path.substr(1);
            const auto slash = parts.find('/');
            const auto next = parts.find('/', slash + 1);
            api.wait_idle(parts.substr(slash + 1, next - slash - 1));
        }
    }
    return out;
}

} // namespace demoplan::service
