#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "demoplan/harness/scenarios.hpp"
#include "demoplan/harness/simulate.hpp"
#include "demoplan/service/api.hpp"
#include "demoplan/service/server.hpp"

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

using namespace demoplan;
using nlohmann::json;

namespace {

std::string env_or(const char* name, std::string fallback) { return refiner::detail::getenv_or(name, fallback); }

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << text;
}

/// Flags shared by `generate` and `session create`; unset flags are left out
/// of the config so the library defaults apply.
struct ConfigFlags {
    std::optional<int> window, bins, smoothing;
    std::optional<double> mi_zero_tol, prominence, approach, lift_height, lift_duration, min_duration;
    std::optional<double> z_th, z_above, z_below, eps_z;

    void add(CLI::App& app) {
        app.add_option("--window", window, "MI window length in frames (odd)");
        app.add_option("--bins", bins, "histogram bins per axis");
        app.add_option("--smoothing", smoothing, "moving-average half width");
        app.add_option("--mi-zero", mi_zero_tol, "smoothed MI level treated as no interaction, bits");
        app.add_option("--prominence", prominence, "minimum prominence of an MI minimum, bits");
        app.add_option("--d-th", approach, "approach distance threshold, m");
        app.add_option("--lift-height", lift_height, "height of the lift pose, m");
        app.add_option("--lift-duration", lift_duration, "seconds to reach the lift pose");
        app.add_option("--min-duration", min_duration, "shortest segment duration, s");
        app.add_option("--z-th", z_th, "touching band half width, m");
        app.add_option("--z-above", z_above, "height used for 'above', m");
        app.add_option("--z-below", z_below, "height used for 'below', m");
        app.add_option("--eps-z", eps_z, "height used for 'touching', m");
    }

    json to_json() const {
        json j = json::object();
        const auto put = [&](const char* key, const auto& v) {
            if (v) j[key] = *v;
        };
        put("window_length", window);
        put("bins", bins);
        put("smoothing_halfwidth", smoothing);
        put("mi_zero_tol", mi_zero_tol);
        put("min_prominence", prominence);
        put("approach_threshold", approach);
        put("lift_height", lift_height);
        put("lift_duration", lift_duration);
        put("min_duration", min_duration);
        put("z_th", z_th);
        put("z_above", z_above);
        put("z_below", z_below);
        put("eps_z", eps_z);
        return j;
    }
};

/// Sends API calls either to an in-process Api over a store directory or to
/// a running `plan serve`.
struct Connection {
    std::string url;
    std::string store = env_or("DEMOPLAN_STORE", "demoplan-store");
    std::string backend = env_or("DEMOPLAN_BACKEND", "openai");
    std::unique_ptr<service::Api> local;

    service::Response call(const std::string& method, const std::string& path, const std::string& body) {
        if (url.empty()) {
            if (!local)
                local = std::make_unique<service::Api>(std::make_shared<service::SessionStore>(store),
                                                       refiner::make_backend(backend));
            return local->handle(method, path, body);
        }
        httplib::Client client(url);
        client.set_read_timeout(300);
        const auto res = method == "GET" ? client.Get(path) : client.Post(path, body, "application/json");
        if (!res) throw TransportError("cannot reach " + url + ": " + httplib::to_string(res.error()));
        return {res->status, json::parse(res->body, nullptr, false), method + " " + path};
    }

    /// Prints the body and turns error statuses into a non-zero exit.
    json expect(const std::string& method, const std::string& path, const std::string& body = "") {
        const auto r = call(method, path, body);
        if (r.status >= 400) {
            std::cerr << "error " << r.status << ": " << r.body.value("error", r.body.dump()) << "\n";
            if (r.body.contains("raw_output")) std::cerr << "--- model output ---\n" << r.body["raw_output"].get<std::string>() << "\n";
            throw CLI::RuntimeError(1);
        }
        return r.body;
    }
};

void print_version(const json& v) {
    for (const auto& line : v.value("repair_log", json::array())) std::cout << "repair: " << line.get<std::string>() << "\n";
    if (v.contains("sem_bt")) std::cout << v["sem_bt"].get<std::string>();
}

void chat(Connection& conn, const std::string& session) {
    const std::string path = "/sessions/" + session;
    std::cout << conn.expect("GET", path)["sem_bt"].get<std::string>();
    std::cout << "Type a request, or :restore, :rate <version> <rating>, :finalize, :show, :quit\n";
    std::string line;
    while (std::cout << "> " << std::flush, std::getline(std::cin, line)) {
        if (line.empty()) continue;
        try {
            if (line == ":quit" || line == ":q") break;
            if (line == ":show") {
                std::cout << conn.expect("GET", path)["sem_bt"].get<std::string>();
            } else if (line == ":restore") {
                print_version(conn.expect("POST", path + "/restore"));
            } else if (line == ":finalize") {
                std::cout << conn.expect("POST", path + "/finalize", "{}")["exe_bt"].get<std::string>();
            } else if (line.rfind(":rate", 0) == 0) {
                std::istringstream in(line.substr(5));
                std::size_t version = 0;
                std::string rating;
                if (!(in >> version >> rating)) {
                    std::cout << "usage: :rate <version> <satisfied|quite_satisfied|not_satisfied>\n";
                    continue;
                }
                conn.expect("POST", path + "/rate", json{{"version", version}, {"rating", rating}}.dump());
            } else {
                print_version(conn.expect("POST", path + "/refine", json{{"request", line}}.dump()));
            }
        } catch (const CLI::RuntimeError&) {
            // already reported; keep the loop alive
        }
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Demonstration-to-behavior-tree planning with language refinement"};
    app.require_subcommand(1);
    Connection conn;
    const auto add_connection = [&](CLI::App* cmd) {
        cmd->add_option("--store", conn.store, "session store directory (DEMOPLAN_STORE)");
        cmd->add_option("--backend", conn.backend, "mock:<script>, replay:<transcript> or openai (DEMOPLAN_BACKEND)");
        cmd->add_option("--url", conn.url, "talk to a running `plan serve` instead of the store");
    };

    // plan generate
    auto* gen = app.add_subcommand("generate", "segment a recording into an executable behavior tree");
    std::string demo_path, out_path, mi_csv, sem_out;
    ConfigFlags gen_flags;
    gen->add_option("--demo", demo_path, "recording (JSON lines)")->required()->check(CLI::ExistingFile);
    gen->add_option("--out", out_path, "executable tree XML")->required();
    gen->add_option("--mi-csv", mi_csv, "write the MI series (frame,raw,smoothed)");
    gen->add_option("--semantic-out", sem_out, "also write the semantic tree");
    gen_flags.add(*gen);

    // plan fixture
    auto* fix = app.add_subcommand("fixture", "write a synthetic recording and its scene");
    std::string fix_kind = "pouring", fix_out, fix_scene;
    std::uint64_t fix_seed = harness::kScenarioSeed;
    double fix_noise = harness::kScenarioNoise;
    fix->add_option("--kind", fix_kind, "pick_and_place, pouring or zigzag_cleaning");
    fix->add_option("--seed", fix_seed);
    fix->add_option("--noise", fix_noise, "position noise sigma, m");
    fix->add_option("--out", fix_out, "recording output")->required();
    fix->add_option("--scene-out", fix_scene, "scene JSON output");

    // plan simulate
    auto* sim = app.add_subcommand("simulate", "run an executable tree through the kinematic harness");
    std::string bt_path, scene_path, report_path, trace_csv, checks_path, surface;
    double timestep = 0.01, tolerance = 0.005;
    sim->add_option("--bt", bt_path, "executable tree XML")->required()->check(CLI::ExistingFile);
    sim->add_option("--scene", scene_path, "scene JSON")->required()->check(CLI::ExistingFile);
    sim->add_option("--report", report_path, "report JSON output")->required();
    sim->add_option("--trace-csv", trace_csv, "sampled trace output");
    sim->add_option("--checks", checks_path, "checks JSON (array)")->check(CLI::ExistingFile);
    sim->add_option("--contact-surface", surface, "surface name used for contact");
    sim->add_option("--timestep", timestep);
    sim->add_option("--contact-tolerance", tolerance);

    // plan serve
    auto* serve = app.add_subcommand("serve", "serve the JSON API over HTTP");
    std::string host = env_or("DEMOPLAN_HOST", "127.0.0.1"), request_log;
    int port = std::atoi(env_or("DEMOPLAN_PORT", "8080").c_str());
    serve->add_option("--host", host);
    serve->add_option("--port", port);
    serve->add_option("--request-log", request_log, "append every POST to this file");
    serve->add_option("--store", conn.store, "session store directory (DEMOPLAN_STORE)");
    serve->add_option("--backend", conn.backend, "mock:<script>, replay:<transcript> or openai (DEMOPLAN_BACKEND)");

    // plan upload / create / sessions / show / refine / status / restore / rate / finalize / chat
    auto* upload = app.add_subcommand("upload", "store a recording; prints its id");
    std::string upload_path;
    upload->add_option("file", upload_path)->required()->check(CLI::ExistingFile);
    add_connection(upload);

    auto* create = app.add_subcommand("create", "generate a plan for a stored recording and open a session");
    std::string create_demo;
    ConfigFlags create_flags;
    create->add_option("--demo-id", create_demo)->required();
    create_flags.add(*create);
    add_connection(create);

    auto* list = app.add_subcommand("sessions", "list sessions");
    add_connection(list);

    std::string session, request, rating, finalize_scene, finalize_out;
    std::size_t rate_version = 0;
    bool async = false;
    const auto session_cmd = [&](const char* name, const char* help) {
        auto* cmd = app.add_subcommand(name, help);
        cmd->add_option("--session", session)->required();
        add_connection(cmd);
        return cmd;
    };
    auto* show = session_cmd("show", "print a session as JSON");
    auto* refine = session_cmd("refine", "send one refinement request");
    refine->add_option("--request", request)->required();
    refine->add_flag("--async", async, "return immediately; poll with `plan status`");
    auto* status = session_cmd("status", "state of the latest refinement");
    auto* restore = session_cmd("restore", "drop the latest version");
    auto* rate = session_cmd("rate", "rate a version");
    rate->add_option("--version", rate_version)->required();
    rate->add_option("--rating", rating)->required()->check(CLI::IsMember({"satisfied", "quite_satisfied", "not_satisfied"}));
    auto* fin = session_cmd("finalize", "decode the current version into an executable tree");
    fin->add_option("--scene", finalize_scene, "scene JSON; adds world waypoints")->check(CLI::ExistingFile);
    fin->add_option("--out", finalize_out, "executable tree XML output");
    auto* chat_cmd = session_cmd("chat", "interactive refinement loop");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            const auto demo = load_demonstration(demo_path);
            const auto [plan_cfg, codec] = service::plan_config_from_json(gen_flags.to_json());
            const auto plan = segmentation::generate_plan(demo, plan_cfg);
            write_file(out_path, bt::to_xml(plan.tree));
            if (!sem_out.empty())
                write_file(sem_out, bt::to_xml(semcodec::encode_plan(plan.tree, demo.model(demo.background), codec).tree));
            if (!mi_csv.empty()) {
                std::ofstream csv(mi_csv);
                csv << "frame,raw,smoothed\n";
                csv.precision(17);
                for (std::size_t i = 0; i < plan.series.size(); ++i)
                    csv << plan.series.frames[i] << ',' << plan.series.raw[i] << ',' << plan.series.smoothed[i] << '\n';
            }
            std::cout << "interaction frames " << plan.interaction.first << ".." << plan.interaction.last << ", approach frame "
                      << plan.approach.frame << ", " << plan.minima.size() << " MI minima\n";
        } else if (*fix) {
            harness::FixtureParams params;
            params.noise_sigma = fix_noise;
            const auto kind = harness::fixture_kind_from_string(fix_kind);
            write_file(fix_out, serialize_demonstration(harness::generate_fixture(kind, params, fix_seed).demo));
            if (!fix_scene.empty()) write_file(fix_scene, harness::scene_to_json(harness::fixture_scene(kind)).dump(2) + "\n");
        } else if (*sim) {
            const auto tree = bt::from_xml(refiner::detail::read_file(bt_path), bt::Variant::executable);
            const auto scene = harness::load_scene(scene_path);
            harness::SimulationConfig cfg{timestep, surface, tolerance};
            const auto checks = checks_path.empty() ? std::vector<harness::Check>{harness::NoCollision{}}
                                                    : harness::checks_from_json(json::parse(refiner::detail::read_file(checks_path)));
            const auto trace = harness::simulate(harness::plan_waypoints(tree, scene), scene, cfg);
            const auto report = harness::check_trace(trace, checks);
            write_file(report_path, json{{"summary", harness::trace_summary(trace)}, {"report", harness::report_to_json(report)}}.dump(2) + "\n");
            if (!trace_csv.empty()) {
                std::ofstream csv(trace_csv);
                harness::write_trace_csv(csv, trace);
            }
            for (const auto& r : report.results) std::cout << (r.passed ? "pass " : "FAIL ") << r.name << " " << r.value << "\n";
            return report.passed() ? 0 : 1;
        } else if (*serve) {
            service::Api api(std::make_shared<service::SessionStore>(conn.store), refiner::make_backend(conn.backend));
            for (const auto& q : api.store().quarantined()) std::cerr << q << "\n";
            if (!request_log.empty()) api.record_requests(request_log);
            std::cerr << "listening on http://" << host << ":" << port << " (store " << conn.store << ")\n";
            if (!service::serve(api, host, port)) {
                std::cerr << "cannot bind " << host << ":" << port << "\n";
                return 1;
            }
        } else if (*upload) {
            std::cout << conn.expect("POST", "/demonstrations", refiner::detail::read_file(upload_path))["demonstration_id"].get<std::string>() << "\n";
        } else if (*create) {
            const auto body = conn.expect("POST", "/plans", json{{"demonstration_id", create_demo}, {"config", create_flags.to_json()}}.dump());
            std::cout << body["session_id"].get<std::string>() << "\n" << body["sem_bt_0"].get<std::string>();
        } else if (*list) {
            const auto body = conn.expect("GET", "/sessions");
            for (const auto& id : body["sessions"]) std::cout << id.get<std::string>() << "\n";
        } else if (*show) {
            std::cout << conn.expect("GET", "/sessions/" + session).dump(2) << "\n";
        } else if (*refine) {
            const auto body = conn.expect("POST", "/sessions/" + session + "/refine", json{{"request", request}, {"async", async}}.dump());
            if (async) std::cout << body.dump(2) << "\n";
            else print_version(body);
        } else if (*status) {
            std::cout << conn.expect("GET", "/sessions/" + session + "/refinement").dump(2) << "\n";
        } else if (*restore) {
            print_version(conn.expect("POST", "/sessions/" + session + "/restore"));
        } else if (*rate) {
            conn.expect("POST", "/sessions/" + session + "/rate", json{{"version", rate_version}, {"rating", rating}}.dump());
        } else if (*fin) {
            json req = json::object();
            if (!finalize_scene.empty()) req["scene"] = json::parse(refiner::detail::read_file(finalize_scene));
            const auto body = conn.expect("POST", "/sessions/" + session + "/finalize", req.dump());
            if (finalize_out.empty()) std::cout << body["exe_bt"].get<std::string>();
            else write_file(finalize_out, body["exe_bt"].get<std::string>());
            std::cout << body["metadata"].dump() << "\n";
        } else if (*chat_cmd) {
            chat(conn, session);
        }
    } catch (const CLI::RuntimeError& e) {
        return e.get_exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
