#pragma once

#include <string>

#include <httplib.h>

#include "demoplan/service/api.hpp"

namespace demoplan::service {

/// Routes every request to `api`. Bodies are JSON except POST /demonstrations,
/// which takes the recording file as is.
inline void mount(httplib::Server& server, Api& api) {
    const auto forward = [&api](const httplib::Request& req, httplib::Response& res) {
        const auto r = api.handle(req.method, req.path, req.body);
        res.status = r.status;
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_content(r.body.dump(), "application/json");
    };
    server.Get(".*", forward);
    server.Post(".*", forward);
    server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });
}

/// Serves until the server is stopped. Returns false if the port cannot be bound.
inline bool serve(Api& api, const std::string& host, int port) {
    httplib::Server server;
    mount(server, api);
    return server.listen(host, port);
}

} // namespace demoplan::service
