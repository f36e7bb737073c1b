#include "http_api.hpp"

#include "httplib.h"
#include "json.hpp"

#include <functional>

namespace dubsynth_http {

using json = nlohmann::json;

int http_status(ds_status s) {
    switch (s) {
    case DS_OK: return 200;
    case DS_INVALID_ARGUMENT:
    case DS_PARSE:
    case DS_FRAGMENT:
    case DS_VALIDATION: return 400;
    case DS_DOMAIN: return 422;
    case DS_PHASE:
    case DS_STALE: return 409;
    case DS_NOT_FOUND: return 404;
    case DS_LIMIT: return 413;
    case DS_IO:
    case DS_INTERNAL: return 500;
    }
    return 500;
}

namespace {

void reply(httplib::Response &res, ds_status st, char *body, int ok_code = 200) {
    if (st == DS_OK) {
        res.status = ok_code;
        res.set_content(body, "application/json");
        ds_string_free(body);
        return;
    }
    const json err = {{"schema", "dubsynth.error/1"},
                      {"status", ds_status_name(st)},
                      {"message", ds_last_error()}};
    res.status = http_status(st);
    res.set_content(err.dump(), "application/json");
}

}  // namespace

Api::Api(ds_service *service, std::string scenario_root)
    : service_(service), root_(std::move(scenario_root)), server_(std::make_unique<httplib::Server>()) {
    routes();
}

Api::~Api() = default;

void Api::routes() {
    httplib::Server &srv = *server_;
    srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                             {"Access-Control-Allow-Headers", "Content-Type"}});
    srv.Options(R"(/.*)", [](const httplib::Request &, httplib::Response &res) { res.status = 204; });

    srv.Get("/health", [](const httplib::Request &, httplib::Response &res) {
        res.set_content(json{{"schema", "dubsynth.health/1"}, {"version", ds_version()}}.dump(),
                        "application/json");
    });

    srv.Post("/sessions", [this](const httplib::Request &req, httplib::Response &res) {
        ds_scenario *sc = nullptr;
        ds_status st = ds_scenario_parse(req.body.c_str(), root_.c_str(), &sc);
        if (st != DS_OK)
            return reply(res, st, nullptr);
        char *out = nullptr;
        st = ds_session_create(service_, sc, &out);
        ds_scenario_free(sc);
        reply(res, st, out, 201);
    });

    srv.Get("/sessions", [this](const httplib::Request &, httplib::Response &res) {
        char *out = nullptr;
        const ds_status st = ds_session_list(service_, &out);
        reply(res, st, out);
    });

    srv.Get(R"(/sessions/([^/]+))", [this](const httplib::Request &req, httplib::Response &res) {
        char *out = nullptr;
        const ds_status st = ds_session_get(service_, req.matches[1].str().c_str(), &out);
        reply(res, st, out);
    });

    srv.Get(R"(/sessions/([^/]+)/candidates)",
            [this](const httplib::Request &req, httplib::Response &res) {
                long limit = 5;
                if (req.has_param("limit")) {
                    try {
                        limit = std::stol(req.get_param_value("limit"));
                    } catch (const std::exception &) {
                        limit = -1;
                    }
                    if (limit < 0) {
                        res.status = 400;
                        res.set_content(json{{"schema", "dubsynth.error/1"},
                                             {"status", "invalid_argument"},
                                             {"message", "limit must be a non-negative integer"}}
                                            .dump(),
                                        "application/json");
                        return;
                    }
                }
                char *out = nullptr;
                const ds_status st = ds_session_candidates(service_, req.matches[1].str().c_str(),
                                                           static_cast<size_t>(limit), &out);
                reply(res, st, out);
            });

    using Call = ds_status (*)(ds_service *, const char *, const char *, char **);
    auto post = [this, &srv](const char *pattern, Call call) {
        srv.Post(pattern, [this, call](const httplib::Request &req, httplib::Response &res) {
            char *out = nullptr;
            const ds_status st = call(service_, req.matches[1].str().c_str(), req.body.c_str(), &out);
            reply(res, st, out);
        });
    };
    post(R"(/sessions/([^/]+)/accept)", ds_session_accept);
    post(R"(/sessions/([^/]+)/step)", ds_session_step);
    post(R"(/sessions/([^/]+)/event)", ds_session_event);
}

bool Api::listen(const std::string &host, int port) {
    return server_->listen(host, port);
}

int Api::bind_any_port(const std::string &host) {
    return server_->bind_to_any_port(host);
}

bool Api::listen_after_bind() {
    return server_->listen_after_bind();
}

void Api::stop() {
    server_->stop();
}

}  // namespace dubsynth_http
