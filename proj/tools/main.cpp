// dubsynth command line: sessions under a data directory, Monte Carlo
// estimates, and the HTTP service.

#include "dubsynth/dubsynth.h"
#include "http_api.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>

using json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

struct Failure {
    int code;
    std::string message;
};

// Unwraps a status + JSON pair, throwing on failure.
json call(ds_status st, char **out) {
    if (st != DS_OK)
        throw Failure{kExitDomain, std::string(ds_status_name(st)) + ": " + ds_last_error()};
    json doc = json::parse(*out);
    ds_string_free(*out);
    *out = nullptr;
    return doc;
}

void emit(const json &doc, bool compact) {
    std::cout << doc.dump(compact ? -1 : 2) << "\n";
}

struct ServiceHandle {
    ds_service *h = nullptr;
    explicit ServiceHandle(const std::string &dir) {
        const ds_status st = ds_service_open(dir.c_str(), &h);
        if (st != DS_OK)
            throw Failure{kExitDomain, std::string(ds_status_name(st)) + ": " + ds_last_error()};
    }
    ~ServiceHandle() { ds_service_close(h); }
};

struct ScenarioHandle {
    ds_scenario *h = nullptr;
    explicit ScenarioHandle(const std::string &path) {
        const ds_status st = ds_scenario_load(path.c_str(), &h);
        if (st != DS_OK)
            throw Failure{kExitDomain, std::string(ds_status_name(st)) + ": " + ds_last_error()};
    }
    ~ScenarioHandle() { ds_scenario_free(h); }
};

struct ModelHandle {
    ds_model *h = nullptr;
    explicit ModelHandle(const ScenarioHandle &sc) {
        const ds_status st = ds_model_build(sc.h, &h);
        if (st != DS_OK)
            throw Failure{kExitDomain, std::string(ds_status_name(st)) + ": " + ds_last_error()};
    }
    ~ModelHandle() { ds_model_free(h); }
};

json summary(const json &session) {
    json s = {{"session", session.at("id")},
              {"phase", session.at("phase")},
              {"revision", session.at("revision")},
              {"formula", session.at("formula")},
              {"root", session.at("root")},
              {"bounds", session.at("bounds")}};
    if (!session.at("candidates").at("items").empty())
        s["candidates"] = session.at("candidates").at("items");
    if (!session.at("deployment").is_null()) {
        const json &d = session.at("deployment");
        s["stages"] = d.at("stages").size();
        s["verdict"] = d.at("verdict");
    }
    return s;
}

std::string read_text(const std::string &path) {
    if (path == "-")
        return {std::istreambuf_iterator<char>(std::cin), {}};
    std::ifstream in(path);
    if (!in)
        throw Failure{kExitDomain, "io: cannot open " + path};
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

dubsynth_http::Api *running = nullptr;

void on_signal(int) {
    if (running)
        running->stop();
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Policy synthesis and supervised renegotiation for a noisy Dubins vehicle"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string data_dir;
    if (const char *env = std::getenv("DUBSYNTH_DATA"))
        data_dir = env;
    else
        data_dir = "dubsynth-data";
    bool compact = false;
    app.add_option("--data-dir", data_dir, "Directory holding sessions and MDP snapshots");
    app.add_flag("--compact", compact, "Print JSON on one line");

    std::string scenario_path;
    bool no_session = false;
    auto *solve = app.add_subcommand("solve", "Build and solve a scenario, opening a session");
    solve->add_option("scenario", scenario_path, "Scenario file")->required();
    solve->add_flag("--no-session", no_session, "Only build and solve; print timings and bounds");

    std::string session_id;
    std::size_t limit = 5;
    auto *relax = app.add_subcommand("relax", "Enumerate relaxation candidates");
    relax->add_option("session", session_id)->required();
    relax->add_option("--limit", limit, "Number of candidates")->check(CLI::NonNegativeNumber);

    std::string candidate;
    bool deploy_flag = false;
    std::optional<std::uint64_t> seed;
    auto *accept = app.add_subcommand("accept", "Accept a candidate or keep the current formula");
    accept->add_option("session", session_id)->required();
    accept->add_option("candidate", candidate, "Candidate id or 'keep'")->required();
    accept->add_flag("--deploy", deploy_flag, "Deploy after accepting");
    accept->add_option("--seed", seed, "Deployment seed");

    int steps = 1;
    bool autorun = false;
    std::optional<double> eps;
    auto *deploy = app.add_subcommand("deploy", "Deploy a negotiated session and step it");
    deploy->add_option("session", session_id)->required();
    deploy->add_option("--seed", seed, "Deployment seed (required to start)");
    deploy->add_option("--steps", steps, "Stages to run")->check(CLI::NonNegativeNumber);
    deploy->add_flag("--auto", autorun, "Run until the deployment closes");
    deploy->add_option("--eps", eps, "External noise draw for a single stage");

    std::string rule_path;
    auto *event = app.add_subcommand("event", "Inject an environment event (update rule)");
    event->add_option("session", session_id)->required();
    event->add_option("rule", rule_path, "Rule JSON file, or - for stdin")->required();

    std::uint64_t trials = 2000;
    std::uint64_t sim_seed = 1;
    unsigned threads = 0;
    std::string trace_path;
    std::size_t trace_limit = 100;
    auto *simulate = app.add_subcommand("simulate", "Monte Carlo estimate of the satisfaction frequency");
    simulate->add_option("scenario", scenario_path)->required();
    simulate->add_option("--trials", trials)->check(CLI::PositiveNumber);
    simulate->add_option("--seed", sim_seed);
    simulate->add_option("--threads", threads);
    simulate->add_option("--trace", trace_path, "Write simulated traces as JSON lines");
    simulate->add_option("--trace-limit", trace_limit, "Traces written with --trace");

    auto *show = app.add_subcommand("show", "Print a session snapshot");
    show->add_option("session", session_id)->required();
    auto *list = app.add_subcommand("list", "List sessions");

    std::string formula_text;
    auto *check = app.add_subcommand("check", "Parse a formula and print its blocks");
    check->add_option("formula", formula_text)->required();

    std::string host = "127.0.0.1";
    int port = 8080;
    std::string scenario_root = ".";
    auto *serve = app.add_subcommand("serve", "Serve the HTTP/JSON session protocol");
    serve->add_option("--host", host);
    serve->add_option("--port", port);
    serve->add_option("--scenario-root", scenario_root,
                      "Base directory for relative environment paths in posted scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*solve) {
            ScenarioHandle sc(scenario_path);
            if (no_session) {
                ModelHandle model(sc);
                char *out = nullptr;
                emit(call(ds_model_summary(model.h, &out), &out), compact);
                return kExitOk;
            }
            ServiceHandle svc(data_dir);
            char *out = nullptr;
            emit(summary(call(ds_session_create(svc.h, sc.h, &out), &out)), compact);
        } else if (*relax) {
            ServiceHandle svc(data_dir);
            char *out = nullptr;
            emit(call(ds_session_candidates(svc.h, session_id.c_str(), limit, &out), &out), compact);
        } else if (*accept) {
            ServiceHandle svc(data_dir);
            json req = {{"candidate", candidate}, {"deploy", deploy_flag}};
            if (seed)
                req["seed"] = *seed;
            char *out = nullptr;
            emit(summary(call(ds_session_accept(svc.h, session_id.c_str(), req.dump().c_str(), &out), &out)),
                 compact);
        } else if (*deploy) {
            ServiceHandle svc(data_dir);
            char *out = nullptr;
            json session = call(ds_session_get(svc.h, session_id.c_str(), &out), &out);
            const std::string phase = session.at("phase");
            if (phase == "negotiating") {
                if (!seed)
                    throw Failure{kExitUsage, "deploy: --seed is required to start a deployment"};
                const json req = {{"candidate", "keep"}, {"deploy", true}, {"seed", *seed}};
                call(ds_session_accept(svc.h, session_id.c_str(), req.dump().c_str(), &out), &out);
            } else if (phase == "deployed") {
                if (seed && session.at("deployment").at("seed").get<std::uint64_t>() != *seed)
                    throw Failure{kExitDomain, "phase: deployment is already seeded with " +
                                                   session.at("deployment").at("seed").dump()};
            } else {
                throw Failure{kExitDomain, "phase: cannot deploy while the session is " + phase};
            }
            if (eps && (autorun || steps != 1))
                throw Failure{kExitUsage, "deploy: --eps drives exactly one stage"};
            json reports = json::array();
            std::string final_phase = "deployed";
            for (int k = 0; autorun || k < steps; ++k) {
                json req = json::object();
                if (eps)
                    req["eps"] = *eps;
                json r = call(ds_session_step(svc.h, session_id.c_str(), req.dump().c_str(), &out), &out);
                final_phase = r.at("phase");
                reports.push_back(std::move(r));
                if (final_phase != "deployed")
                    break;
            }
            emit({{"session", session_id}, {"phase", final_phase}, {"steps", reports}}, compact);
        } else if (*event) {
            ServiceHandle svc(data_dir);
            const std::string rule = read_text(rule_path);
            char *out = nullptr;
            json session = call(ds_session_event(svc.h, session_id.c_str(), rule.c_str(), &out), &out);
            json s = summary(session);
            for (const json &entry : session.at("log")) {
                if (entry.at("event") == "environment_event")
                    s["event"] = entry;
            }
            emit(s, compact);
        } else if (*simulate) {
            ScenarioHandle sc(scenario_path);
            ModelHandle model(sc);
            char *out = nullptr;
            emit(call(ds_model_estimate(model.h, trials, sim_seed, threads, &out), &out), compact);
            if (!trace_path.empty()) {
                std::ofstream f(trace_path);
                if (!f)
                    throw Failure{kExitDomain, "io: cannot write " + trace_path};
                for (std::uint64_t t = 0; t < trials && t < trace_limit; ++t)
                    f << call(ds_model_simulate(model.h, sim_seed, t, &out), &out).dump() << "\n";
            }
        } else if (*show) {
            ServiceHandle svc(data_dir);
            char *out = nullptr;
            emit(call(ds_session_get(svc.h, session_id.c_str(), &out), &out), compact);
        } else if (*list) {
            ServiceHandle svc(data_dir);
            char *out = nullptr;
            emit(call(ds_session_list(svc.h, &out), &out), compact);
        } else if (*check) {
            char *out = nullptr;
            emit(call(ds_formula_check(formula_text.c_str(), nullptr, 0, &out), &out), compact);
        } else if (*serve) {
            ServiceHandle svc(data_dir);
            dubsynth_http::Api api(svc.h, scenario_root);
            running = &api;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "listening on " << host << ":" << port << "\n";
            if (!api.listen(host, port)) {
                running = nullptr;
                throw Failure{kExitDomain, "io: cannot listen on " + host + ":" + std::to_string(port)};
            }
            running = nullptr;
        }
    } catch (const Failure &f) {
        std::cerr << "dubsynth: " << f.message << "\n";
        return f.code;
    } catch (const json::exception &e) {
        std::cerr << "dubsynth: " << e.what() << "\n";
        return kExitDomain;
    }
    return kExitOk;
}
