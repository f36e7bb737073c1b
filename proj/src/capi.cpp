#include "dubsynth/dubsynth.h"

#include "dubsynth/error.hpp"
#include "dubsynth/io.hpp"
#include "dubsynth/service.hpp"
#include "dubsynth/strategy.hpp"

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

using namespace dubsynth;

struct ds_scenario {
    Scenario s;
};

struct ds_model {
    Scenario scenario;
    std::shared_ptr<const TreeMdp> mdp;
    std::shared_ptr<const Solution> sol;
    double build_seconds = 0.0;
    double solve_seconds = 0.0;
};

struct ds_service {
    std::unique_ptr<Service> svc;
};

namespace {

thread_local std::string last_error;

ds_status status_of(ErrorKind k) {
    switch (k) {
    case ErrorKind::InvalidArgument: return DS_INVALID_ARGUMENT;
    case ErrorKind::Parse: return DS_PARSE;
    case ErrorKind::Fragment: return DS_FRAGMENT;
    case ErrorKind::Validation: return DS_VALIDATION;
    case ErrorKind::Domain: return DS_DOMAIN;
    case ErrorKind::Phase: return DS_PHASE;
    case ErrorKind::Stale: return DS_STALE;
    case ErrorKind::NotFound: return DS_NOT_FOUND;
    case ErrorKind::Io: return DS_IO;
    case ErrorKind::Limit: return DS_LIMIT;
    case ErrorKind::Internal: return DS_INTERNAL;
    }
    return DS_INTERNAL;
}

template <typename F>
ds_status guard(F &&f) {
    try {
        f();
        last_error.clear();
        return DS_OK;
    } catch (const ParseError &e) {
        last_error = std::string(e.what()) + " (line " + std::to_string(e.line()) + ", column " +
                     std::to_string(e.column()) + ")";
        return status_of(e.kind());
    } catch (const Error &e) {
        last_error = e.what();
        return status_of(e.kind());
    } catch (const json::exception &e) {
        last_error = e.what();
        return DS_INVALID_ARGUMENT;
    } catch (const std::bad_alloc &) {
        last_error = "out of memory";
        return DS_LIMIT;
    } catch (const std::exception &e) {
        last_error = e.what();
        return DS_INTERNAL;
    } catch (...) {
        last_error = "unknown failure";
        return DS_INTERNAL;
    }
}

char *dup(const std::string &s) {
    char *p = static_cast<char *>(std::malloc(s.size() + 1));
    if (!p)
        throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

void put(char **out, const json &doc) {
    *out = dup(doc.dump());
}

void need(const void *p, const char *what) {
    if (!p)
        fail(ErrorKind::InvalidArgument, std::string(what) + " is null");
}

json parse_request(const char *text) {
    if (!text || !*text)
        return json::object();
    try {
        return json::parse(text);
    } catch (const json::exception &e) {
        fail(ErrorKind::InvalidArgument, std::string("request is not JSON: ") + e.what());
    }
}

json word_to_json(const Word &w, const std::vector<std::string> &props) {
    json letters = json::array();
    for (PropSet o : w.letters) {
        json letter = json::array();
        for (std::size_t i = 0; i < props.size(); ++i) {
            if (o & (PropSet{1} << i))
                letter.push_back(props[i]);
        }
        letters.push_back(std::move(letter));
    }
    return letters;
}

}  // namespace

extern "C" {

const char *ds_version(void) {
    return "1.0.0";
}

const char *ds_status_name(ds_status status) {
    switch (status) {
    case DS_OK: return "ok";
    case DS_INVALID_ARGUMENT: return "invalid_argument";
    case DS_PARSE: return "parse";
    case DS_FRAGMENT: return "fragment";
    case DS_VALIDATION: return "validation";
    case DS_DOMAIN: return "domain";
    case DS_PHASE: return "phase";
    case DS_STALE: return "stale";
    case DS_NOT_FOUND: return "not_found";
    case DS_IO: return "io";
    case DS_LIMIT: return "limit";
    case DS_INTERNAL: return "internal";
    }
    return "unknown";
}

const char *ds_last_error(void) {
    return last_error.c_str();
}

void ds_string_free(char *s) {
    std::free(s);
}

ds_status ds_formula_check(const char *text, const char *const *propositions, size_t count,
                           char **out_json) {
    return guard([&] {
        need(text, "formula text");
        need(out_json, "out_json");
        const Formula f = parse_formula(text);
        if (propositions) {
            std::vector<std::string> props(propositions, propositions + count);
            const auto diags = validate(f, props);
            if (!diags.empty()) {
                std::string msg;
                for (const std::string &d : diags)
                    msg += (msg.empty() ? "" : "; ") + d;
                fail(ErrorKind::Validation, msg);
            }
        }
        put(out_json, formula_to_json(f));
    });
}

ds_status ds_scenario_load(const char *path, ds_scenario **out) {
    return guard([&] {
        need(path, "path");
        need(out, "out");
        *out = new ds_scenario{load_scenario(path)};
    });
}

ds_status ds_scenario_parse(const char *json_text, const char *base_dir, ds_scenario **out) {
    return guard([&] {
        need(json_text, "scenario text");
        need(out, "out");
        json doc;
        try {
            doc = json::parse(json_text);
        } catch (const json::exception &e) {
            fail(ErrorKind::Validation, std::string("scenario is not JSON: ") + e.what());
        }
        *out = new ds_scenario{scenario_from_json(doc, base_dir ? base_dir : "")};
    });
}

void ds_scenario_free(ds_scenario *scenario) {
    delete scenario;
}

ds_status ds_model_build(const ds_scenario *scenario, ds_model **out) {
    return guard([&] {
        need(scenario, "scenario");
        need(out, "out");
        auto m = std::make_unique<ds_model>();
        m->scenario = scenario->s;
        const auto t0 = std::chrono::steady_clock::now();
        m->mdp = std::make_shared<const TreeMdp>(build_scenario_mdp(
            scenario->s.vehicle, scenario->s.environment, scenario->s.absorbing, scenario->s.max_nodes));
        const auto t1 = std::chrono::steady_clock::now();
        m->sol = std::make_shared<const Solution>(solve(*m->mdp, scenario->s.formula));
        const auto t2 = std::chrono::steady_clock::now();
        m->build_seconds = std::chrono::duration<double>(t1 - t0).count();
        m->solve_seconds = std::chrono::duration<double>(t2 - t1).count();
        *out = m.release();
    });
}

void ds_model_free(ds_model *model) {
    delete model;
}

ds_status ds_model_summary(const ds_model *model, char **out_json) {
    return guard([&] {
        need(model, "model");
        need(out_json, "out_json");
        put(out_json, {{"schema", "dubsynth.model/1"},
                       {"scenario", model->scenario.name},
                       {"states", model->mdp->size()},
                       {"formula", print(model->sol->formula)},
                       {"lower", model->sol->lower},
                       {"upper", model->sol->upper},
                       {"build_seconds", model->build_seconds},
                       {"solve_seconds", model->solve_seconds}});
    });
}

ds_status ds_model_simulate(const ds_model *model, uint64_t seed, uint64_t trial, char **out_json) {
    return guard([&] {
        need(model, "model");
        need(out_json, "out_json");
        const Scenario &sc = model->scenario;
        const SimTrace tr = simulate(sc.environment, sc.vehicle, model->mdp, model->sol, seed, trial);
        json stages = json::array();
        for (const StageRecord &r : tr.stages) {
            stages.push_back({{"control", r.control},
                              {"eps", r.eps},
                              {"w", r.w},
                              {"cell", r.cell},
                              {"cursor", r.cursor},
                              {"satisfied_up_to", r.satisfied_up_to}});
        }
        json path = json::array();
        for (std::size_t k = 0; k < tr.positions.size(); k += kStageSamples / 32)
            path.push_back({tr.positions[k].t, tr.positions[k].p.x, tr.positions[k].p.y});
        put(out_json, {{"schema", "dubsynth.trace/1"},
                       {"seed", tr.seed},
                       {"trial", tr.trial},
                       {"stages", stages},
                       {"word", word_to_json(tr.word, sc.environment.propositions())},
                       {"satisfied", tr.satisfied},
                       {"satisfied_up_to", tr.satisfied_up_to},
                       {"finished", tr.finished},
                       {"path", path}});
    });
}

ds_status ds_model_estimate(const ds_model *model, uint64_t trials, uint64_t seed, unsigned threads,
                            char **out_json) {
    return guard([&] {
        need(model, "model");
        need(out_json, "out_json");
        const Scenario &sc = model->scenario;
        const Estimate e = estimate(sc.environment, sc.vehicle, model->mdp, model->sol, trials, seed, threads);
        put(out_json, {{"schema", kEstimateSchema},
                       {"scenario", sc.name},
                       {"seed", seed},
                       {"trials", e.trials},
                       {"successes", e.successes},
                       {"frequency", e.frequency},
                       {"wilson95", {e.wilson95.lo, e.wilson95.hi}},
                       {"lower", model->sol->lower},
                       {"upper", model->sol->upper}});
    });
}

ds_status ds_service_open(const char *data_dir, ds_service **out) {
    return guard([&] {
        need(data_dir, "data_dir");
        need(out, "out");
        *out = new ds_service{std::make_unique<Service>(data_dir)};
    });
}

void ds_service_close(ds_service *service) {
    delete service;
}

ds_status ds_session_create(ds_service *service, const ds_scenario *scenario, char **out_json) {
    return guard([&] {
        need(service, "service");
        need(scenario, "scenario");
        need(out_json, "out_json");
        put(out_json, service->svc->create_session(scenario->s));
    });
}

ds_status ds_session_list(ds_service *service, char **out_json) {
    return guard([&] {
        need(service, "service");
        need(out_json, "out_json");
        put(out_json, {{"sessions", service->svc->list()}});
    });
}

ds_status ds_session_get(ds_service *service, const char *id, char **out_json) {
    return guard([&] {
        need(service, "service");
        need(id, "id");
        need(out_json, "out_json");
        put(out_json, service->svc->get(id));
    });
}

ds_status ds_session_candidates(ds_service *service, const char *id, size_t limit, char **out_json) {
    return guard([&] {
        need(service, "service");
        need(id, "id");
        need(out_json, "out_json");
        put(out_json, service->svc->candidates(id, limit));
    });
}

ds_status ds_session_accept(ds_service *service, const char *id, const char *request_json,
                            char **out_json) {
    return guard([&] {
        need(service, "service");
        need(id, "id");
        need(out_json, "out_json");
        put(out_json, service->svc->accept(id, parse_request(request_json)));
    });
}

ds_status ds_session_step(ds_service *service, const char *id, const char *request_json,
                          char **out_json) {
    return guard([&] {
        need(service, "service");
        need(id, "id");
        need(out_json, "out_json");
        put(out_json, service->svc->step(id, parse_request(request_json)));
    });
}

ds_status ds_session_event(ds_service *service, const char *id, const char *rule_json,
                           char **out_json) {
    return guard([&] {
        need(service, "service");
        need(id, "id");
        need(rule_json, "rule_json");
        need(out_json, "out_json");
        put(out_json, service->svc->event(id, parse_request(rule_json)));
    });
}

}  // extern "C"
