#include "dubsynth/service.hpp"

#include "dubsynth/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace dubsynth {

const char *to_string(Phase p) {
    switch (p) {
    case Phase::Negotiating: return "negotiating";
    case Phase::Deployed: return "deployed";
    case Phase::Renegotiating: return "renegotiating";
    case Phase::Closed: return "closed";
    }
    return "?";
}

Phase phase_from_string(std::string_view s) {
    for (Phase p : {Phase::Negotiating, Phase::Deployed, Phase::Renegotiating, Phase::Closed}) {
        if (s == to_string(p))
            return p;
    }
    fail(ErrorKind::Validation, "unknown phase '" + std::string(s) + "'");
}

double deployment_eps(std::uint64_t seed, int stage, double eps_max) {
    Rng rng(seed, 0);
    for (int k = 0; k < stage; ++k)
        rng.next();
    return rng.uniform(-eps_max, eps_max);
}

namespace {

std::vector<UpdateRule> relaxation_pool(const Formula &f, const std::vector<std::string> &props,
                                        int satisfied_up_to) {
    std::vector<UpdateRule> pool;
    for (int j = satisfied_up_to + 1; j <= static_cast<int>(f.size()); ++j) {
        const Block &b = f.blocks[j - 1];
        UpdateRule r;
        r.block = j;
        r.satisfied_up_to = satisfied_up_to;
        for (int m = 1; m <= static_cast<int>(b.phi.size()); ++m) {
            r.kind = RuleKind::RemovePhiClause;
            r.index = m;
            pool.push_back(r);
        }
        r.index = 0;
        if (b.threshold.p > 0.0) {
            r.kind = RuleKind::LowerThreshold;
            r.threshold = make_threshold(b.threshold.p / 2.0, b.threshold.strict);
            pool.push_back(r);
            r.threshold = make_threshold(0.0, true);
            pool.push_back(r);
        }
        r.threshold = {};
        std::set<std::string> used;
        for (const Clause &c : b.psi) {
            for (const ExtProp &e : c.literals)
                used.insert(e.base);
        }
        r.kind = RuleKind::AddPsiClause;
        for (const std::string &p : props) {
            if (used.contains(p))
                continue;
            r.clause = Clause::make(ClauseKind::Conjunction, {pos_literal(p)});
            pool.push_back(r);
        }
    }
    return pool;
}

}  // namespace

std::vector<Candidate> enumerate_relaxations(const Solution &current, const TreeMdp &m, int s_c,
                                             int satisfied_up_to, std::size_t limit) {
    if (limit == 0)
        return {};
    const double base = s_c == 0 && satisfied_up_to == 0
                            ? current.lower
                            : restrict_solution(current, m, s_c, satisfied_up_to).lower;
    std::vector<Candidate> out;
    for (const UpdateRule &r : relaxation_pool(current.formula, m.propositions, satisfied_up_to)) {
        Solution sol;
        try {
            sol = solve_incremental(current, m, s_c, r);
        } catch (const Error &e) {
            if (e.kind() != ErrorKind::Validation)
                throw;
            continue;
        }
        Candidate c;
        c.rule = r;
        c.formula = sol.formula;
        c.lower = sol.lower;
        c.upper = sol.upper;
        c.delta = sol.lower - base;
        if (c.delta < 0.0)
            continue;
        c.description = describe(r, current.formula);
        out.push_back(std::move(c));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Candidate &a, const Candidate &b) { return a.delta > b.delta; });
    if (out.size() > limit)
        out.resize(limit);
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k].id = "c" + std::to_string(k + 1);
    return out;
}

json candidate_to_json(const Candidate &c) {
    return {{"id", c.id},
            {"rule", rule_to_json(c.rule)},
            {"rule_number", rule_number(c.rule.kind)},
            {"direction", direction(c.rule) == Direction::Increase ? "increase" : "decrease"},
            {"description", c.description},
            {"formula", print(c.formula)},
            {"lower", c.lower},
            {"upper", c.upper},
            {"delta", c.delta}};
}

namespace {

Candidate candidate_from_json(const json &j) {
    Candidate c;
    c.id = j.at("id").get<std::string>();
    c.rule = rule_from_json(j.at("rule"));
    c.formula = parse_formula(j.at("formula").get<std::string>());
    c.lower = j.at("lower").get<double>();
    c.upper = j.at("upper").get<double>();
    c.delta = j.at("delta").get<double>();
    c.description = j.at("description").get<std::string>();
    return c;
}

json stage_to_json(const StageEntry &e) {
    return {{"stage", e.stage},
            {"control", e.control},
            {"eps", e.eps},
            {"w", e.w},
            {"cell", e.cell},
            {"cursor", e.cursor},
            {"satisfied_up_to", e.satisfied_up_to},
            {"lower", e.lower},
            {"upper", e.upper}};
}

StageEntry stage_from_json(const json &j) {
    StageEntry e;
    e.stage = j.at("stage").get<int>();
    e.control = j.at("control").get<int>();
    e.eps = j.at("eps").get<double>();
    e.w = j.at("w").get<double>();
    e.cell = j.at("cell").get<int>();
    e.cursor = j.at("cursor").get<int>();
    e.satisfied_up_to = j.at("satisfied_up_to").get<int>();
    e.lower = j.at("lower").get<double>();
    e.upper = j.at("upper").get<double>();
    return e;
}

json bounds_json(double lower, double upper) {
    return {{"lower", lower}, {"upper", upper}};
}

}  // namespace

json session_to_json(const Session &s) {
    json cands = json::array();
    for (const Candidate &c : s.candidates)
        cands.push_back(candidate_to_json(c));
    json dep = nullptr;
    if (s.deployment) {
        const Deployment &d = *s.deployment;
        json stages = json::array();
        for (const StageEntry &e : d.stages)
            stages.push_back(stage_to_json(e));
        dep = {{"seed", d.seed},
               {"pose", pose_to_json(d.pose)},
               {"stages", stages},
               {"segment_start", d.segment_start},
               {"verdict", d.verdict ? json(*d.verdict) : json(nullptr)}};
    }
    return {{"schema", kSessionSchema},
            {"id", s.id},
            {"phase", to_string(s.phase)},
            {"revision", s.revision},
            {"scenario", scenario_to_json(s.scenario)},
            {"mdp", {{"sha256", s.mdp_sha256}, {"path", "mdp/" + s.mdp_sha256 + ".json"}}},
            {"formula", print(s.formula)},
            {"root", s.root},
            {"bounds", bounds_json(s.lower, s.upper)},
            {"candidates", {{"revision", s.candidates_revision}, {"items", cands}}},
            {"deployment", dep},
            {"log", s.log}};
}

Session session_from_json(const json &doc) {
    try {
        if (doc.at("schema") != kSessionSchema)
            fail(ErrorKind::Validation, "unsupported session schema " + doc.at("schema").dump());
        Session s;
        s.id = doc.at("id").get<std::string>();
        s.phase = phase_from_string(doc.at("phase").get<std::string>());
        s.revision = doc.at("revision").get<int>();
        s.scenario = scenario_from_json(doc.at("scenario"), {});
        s.mdp_sha256 = doc.at("mdp").at("sha256").get<std::string>();
        s.formula = parse_formula(doc.at("formula").get<std::string>());
        s.root = doc.at("root").get<int>();
        s.lower = doc.at("bounds").at("lower").get<double>();
        s.upper = doc.at("bounds").at("upper").get<double>();
        s.candidates_revision = doc.at("candidates").at("revision").get<int>();
        for (const json &c : doc.at("candidates").at("items"))
            s.candidates.push_back(candidate_from_json(c));
        const json &dep = doc.at("deployment");
        if (!dep.is_null()) {
            Deployment d;
            d.seed = dep.at("seed").get<std::uint64_t>();
            d.pose = pose_from_json(dep.at("pose"));
            for (const json &e : dep.at("stages"))
                d.stages.push_back(stage_from_json(e));
            d.segment_start = dep.at("segment_start").get<std::size_t>();
            if (!dep.at("verdict").is_null())
                d.verdict = dep.at("verdict").get<bool>();
            s.deployment = std::move(d);
        }
        s.log = doc.at("log");
        return s;
    } catch (const json::exception &e) {
        fail(ErrorKind::Validation, std::string("session snapshot: ") + e.what());
    }
}

struct Service::Live {
    std::mutex mu;
    Session s;
    std::shared_ptr<const TreeMdp> mdp;
    std::shared_ptr<const TreeMdp> sub;  // M+ at s.root
    std::shared_ptr<const Solution> sol;
    std::unique_ptr<Strategy> strategy;
};

namespace {

template <typename F>
auto staged(const char *stage, F &&f) -> decltype(f()) {
    try {
        return f();
    } catch (const ParseError &e) {
        throw ParseError(std::string(stage) + ": " + e.what(), e.line(), e.column());
    } catch (const Error &e) {
        throw Error(e.kind(), std::string(stage) + ": " + e.what());
    }
}

double mission_time(const Session &s) {
    const std::size_t k = s.deployment ? s.deployment->stages.size() : 0;
    return static_cast<double>(k) * s.scenario.vehicle.dt;
}

void note(Session &s, json entry) {
    entry["seq"] = s.log.size() + 1;
    entry["t"] = mission_time(s);
    s.log.push_back(std::move(entry));
}

void require_phase(const Session &s, std::initializer_list<Phase> allowed, const char *op) {
    for (Phase p : allowed) {
        if (s.phase == p)
            return;
    }
    fail(ErrorKind::Phase,
         std::string(op) + " is not allowed while the session is " + to_string(s.phase));
}

// Rebuilds M+ and the solution from (root, formula).
void resolve_impl(std::shared_ptr<const TreeMdp> mdp, Session &s,
                  std::shared_ptr<const TreeMdp> &sub, std::shared_ptr<const Solution> &sol) {
    if (s.root == 0)
        sub = mdp;
    else
        sub = std::make_shared<const TreeMdp>(prune_from(*mdp, s.root).mdp);
    sol = std::make_shared<const Solution>(solve(*sub, s.formula));
}

std::unique_ptr<Strategy> replay(const Session &s, std::shared_ptr<const TreeMdp> sub,
                                 std::shared_ptr<const Solution> sol) {
    auto st = std::make_unique<Strategy>(std::move(sub), std::move(sol));
    const Deployment &d = *s.deployment;
    for (std::size_t k = d.segment_start; k < d.stages.size(); ++k) {
        const StageEntry &e = d.stages[k];
        st->observe_cell(e.control, e.cell);
        if (s.root + st->cursor() != e.cursor)
            fail(ErrorKind::Internal, "deployment replay diverged at stage " + std::to_string(e.stage));
    }
    return st;
}

}  // namespace

Service::Service(std::filesystem::path data_dir) : dir_(std::move(data_dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_ / "sessions", ec);
    std::filesystem::create_directories(dir_ / "mdp", ec);
    if (ec)
        fail(ErrorKind::Io, "cannot create data directory " + dir_.string() + ": " + ec.message());
}

Service::~Service() = default;

std::vector<std::string> Service::list() const {
    std::set<std::string> ids;
    {
        std::lock_guard lock(mu_);
        for (const auto &[id, live] : sessions_)
            ids.insert(id);
    }
    for (const auto &entry : std::filesystem::directory_iterator(dir_ / "sessions")) {
        const std::string name = entry.path().filename().string();
        if (name.ends_with(".json"))
            ids.insert(name.substr(0, name.size() - 5));
    }
    return {ids.begin(), ids.end()};
}

std::string Service::next_id() const {
    static const std::regex pat("s(\\d+)");
    int top = 0;
    for (const std::string &id : list()) {
        std::smatch m;
        if (std::regex_match(id, m, pat))
            top = std::max(top, std::stoi(m[1]));
    }
    char buf[16];
    std::snprintf(buf, sizeof buf, "s%04d", top + 1);
    return buf;
}

std::shared_ptr<const TreeMdp> Service::load_mdp(const std::string &sha) {
    {
        std::lock_guard lock(mu_);
        if (auto it = mdps_.find(sha); it != mdps_.end())
            return it->second;
    }
    const std::filesystem::path path = dir_ / "mdp" / (sha + ".json");
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(ErrorKind::NotFound, "MDP snapshot " + sha + " is missing from the data directory");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    if (sha256_hex(text) != sha)
        fail(ErrorKind::Io, "MDP snapshot " + sha + " does not match its content address");
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception &e) {
        fail(ErrorKind::Io, "MDP snapshot " + sha + ": " + e.what());
    }
    auto m = std::make_shared<const TreeMdp>(mdp_from_json(doc));
    std::lock_guard lock(mu_);
    return mdps_.emplace(sha, std::move(m)).first->second;
}

void Service::persist(const Live &live) const {
    write_json_file(dir_ / "sessions" / (live.s.id + ".json"), session_to_json(live.s), 1);
}

std::shared_ptr<Service::Live> Service::open(const std::string &id) {
    {
        std::lock_guard lock(mu_);
        if (auto it = sessions_.find(id); it != sessions_.end())
            return it->second;
    }
    static const std::regex pat("[A-Za-z0-9_-]+");
    if (!std::regex_match(id, pat))
        fail(ErrorKind::InvalidArgument, "malformed session id '" + id + "'");
    const std::filesystem::path path = dir_ / "sessions" / (id + ".json");
    if (!std::filesystem::exists(path))
        fail(ErrorKind::NotFound, "no session '" + id + "'");

    auto live = std::make_shared<Live>();
    live->s = session_from_json(read_json_file(path));
    live->mdp = load_mdp(live->s.mdp_sha256);
    resolve_impl(live->mdp, live->s, live->sub, live->sol);
    if (live->sol->lower != live->s.lower || live->sol->upper != live->s.upper)
        fail(ErrorKind::Internal, "session '" + id + "' does not reproduce its stored bounds");
    if (live->s.phase == Phase::Deployed)
        live->strategy = replay(live->s, live->sub, live->sol);

    std::lock_guard lock(mu_);
    return sessions_.emplace(id, std::move(live)).first->second;
}

json Service::create_session(const Scenario &scenario) {
    auto live = std::make_shared<Live>();
    Session &s = live->s;
    s.scenario = scenario;
    s.formula = scenario.formula;

    TreeMdp built = staged("build", [&] {
        return build_scenario_mdp(scenario.vehicle, scenario.environment, scenario.absorbing,
                                  scenario.max_nodes);
    });
    const std::string text = mdp_to_json(built).dump();
    s.mdp_sha256 = sha256_hex(text);
    const std::filesystem::path path = dir_ / "mdp" / (s.mdp_sha256 + ".json");
    if (!std::filesystem::exists(path)) {
        const std::filesystem::path tmp = path.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            out << text;
            if (!out)
                fail(ErrorKind::Io, "cannot write " + tmp.string());
        }
        std::filesystem::rename(tmp, path);
    }
    {
        std::lock_guard lock(mu_);
        live->mdp = mdps_.emplace(s.mdp_sha256, std::make_shared<const TreeMdp>(std::move(built)))
                        .first->second;
    }
    staged("solve", [&] { resolve_impl(live->mdp, s, live->sub, live->sol); });
    s.lower = live->sol->lower;
    s.upper = live->sol->upper;

    std::lock_guard create(create_mu_);
    s.id = next_id();
    note(s, {{"event", "created"},
             {"scenario", scenario.name},
             {"states", live->mdp->size()},
             {"formula", print(s.formula)},
             {"lower", s.lower},
             {"upper", s.upper}});
    persist(*live);
    {
        std::lock_guard lock(mu_);
        sessions_.emplace(s.id, live);
    }
    return session_to_json(s);
}

json Service::get(const std::string &id) {
    auto live = open(id);
    std::lock_guard lock(live->mu);
    return session_to_json(live->s);
}

json Service::candidates(const std::string &id, std::size_t limit) {
    auto live = open(id);
    std::lock_guard lock(live->mu);
    Session &s = live->s;
    require_phase(s, {Phase::Negotiating, Phase::Renegotiating}, "enumerating relaxations");
    s.candidates = enumerate_relaxations(*live->sol, *live->sub, 0, 0, limit);
    s.candidates_revision = s.revision;
    json ids = json::array();
    for (const Candidate &c : s.candidates)
        ids.push_back(c.id);
    note(s, {{"event", "candidates"}, {"limit", limit}, {"ids", ids}});
    persist(*live);

    json items = json::array();
    for (const Candidate &c : s.candidates)
        items.push_back(candidate_to_json(c));
    return {{"schema", kCandidatesSchema},
            {"session", s.id},
            {"revision", s.revision},
            {"formula", print(s.formula)},
            {"lower", s.lower},
            {"upper", s.upper},
            {"candidates", items}};
}

json Service::accept(const std::string &id, const json &request) {
    auto live = open(id);
    std::lock_guard lock(live->mu);
    Session &s = live->s;
    require_phase(s, {Phase::Negotiating, Phase::Renegotiating}, "accept");
    if (!request.is_object())
        fail(ErrorKind::InvalidArgument, "accept expects a JSON object");

    std::string choice = "keep";
    bool deploy = false;
    std::optional<std::uint64_t> seed;
    try {
        choice = request.value("candidate", std::string("keep"));
        deploy = request.value("deploy", false);
        if (request.contains("seed") && !request.at("seed").is_null())
            seed = request.at("seed").get<std::uint64_t>();
        if (request.contains("revision") && request.at("revision").get<int>() != s.revision)
            fail(ErrorKind::Stale, "session is at revision " + std::to_string(s.revision) +
                                       ", request was made against " +
                                       request.at("revision").dump());
    } catch (const json::exception &e) {
        fail(ErrorKind::InvalidArgument, std::string("accept request: ") + e.what());
    }
    if (s.phase == Phase::Negotiating && deploy && !seed)
        fail(ErrorKind::InvalidArgument, "deploying needs a seed");
    if (s.phase == Phase::Renegotiating && seed && *seed != s.deployment->seed)
        fail(ErrorKind::InvalidArgument, "deployment is already seeded with " +
                                             std::to_string(s.deployment->seed));

    json entry = {{"event", "accepted"}, {"candidate", choice}};
    if (choice != "keep") {
        if (s.candidates_revision != s.revision)
            fail(ErrorKind::Stale, "candidate list is out of date; enumerate relaxations again");
        const auto it = std::find_if(s.candidates.begin(), s.candidates.end(),
                                     [&](const Candidate &c) { return c.id == choice; });
        if (it == s.candidates.end())
            fail(ErrorKind::NotFound, "no candidate '" + choice + "'");
        auto sol = std::make_shared<const Solution>(solve_incremental(*live->sol, *live->sub, 0, it->rule));
        if (sol->lower != it->lower || sol->upper != it->upper)
            fail(ErrorKind::Internal, "candidate " + choice + " no longer reproduces its prediction");
        entry["rule"] = rule_to_json(it->rule);
        entry["description"] = it->description;
        s.formula = sol->formula;
        live->sol = std::move(sol);
        s.lower = live->sol->lower;
        s.upper = live->sol->upper;
    }
    entry["formula"] = print(s.formula);
    entry["lower"] = s.lower;
    entry["upper"] = s.upper;
    s.candidates.clear();
    s.candidates_revision = -1;
    ++s.revision;
    note(s, entry);

    if (s.phase == Phase::Renegotiating) {
        s.deployment->segment_start = s.deployment->stages.size();
        live->strategy = std::make_unique<Strategy>(live->sub, live->sol);
        s.phase = Phase::Deployed;
        note(s, {{"event", "resumed"}, {"root", s.root}});
    } else if (deploy) {
        Deployment d;
        d.seed = *seed;
        d.pose = s.scenario.vehicle.q_init;
        s.deployment = std::move(d);
        live->strategy = std::make_unique<Strategy>(live->sub, live->sol);
        s.phase = Phase::Deployed;
        note(s, {{"event", "deployed"}, {"seed", *seed}});
    }
    persist(*live);
    return session_to_json(s);
}

namespace {

// Runs the remaining stages open loop and checks the word of the segment
// driven by the current root against the current formula.
bool final_verdict(const Session &s, const Environment &env) {
    const Deployment &d = *s.deployment;
    const VehicleParams &v = s.scenario.vehicle;
    Pose pose = v.q_init;
    std::vector<TimedPoint> positions;
    auto drive = [&](double w, int k) {
        const ArcSegment seg = integrate_arc(pose, w, v.dt);
        const bool record = static_cast<std::size_t>(k) >= d.segment_start;
        if (record && positions.empty())
            positions.push_back({k * v.dt, position(pose)});
        if (record) {
            for (int q = 1; q <= kStageSamples; ++q) {
                const double t = v.dt * q / kStageSamples;
                positions.push_back({k * v.dt + t, position(seg.at(t))});
            }
        }
        pose = seg.end;
    };
    int k = 0;
    for (; k < static_cast<int>(d.stages.size()); ++k)
        drive(d.stages[k].w, k);
    for (; k < v.K; ++k)
        drive(deployment_eps(d.seed, k, v.eps_max), k);
    if (positions.empty())
        positions.push_back({k * v.dt, position(pose)});
    return check_word(word_of_trace(positions, env), s.formula, env.propositions());
}

}  // namespace

json Service::step(const std::string &id, const json &request) {
    auto live = open(id);
    std::lock_guard lock(live->mu);
    Session &s = live->s;
    require_phase(s, {Phase::Deployed}, "stepping the deployment");
    Deployment &d = *s.deployment;
    const VehicleParams &v = s.scenario.vehicle;
    const int k = static_cast<int>(d.stages.size());

    double eps = 0.0;
    if (request.is_object() && request.contains("eps") && !request.at("eps").is_null()) {
        if (!request.at("eps").is_number())
            fail(ErrorKind::InvalidArgument, "eps must be a number");
        eps = request.at("eps").get<double>();
        if (!std::isfinite(eps) || std::abs(eps) > v.eps_max)
            fail(ErrorKind::Domain, "eps outside [-eps_max, eps_max]");
    } else {
        eps = deployment_eps(d.seed, k, v.eps_max);
    }

    Strategy &st = *live->strategy;
    std::vector<TimedPoint> scratch;
    const StageRecord rec = run_stage(st, d.pose, eps, k * v.dt, scratch);
    const Solution rest = restrict_solution(*live->sol, *live->sub, st.cursor(), st.satisfied_up_to());
    StageEntry e;
    e.stage = k + 1;
    e.control = rec.control;
    e.eps = rec.eps;
    e.w = rec.w;
    e.cell = rec.cell;
    e.cursor = s.root + rec.cursor;
    e.satisfied_up_to = rec.satisfied_up_to;
    e.lower = rest.lower;
    e.upper = rest.upper;
    d.stages.push_back(e);
    ++s.revision;
    note(s, {{"event", "step"},
             {"stage", e.stage},
             {"control", e.control},
             {"cell", e.cell},
             {"cursor", e.cursor},
             {"satisfied_up_to", e.satisfied_up_to},
             {"lower", e.lower},
             {"upper", e.upper}});

    json report = {{"schema", kStepSchema}, {"session", s.id}, {"stage", stage_to_json(e)}};
    if (st.done()) {
        d.verdict = final_verdict(s, s.scenario.environment);
        s.phase = Phase::Closed;
        live->strategy.reset();
        note(s, {{"event", "closed"},
                 {"verdict", *d.verdict},
                 {"satisfied_up_to", e.satisfied_up_to},
                 {"formula", print(s.formula)}});
        report["verdict"] = *d.verdict;
    }
    report["phase"] = to_string(s.phase);
    report["done"] = s.phase == Phase::Closed;
    persist(*live);
    return report;
}

json Service::event(const std::string &id, const json &rule_doc) {
    auto live = open(id);
    std::lock_guard lock(live->mu);
    Session &s = live->s;
    require_phase(s, {Phase::Deployed}, "an environment event");
    UpdateRule rule = rule_from_json(rule_doc);
    const Strategy &st = *live->strategy;
    const int i = st.satisfied_up_to();
    if (rule_doc.contains("satisfied_up_to") && rule_doc.at("satisfied_up_to").get<int>() != i)
        fail(ErrorKind::Validation, "event says satisfied_up_to " +
                                        rule_doc.at("satisfied_up_to").dump() +
                                        " but the execution has satisfied " + std::to_string(i));
    rule.satisfied_up_to = i;
    const int c = st.cursor();
    const Solution before = restrict_solution(*live->sol, *live->sub, c, i);
    auto sol = std::make_shared<const Solution>(
        staged("event", [&] { return solve_incremental(*live->sol, *live->sub, c, rule); }));

    const std::string described = describe(rule, s.formula);
    s.root += c;
    s.formula = sol->formula;
    live->sub = s.root == 0 ? live->mdp
                            : std::make_shared<const TreeMdp>(prune_from(*live->mdp, s.root).mdp);
    live->sol = std::move(sol);
    live->strategy.reset();
    s.lower = live->sol->lower;
    s.upper = live->sol->upper;
    s.phase = Phase::Renegotiating;
    s.candidates.clear();
    s.candidates_revision = -1;
    ++s.revision;
    const bool decrease = direction(rule) == Direction::Decrease;
    note(s, {{"event", "environment_event"},
             {"rule", rule_to_json(rule)},
             {"rule_number", rule_number(rule.kind)},
             {"direction", decrease ? "decrease" : "increase"},
             {"description", described},
             {"root", s.root},
             {"satisfied_up_to", i},
             {"before", bounds_json(before.lower, before.upper)},
             {"after", bounds_json(s.lower, s.upper)},
             {"formula", print(s.formula)}});
    if (decrease) {
        s.candidates = enumerate_relaxations(*live->sol, *live->sub, 0, 0, kEventCandidateLimit);
        s.candidates_revision = s.revision;
        json ids = json::array();
        for (const Candidate &cand : s.candidates)
            ids.push_back(cand.id);
        note(s, {{"event", "candidates"}, {"limit", kEventCandidateLimit}, {"ids", ids}});
    }
    persist(*live);
    return session_to_json(s);
}

}  // namespace dubsynth
