#include "dubsynth/io.hpp"

#include "dubsynth/error.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <iomanip>
#include <sstream>

namespace dubsynth {

namespace {

Point point_from_json(const json &j) {
    if (!j.is_array() || j.size() != 2)
        fail(ErrorKind::Validation, "a vertex must be [x, y]");
    return {j.at(0).get<double>(), j.at(1).get<double>()};
}

template <typename F>
auto guarded(const char *what, F &&f) -> decltype(f()) {
    try {
        return f();
    } catch (const json::exception &e) {
        fail(ErrorKind::Validation, std::string(what) + ": " + e.what());
    }
}

}  // namespace

Environment environment_from_json(const json &doc) {
    return guarded("environment", [&] {
        const json &b = doc.at("bounds");
        if (!b.is_array() || b.size() != 4)
            fail(ErrorKind::Validation, "bounds must be [xmin, ymin, xmax, ymax]");
        const Box box{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
        std::map<std::string, std::vector<std::vector<Point>>> regions;
        for (const auto &[name, polys] : doc.at("regions").items()) {
            auto &out = regions[name];
            for (const json &poly : polys) {
                std::vector<Point> vs;
                for (const json &v : poly)
                    vs.push_back(point_from_json(v));
                out.push_back(std::move(vs));
            }
        }
        return Environment(box, regions);
    });
}

json environment_to_json(const Environment &env) {
    json regions = json::object();
    for (std::size_t i = 0; i < env.size(); ++i) {
        json polys = json::array();
        for (const ConvexPolygon &p : env.regions(i)) {
            json vs = json::array();
            for (const Point &v : p.vertices())
                vs.push_back({v.x, v.y});
            polys.push_back(std::move(vs));
        }
        regions[env.propositions()[i]] = std::move(polys);
    }
    const Box &b = env.bounds();
    return {{"bounds", {b.xmin, b.ymin, b.xmax, b.ymax}}, {"regions", std::move(regions)}};
}

json read_json_file(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        fail(ErrorKind::Io, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception &e) {
        fail(ErrorKind::Validation, path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path &path, const json &doc, int indent) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out)
            fail(ErrorKind::Io, "cannot write " + tmp.string());
        out << doc.dump(indent) << "\n";
        if (!out)
            fail(ErrorKind::Io, "short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

json pose_to_json(const Pose &p) {
    return {p.x, p.y, p.theta};
}

Pose pose_from_json(const json &j) {
    if (!j.is_array() || j.size() != 3)
        fail(ErrorKind::Validation, "a pose must be [x, y, theta]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Scenario scenario_from_json(const json &doc, const std::filesystem::path &base_dir) {
    Scenario s;
    guarded("scenario", [&] {
        if (doc.contains("schema") && doc.at("schema") != kScenarioSchema)
            fail(ErrorKind::Validation, "unsupported scenario schema " + doc.at("schema").dump());
        s.name = doc.value("name", std::string("scenario"));
        const json &env = doc.at("environment");
        if (env.is_string())
            s.environment_doc = read_json_file(base_dir / env.get<std::string>());
        else
            s.environment_doc = env;
        s.environment = environment_from_json(s.environment_doc);

        const json &v = doc.at("vehicle");
        s.vehicle.rho = v.at("rho").get<double>();
        s.vehicle.dt = v.at("dt").get<double>();
        s.vehicle.K = v.at("K").get<int>();
        s.vehicle.eps_max = v.at("eps_max").get<double>();
        s.vehicle.n = v.at("n").get<int>();
        s.vehicle.q_init = pose_from_json(v.at("q_init"));
        s.vehicle.q_init.theta = wrap_angle(s.vehicle.q_init.theta);
        if (!(s.vehicle.rho > 0.0) || !(s.vehicle.dt > 0.0) || s.vehicle.K < 0 || s.vehicle.n < 1 ||
            !(s.vehicle.eps_max >= 0.0))
            fail(ErrorKind::Validation, "vehicle parameters out of range");

        s.formula_text = doc.at("formula").get<std::string>();
        for (const json &a : doc.value("absorbing", json::array())) {
            const std::string text = a.get<std::string>();
            ExtProp e = text.starts_with("!") ? neg_literal(text.substr(1)) : pos_literal(text);
            if (!s.environment.has(e.base))
                fail(ErrorKind::Validation, "absorbing label '" + text + "' names no proposition");
            s.absorbing.push_back(std::move(e));
        }
        s.max_nodes = doc.value("max_nodes", kDefaultNodeCeiling);
        return 0;
    });
    s.formula = parse_formula(s.formula_text);
    const auto diags = validate(s.formula, s.environment.propositions());
    if (!diags.empty()) {
        std::string msg = "formula does not fit the scenario:";
        for (const std::string &d : diags)
            msg += "\n  " + d;
        fail(ErrorKind::Validation, msg);
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path &path) {
    return scenario_from_json(read_json_file(path), path.parent_path());
}

json scenario_to_json(const Scenario &s) {
    json absorbing = json::array();
    for (const ExtProp &e : s.absorbing)
        absorbing.push_back(to_string(e));
    const VehicleParams &v = s.vehicle;
    return {{"schema", kScenarioSchema},
            {"name", s.name},
            {"environment", s.environment_doc},
            {"vehicle",
             {{"rho", v.rho},
              {"dt", v.dt},
              {"K", v.K},
              {"eps_max", v.eps_max},
              {"n", v.n},
              {"q_init", pose_to_json(v.q_init)}}},
            {"formula", s.formula_text},
            {"absorbing", absorbing},
            {"max_nodes", s.max_nodes}};
}

json clause_to_json(const Clause &c) {
    json lits = json::array();
    for (const ExtProp &e : c.literals)
        lits.push_back(to_string(e));
    return {{"kind", c.kind == ClauseKind::Conjunction ? "and" : "or"}, {"literals", lits}};
}

json block_to_json(const Block &b) {
    json phi = json::array();
    json psi = json::array();
    for (const Clause &c : b.phi)
        phi.push_back(clause_to_json(c));
    for (const Clause &c : b.psi)
        psi.push_back(clause_to_json(c));
    return {{"phi", phi},
            {"psi", psi},
            {"p", b.threshold.p},
            {"strict", b.threshold.strict},
            {"phi_text", print_cnf(b.phi)},
            {"psi_text", print_dnf(b.psi)}};
}

json formula_to_json(const Formula &f) {
    json blocks = json::array();
    for (const Block &b : f.blocks)
        blocks.push_back(block_to_json(b));
    return {{"text", print(f)}, {"blocks", blocks}};
}

Formula formula_from_json(const json &j) {
    if (j.is_string())
        return parse_formula(j.get<std::string>());
    return guarded("formula", [&] {
        Formula f;
        for (const json &b : j.at("blocks")) {
            Block block;
            auto clauses = [](const json &arr, ClauseKind kind) {
                std::vector<Clause> out;
                for (const json &c : arr) {
                    std::vector<ExtProp> lits;
                    for (const json &l : c.at("literals")) {
                        const std::string t = l.get<std::string>();
                        lits.push_back(t.starts_with("!") ? neg_literal(t.substr(1)) : pos_literal(t));
                    }
                    out.push_back(Clause::make(kind, std::move(lits)));
                }
                return out;
            };
            block.phi = clauses(b.at("phi"), ClauseKind::Disjunction);
            block.psi = clauses(b.at("psi"), ClauseKind::Conjunction);
            block.threshold = make_threshold(b.at("p").get<double>(), b.at("strict").get<bool>());
            f.blocks.push_back(std::move(block));
        }
        return f;
    });
}

json rule_to_json(const UpdateRule &r) {
    json j = {{"rule", to_string(r.kind)}, {"block", r.block}, {"satisfied_up_to", r.satisfied_up_to}};
    switch (r.kind) {
    case RuleKind::AddPsiClause:
    case RuleKind::AddPhiClause: {
        std::string text = to_string(r.clause);
        if (text.size() > 1 && text.front() == '(')
            text = text.substr(1, text.size() - 2);
        j["clause"] = text;
        break;
    }
    case RuleKind::RemovePsiClause:
    case RuleKind::RemovePhiClause: j["index"] = r.index; break;
    case RuleKind::LowerThreshold:
    case RuleKind::RaiseThreshold:
        j["p"] = r.threshold.p;
        j["strict"] = r.threshold.strict;
        break;
    }
    return j;
}

UpdateRule rule_from_json(const json &j) {
    return guarded("rule", [&] {
        UpdateRule r;
        r.kind = rule_kind_from_string(j.at("rule").get<std::string>());
        r.block = j.at("block").get<int>();
        r.satisfied_up_to = j.value("satisfied_up_to", 0);
        switch (r.kind) {
        case RuleKind::AddPsiClause:
            r.clause = parse_clause(j.at("clause").get<std::string>(), ClauseKind::Conjunction);
            break;
        case RuleKind::AddPhiClause:
            r.clause = parse_clause(j.at("clause").get<std::string>(), ClauseKind::Disjunction);
            break;
        case RuleKind::RemovePsiClause:
        case RuleKind::RemovePhiClause: r.index = j.at("index").get<int>(); break;
        case RuleKind::LowerThreshold:
        case RuleKind::RaiseThreshold:
            r.threshold = make_threshold(j.at("p").get<double>(), j.value("strict", false));
            break;
        }
        return r;
    });
}

json mdp_to_json(const TreeMdp &m) {
    json arcs = json::array();
    if (m.arcs) {
        for (const MdpArc &a : *m.arcs) {
            arcs.push_back({a.seg.start.x, a.seg.start.y, a.seg.start.theta, a.seg.w, a.seg.dt, a.r,
                            a.stage, a.control, a.cell});
        }
    }
    json stage = json::array(), arc = json::array(), t_lo = json::array(), t_hi = json::array(),
         r = json::array(), cell = json::array(), labels = json::array(), parent = json::array(),
         parent_action = json::array(), subtree_end = json::array(), kind = json::array();
    for (const MdpState &s : m.states) {
        stage.push_back(s.stage);
        arc.push_back(s.arc);
        t_lo.push_back(s.t_lo);
        t_hi.push_back(s.t_hi);
        r.push_back(s.r);
        cell.push_back(s.cell);
        labels.push_back(s.labels);
        parent.push_back(s.parent);
        parent_action.push_back(s.parent_action);
        subtree_end.push_back(s.subtree_end);
        kind.push_back(static_cast<int>(s.kind));
    }
    json transitions = json::array();
    for (const Transition &t : m.transitions)
        transitions.push_back({t.action, t.target, t.prob});
    return {{"schema", kMdpSchema},
            {"propositions", m.propositions},
            {"n", m.n},
            {"depth", m.depth},
            {"dt", m.dt},
            {"rho", m.controls.rho},
            {"eps_max", m.noise.eps_max},
            {"arcs", arcs},
            {"states",
             {{"stage", stage},
              {"arc", arc},
              {"t_lo", t_lo},
              {"t_hi", t_hi},
              {"r", r},
              {"cell", cell},
              {"labels", labels},
              {"parent", parent},
              {"parent_action", parent_action},
              {"subtree_end", subtree_end},
              {"kind", kind}}},
            {"offsets", m.offsets},
            {"transitions", transitions}};
}

TreeMdp mdp_from_json(const json &j) {
    return guarded("mdp snapshot", [&] {
        if (j.at("schema") != kMdpSchema)
            fail(ErrorKind::Validation, "unsupported MDP schema " + j.at("schema").dump());
        TreeMdp m;
        m.propositions = j.at("propositions").get<std::vector<std::string>>();
        m.n = j.at("n").get<int>();
        m.depth = j.at("depth").get<int>();
        m.dt = j.at("dt").get<double>();
        m.controls = make_control_set(j.at("rho").get<double>());
        m.noise = make_noise_model(j.at("eps_max").get<double>(), m.n);
        auto arcs = std::make_shared<std::vector<MdpArc>>();
        for (const json &a : j.at("arcs")) {
            MdpArc arc;
            const Pose start{a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
            const double w = a[3].get<double>();
            const double dt = a[4].get<double>();
            if (dt > 0.0) {
                arc.seg = integrate_arc(start, w, dt);
            } else {
                arc.seg.start = start;
                arc.seg.end = start;
                arc.seg.w = w;
            }
            arc.r = a[5].get<double>();
            arc.stage = a[6].get<int>();
            arc.control = a[7].get<int>();
            arc.cell = a[8].get<int>();
            arcs->push_back(arc);
        }
        if (!arcs->empty())
            m.arcs = std::move(arcs);
        const json &s = j.at("states");
        const std::size_t count = s.at("stage").size();
        m.states.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            MdpState &st = m.states[i];
            st.stage = s["stage"][i].get<int>();
            st.arc = s["arc"][i].get<int>();
            st.t_lo = s["t_lo"][i].get<double>();
            st.t_hi = s["t_hi"][i].get<double>();
            st.r = s["r"][i].get<double>();
            st.cell = s["cell"][i].get<int>();
            st.labels = s["labels"][i].get<LabelSet>();
            st.parent = s["parent"][i].get<int>();
            st.parent_action = s["parent_action"][i].get<int>();
            st.subtree_end = s["subtree_end"][i].get<int>();
            st.kind = static_cast<StateKind>(s["kind"][i].get<int>());
        }
        m.offsets = j.at("offsets").get<std::vector<int>>();
        for (const json &t : j.at("transitions"))
            m.transitions.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<double>()});
        return m;
    });
}

json solution_to_json(const Solution &s) {
    json blocks = json::array();
    for (const BlockSolution &b : s.blocks) {
        std::vector<int> region(b.region.size());
        for (std::size_t i = 0; i < region.size(); ++i)
            region[i] = static_cast<int>(b.region[i]);
        blocks.push_back({{"V", b.V}, {"Vprime", b.Vprime}, {"mu", b.mu}, {"region", region}});
    }
    return {{"schema", kSolutionSchema},
            {"formula", formula_to_json(s.formula)},
            {"lower", s.lower},
            {"upper", s.upper},
            {"bounds_mode", s.mode == BoundsMode::Reachable ? "reachable" : "all_yes"},
            {"blocks", blocks}};
}

Solution solution_from_json(const json &j) {
    return guarded("solution snapshot", [&] {
        if (j.at("schema") != kSolutionSchema)
            fail(ErrorKind::Validation, "unsupported solution schema " + j.at("schema").dump());
        Solution s;
        s.formula = formula_from_json(j.at("formula"));
        s.lower = j.at("lower").get<double>();
        s.upper = j.at("upper").get<double>();
        s.mode = j.at("bounds_mode") == "all_yes" ? BoundsMode::AllYes : BoundsMode::Reachable;
        for (const json &b : j.at("blocks")) {
            BlockSolution bs;
            bs.V = b.at("V").get<std::vector<double>>();
            bs.Vprime = b.at("Vprime").get<std::vector<double>>();
            bs.mu = b.at("mu").get<std::vector<std::uint8_t>>();
            for (int r : b.at("region").get<std::vector<int>>())
                bs.region.push_back(static_cast<Region>(r));
            s.blocks.push_back(std::move(bs));
        }
        return s;
    });
}

std::string sha256_hex(const std::string &data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        fail(ErrorKind::Internal, "SHA-256 failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i)
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return os.str();
}

}  // namespace dubsynth
