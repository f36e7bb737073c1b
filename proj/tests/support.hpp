#pragma once

// Generators and independent oracles shared by the unit tests and the
// acceptance runner.

#include "dubsynth/environment.hpp"
#include "dubsynth/error.hpp"
#include "dubsynth/io.hpp"
#include "dubsynth/mdp.hpp"
#include "dubsynth/pctl.hpp"
#include "dubsynth/synthesis.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/rational.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace testsupport {

using namespace dubsynth;
using Gen = std::mt19937_64;
using Rat = boost::rational<boost::multiprecision::cpp_int>;

inline double uni(Gen &g, double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(g);
}
inline int pick(Gen &g, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(g);
}
inline bool coin(Gen &g, double p = 0.5) {
    return uni(g, 0.0, 1.0) < p;
}

inline std::filesystem::path source_dir() {
#ifdef DUBSYNTH_SOURCE_DIR
    return DUBSYNTH_SOURCE_DIR;
#else
    return ".";
#endif
}

inline bool update_golden() {
    const char *v = std::getenv("DUBSYNTH_UPDATE_GOLDEN");
    return v && *v && std::string(v) != "0";
}

// ---------------------------------------------------------------- MDPs

// Random tree MDP obeying the construction rules: decision states with
// 3 * n children of probability 1/n, nu-chains, leaves with a nu self-loop,
// depth-first ids. Labels are random over props a, b, c.
inline TreeMdp synthetic_mdp(Gen &g, int n, int K, int max_states) {
    TreeMdp m;
    m.propositions = {"a", "b", "c"};
    m.n = n;
    m.depth = K;
    m.dt = 1.0;
    m.controls = make_control_set(1.0);
    m.noise = make_noise_model(0.1, n);
    std::vector<std::vector<Transition>> out;
    int reserved = 0;

    auto labels = [&] {
        LabelSet l = 0;
        for (std::size_t i = 0; i < m.propositions.size(); ++i) {
            const int r = pick(g, 0, 9);
            if (r < 3)
                l |= label_bit(i, Polarity::Positive);
            else if (r < 8)
                l |= label_bit(i, Polarity::Negative);
        }
        return l;
    };
    auto add = [&](int stage, int parent, int action) {
        MdpState st;
        st.stage = stage;
        st.parent = parent;
        st.parent_action = action;
        st.labels = labels();
        st.cell = 0;
        m.states.push_back(st);
        out.emplace_back();
        return static_cast<int>(m.states.size()) - 1;
    };
    auto room = [&](int extra) {
        return static_cast<int>(m.states.size()) + reserved + extra <= max_states;
    };

    // s has just been created; finish its chain and subtree.
    std::function<void(int)> grow = [&](int s) {
        const int stage = m.states[s].stage;
        if (room(1) && coin(g, 0.25)) {
            m.states[s].kind = StateKind::Chain;
            const int next = add(stage, s, kNu);
            out[s].push_back({kNu, next, 1.0});
            grow(next);
            return;
        }
        if (stage < K && room(3 * n) && coin(g, 0.8)) {
            m.states[s].kind = StateKind::Decision;
            reserved += 3 * n;
            for (int u = 0; u < kNu; ++u) {
                for (int c = 0; c < n; ++c) {
                    --reserved;
                    const int child = add(stage + 1, s, u);
                    m.states[child].cell = c;
                    out[s].push_back({u, child, 1.0 / n});
                    grow(child);
                }
            }
            return;
        }
        m.states[s].kind = StateKind::Leaf;
        out[s].push_back({kNu, s, 1.0});
    };
    const int root = add(0, -1, -1);
    m.states[root].cell = -1;
    grow(root);

    m.offsets.assign(1, 0);
    for (const auto &trs : out) {
        m.transitions.insert(m.transitions.end(), trs.begin(), trs.end());
        m.offsets.push_back(static_cast<int>(m.transitions.size()));
    }
    for (int s = static_cast<int>(m.size()) - 1; s >= 0; --s) {
        MdpState &st = m.states[s];
        st.subtree_end = std::max(st.subtree_end, s + 1);
        if (st.parent >= 0)
            m.states[st.parent].subtree_end = std::max(m.states[st.parent].subtree_end, st.subtree_end);
    }
    return m;
}

inline std::vector<Region> random_regions(Gen &g, std::size_t count) {
    std::vector<Region> r(count);
    for (Region &x : r) {
        const int k = pick(g, 0, 9);
        x = k < 2 ? Region::Yes : (k < 4 ? Region::No : Region::Maybe);
    }
    return r;
}

// Every value some deterministic policy achieves from s. Policies are
// enumerated over the decision states reachable from s; equal values are
// kept once. Exact arithmetic. nullopt once a set would exceed cap.
inline std::optional<std::set<Rat>> policy_values(const TreeMdp &m, const std::vector<Region> &reg, int s,
                                                  std::size_t cap) {
    if (reg[s] == Region::Yes)
        return std::set<Rat>{Rat(1)};
    if (reg[s] == Region::No)
        return std::set<Rat>{Rat(0)};
    const MdpState &st = m.states[s];
    if (st.kind == StateKind::Leaf)
        return std::set<Rat>{Rat(0)};
    if (st.kind == StateKind::Chain)
        return policy_values(m, reg, m.next(s), cap);
    std::set<Rat> all;
    const Rat share(1, m.n);
    for (int u = 0; u < kNu; ++u) {
        std::set<Rat> acc{Rat(0)};
        for (int c = 0; c < m.n; ++c) {
            auto vals = policy_values(m, reg, m.child(s, u, c), cap);
            if (!vals || acc.size() * vals->size() > cap * 8)
                return std::nullopt;
            std::set<Rat> next;
            for (const Rat &a : acc) {
                for (const Rat &v : *vals)
                    next.insert(a + share * v);
            }
            acc = std::move(next);
        }
        all.insert(acc.begin(), acc.end());
        if (all.size() > cap)
            return std::nullopt;
    }
    return all;
}

// Exact value of one fixed policy by summing the probabilities of its
// satisfying root-to-leaf paths.
inline Rat policy_value(const TreeMdp &m, const std::vector<Region> &reg,
                        const std::vector<std::uint8_t> &mu, int s) {
    Rat total(0);
    std::function<void(int, Rat)> walk = [&](int x, Rat prob) {
        if (reg[x] == Region::Yes) {
            total += prob;
            return;
        }
        if (reg[x] == Region::No)
            return;
        const MdpState &st = m.states[x];
        if (st.kind == StateKind::Leaf)
            return;
        if (st.kind == StateKind::Chain)
            return walk(m.next(x), prob);
        for (int c = 0; c < m.n; ++c)
            walk(m.child(x, mu[x], c), prob * Rat(1, m.n));
    };
    walk(s, Rat(1));
    return total;
}

inline double to_double(const Rat &r) {
    return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

// Exact value of a double.
inline Rat to_rat(double x) {
    int e = 0;
    const double frac = std::frexp(x, &e);
    auto mant = static_cast<long long>(std::ldexp(frac, 53));
    e -= 53;
    Rat r(mant);
    boost::multiprecision::cpp_int scale = 1;
    scale <<= std::abs(e);
    return e >= 0 ? r * Rat(scale) : r / Rat(scale);
}

// --------------------------------------------------------- environments

inline std::vector<Point> random_polygon(Gen &g, const Box &b) {
    for (;;) {
        const double cx = uni(g, b.xmin + 0.5, b.xmax - 0.5);
        const double cy = uni(g, b.ymin + 0.5, b.ymax - 0.5);
        std::vector<Point> vs;
        if (coin(g, 0.7)) {
            const double hw = uni(g, 0.2, 1.2), hh = uni(g, 0.2, 1.2), a = uni(g, 0.0, kTwoPi);
            for (auto [sx, sy] : {std::pair{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}) {
                const double x = sx * hw, y = sy * hh;
                vs.push_back({cx + x * std::cos(a) - y * std::sin(a), cy + x * std::sin(a) + y * std::cos(a)});
            }
        } else {
            const double r = uni(g, 0.3, 1.0), a = uni(g, 0.0, kTwoPi);
            for (double off : {0.0, 2.2, 4.1})
                vs.push_back({cx + r * std::cos(a + off), cy + r * std::sin(a + off)});
        }
        if (std::all_of(vs.begin(), vs.end(), [&](Point p) { return b.contains(p); }))
            return vs;
    }
}

inline Environment random_environment(Gen &g, const std::vector<std::string> &props, const Box &b) {
    std::map<std::string, std::vector<std::vector<Point>>> regions;
    for (const std::string &p : props) {
        auto &polys = regions[p];
        const int count = pick(g, 1, 2);
        for (int k = 0; k < count; ++k)
            polys.push_back(random_polygon(g, b));
    }
    return Environment(b, regions);
}

// ------------------------------------------------------------- formulas

inline Clause random_clause(Gen &g, const std::vector<std::string> &props, ClauseKind kind, int max_lits = 2) {
    std::vector<std::string> bases = props;
    std::shuffle(bases.begin(), bases.end(), g);
    const int k = pick(g, 1, std::min<int>(max_lits, static_cast<int>(bases.size())));
    std::vector<ExtProp> lits;
    for (int i = 0; i < k; ++i)
        lits.push_back(coin(g) ? pos_literal(bases[i]) : neg_literal(bases[i]));
    return Clause::make(kind, std::move(lits));
}

inline Threshold random_threshold(Gen &g) {
    static const Threshold options[] = {{0.0, true}, {0.0, true}, {0.0, true}, {0.3, false},
                                        {0.5, false}, {0.2, true}, {1.0, false}, {0.75, true}};
    return options[pick(g, 0, 7)];
}

inline bool contains_clause(const std::vector<Clause> &cs, const Clause &c) {
    return std::find(cs.begin(), cs.end(), c) != cs.end();
}

inline Formula random_formula(Gen &g, const std::vector<std::string> &props, int max_blocks = 3) {
    Formula f;
    const int blocks = pick(g, 1, max_blocks);
    for (int j = 0; j < blocks; ++j) {
        Block b;
        const int m = coin(g, 0.15) ? 2 : pick(g, 0, 1);
        while (static_cast<int>(b.phi.size()) < m) {
            Clause c = random_clause(g, props, ClauseKind::Disjunction);
            if (!contains_clause(b.phi, c))
                b.phi.push_back(std::move(c));
        }
        const int nj = pick(g, 1, 3);
        while (static_cast<int>(b.psi.size()) < nj) {
            Clause c = random_clause(g, props, ClauseKind::Conjunction);
            if (!contains_clause(b.psi, c))
                b.psi.push_back(std::move(c));
        }
        b.threshold = random_threshold(g);
        f.blocks.push_back(std::move(b));
    }
    return f;
}

// A rule of the given kind valid against f for blocks after i, or nullopt.
inline std::optional<UpdateRule> random_rule(Gen &g, const Formula &f, int i, RuleKind kind,
                                             const std::vector<std::string> &props) {
    const int fsize = static_cast<int>(f.size());
    if (i >= fsize)
        return std::nullopt;
    UpdateRule r;
    r.kind = kind;
    r.satisfied_up_to = i;
    r.block = pick(g, i + 1, fsize);
    const Block &b = f.blocks[r.block - 1];
    switch (kind) {
    case RuleKind::AddPsiClause:
    case RuleKind::AddPhiClause: {
        const bool psi = kind == RuleKind::AddPsiClause;
        for (int tries = 0; tries < 20; ++tries) {
            Clause c = random_clause(g, props, psi ? ClauseKind::Conjunction : ClauseKind::Disjunction);
            if (!contains_clause(psi ? b.psi : b.phi, c)) {
                r.clause = std::move(c);
                return r;
            }
        }
        return std::nullopt;
    }
    case RuleKind::RemovePsiClause:
        if (b.psi.size() < 2)
            return std::nullopt;
        r.index = pick(g, 1, static_cast<int>(b.psi.size()));
        return r;
    case RuleKind::RemovePhiClause:
        if (b.phi.empty())
            return std::nullopt;
        r.index = pick(g, 1, static_cast<int>(b.phi.size()));
        return r;
    case RuleKind::LowerThreshold:
        if (!(b.threshold.p > 0.0))
            return std::nullopt;
        r.threshold = make_threshold(uni(g, 0.0, b.threshold.p), coin(g));
        if (!(r.threshold.p < b.threshold.p))
            return std::nullopt;
        return r;
    case RuleKind::RaiseThreshold:
        if (!(b.threshold.p < 1.0))
            return std::nullopt;
        r.threshold = make_threshold(coin(g, 0.2) ? 1.0 : uni(g, b.threshold.p, 1.0), coin(g));
        if (!(r.threshold.p > b.threshold.p))
            return std::nullopt;
        return r;
    }
    return std::nullopt;
}

// ------------------------------------------------------------ scenarios

struct SmallScenario {
    Environment env;
    VehicleParams vehicle;
    std::vector<ExtProp> absorbing;
};

inline SmallScenario random_small_scenario(Gen &g, int K, int n) {
    SmallScenario s;
    const Box b{0.0, 0.0, 6.0, 6.0};
    s.env = random_environment(g, {"a", "b", "c", "u"}, b);
    s.vehicle.rho = uni(g, 0.6, 1.5);
    s.vehicle.dt = uni(g, 0.6, 1.2);
    s.vehicle.K = K;
    s.vehicle.n = n;
    s.vehicle.eps_max = uni(g, 0.0, 0.2);
    s.vehicle.q_init = {uni(g, 1.5, 4.5), uni(g, 1.5, 4.5), uni(g, 0.0, kTwoPi)};
    return s;
}

// --------------------------------------------------------------- words

// Direct reading of the until chain on one word with the stuttering tail:
// block j holds from position k if some m >= k has psi_j (and the rest of
// the chain from m) with phi_j at every position in [k, m).
inline bool naive_check(const std::vector<std::set<std::string>> &word, const Formula &f) {
    auto lit = [](const std::set<std::string> &o, const ExtProp &e) {
        return o.contains(e.base) != e.negative();
    };
    auto clause_or = [&](const std::set<std::string> &o, const Clause &c) {
        return std::any_of(c.literals.begin(), c.literals.end(), [&](const ExtProp &e) { return lit(o, e); });
    };
    auto clause_and = [&](const std::set<std::string> &o, const Clause &c) {
        return std::all_of(c.literals.begin(), c.literals.end(), [&](const ExtProp &e) { return lit(o, e); });
    };
    auto phi = [&](const Block &b, const std::set<std::string> &o) {
        return std::all_of(b.phi.begin(), b.phi.end(), [&](const Clause &c) { return clause_or(o, c); });
    };
    auto psi = [&](const Block &b, const std::set<std::string> &o) {
        return std::any_of(b.psi.begin(), b.psi.end(), [&](const Clause &c) { return clause_and(o, c); });
    };
    auto passes = [](bool path, const Threshold &t) {
        const double v = path ? 1.0 : 0.0;
        return t.strict ? v > t.p : v >= t.p;
    };
    std::function<bool(std::size_t, std::size_t)> holds = [&](std::size_t j, std::size_t k) {
        const Block &b = f.blocks[j];
        for (std::size_t m = k; m < word.size(); ++m) {
            bool target = psi(b, word[m]);
            if (target && j + 1 < f.size())
                target = passes(holds(j + 1, m), f.blocks[j + 1].threshold);
            if (target)
                return true;
            if (!phi(b, word[m]))
                return false;
        }
        return false;
    };
    if (word.empty())
        return false;
    return passes(holds(0, 0), f.blocks[0].threshold);
}

// --------------------------------------------------------------- golden

// Structural equality with a relative/absolute tolerance on numbers.
inline bool json_close(const json &a, const json &b, double tol, std::string &where,
                       const std::string &path = "$") {
    if (a.is_number() && b.is_number()) {
        const double x = a.get<double>(), y = b.get<double>();
        if (std::abs(x - y) <= tol * std::max(1.0, std::abs(y)))
            return true;
        where = path + ": " + a.dump() + " vs " + b.dump();
        return false;
    }
    if (a.type() != b.type()) {
        where = path + ": type " + a.type_name() + " vs " + b.type_name();
        return false;
    }
    if (a.is_object()) {
        if (a.size() != b.size()) {
            where = path + ": key count " + std::to_string(a.size()) + " vs " + std::to_string(b.size());
            return false;
        }
        for (auto it = a.begin(); it != a.end(); ++it) {
            if (!b.contains(it.key())) {
                where = path + "." + it.key() + ": missing";
                return false;
            }
            if (!json_close(it.value(), b.at(it.key()), tol, where, path + "." + it.key()))
                return false;
        }
        return true;
    }
    if (a.is_array()) {
        if (a.size() != b.size()) {
            where = path + ": length " + std::to_string(a.size()) + " vs " + std::to_string(b.size());
            return false;
        }
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (!json_close(a[i], b[i], tol, where, path + "[" + std::to_string(i) + "]"))
                return false;
        }
        return true;
    }
    if (a != b) {
        where = path + ": " + a.dump() + " vs " + b.dump();
        return false;
    }
    return true;
}

}  // namespace testsupport
