#include "dubsynth/mdp.hpp"

#include "dubsynth/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dubsynth {

const char *to_string(StateKind k) {
    switch (k) {
    case StateKind::Decision: return "decision";
    case StateKind::Chain: return "chain";
    case StateKind::Leaf: return "leaf";
    }
    return "unknown";
}

std::vector<int> TreeMdp::enabled(int s) const {
    std::vector<int> acts;
    for (const Transition &t : out(s)) {
        if (acts.empty() || acts.back() != t.action)
            acts.push_back(t.action);
    }
    return acts;
}

const LabelSeq &LabelCache::get(const ReachNode &node, const Environment &env) {
    const std::int64_t key = (std::int64_t{node.parent} << 24) | (std::int64_t{node.control} << 16) |
                             std::int64_t{node.cell};
    auto it = map_.find(key);
    if (it == map_.end())
        it = map_.emplace(key, trace_labels(node.arc, node.r, env)).first;
    return it->second;
}

LabelSet literal_bit(const std::vector<std::string> &propositions, const ExtProp &e) {
    const auto it = std::find(propositions.begin(), propositions.end(), e.base);
    if (it == propositions.end())
        fail(ErrorKind::Validation, "unknown proposition '" + e.base + "'");
    return label_bit(static_cast<std::size_t>(it - propositions.begin()), e.polarity);
}

LabelSet absorbing_mask(const std::vector<ExtProp> &absorbing, const Environment &env) {
    LabelSet mask = 0;
    for (const ExtProp &e : absorbing)
        mask |= env.encode(e);
    return mask;
}

TruncatePredicate absorbing_truncation(const Environment &env, LabelSet absorbing,
                                       std::shared_ptr<LabelCache> cache) {
    if (absorbing == 0)
        return {};
    return [&env, absorbing, cache](const ReachNode &node) {
        for (const LabelEntry &e : cache->get(node, env)) {
            if (e.labels & absorbing)
                return true;
        }
        return false;
    };
}

namespace {

class Builder {
public:
    Builder(const ReachTree &tree, const Environment &env, LabelSet absorbing, LabelCache &cache)
        : tree_(tree), env_(env), absorbing_(absorbing), cache_(cache) {}

    TreeMdp run() {
        auto arcs = std::make_shared<std::vector<MdpArc>>();
        arcs->push_back({tree_.root().arc, 0.0, 0, -1, -1});
        arcs_ = arcs.get();

        MdpState root;
        root.arc = 0;
        root.labels = label_disc(position(tree_.q_init), 0.0, env_);
        states_.push_back(root);
        if ((root.labels & absorbing_) == 0 && tree_.root().num_children > 0) {
            expand(0, 0);
        }
        finish_subtree(0);

        TreeMdp m;
        m.arcs = std::move(arcs);
        m.propositions = env_.propositions();
        m.n = tree_.noise.n;
        m.depth = tree_.depth;
        m.dt = tree_.dt;
        m.controls = tree_.controls;
        m.noise = tree_.noise;
        link(m);
        return m;
    }

private:
    // Children of reach node `node` hang off decision state `from`.
    void expand(int node, int from) {
        states_[from].kind = StateKind::Decision;
        const ReachNode &rn = tree_.nodes[node];
        for (int c = 0; c < rn.num_children; ++c) {
            const int child = rn.first_child + c;
            emit_chain(child, from);
        }
    }

    void emit_chain(int node, int from) {
        const ReachNode &rn = tree_.nodes[node];
        const int arc = static_cast<int>(arcs_->size());
        arcs_->push_back({rn.arc, rn.r, rn.stage, rn.control, rn.cell});

        const LabelSeq &seq = cache_.get(rn, env_);
        int prev = from;
        int action = rn.control;
        std::vector<int> chain;
        bool absorbed = false;
        for (const LabelEntry &e : seq) {
            MdpState s;
            s.stage = rn.stage;
            s.arc = arc;
            s.t_lo = e.t_lo;
            s.t_hi = e.t_hi;
            s.r = rn.r;
            s.cell = rn.cell;
            s.labels = e.labels;
            s.parent = prev;
            s.parent_action = action;
            s.kind = StateKind::Chain;
            const int id = static_cast<int>(states_.size());
            states_.push_back(s);
            chain.push_back(id);
            prev = id;
            action = kNu;
            if (e.labels & absorbing_) {
                absorbed = true;
                break;
            }
        }
        states_[prev].kind = StateKind::Leaf;
        if (!absorbed && rn.num_children > 0)
            expand(node, prev);
        for (auto it = chain.rbegin(); it != chain.rend(); ++it)
            finish_subtree(*it);
    }

    void finish_subtree(int id) { states_[id].subtree_end = static_cast<int>(states_.size()); }

    void link(TreeMdp &m) {
        const std::size_t count = states_.size();
        std::vector<int> counts(count + 1, 0);
        for (std::size_t id = 1; id < count; ++id)
            ++counts[states_[id].parent];
        for (std::size_t id = 0; id < count; ++id) {
            if (states_[id].kind == StateKind::Leaf)
                counts[id] = 1;
        }
        m.offsets.assign(count + 1, 0);
        for (std::size_t id = 0; id < count; ++id)
            m.offsets[id + 1] = m.offsets[id] + counts[id];
        m.transitions.resize(m.offsets[count]);
        std::vector<int> fill(m.offsets.begin(), m.offsets.end() - 1);
        const double p = 1.0 / tree_.noise.n;
        // Pre-order creation puts siblings in (control, cell) order.
        for (std::size_t id = 1; id < count; ++id) {
            const MdpState &s = states_[id];
            const double prob = s.parent_action == kNu ? 1.0 : p;
            m.transitions[fill[s.parent]++] = {s.parent_action, static_cast<int>(id), prob};
        }
        for (std::size_t id = 0; id < count; ++id) {
            if (states_[id].kind == StateKind::Leaf)
                m.transitions[fill[id]++] = {kNu, static_cast<int>(id), 1.0};
        }
        m.states = std::move(states_);
    }

    const ReachTree &tree_;
    const Environment &env_;
    LabelSet absorbing_;
    LabelCache &cache_;
    std::vector<MdpArc> *arcs_ = nullptr;
    std::vector<MdpState> states_;
};

}  // namespace

TreeMdp build_mdp(const ReachTree &tree, const Environment &env, LabelSet absorbing,
                  LabelCache *cache) {
    LabelCache local;
    return Builder(tree, env, absorbing, cache ? *cache : local).run();
}

TreeMdp build_scenario_mdp(const VehicleParams &p, const Environment &env,
                           const std::vector<ExtProp> &absorbing, std::size_t max_nodes) {
    const LabelSet mask = absorbing_mask(absorbing, env);
    auto cache = std::make_shared<LabelCache>();
    const ReachTree tree =
        build_reach_tree(p.q_init, make_control_set(p.rho), make_noise_model(p.eps_max, p.n), p.dt,
                         p.K, absorbing_truncation(env, mask, cache), max_nodes);
    return build_mdp(tree, env, mask, cache.get());
}

std::vector<Violation> validate(const TreeMdp &m) {
    std::vector<Violation> out;
    auto report = [&](int s, const std::string &msg) { out.push_back({s, msg}); };
    const int count = static_cast<int>(m.size());
    if (count == 0) {
        report(-1, "MDP has no states");
        return out;
    }
    if (static_cast<int>(m.offsets.size()) != count + 1 ||
        m.offsets.back() != static_cast<int>(m.transitions.size())) {
        report(-1, "transition table does not match the state count");
        return out;
    }
    const LabelSet alphabet =
        m.propositions.size() >= 32 ? ~LabelSet{0}
                                    : (LabelSet{1} << (2 * m.propositions.size())) - 1;
    const double p = 1.0 / m.n;
    constexpr double tol = 1e-12;
    std::vector<int> incoming(count, 0);

    for (int s = 0; s < count; ++s) {
        const MdpState &st = m.states[s];
        const auto trs = m.out(s);
        double sums[kNumActions] = {0, 0, 0, 0};
        int counts[kNumActions] = {0, 0, 0, 0};
        for (const Transition &t : trs) {
            if (t.action < 0 || t.action >= kNumActions) {
                report(s, "transition under unknown action " + std::to_string(t.action));
                continue;
            }
            if (t.target < 0 || t.target >= count) {
                report(s, "transition to unknown state " + std::to_string(t.target));
                continue;
            }
            if (!(t.prob > 0.0))
                report(s, "stored transition with non-positive probability");
            sums[t.action] += t.prob;
            ++counts[t.action];
            if (t.target != s) {
                ++incoming[t.target];
                if (t.target <= s)
                    report(s, "edge to an earlier state breaks the tree order");
                else if (m.states[t.target].parent != s || m.states[t.target].parent_action != t.action)
                    report(t.target, "parent link does not match the incoming edge");
            } else if (st.kind != StateKind::Leaf || t.action != kNu) {
                report(s, "self-loop on a non-leaf state or under a control");
            }
        }
        for (int a = 0; a < kNumActions; ++a) {
            if (counts[a] > 0 && std::abs(sums[a] - 1.0) > tol) {
                std::ostringstream msg;
                msg << "probabilities under action " << a << " sum to " << sums[a];
                report(s, msg.str());
            }
        }
        switch (st.kind) {
        case StateKind::Decision:
            if (counts[kNu] > 0)
                report(s, "decision state enables nu");
            for (int u = 0; u < kNu; ++u) {
                if (counts[u] != m.n)
                    report(s, "control " + std::to_string(u) + " does not have n successors");
            }
            for (const Transition &t : trs) {
                if (std::abs(t.prob - p) > tol)
                    report(s, "control successor probability differs from 1/n");
            }
            break;
        case StateKind::Chain:
        case StateKind::Leaf:
            if (counts[0] + counts[1] + counts[2] > 0)
                report(s, std::string(to_string(st.kind)) + " state enables a control");
            if (counts[kNu] != 1)
                report(s, "nu must have exactly one successor");
            break;
        }
        if (st.kind == StateKind::Leaf && trs.size() == 1 && trs[0].target != s)
            report(s, "leaf without its self-loop");
        if (st.kind == StateKind::Chain && trs.size() == 1 && trs[0].target == s)
            report(s, "chain state loops on itself");

        if (st.labels & ~alphabet)
            report(s, "labels outside the alphabet");
        for (std::size_t i = 0; i < m.propositions.size(); ++i) {
            const LabelSet both = label_bit(i, Polarity::Positive) | label_bit(i, Polarity::Negative);
            if ((st.labels & both) == both)
                report(s, "labels hold both polarities of '" + m.propositions[i] + "'");
        }
        if (st.subtree_end <= s || st.subtree_end > count)
            report(s, "subtree range is malformed");
        if (m.arcs && (st.arc < 0 || st.arc >= static_cast<int>(m.arcs->size())))
            report(s, "arc index out of range");
    }
    for (int s = 0; s < count; ++s) {
        const int want = s == 0 ? 0 : 1;
        if (incoming[s] != want) {
            report(s, s == 0 ? "root has a parent"
                             : "state has " + std::to_string(incoming[s]) + " parents");
        }
    }
    return out;
}

PrunedMdp prune_from(const TreeMdp &m, int s_c) {
    if (s_c < 0 || s_c >= static_cast<int>(m.size()))
        fail(ErrorKind::NotFound, "prune_from: unknown state " + std::to_string(s_c));
    PrunedMdp out;
    out.offset = s_c;
    TreeMdp &p = out.mdp;
    p.arcs = m.arcs;
    p.propositions = m.propositions;
    p.n = m.n;
    p.depth = m.depth;
    p.dt = m.dt;
    p.controls = m.controls;
    p.noise = m.noise;

    const int end = m.states[s_c].subtree_end;
    p.states.assign(m.states.begin() + s_c, m.states.begin() + end);
    for (MdpState &s : p.states) {
        s.parent = s.parent < s_c ? -1 : s.parent - s_c;
        s.subtree_end -= s_c;
    }
    p.states.front().parent = -1;
    p.states.front().parent_action = -1;

    const int first = m.offsets[s_c];
    const int last = m.offsets[end];
    p.transitions.assign(m.transitions.begin() + first, m.transitions.begin() + last);
    for (Transition &t : p.transitions)
        t.target -= s_c;
    p.offsets.resize(end - s_c + 1);
    for (int i = s_c; i <= end; ++i)
        p.offsets[i - s_c] = m.offsets[i] - first;
    return out;
}

}  // namespace dubsynth
