#pragma once

// Tree-structured MDP built from the reachability tree: every arc becomes a
// chain of states, one per maximal interval of constant disc labels.

#include "dubsynth/environment.hpp"
#include "dubsynth/props.hpp"
#include "dubsynth/vehicle.hpp"

#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace dubsynth {

// Actions 0..2 are the controls of ControlSet::inputs; kNu advances a chain
// (and is the self-loop of a leaf).
inline constexpr int kNu = 3;
inline constexpr int kNumActions = 4;

enum class StateKind : std::uint8_t { Decision, Chain, Leaf };

const char *to_string(StateKind k);

struct MdpArc {
    ArcSegment seg;
    double r = 0.0;
    int stage = 0;
    int control = -1;
    int cell = -1;
};

struct MdpState {
    int stage = 0;
    int arc = 0;  // index into TreeMdp::arcs; 0 is the degenerate root arc
    double t_lo = 0.0;
    double t_hi = 0.0;
    double r = 0.0;
    int cell = -1;
    LabelSet labels = 0;
    int parent = -1;
    int parent_action = -1;
    int subtree_end = 0;  // one past the last descendant id
    StateKind kind = StateKind::Leaf;
};

struct Transition {
    int action = 0;
    int target = 0;
    double prob = 0.0;
};

// States are numbered in depth-first pre-order, so the subtree of s is the
// id range [s, subtree_end). Outgoing transitions are stored per state in
// (action, target) order; a decision state's u-children sit at u*n + cell.
struct TreeMdp {
    std::vector<MdpState> states;
    std::vector<int> offsets;  // size states.size() + 1
    std::vector<Transition> transitions;
    std::shared_ptr<const std::vector<MdpArc>> arcs;
    std::vector<std::string> propositions;
    int n = 1;
    int depth = 0;
    double dt = 0.0;
    ControlSet controls;
    NoiseModel noise;

    std::size_t size() const { return states.size(); }
    std::span<const Transition> out(int s) const {
        return {transitions.data() + offsets[s], transitions.data() + offsets[s + 1]};
    }
    // Child reached from decision state s under control u and noise cell.
    int child(int s, int u, int cell) const { return transitions[offsets[s] + u * n + cell].target; }
    // Successor of a chain state.
    int next(int s) const { return transitions[offsets[s]].target; }
    const MdpArc &arc_of(int s) const { return (*arcs)[states[s].arc]; }
    std::vector<int> enabled(int s) const;
};

// Labels are looked up per reach-tree node, keyed by (parent, control, cell).
class LabelCache {
public:
    const LabelSeq &get(const ReachNode &node, const Environment &env);
    std::size_t size() const { return map_.size(); }

private:
    std::unordered_map<std::int64_t, LabelSeq> map_;
};

LabelSet absorbing_mask(const std::vector<ExtProp> &absorbing, const Environment &env);

// Reach-tree truncation: a node stops expanding once its label sequence
// carries any absorbing literal.
TruncatePredicate absorbing_truncation(const Environment &env, LabelSet absorbing,
                                       std::shared_ptr<LabelCache> cache);

TreeMdp build_mdp(const ReachTree &tree, const Environment &env, LabelSet absorbing = 0,
                  LabelCache *cache = nullptr);

struct VehicleParams {
    double rho = 1.0;
    double dt = 1.0;
    int K = 1;
    double eps_max = 0.0;
    int n = 1;
    Pose q_init;
};

// Reach tree with absorbing truncation followed by build_mdp.
TreeMdp build_scenario_mdp(const VehicleParams &p, const Environment &env,
                           const std::vector<ExtProp> &absorbing,
                           std::size_t max_nodes = kDefaultNodeCeiling);

struct Violation {
    int state = -1;
    std::string message;
};

std::vector<Violation> validate(const TreeMdp &m);

struct PrunedMdp {
    TreeMdp mdp;
    int offset = 0;  // new id = old id - offset
    int origin(int new_id) const { return new_id + offset; }
};

// The subtree rooted at s_C, re-rooted at id 0.
PrunedMdp prune_from(const TreeMdp &m, int s_c);

// Bit of a literal within the label sets of an alphabet; throws on an
// unknown proposition.
LabelSet literal_bit(const std::vector<std::string> &propositions, const ExtProp &e);

}  // namespace dubsynth
