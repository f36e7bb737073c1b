#pragma once

// Maximal-probability synthesis for the until chain on a tree MDP: one
// backward pass per block, last block first, plus the composed policy and
// its probability bounds.

#include "dubsynth/mdp.hpp"
#include "dubsynth/pctl.hpp"

#include <cstdint>
#include <vector>

namespace dubsynth {

enum class Region : std::uint8_t { No, Maybe, Yes };

// Label masks of one block over an MDP's alphabet.
struct CompiledBlock {
    std::vector<LabelSet> phi;  // a disjunction holds if any bit is present
    std::vector<LabelSet> psi;  // a conjunction holds if all bits are present
    Threshold threshold;

    bool sat_phi(LabelSet labels) const;
    bool sat_psi(LabelSet labels) const;
};

CompiledBlock compile(const Block &b, const std::vector<std::string> &propositions);

struct BlockSolution {
    std::vector<double> V;
    std::vector<double> Vprime;
    std::vector<std::uint8_t> mu;
    std::vector<Region> region;

    bool yes(int s) const { return region[s] == Region::Yes; }
    bool init(int s) const { return V[s] > 0.0; }
};

enum class BoundsMode : std::uint8_t {
    Reachable,  // V^min / V^max over yes-states reached under the composed policy
    AllYes,     // over every yes-state of the preceding block
};

struct Solution {
    Formula formula;
    std::vector<BlockSolution> blocks;
    double lower = 0.0;
    double upper = 0.0;
    BoundsMode mode = BoundsMode::Reachable;
};

// next_init == nullptr for the last block.
std::vector<Region> partition(const TreeMdp &m, const CompiledBlock &b,
                              const std::vector<double> *next_init);

struct BackwardResult {
    std::vector<double> Vprime;
    std::vector<std::uint8_t> mu;
};

// One pass over the states in decreasing id order; ties go to the lowest
// action.
BackwardResult backward_values(const TreeMdp &m, const std::vector<Region> &region);

// V = Vprime where the threshold is met, else 0.
std::vector<double> threshold(const std::vector<double> &Vprime, const Threshold &t);

BlockSolution solve_block(const TreeMdp &m, const CompiledBlock &b,
                          const BlockSolution *next);

Solution solve(const TreeMdp &m, const Formula &f, BoundsMode mode = BoundsMode::Reachable);

struct Bounds {
    double lower = 0.0;
    double upper = 0.0;
};

Bounds compute_bounds(const TreeMdp &m, const std::vector<BlockSolution> &blocks,
                      BoundsMode mode);
inline Bounds bounds(const Solution &sol) { return {sol.lower, sol.upper}; }

// prev restricted to the subtree at s_c with the first i blocks dropped.
Solution restrict_solution(const Solution &prev, const TreeMdp &m, int s_c, int satisfied_up_to);

// Re-solves blocks j..i+1 of the updated formula on prune_from(m, s_c) and
// copies the blocks after j from prev.
Solution solve_incremental(const Solution &prev, const TreeMdp &m, int s_c, const UpdateRule &rule);

// Largest i such that blocks 1..i were completed, in order, along the path.
int satisfied_up_to(const Solution &sol, const TreeMdp &m, const std::vector<int> &path);

// Block advancement on entering state s with `active` blocks already done.
int advance(const Solution &sol, int s, int active);

}  // namespace dubsynth
