#include "dubsynth/synthesis.hpp"

#include "dubsynth/error.hpp"

#include <algorithm>
#include <limits>

namespace dubsynth {

bool CompiledBlock::sat_phi(LabelSet labels) const {
    return std::all_of(phi.begin(), phi.end(), [&](LabelSet c) { return (c & labels) != 0; });
}

bool CompiledBlock::sat_psi(LabelSet labels) const {
    return std::any_of(psi.begin(), psi.end(), [&](LabelSet c) { return (c & labels) == c; });
}

CompiledBlock compile(const Block &b, const std::vector<std::string> &propositions) {
    CompiledBlock out;
    auto mask = [&](const Clause &c) {
        LabelSet m = 0;
        for (const ExtProp &e : c.literals)
            m |= literal_bit(propositions, e);
        return m;
    };
    for (const Clause &c : b.phi)
        out.phi.push_back(mask(c));
    for (const Clause &c : b.psi)
        out.psi.push_back(mask(c));
    out.threshold = b.threshold;
    return out;
}

std::vector<Region> partition(const TreeMdp &m, const CompiledBlock &b,
                              const std::vector<double> *next_init) {
    std::vector<Region> region(m.size(), Region::Maybe);
    for (std::size_t s = 0; s < m.size(); ++s) {
        const LabelSet labels = m.states[s].labels;
        if (b.sat_psi(labels) && (!next_init || (*next_init)[s] > 0.0))
            region[s] = Region::Yes;
        else if (!b.sat_phi(labels))
            region[s] = Region::No;
    }
    return region;
}

BackwardResult backward_values(const TreeMdp &m, const std::vector<Region> &region) {
    const int count = static_cast<int>(m.size());
    BackwardResult r;
    r.Vprime.assign(count, 0.0);
    r.mu.assign(count, static_cast<std::uint8_t>(kNu));
    std::vector<double> &V = r.Vprime;
    const double p = 1.0 / m.n;

    for (int s = count - 1; s >= 0; --s) {
        const MdpState &st = m.states[s];
        if (st.kind == StateKind::Decision) {
            const Transition *t = m.transitions.data() + m.offsets[s];
            double best = -1.0;
            int arg = 0;
            for (int u = 0; u < kNu; ++u) {
                double sum = 0.0;
                for (int c = 0; c < m.n; ++c)
                    sum += p * V[t[u * m.n + c].target];
                if (sum > best) {
                    best = sum;
                    arg = u;
                }
            }
            r.mu[s] = static_cast<std::uint8_t>(arg);
            if (region[s] == Region::Maybe)
                V[s] = best;
        } else if (st.kind == StateKind::Chain && region[s] == Region::Maybe) {
            V[s] = V[m.next(s)];
        }
        // A leaf in the maybe set never reaches the target: value 0.
        if (region[s] == Region::Yes)
            V[s] = 1.0;
        else if (region[s] == Region::No)
            V[s] = 0.0;
    }
    return r;
}

std::vector<double> threshold(const std::vector<double> &Vprime, const Threshold &t) {
    std::vector<double> V(Vprime.size(), 0.0);
    for (std::size_t s = 0; s < V.size(); ++s) {
        if (meets(Vprime[s], t))
            V[s] = Vprime[s];
    }
    return V;
}

BlockSolution solve_block(const TreeMdp &m, const CompiledBlock &b, const BlockSolution *next) {
    BlockSolution out;
    out.region = partition(m, b, next ? &next->V : nullptr);
    BackwardResult br = backward_values(m, out.region);
    out.V = threshold(br.Vprime, b.threshold);
    out.Vprime = std::move(br.Vprime);
    out.mu = std::move(br.mu);
    return out;
}

int advance(const Solution &sol, int s, int active) {
    const int f = static_cast<int>(sol.blocks.size());
    while (active < f && sol.blocks[active].yes(s))
        ++active;
    return active;
}

Bounds compute_bounds(const TreeMdp &m, const std::vector<BlockSolution> &blocks,
                      BoundsMode mode) {
    const int f = static_cast<int>(blocks.size());
    if (f == 0 || m.size() == 0)
        return {};
    const double v1 = blocks[0].V[0];
    if (!(v1 > 0.0))
        return {};

    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> lo(f, inf);
    std::vector<double> hi(f, -inf);
    auto record = [&](int k, int s) {
        lo[k] = std::min(lo[k], blocks[k].V[s]);
        hi[k] = std::max(hi[k], blocks[k].V[s]);
    };

    if (mode == BoundsMode::AllYes) {
        for (int k = 1; k < f; ++k) {
            for (std::size_t s = 0; s < m.size(); ++s) {
                if (blocks[k - 1].yes(static_cast<int>(s)))
                    record(k, static_cast<int>(s));
            }
        }
    } else {
        // Each state has a unique history, hence a unique active block.
        std::vector<std::pair<int, int>> stack{{0, 0}};
        while (!stack.empty()) {
            auto [s, b] = stack.back();
            stack.pop_back();
            while (b < f && blocks[b].yes(s)) {
                if (b + 1 < f)
                    record(b + 1, s);
                ++b;
            }
            if (b == f || blocks[b].region[s] == Region::No)
                continue;
            const MdpState &st = m.states[s];
            if (st.kind == StateKind::Decision) {
                const int u = blocks[b].mu[s];
                for (int c = 0; c < m.n; ++c)
                    stack.push_back({m.child(s, u, c), b});
            } else if (st.kind == StateKind::Chain) {
                stack.push_back({m.next(s), b});
            }
        }
    }

    Bounds out{v1, v1};
    for (int k = 1; k < f; ++k) {
        if (lo[k] == inf)
            return {};
        out.lower *= lo[k];
        out.upper *= hi[k];
    }
    return out;
}

Solution solve(const TreeMdp &m, const Formula &f, BoundsMode mode) {
    if (f.blocks.empty())
        fail(ErrorKind::Validation, "formula has no blocks");
    Solution sol;
    sol.formula = f;
    sol.mode = mode;
    sol.blocks.resize(f.size());
    for (int j = static_cast<int>(f.size()) - 1; j >= 0; --j) {
        const BlockSolution *next = j + 1 < static_cast<int>(f.size()) ? &sol.blocks[j + 1] : nullptr;
        sol.blocks[j] = solve_block(m, compile(f.blocks[j], m.propositions), next);
    }
    const Bounds b = compute_bounds(m, sol.blocks, mode);
    sol.lower = b.lower;
    sol.upper = b.upper;
    return sol;
}

namespace {

template <typename T>
std::vector<T> slice(const std::vector<T> &v, int first, int last) {
    return std::vector<T>(v.begin() + first, v.begin() + last);
}

BlockSolution restrict_block(const BlockSolution &b, int first, int last) {
    return {slice(b.V, first, last), slice(b.Vprime, first, last), slice(b.mu, first, last),
            slice(b.region, first, last)};
}

}  // namespace

Solution restrict_solution(const Solution &prev, const TreeMdp &m, int s_c, int satisfied_up_to) {
    Solution sol;
    sol.mode = prev.mode;
    if (satisfied_up_to == static_cast<int>(prev.blocks.size())) {
        // everything was satisfied on the way to s_c
        if (s_c < 0 || s_c >= static_cast<int>(m.size()))
            fail(ErrorKind::NotFound, "unknown state " + std::to_string(s_c));
        sol.lower = sol.upper = 1.0;
        return sol;
    }
    const PrunedMdp pr = prune_from(m, s_c);
    const int end = m.states[s_c].subtree_end;
    sol.formula = strip_satisfied(prev.formula, satisfied_up_to);
    for (std::size_t k = satisfied_up_to; k < prev.blocks.size(); ++k)
        sol.blocks.push_back(restrict_block(prev.blocks[k], s_c, end));
    const Bounds b = compute_bounds(pr.mdp, sol.blocks, sol.mode);
    sol.lower = b.lower;
    sol.upper = b.upper;
    return sol;
}

Solution solve_incremental(const Solution &prev, const TreeMdp &m, int s_c, const UpdateRule &rule) {
    const Formula updated = apply_update(prev.formula, rule);
    const PrunedMdp pr = prune_from(m, s_c);
    const int end = m.states[s_c].subtree_end;
    const int i = rule.satisfied_up_to;
    const int f = static_cast<int>(updated.size());

    Solution sol;
    sol.formula = updated;
    sol.mode = prev.mode;
    sol.blocks.resize(f);
    for (int k = f - 1; k >= 0; --k) {
        const int original = k + i;  // 0-based index in prev
        if (original > rule.block - 1) {
            sol.blocks[k] = restrict_block(prev.blocks[original], s_c, end);
        } else {
            const BlockSolution *next = k + 1 < f ? &sol.blocks[k + 1] : nullptr;
            sol.blocks[k] = solve_block(pr.mdp, compile(updated.blocks[k], m.propositions), next);
        }
    }
    const Bounds b = compute_bounds(pr.mdp, sol.blocks, sol.mode);
    sol.lower = b.lower;
    sol.upper = b.upper;
    return sol;
}

int satisfied_up_to(const Solution &sol, const TreeMdp &m, const std::vector<int> &path) {
    if (path.empty())
        return 0;
    if (path.front() != 0)
        fail(ErrorKind::InvalidArgument, "path must start at the root state");
    int active = 0;
    for (std::size_t k = 0; k < path.size(); ++k) {
        const int s = path[k];
        if (s < 0 || s >= static_cast<int>(m.size()))
            fail(ErrorKind::InvalidArgument, "path visits unknown state " + std::to_string(s));
        if (k > 0) {
            const int prev = path[k - 1];
            const bool loop = s == prev && m.states[s].kind == StateKind::Leaf;
            if (!loop && m.states[s].parent != prev)
                fail(ErrorKind::InvalidArgument, "path has no transition " + std::to_string(prev) +
                                                     " -> " + std::to_string(s));
        }
        active = advance(sol, s, active);
    }
    return active;
}

}  // namespace dubsynth
