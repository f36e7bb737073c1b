#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "criteria.hpp"

using namespace testsupport;

namespace {

// Root decision over nine leaves; control 0 hits "a" in two of three cells,
// control 2 in one.
TreeMdp toy() {
    TreeMdp m;
    m.propositions = {"a", "b"};
    m.n = 3;
    m.depth = 1;
    m.dt = 1.0;
    m.controls = make_control_set(1.0);
    m.noise = make_noise_model(0.1, 3);
    const LabelSet a = label_bit(0, Polarity::Positive), na = label_bit(0, Polarity::Negative);
    const LabelSet b = label_bit(1, Polarity::Positive), nb = label_bit(1, Polarity::Negative);
    MdpState root;
    root.kind = StateKind::Decision;
    root.labels = na | nb;
    root.subtree_end = 10;
    m.states.push_back(root);
    m.offsets.push_back(0);
    for (int u = 0; u < 3; ++u) {
        for (int c = 0; c < 3; ++c)
            m.transitions.push_back({u, 1 + u * 3 + c, 1.0 / 3.0});
    }
    m.offsets.push_back(9);
    for (int k = 0; k < 9; ++k) {
        MdpState leaf;
        leaf.stage = 1;
        leaf.parent = 0;
        leaf.parent_action = k / 3;
        leaf.cell = k % 3;
        leaf.subtree_end = 2 + k;
        leaf.kind = StateKind::Leaf;
        const bool hit = k == 0 || k == 1 || k == 8;
        leaf.labels = (hit ? a : na) | (k == 0 ? b : nb);
        m.states.push_back(leaf);
        m.transitions.push_back({kNu, 1 + k, 1.0});
        m.offsets.push_back(static_cast<int>(m.transitions.size()));
    }
    return m;
}

}  // namespace

TEST_CASE("toy MDP: two thirds under the best control") {
    const TreeMdp m = toy();
    REQUIRE(validate(m).empty());
    const Solution sol = solve(m, parse_formula("Pmax=? [ P>0 [ true U a ] ]"));
    CHECK(sol.blocks[0].V[0] == doctest::Approx(2.0 / 3.0));
    CHECK(sol.blocks[0].mu[0] == 0);
    CHECK(sol.lower == doctest::Approx(2.0 / 3.0));
    CHECK(sol.upper == doctest::Approx(2.0 / 3.0));
    CHECK(sol.blocks[0].region[1] == Region::Yes);
    CHECK(sol.blocks[0].region[3] == Region::Maybe);

    // phi excludes the leaves without b; those are "no" states
    const Solution guarded = solve(m, parse_formula("Pmax=? [ P>0 [ b U a ] ]"));
    CHECK(guarded.blocks[0].region[0] == Region::No);
    CHECK(guarded.blocks[0].V[0] == 0.0);
}

TEST_CASE("thresholds gate the value") {
    const TreeMdp m = toy();
    CHECK(solve(m, parse_formula("Pmax=? [ P>=0.6 [ true U a ] ]")).blocks[0].V[0] == doctest::Approx(2.0 / 3.0));
    const Solution high = solve(m, parse_formula("Pmax=? [ P>=0.7 [ true U a ] ]"));
    CHECK(high.blocks[0].V[0] == 0.0);
    CHECK(high.blocks[0].Vprime[0] == doctest::Approx(2.0 / 3.0));
    CHECK(high.lower == 0.0);
    CHECK(high.upper == 0.0);
    CHECK(solve(m, parse_formula("Pmax=? [ P>=0.6666 [ true U a ] ]")).lower > 0.0);
}

TEST_CASE("two blocks: nested target and bounds") {
    const TreeMdp m = toy();
    // reach a, and from there b: only leaf 1 carries both
    const Solution sol = solve(m, parse_formula("Pmax=? [ P>0 [ true U a & P>0 [ true U b ] ] ]"));
    CHECK(sol.blocks[1].V[1] == 1.0);
    CHECK(sol.blocks[1].V[2] == 0.0);
    CHECK(sol.blocks[0].region[2] == Region::Maybe);
    CHECK(sol.blocks[0].V[0] == doctest::Approx(1.0 / 3.0));
    CHECK(sol.lower == doctest::Approx(1.0 / 3.0));
    CHECK(sol.upper == doctest::Approx(1.0 / 3.0));
    CHECK(advance(sol, 1, 0) == 2);
    CHECK(advance(sol, 2, 0) == 0);
    CHECK(satisfied_up_to(sol, m, {0, 1}) == 2);
    CHECK(satisfied_up_to(sol, m, {0, 1, 1}) == 2);
    CHECK_THROWS_AS(satisfied_up_to(sol, m, {0, 1, 2}), Error);

    const Solution done = restrict_solution(sol, m, 1, 2);
    CHECK(done.lower == 1.0);
    CHECK(done.upper == 1.0);
    const Solution mid = restrict_solution(sol, m, 1, 1);
    CHECK(mid.formula.size() == 1);
    CHECK(mid.lower == 1.0);
}

TEST_CASE("bounds bracket the value of the later blocks") {
    Gen g(31);
    for (int k = 0; k < 150; ++k) {
        const Model model = random_model(g);
        const Formula f = random_formula(g, model.props);
        const Solution r = solve(model.mdp, f, BoundsMode::Reachable);
        const Solution a = solve(model.mdp, f, BoundsMode::AllYes);
        CHECK(r.lower <= r.upper);
        CHECK(r.upper <= r.blocks[0].V[0] + 1e-15);
        if (r.lower > 0.0) {
            CHECK(a.lower <= r.lower + 1e-15);
            CHECK(a.upper >= r.upper - 1e-15);
        }
        if (f.size() == 1) {
            CHECK(r.lower == r.blocks[0].V[0]);
            CHECK(r.upper == r.blocks[0].V[0]);
        }
    }
}

TEST_CASE("values match exhaustive policy enumeration") {
    const Outcome o = check_oracle(7, 60, 1e-12);
    INFO(o.detail);
    CHECK(o.pass);
}

TEST_CASE("update rules move values in their direction") {
    const Outcome o = check_monotone(8, 15);
    INFO(o.detail);
    CHECK(o.pass);
}

TEST_CASE("incremental re-solve equals a scratch solve") {
    const Outcome o = check_incremental(9, 40, 1e-12);
    INFO(o.detail);
    CHECK(o.pass);
}

TEST_CASE("incremental re-solve at the root of the full model") {
    const TreeMdp m = toy();
    const Formula f = parse_formula("Pmax=? [ P>0 [ true U a & P>0 [ true U b ] ] ]");
    const Solution prev = solve(m, f);
    UpdateRule r;
    r.kind = RuleKind::AddPsiClause;
    r.block = 2;
    r.clause = Clause::make(ClauseKind::Conjunction, {pos_literal("a")});
    const Solution inc = solve_incremental(prev, m, 0, r);
    CHECK(inc.blocks[0].V[0] == doctest::Approx(2.0 / 3.0));
    r.kind = RuleKind::RaiseThreshold;
    r.block = 1;
    r.threshold = {0.5, false};
    CHECK(solve_incremental(prev, m, 0, r).lower == 0.0);
    r.block = 0;
    CHECK_THROWS_AS(solve_incremental(prev, m, 0, r), Error);
}
