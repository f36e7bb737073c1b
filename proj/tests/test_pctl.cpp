#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support.hpp"

using namespace testsupport;

namespace {

const char *kMission =
    "Pmax=? [ P>0 [ !u & !t1 U (!u & p) & P>0 [ !u U ((!u & t1) | (!u & t2)) & "
    "P>0 [ !u U (!u & d1) | (!u & d2) ] ] ] ]";

Clause conj(std::vector<ExtProp> l) { return Clause::make(ClauseKind::Conjunction, std::move(l)); }
Clause disj(std::vector<ExtProp> l) { return Clause::make(ClauseKind::Disjunction, std::move(l)); }

ErrorKind kind_of(const std::function<void()> &f) {
    try {
        f();
    } catch (const Error &e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::Internal;
}

}  // namespace

TEST_CASE("three-block mission parses into the expected blocks") {
    const Formula f = parse_formula(kMission);
    REQUIRE(f.size() == 3);
    const Block &b1 = f.blocks[0], &b2 = f.blocks[1], &b3 = f.blocks[2];
    CHECK(b1.phi == std::vector<Clause>{disj({neg_literal("u")}), disj({neg_literal("t1")})});
    CHECK(b1.psi == std::vector<Clause>{conj({neg_literal("u"), pos_literal("p")})});
    CHECK(b2.phi == std::vector<Clause>{disj({neg_literal("u")})});
    CHECK(b2.psi == std::vector<Clause>{conj({neg_literal("u"), pos_literal("t1")}),
                                        conj({neg_literal("u"), pos_literal("t2")})});
    CHECK(b3.psi == std::vector<Clause>{conj({neg_literal("u"), pos_literal("d1")}),
                                        conj({neg_literal("u"), pos_literal("d2")})});
    for (const Block &b : f.blocks)
        CHECK(b.threshold == Threshold{0.0, true});
    CHECK(validate(f, {"d1", "d2", "p", "t1", "t2", "u"}).empty());
    CHECK(parse_formula(print(f)) == f);
}

TEST_CASE("thresholds and trivial left sides") {
    const Formula f = parse_formula("Pmax=? [ P>=0.5 [ true U a ] ]");
    REQUIRE(f.size() == 1);
    CHECK(f.blocks[0].phi.empty());
    CHECK(f.blocks[0].threshold == Threshold{0.5, false});
    CHECK(parse_formula("Pmax=? [ P>=0 [ a U b ] ]").blocks[0].threshold == Threshold{0.0, true});
    CHECK(parse_formula("Pmax=? [ P>1 [ a U b ] ]").blocks[0].threshold == Threshold{1.0, true});
    const Formula cnf = parse_formula("Pmax=? [ P>0.25 [ (a | !b) & c U (a & b) | !c ] ]");
    CHECK(cnf.blocks[0].phi == std::vector<Clause>{disj({pos_literal("a"), neg_literal("b")}),
                                                   disj({pos_literal("c")})});
    CHECK(cnf.blocks[0].psi.size() == 2);
    CHECK(meets(0.5, {0.5, false}));
    CHECK_FALSE(meets(0.5, {0.5, true}));
}

TEST_CASE("syntax errors carry positions") {
    try {
        parse_formula("Pmax=? [ P>0 [ a U ] ]");
        FAIL("expected a parse error");
    } catch (const ParseError &e) {
        CHECK(e.kind() == ErrorKind::Parse);
        CHECK(e.line() == 1);
        CHECK(e.column() == 20);
    }
    try {
        parse_formula("Pmax=? [\n  P>0 [ a $ b ] ]");
        FAIL("expected a parse error");
    } catch (const ParseError &e) {
        CHECK(e.line() == 2);
        CHECK(e.column() == 11);
    }
    CHECK(kind_of([] { parse_formula("Pmax=? [ P>1.5 [ a U b ] ]"); }) == ErrorKind::Parse);
    CHECK(kind_of([] { parse_formula("Pmax=? [ a U b ]"); }) == ErrorKind::Parse);
    CHECK(kind_of([] { parse_formula("Pmax=? [ P>0 [ a U b ] ] extra"); }) == ErrorKind::Parse);
}

TEST_CASE("inputs outside the fragment") {
    CHECK(kind_of([] { parse_formula("Pmax=? [ P>0 [ !(a & b) U c ] ]"); }) == ErrorKind::Fragment);
    CHECK(kind_of([] { parse_formula("Pmax=? [ P>0 [ (a & b) | c U d ] ]"); }) == ErrorKind::Fragment);
    CHECK(kind_of([] { parse_formula("Pmax=? [ P>0 [ a U (b | c) & d ] ]"); }) == ErrorKind::Fragment);
    CHECK(kind_of([] { parse_formula("Pmax=? [ P>0 [ a U P>0 [ a U b ] ] ]"); }) == ErrorKind::Fragment);
    CHECK(kind_of([] { parse_formula("Pmax=? [ P>0 [ a U b & P>0 [ a U b ] & P>0 [ a U c ] ] ]"); }) ==
          ErrorKind::Fragment);
    CHECK(kind_of([] { parse_formula("Pmax=? [ P>0 [ P>0 [ a U b ] U b ] ]"); }) == ErrorKind::Fragment);
}

TEST_CASE("validation diagnostics") {
    const Formula f = parse_formula("Pmax=? [ P>0 [ a | !a U zz & !b & b ] ]");
    const auto diags = validate(f, {"a", "b"});
    CHECK(diags.size() == 3);
    Formula empty;
    CHECK_FALSE(validate(empty, {}).empty());
}

TEST_CASE("clause parsing") {
    CHECK(parse_clause("!u & t2", ClauseKind::Conjunction) == conj({neg_literal("u"), pos_literal("t2")}));
    CHECK(parse_clause("a | !b", ClauseKind::Disjunction) == disj({pos_literal("a"), neg_literal("b")}));
    CHECK(parse_clause("a", ClauseKind::Disjunction).kind == ClauseKind::Disjunction);
    CHECK_THROWS_AS(parse_clause("a | b", ClauseKind::Conjunction), Error);
}

TEST_CASE("random formulas round-trip through text and JSON") {
    Gen g(99);
    const std::vector<std::string> props = {"a", "b", "c", "u"};
    for (int k = 0; k < 1000; ++k) {
        Formula f = random_formula(g, props);
        if (coin(g, 0.3))
            f.blocks[0].threshold = make_threshold(uni(g, 0, 1), coin(g));
        const std::string text = print(f);
        CAPTURE(text);
        CHECK(parse_formula(text) == f);
        CHECK(formula_from_json(formula_to_json(f)) == f);
    }
}

TEST_CASE("update rules") {
    const Formula f = parse_formula(kMission);
    UpdateRule r;
    r.kind = RuleKind::RemovePhiClause;
    r.block = 1;
    r.index = 2;
    const Formula g = apply_update(f, r);
    CHECK(g.blocks[0].phi.size() == 1);
    CHECK(direction(r) == Direction::Increase);

    r = {};
    r.kind = RuleKind::RemovePsiClause;
    r.block = 3;
    r.index = 2;
    r.satisfied_up_to = 2;
    const Formula h = apply_update(f, r);
    REQUIRE(h.size() == 1);
    CHECK(h.blocks[0].psi.size() == 1);
    CHECK(direction(r) == Direction::Decrease);

    r.block = 2;  // already satisfied
    CHECK(kind_of([&] { check_rule(f, r); }) == ErrorKind::Validation);
    r.block = 1;
    r.satisfied_up_to = 0;
    CHECK(kind_of([&] { check_rule(f, r); }) == ErrorKind::Validation);  // single psi clause

    r = {};
    r.kind = RuleKind::AddPsiClause;
    r.block = 2;
    r.clause = conj({neg_literal("u"), pos_literal("t1")});
    CHECK(kind_of([&] { check_rule(f, r); }) == ErrorKind::Validation);  // duplicate
    r.clause = conj({neg_literal("u"), pos_literal("u")});
    CHECK(kind_of([&] { check_rule(f, r); }) == ErrorKind::Validation);

    r = {};
    r.kind = RuleKind::LowerThreshold;
    r.block = 1;
    CHECK(kind_of([&] { check_rule(f, r); }) == ErrorKind::Validation);
    r.kind = RuleKind::RaiseThreshold;
    r.threshold = {0.5, false};
    CHECK(apply_update(f, r).blocks[0].threshold == Threshold{0.5, false});
    CHECK(kind_of([&] { strip_satisfied(f, 3); }) == ErrorKind::Validation);
    CHECK(strip_satisfied(f, 1).size() == 2);

    for (RuleKind k : {RuleKind::AddPsiClause, RuleKind::RemovePsiClause, RuleKind::RemovePhiClause,
                       RuleKind::AddPhiClause, RuleKind::LowerThreshold, RuleKind::RaiseThreshold}) {
        CHECK(rule_kind_from_string(to_string(k)) == k);
    }
    CHECK(rule_number(RuleKind::RaiseThreshold) == 6);
    CHECK(kind_of([] { rule_kind_from_string("nope"); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("rule JSON") {
    const UpdateRule r = rule_from_json(json{{"rule", "add_psi_clause"}, {"block", 2}, {"clause", "!u & t2"}});
    CHECK(r.kind == RuleKind::AddPsiClause);
    CHECK(r.clause == conj({neg_literal("u"), pos_literal("t2")}));
    CHECK(r.satisfied_up_to == 0);
    CHECK(rule_from_json(rule_to_json(r)) == r);
}
