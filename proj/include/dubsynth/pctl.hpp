#pragma once

// The nested-until fragment
//   Pmax=? [ P~p1 [ phi_1 U (psi_1 & P~p2 [ ... P~pf [ phi_f U psi_f ] ]) ] ]
// with phi_j in CNF and psi_j in DNF over extended propositions.

#include "dubsynth/props.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace dubsynth {

enum class ClauseKind : std::uint8_t { Conjunction, Disjunction };

struct Clause {
    ClauseKind kind = ClauseKind::Conjunction;
    std::vector<ExtProp> literals;  // sorted, no duplicates

    static Clause make(ClauseKind kind, std::vector<ExtProp> literals);

    bool operator==(const Clause &) const = default;
};

std::string to_string(const Clause &c);

struct Threshold {
    double p = 0.0;
    bool strict = false;

    bool operator==(const Threshold &) const = default;
};

// A threshold of ">= 0" is stored as "> 0": on a single path both accept
// nothing but satisfying paths, and in synthesis they keep the same states.
Threshold make_threshold(double p, bool strict);

bool meets(double value, const Threshold &t);

struct Block {
    std::vector<Clause> phi;  // disjunction clauses; empty = true
    std::vector<Clause> psi;  // conjunction clauses; non-empty
    Threshold threshold;

    bool operator==(const Block &) const = default;
};

struct Formula {
    std::vector<Block> blocks;

    std::size_t size() const { return blocks.size(); }
    bool operator==(const Formula &) const = default;
};

Formula parse_formula(std::string_view text);
std::string print(const Formula &f);
std::string print_cnf(const std::vector<Clause> &phi);
std::string print_dnf(const std::vector<Clause> &psi);

// Parses a single clause, e.g. "!u & t1" (conjunction) or "a | !b"
// (disjunction). A lone literal takes the requested kind.
Clause parse_clause(std::string_view text, ClauseKind kind);

// Diagnostics for everything outside the fragment; empty means valid.
std::vector<std::string> validate(const Formula &f, const std::vector<std::string> &propositions);

enum class RuleKind : std::uint8_t {
    AddPsiClause,     // 1
    RemovePsiClause,  // 2
    RemovePhiClause,  // 3
    AddPhiClause,     // 4
    LowerThreshold,   // 5
    RaiseThreshold,   // 6
};

enum class Direction : std::uint8_t { Increase, Decrease };

// Block and clause indices are 1-based, as in psi_j^n.
struct UpdateRule {
    RuleKind kind = RuleKind::AddPsiClause;
    int block = 1;
    int index = 0;          // RemovePsiClause / RemovePhiClause
    Clause clause;          // AddPsiClause / AddPhiClause
    Threshold threshold;    // LowerThreshold / RaiseThreshold
    int satisfied_up_to = 0;

    bool operator==(const UpdateRule &) const = default;
};

const char *to_string(RuleKind kind);
RuleKind rule_kind_from_string(std::string_view name);
int rule_number(RuleKind kind);

Direction direction(RuleKind kind);
inline Direction direction(const UpdateRule &r) { return direction(r.kind); }

// Throws ErrorKind::Validation when the rule does not apply to f.
void check_rule(const Formula &f, const UpdateRule &r);

// Drops the blocks already satisfied and applies the edit to block j.
Formula apply_update(const Formula &f, const UpdateRule &r);

// Formula with the first i blocks removed.
Formula strip_satisfied(const Formula &f, int satisfied_up_to);

std::string describe(const UpdateRule &r, const Formula &f);

}  // namespace dubsynth
