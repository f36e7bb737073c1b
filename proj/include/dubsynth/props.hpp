#pragma once

// Extended propositions (the doubled alphabet xi_pi / xi_not_pi) and
// the raw boolean expressions they are produced from.

#include <compare>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace dubsynth {

enum class Polarity : std::uint8_t { Positive, Negative };

struct ExtProp {
    std::string base;
    Polarity polarity = Polarity::Positive;

    bool negative() const { return polarity == Polarity::Negative; }

    auto operator<=>(const ExtProp &) const = default;
    bool operator==(const ExtProp &) const = default;
};

inline ExtProp pos_literal(std::string base) { return {std::move(base), Polarity::Positive}; }
inline ExtProp neg_literal(std::string base) { return {std::move(base), Polarity::Negative}; }

// "p" or "!p"
std::string to_string(const ExtProp &e);

// Label sets over an indexed alphabet. Proposition i owns bits 2i (positive)
// and 2i+1 (negative), which caps an alphabet at 32 propositions.
using LabelSet = std::uint64_t;
inline constexpr std::size_t kMaxPropositions = 32;

inline constexpr LabelSet label_bit(std::size_t prop_index, Polarity polarity) {
    return LabelSet{1} << (2 * prop_index + (polarity == Polarity::Negative ? 1 : 0));
}

// Boolean expression over Pi as written by the user, before the pos()
// translation. Leaves are propositions; negation may appear anywhere here,
// the translation rejects anything outside NNF.
struct BoolExpr {
    enum class Kind { Prop, Not, And, Or, True };

    Kind kind = Kind::True;
    std::string name;  // Prop only
    std::vector<std::shared_ptr<const BoolExpr>> children;
    int line = 0;
    int column = 0;

    static std::shared_ptr<const BoolExpr> prop(std::string name, int line = 0, int column = 0);
    static std::shared_ptr<const BoolExpr> negate(std::shared_ptr<const BoolExpr> e);
    static std::shared_ptr<const BoolExpr> conj(std::vector<std::shared_ptr<const BoolExpr>> es);
    static std::shared_ptr<const BoolExpr> disj(std::vector<std::shared_ptr<const BoolExpr>> es);
    static std::shared_ptr<const BoolExpr> truth();
};

using BoolExprPtr = std::shared_ptr<const BoolExpr>;

bool equal(const BoolExpr &a, const BoolExpr &b);
std::string to_string(const BoolExpr &e);

// Negation-free expression over the extended alphabet: the output of pos().
struct PosExpr {
    enum class Kind { Lit, And, Or, True };

    Kind kind = Kind::True;
    ExtProp lit;  // Lit only
    std::vector<PosExpr> children;

    bool operator==(const PosExpr &) const = default;
};

std::string to_string(const PosExpr &e);

}  // namespace dubsynth
