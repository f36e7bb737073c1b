#include "dubsynth/pctl.hpp"

#include "dubsynth/environment.hpp"
#include "dubsynth/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>

namespace dubsynth {

Clause Clause::make(ClauseKind kind, std::vector<ExtProp> literals) {
    std::sort(literals.begin(), literals.end());
    literals.erase(std::unique(literals.begin(), literals.end()), literals.end());
    return {kind, std::move(literals)};
}

std::string to_string(const Clause &c) {
    const char *op = c.kind == ClauseKind::Conjunction ? " & " : " | ";
    std::string body;
    for (std::size_t i = 0; i < c.literals.size(); ++i) {
        if (i)
            body += op;
        body += to_string(c.literals[i]);
    }
    return c.literals.size() > 1 ? "(" + body + ")" : body;
}

Threshold make_threshold(double p, bool strict) {
    if (p == 0.0)
        strict = true;
    return {p, strict};
}

bool meets(double value, const Threshold &t) {
    return t.strict ? value > t.p : value >= t.p;
}

namespace {

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string located(int line, int column, const std::string &msg) {
    std::ostringstream os;
    os << line << ":" << column << ": " << msg;
    return os.str();
}

[[noreturn]] void fragment_error(int line, int column, const std::string &msg) {
    throw Error(ErrorKind::Fragment, located(line, column, msg));
}

// ---------------------------------------------------------------- lexer

struct Token {
    enum Kind { Ident, Number, Symbol, End } kind = End;
    std::string text;
    double number = 0.0;
    int line = 1;
    int column = 1;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip_space();
            Token t;
            t.line = line_;
            t.column = col_;
            if (pos_ >= src_.size()) {
                out.push_back(t);
                return out;
            }
            const char c = src_[pos_];
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                t.kind = Token::Ident;
                while (pos_ < src_.size() &&
                       (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                    t.text += advance();
            } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                t.kind = Token::Number;
                lex_number(t);
            } else if (c == '>' && peek(1) == '=') {
                t.kind = Token::Symbol;
                t.text = ">=";
                advance();
                advance();
            } else if (std::string_view("[]()&|!>=?").find(c) != std::string_view::npos) {
                t.kind = Token::Symbol;
                t.text = std::string(1, advance());
            } else {
                throw ParseError(std::string("unexpected character '") + c + "'", line_, col_);
            }
            out.push_back(std::move(t));
        }
    }

private:
    char peek(std::size_t ahead) const {
        return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
    }

    char advance() {
        const char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    void skip_space() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
            advance();
    }

    void lex_number(Token &t) {
        const std::size_t start = pos_;
        auto digits = [&] {
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                advance();
        };
        digits();
        if (peek(0) == '.') {
            advance();
            digits();
        }
        if (peek(0) == 'e' || peek(0) == 'E') {
            advance();
            if (peek(0) == '+' || peek(0) == '-')
                advance();
            digits();
        }
        t.text = std::string(src_.substr(start, pos_ - start));
        const auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
        if (res.ec != std::errc() || res.ptr != t.text.data() + t.text.size())
            throw ParseError("malformed number '" + t.text + "'", t.line, t.column);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

// --------------------------------------------------------------- parser

// Parse tree before the fragment is checked: a boolean expression whose
// leaves may also be nested probabilistic blocks.
struct Raw {
    enum class Kind { Prop, Not, And, Or, True, Block } kind = Kind::True;
    std::string name;
    std::vector<Raw> children;
    std::vector<Block> chain;  // Block only: the blocks from here to the end
    int line = 0;
    int column = 0;
};

Raw nary(Raw::Kind kind, std::vector<Raw> parts) {
    if (parts.size() == 1)
        return std::move(parts.front());
    Raw r;
    r.kind = kind;
    r.line = parts.front().line;
    r.column = parts.front().column;
    for (Raw &p : parts) {
        if (p.kind == kind) {
            for (Raw &c : p.children)
                r.children.push_back(std::move(c));
        } else {
            r.children.push_back(std::move(p));
        }
    }
    return r;
}

BoolExprPtr to_bool(const Raw &r) {
    switch (r.kind) {
    case Raw::Kind::Prop: return BoolExpr::prop(r.name, r.line, r.column);
    case Raw::Kind::True: return BoolExpr::truth();
    case Raw::Kind::Not: return BoolExpr::negate(to_bool(r.children.front()));
    case Raw::Kind::And:
    case Raw::Kind::Or: {
        std::vector<BoolExprPtr> cs;
        for (const Raw &c : r.children)
            cs.push_back(to_bool(c));
        return r.kind == Raw::Kind::And ? BoolExpr::conj(std::move(cs))
                                        : BoolExpr::disj(std::move(cs));
    }
    case Raw::Kind::Block:
        fragment_error(r.line, r.column,
                       "nested P operator must be a top-level conjunct of an until target");
    }
    fail(ErrorKind::Internal, "to_bool: unknown node");
}

PosExpr to_pos(const Raw &r) {
    const BoolExprPtr b = to_bool(r);
    try {
        return pos_translate(*b);
    } catch (const Error &e) {
        fragment_error(r.line, r.column, e.what());
    }
}

std::optional<Clause> clause_of(const PosExpr &e, PosExpr::Kind joiner, ClauseKind kind) {
    if (e.kind == PosExpr::Kind::Lit)
        return Clause::make(kind, {e.lit});
    if (e.kind != joiner)
        return std::nullopt;
    std::vector<ExtProp> lits;
    for (const PosExpr &c : e.children) {
        if (c.kind != PosExpr::Kind::Lit)
            return std::nullopt;
        lits.push_back(c.lit);
    }
    return Clause::make(kind, std::move(lits));
}

std::vector<Clause> to_cnf(const Raw &r) {
    const PosExpr e = to_pos(r);
    std::vector<Clause> out;
    auto add = [&](const PosExpr &c) {
        if (c.kind == PosExpr::Kind::True)
            return;
        auto clause = clause_of(c, PosExpr::Kind::Or, ClauseKind::Disjunction);
        if (!clause)
            fragment_error(r.line, r.column, "left side of U is not in CNF: " + to_string(*to_bool(r)));
        out.push_back(std::move(*clause));
    };
    if (e.kind == PosExpr::Kind::And) {
        for (const PosExpr &c : e.children)
            add(c);
    } else {
        add(e);
    }
    return out;
}

std::vector<Clause> to_dnf(const Raw &r) {
    const PosExpr e = to_pos(r);
    std::vector<Clause> out;
    auto add = [&](const PosExpr &c) {
        auto clause = clause_of(c, PosExpr::Kind::And, ClauseKind::Conjunction);
        if (!clause)
            fragment_error(r.line, r.column,
                           "until target is not a non-empty DNF: " + to_string(*to_bool(r)));
        out.push_back(std::move(*clause));
    };
    if (e.kind == PosExpr::Kind::Or) {
        for (const PosExpr &c : e.children)
            add(c);
    } else {
        add(e);
    }
    return out;
}

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    Formula formula() {
        expect_ident("Pmax");
        expect("=");
        expect("?");
        expect("[");
        const Token &t = peek();
        if (!starts_block())
            throw ParseError("expected a P operator after 'Pmax=? ['", t.line, t.column);
        Formula f;
        f.blocks = block();
        expect("]");
        expect_end();
        return f;
    }

    Raw expression() {
        Raw r = or_expr();
        expect_end();
        return r;
    }

private:
    const Token &peek(std::size_t ahead = 0) const {
        return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
    }

    const Token &next() {
        const Token &t = toks_[pos_];
        if (pos_ + 1 < toks_.size())
            ++pos_;
        return t;
    }

    bool at_symbol(const char *s) const {
        return peek().kind == Token::Symbol && peek().text == s;
    }

    bool at_ident(const char *s) const {
        return peek().kind == Token::Ident && peek().text == s;
    }

    [[noreturn]] void unexpected(const std::string &wanted) const {
        const Token &t = peek();
        const std::string got = t.kind == Token::End ? "end of input" : "'" + t.text + "'";
        throw ParseError("expected " + wanted + ", got " + got, t.line, t.column);
    }

    void expect(const char *sym) {
        if (!at_symbol(sym))
            unexpected(std::string("'") + sym + "'");
        next();
    }

    void expect_ident(const char *word) {
        if (!at_ident(word))
            unexpected(std::string("'") + word + "'");
        next();
    }

    void expect_end() {
        if (peek().kind != Token::End)
            unexpected("end of input");
    }

    bool starts_block() const {
        return at_ident("P") && peek(1).kind == Token::Symbol &&
               (peek(1).text == ">" || peek(1).text == ">=");
    }

    std::vector<Block> block() {
        next();  // P
        const bool strict = next().text == ">";
        const Token &num = peek();
        if (num.kind != Token::Number)
            unexpected("a probability");
        next();
        if (!(num.number >= 0.0 && num.number <= 1.0))
            throw ParseError("probability threshold " + num.text + " is outside [0, 1]", num.line,
                             num.column);
        expect("[");
        const Raw lhs = or_expr();
        if (!at_ident("U"))
            unexpected("'U'");
        next();
        const Raw target = or_expr();
        expect("]");

        Block b;
        b.threshold = make_threshold(num.number, strict);
        b.phi = to_cnf(lhs);

        // The target is either a DNF or a conjunction holding one nested block.
        std::vector<Block> chain;
        Raw psi = target;
        if (target.kind == Raw::Kind::Block) {
            fragment_error(target.line, target.column,
                           "nested P operator needs a state condition conjoined before it");
        }
        if (target.kind == Raw::Kind::And) {
            std::vector<Raw> rest;
            for (const Raw &c : target.children) {
                if (c.kind != Raw::Kind::Block) {
                    rest.push_back(c);
                } else if (chain.empty()) {
                    chain = c.chain;
                } else {
                    fragment_error(c.line, c.column, "until target holds more than one P operator");
                }
            }
            psi = nary(Raw::Kind::And, std::move(rest));
        }
        b.psi = to_dnf(psi);

        std::vector<Block> out{std::move(b)};
        out.insert(out.end(), chain.begin(), chain.end());
        return out;
    }

    Raw or_expr() {
        std::vector<Raw> parts{and_expr()};
        while (at_symbol("|")) {
            next();
            parts.push_back(and_expr());
        }
        return nary(Raw::Kind::Or, std::move(parts));
    }

    Raw and_expr() {
        std::vector<Raw> parts{unary()};
        while (at_symbol("&")) {
            next();
            parts.push_back(unary());
        }
        return nary(Raw::Kind::And, std::move(parts));
    }

    Raw unary() {
        if (at_symbol("!")) {
            const Token t = next();
            Raw r;
            r.kind = Raw::Kind::Not;
            r.line = t.line;
            r.column = t.column;
            r.children.push_back(unary());
            return r;
        }
        return primary();
    }

    Raw primary() {
        const Token t = peek();
        Raw r;
        r.line = t.line;
        r.column = t.column;
        if (at_symbol("(")) {
            next();
            Raw inner = or_expr();
            expect(")");
            return inner;
        }
        if (starts_block()) {
            r.kind = Raw::Kind::Block;
            r.chain = block();
            return r;
        }
        if (t.kind != Token::Ident)
            unexpected("a proposition, 'true', '!' or '('");
        if (t.text == "U" || t.text == "Pmax")
            unexpected("a proposition");
        next();
        if (t.text == "true") {
            r.kind = Raw::Kind::True;
        } else {
            r.kind = Raw::Kind::Prop;
            r.name = t.text;
        }
        return r;
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

std::string print_block(const Formula &f, std::size_t j) {
    const Block &b = f.blocks[j];
    std::string out = "P";
    out += b.threshold.strict ? ">" : ">=";
    out += format_number(b.threshold.p);
    out += " [ " + print_cnf(b.phi) + " U ";
    if (j + 1 < f.blocks.size()) {
        const std::string psi = print_dnf(b.psi);
        out += (b.psi.size() > 1 ? "(" + psi + ")" : psi) + " & " + print_block(f, j + 1);
    } else {
        out += print_dnf(b.psi);
    }
    return out + " ]";
}

std::string join_clauses(const std::vector<Clause> &cs, const char *op) {
    std::string out;
    for (std::size_t i = 0; i < cs.size(); ++i) {
        if (i)
            out += op;
        out += to_string(cs[i]);
    }
    return out;
}

bool has_both_polarities(const Clause &c) {
    for (std::size_t i = 1; i < c.literals.size(); ++i) {
        if (c.literals[i].base == c.literals[i - 1].base)
            return true;
    }
    return false;
}

void check_clause(const Clause &c, ClauseKind kind, const std::string &where,
                  std::vector<std::string> &diags) {
    if (c.kind != kind) {
        diags.push_back(where + " must be a " +
                        (kind == ClauseKind::Conjunction ? "conjunction" : "disjunction") +
                        " clause");
    }
    if (c.literals.empty()) {
        diags.push_back(where + " is empty");
        return;
    }
    if (has_both_polarities(c)) {
        diags.push_back(where + " " + to_string(c) +
                        (kind == ClauseKind::Conjunction ? " is unsatisfiable"
                                                         : " is a tautology") +
                        ": it holds both polarities of one proposition");
    }
}

}  // namespace

Formula parse_formula(std::string_view text) {
    return Parser(Lexer(text).run()).formula();
}

Clause parse_clause(std::string_view text, ClauseKind kind) {
    const Raw r = Parser(Lexer(text).run()).expression();
    const std::vector<Clause> cs = kind == ClauseKind::Conjunction ? to_dnf(r) : to_cnf(r);
    if (cs.size() != 1)
        fragment_error(r.line, r.column, "expected a single clause");
    Clause c = cs.front();
    c.kind = kind;
    return c;
}

std::string print_cnf(const std::vector<Clause> &phi) {
    return phi.empty() ? "true" : join_clauses(phi, " & ");
}

std::string print_dnf(const std::vector<Clause> &psi) {
    return join_clauses(psi, " | ");
}

std::string print(const Formula &f) {
    if (f.blocks.empty())
        return "Pmax=? [ ]";
    return "Pmax=? [ " + print_block(f, 0) + " ]";
}

std::vector<std::string> validate(const Formula &f, const std::vector<std::string> &propositions) {
    std::vector<std::string> diags;
    if (f.blocks.empty())
        diags.push_back("formula has no P blocks");
    for (std::size_t j = 0; j < f.blocks.size(); ++j) {
        const Block &b = f.blocks[j];
        const std::string tag = std::to_string(j + 1);
        if (!std::isfinite(b.threshold.p) || b.threshold.p < 0.0 || b.threshold.p > 1.0)
            diags.push_back("threshold of block " + tag + " is outside [0, 1]");
        if (b.psi.empty())
            diags.push_back("psi_" + tag + " is empty");
        for (std::size_t m = 0; m < b.phi.size(); ++m) {
            check_clause(b.phi[m], ClauseKind::Disjunction,
                         "clause " + std::to_string(m + 1) + " of phi_" + tag, diags);
        }
        for (std::size_t n = 0; n < b.psi.size(); ++n) {
            check_clause(b.psi[n], ClauseKind::Conjunction,
                         "clause " + std::to_string(n + 1) + " of psi_" + tag, diags);
        }
        auto check_names = [&](const std::vector<Clause> &cs) {
            for (const Clause &c : cs) {
                for (const ExtProp &e : c.literals) {
                    if (std::find(propositions.begin(), propositions.end(), e.base) ==
                        propositions.end())
                        diags.push_back("unknown proposition '" + e.base + "' in block " + tag);
                }
            }
        };
        check_names(b.phi);
        check_names(b.psi);
    }
    return diags;
}

const char *to_string(RuleKind kind) {
    switch (kind) {
    case RuleKind::AddPsiClause: return "add_psi_clause";
    case RuleKind::RemovePsiClause: return "remove_psi_clause";
    case RuleKind::RemovePhiClause: return "remove_phi_clause";
    case RuleKind::AddPhiClause: return "add_phi_clause";
    case RuleKind::LowerThreshold: return "lower_threshold";
    case RuleKind::RaiseThreshold: return "raise_threshold";
    }
    return "unknown";
}

RuleKind rule_kind_from_string(std::string_view name) {
    for (RuleKind k : {RuleKind::AddPsiClause, RuleKind::RemovePsiClause, RuleKind::RemovePhiClause,
                       RuleKind::AddPhiClause, RuleKind::LowerThreshold, RuleKind::RaiseThreshold}) {
        if (name == to_string(k))
            return k;
    }
    fail(ErrorKind::InvalidArgument, "unknown update rule '" + std::string(name) + "'");
}

int rule_number(RuleKind kind) {
    return static_cast<int>(kind) + 1;
}

Direction direction(RuleKind kind) {
    switch (kind) {
    case RuleKind::AddPsiClause:
    case RuleKind::RemovePhiClause:
    case RuleKind::LowerThreshold: return Direction::Increase;
    case RuleKind::RemovePsiClause:
    case RuleKind::AddPhiClause:
    case RuleKind::RaiseThreshold: return Direction::Decrease;
    }
    return Direction::Decrease;
}

void check_rule(const Formula &f, const UpdateRule &r) {
    const int nblocks = static_cast<int>(f.size());
    const int i = r.satisfied_up_to;
    if (i < 0 || i >= nblocks)
        fail(ErrorKind::Validation, "satisfied_up_to must be in [0, " + std::to_string(nblocks - 1) +
                                        "], got " + std::to_string(i));
    if (r.block <= i || r.block > nblocks) {
        fail(ErrorKind::Validation, "block " + std::to_string(r.block) +
                                        " is not editable: it must lie in [" +
                                        std::to_string(i + 1) + ", " + std::to_string(nblocks) + "]");
    }
    const Block &b = f.blocks[static_cast<std::size_t>(r.block - 1)];
    const std::string tag = std::to_string(r.block);
    auto check_index = [&](std::size_t count, const std::string &what) {
        if (r.index < 1 || static_cast<std::size_t>(r.index) > count)
            fail(ErrorKind::Validation, what + "_" + tag + " has no clause " + std::to_string(r.index));
    };
    auto check_new = [&](const std::vector<Clause> &cs, ClauseKind kind, const std::string &what) {
        std::vector<std::string> diags;
        check_clause(r.clause, kind, "new clause", diags);
        if (!diags.empty())
            fail(ErrorKind::Validation, diags.front());
        if (std::find(cs.begin(), cs.end(), r.clause) != cs.end())
            fail(ErrorKind::Validation, what + "_" + tag + " already has clause " + to_string(r.clause));
    };
    const Threshold t = make_threshold(r.threshold.p, r.threshold.strict);
    switch (r.kind) {
    case RuleKind::AddPsiClause: check_new(b.psi, ClauseKind::Conjunction, "psi"); break;
    case RuleKind::AddPhiClause: check_new(b.phi, ClauseKind::Disjunction, "phi"); break;
    case RuleKind::RemovePhiClause: check_index(b.phi.size(), "phi"); break;
    case RuleKind::RemovePsiClause:
        check_index(b.psi.size(), "psi");
        if (b.psi.size() < 2) {
            fail(ErrorKind::Validation, "psi_" + tag +
                                            " has a single clause; removing it would leave an "
                                            "unsatisfiable empty DNF (n_j >= 2 required)");
        }
        break;
    case RuleKind::LowerThreshold:
    case RuleKind::RaiseThreshold: {
        if (!std::isfinite(t.p) || t.p < 0.0 || t.p > 1.0)
            fail(ErrorKind::Validation, "new threshold is outside [0, 1]");
        const bool lower = r.kind == RuleKind::LowerThreshold;
        if (lower ? !(t.p < b.threshold.p) : !(t.p > b.threshold.p)) {
            fail(ErrorKind::Validation, std::string("new threshold ") + format_number(t.p) +
                                            (lower ? " must be below " : " must be above ") +
                                            format_number(b.threshold.p));
        }
        break;
    }
    }
}

Formula strip_satisfied(const Formula &f, int satisfied_up_to) {
    if (satisfied_up_to < 0 || satisfied_up_to >= static_cast<int>(f.size()))
        fail(ErrorKind::Validation, "cannot strip " + std::to_string(satisfied_up_to) + " of " +
                                        std::to_string(f.size()) + " blocks");
    Formula out;
    out.blocks.assign(f.blocks.begin() + satisfied_up_to, f.blocks.end());
    return out;
}

Formula apply_update(const Formula &f, const UpdateRule &r) {
    check_rule(f, r);
    Formula out = strip_satisfied(f, r.satisfied_up_to);
    Block &b = out.blocks[static_cast<std::size_t>(r.block - r.satisfied_up_to - 1)];
    const auto idx = static_cast<std::size_t>(r.index - 1);
    switch (r.kind) {
    case RuleKind::AddPsiClause: b.psi.push_back(r.clause); break;
    case RuleKind::RemovePsiClause: b.psi.erase(b.psi.begin() + idx); break;
    case RuleKind::RemovePhiClause: b.phi.erase(b.phi.begin() + idx); break;
    case RuleKind::AddPhiClause: b.phi.push_back(r.clause); break;
    case RuleKind::LowerThreshold:
    case RuleKind::RaiseThreshold: b.threshold = make_threshold(r.threshold.p, r.threshold.strict); break;
    }
    return out;
}

std::string describe(const UpdateRule &r, const Formula &f) {
    const std::string tag = std::to_string(r.block);
    const Block *b = r.block >= 1 && r.block <= static_cast<int>(f.size())
                         ? &f.blocks[static_cast<std::size_t>(r.block - 1)]
                         : nullptr;
    auto clause_at = [&](const std::vector<Clause> &cs) {
        const auto idx = static_cast<std::size_t>(r.index - 1);
        return r.index >= 1 && idx < cs.size() ? to_string(cs[idx]) : "#" + std::to_string(r.index);
    };
    auto thr = [](const Threshold &t) {
        return std::string(t.strict ? ">" : ">=") + format_number(t.p);
    };
    switch (r.kind) {
    case RuleKind::AddPsiClause:
        return "accept " + to_string(r.clause) + " as a target of block " + tag + " (add to psi_" +
               tag + ")";
    case RuleKind::RemovePsiClause:
        return "stop accepting " + (b ? clause_at(b->psi) : "?") + " as a target of block " + tag +
               " (remove from psi_" + tag + ")";
    case RuleKind::RemovePhiClause:
        return "drop the constraint " + (b ? clause_at(b->phi) : "?") + " while heading for block " +
               tag + "'s target (remove from phi_" + tag + ")";
    case RuleKind::AddPhiClause:
        return "also require " + to_string(r.clause) + " while heading for block " + tag +
               "'s target (add to phi_" + tag + ")";
    case RuleKind::LowerThreshold:
    case RuleKind::RaiseThreshold: {
        const Threshold t = make_threshold(r.threshold.p, r.threshold.strict);
        return std::string(r.kind == RuleKind::LowerThreshold ? "lower" : "raise") +
               " the threshold of block " + tag + " from " + (b ? thr(b->threshold) : "?") + " to " +
               thr(t);
    }
    }
    return {};
}

}  // namespace dubsynth
