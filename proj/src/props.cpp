#include "dubsynth/error.hpp"
#include "dubsynth/props.hpp"

#include <sstream>

namespace dubsynth {

const char *to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Fragment: return "fragment";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Phase: return "phase";
    case ErrorKind::Stale: return "stale";
    case ErrorKind::NotFound: return "not-found";
    case ErrorKind::Io: return "io";
    case ErrorKind::Limit: return "limit";
    case ErrorKind::Internal: return "internal";
    }
    return "unknown";
}

static std::string located(const std::string &message, int line, int column) {
    std::ostringstream os;
    os << line << ":" << column << ": " << message;
    return os.str();
}

ParseError::ParseError(const std::string &message, int line, int column)
    : Error(ErrorKind::Parse, located(message, line, column)), line_(line), column_(column) {}

std::string to_string(const ExtProp &e) {
    return e.negative() ? "!" + e.base : e.base;
}

BoolExprPtr BoolExpr::prop(std::string name, int line, int column) {
    auto e = std::make_shared<BoolExpr>();
    e->kind = Kind::Prop;
    e->name = std::move(name);
    e->line = line;
    e->column = column;
    return e;
}

BoolExprPtr BoolExpr::negate(BoolExprPtr child) {
    auto e = std::make_shared<BoolExpr>();
    e->kind = Kind::Not;
    e->line = child->line;
    e->column = child->column;
    e->children.push_back(std::move(child));
    return e;
}

static BoolExprPtr nary(BoolExpr::Kind kind, std::vector<BoolExprPtr> es) {
    if (es.size() == 1)
        return es.front();
    auto e = std::make_shared<BoolExpr>();
    e->kind = kind;
    if (!es.empty()) {
        e->line = es.front()->line;
        e->column = es.front()->column;
    }
    // Flatten nested operators of the same kind: (a & b) & c == a & b & c.
    for (auto &c : es) {
        if (c->kind == kind)
            e->children.insert(e->children.end(), c->children.begin(), c->children.end());
        else
            e->children.push_back(std::move(c));
    }
    return e;
}

BoolExprPtr BoolExpr::conj(std::vector<BoolExprPtr> es) {
    return nary(Kind::And, std::move(es));
}

BoolExprPtr BoolExpr::disj(std::vector<BoolExprPtr> es) {
    return nary(Kind::Or, std::move(es));
}

BoolExprPtr BoolExpr::truth() {
    return std::make_shared<BoolExpr>();
}

bool equal(const BoolExpr &a, const BoolExpr &b) {
    if (a.kind != b.kind || a.name != b.name || a.children.size() != b.children.size())
        return false;
    for (std::size_t i = 0; i < a.children.size(); ++i) {
        if (!equal(*a.children[i], *b.children[i]))
            return false;
    }
    return true;
}

std::string to_string(const BoolExpr &e) {
    auto wrapped = [](const BoolExpr &c) {
        const bool compound = c.kind == BoolExpr::Kind::And || c.kind == BoolExpr::Kind::Or;
        return compound ? "(" + to_string(c) + ")" : to_string(c);
    };
    switch (e.kind) {
    case BoolExpr::Kind::Prop: return e.name;
    case BoolExpr::Kind::True: return "true";
    case BoolExpr::Kind::Not: return "!" + wrapped(*e.children.front());
    case BoolExpr::Kind::And:
    case BoolExpr::Kind::Or: {
        const char *op = e.kind == BoolExpr::Kind::And ? " & " : " | ";
        std::string out;
        for (std::size_t i = 0; i < e.children.size(); ++i) {
            if (i)
                out += op;
            out += wrapped(*e.children[i]);
        }
        return out;
    }
    }
    return {};
}

std::string to_string(const PosExpr &e) {
    switch (e.kind) {
    case PosExpr::Kind::Lit: return (e.lit.negative() ? "xi_not_" : "xi_") + e.lit.base;
    case PosExpr::Kind::True: return "true";
    case PosExpr::Kind::And:
    case PosExpr::Kind::Or: {
        const char *op = e.kind == PosExpr::Kind::And ? " & " : " | ";
        std::string out = "(";
        for (std::size_t i = 0; i < e.children.size(); ++i) {
            if (i)
                out += op;
            out += to_string(e.children[i]);
        }
        return out + ")";
    }
    }
    return {};
}

}  // namespace dubsynth
