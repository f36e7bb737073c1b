#pragma once

#include <stdexcept>
#include <string>

namespace dubsynth {

enum class ErrorKind {
    InvalidArgument,
    Parse,
    Fragment,
    Validation,
    Domain,
    Phase,
    Stale,
    NotFound,
    Io,
    Limit,
    Internal,
};

const char *to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string &message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

// Syntax error in formula text; positions are 1-based.
class ParseError : public Error {
public:
    ParseError(const std::string &message, int line, int column);

    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string &message) {
    throw Error(kind, message);
}

}  // namespace dubsynth
