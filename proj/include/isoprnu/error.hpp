#pragma once

#include <stdexcept>
#include <string>

namespace isoprnu {

enum class ErrorKind {
    InvalidParameter,
    EmptyResult,
    SingularFit,
    DegenerateInput,
    NoMatchingPredictor,
    InvalidSpec,
    InferenceFailed,
    Io,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, const std::string& what) {
    if (!cond) fail(ErrorKind::InvalidParameter, what);
}

}  // namespace isoprnu
