#pragma once

#include <stdexcept>
#include <string>

namespace handtrack {

enum class ErrorKind {
    InvalidInput,   // rejected argument (void depth, point behind camera, empty mask...)
    EmptyFrame,
    Io,
    Format,
    Config,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace handtrack
