#pragma once

#include <stdexcept>
#include <string>

namespace cklur {

// Exit codes used by the command-line tools.  Library errors carry the code
// so main() can translate an exception into the right process status.
enum class ExitCode : int {
    ok = 0,
    invalid = 1,      // bad input: file, instance data, arguments
    unsupported = 2,  // structurally valid input outside the supported fragment
    internal = 3,     // an internal consistency check failed
};

class Error : public std::runtime_error {
public:
    Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ExitCode code() const { return code_; }

private:
    ExitCode code_;
};

// Input data violates a documented precondition or validation rule.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(ExitCode::invalid, what) {}
};

// The request is well-formed but outside the supported fragment
// (e.g. norm computation on a non-discrete space).
class UnsupportedError : public Error {
public:
    explicit UnsupportedError(const std::string& what) : Error(ExitCode::unsupported, what) {}
};

// An invariant the library maintains internally failed; indicates a bug
// or numerically pathological input, never a normal user error.
class InternalError : public Error {
public:
    explicit InternalError(const std::string& what) : Error(ExitCode::internal, what) {}
};

}  // namespace cklur
