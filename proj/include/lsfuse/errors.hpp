#pragma once

#include <stdexcept>
#include <string>

namespace lsfuse {

// Failure categories. The CLI maps each kind to a distinct exit code.
enum class ErrorKind { usage, io, validation, no_sample, internal };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::usage: return "usage";
        case ErrorKind::io: return "io";
        case ErrorKind::validation: return "validation";
        case ErrorKind::no_sample: return "no_sample";
        case ErrorKind::internal: return "internal";
    }
    return "internal";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline void require(bool cond, const std::string& what) {
    if (!cond) fail(ErrorKind::validation, what);
}

}  // namespace lsfuse
