#pragma once

#include <stdexcept>
#include <string>

namespace negm {

// Failure families; they map 1:1 onto the C API status codes and the
// CLI exit codes (usage=1, train=2, checkpoint=3, eval=4).
enum class ErrorKind {
    usage,
    train,
    checkpoint,
    eval,
    internal,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace negm
