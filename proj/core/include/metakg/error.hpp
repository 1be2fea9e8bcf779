#pragma once

#include <stdexcept>
#include <string>

namespace metakg {

/// Bad user input: malformed files, invalid parameters, missing fields.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Failure talking to an external model or tool. `transient` errors are retried.
class BackendError : public std::runtime_error {
public:
    explicit BackendError(const std::string& what, bool transient = true)
        : std::runtime_error(what), transient_(transient) {}

    [[nodiscard]] bool transient() const noexcept { return transient_; }

private:
    bool transient_;
};

/// A broken internal invariant (caller bug or corrupted state).
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace metakg
