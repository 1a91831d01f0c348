#pragma once

#include <stdexcept>
#include <string>

namespace exwb {

/// Raised for precondition violations, malformed input and exceeded caps.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A size or enumeration cap was exceeded; `required` names the cap that would have worked.
class CapExceeded : public Error {
public:
    CapExceeded(const std::string& what, std::size_t required)
        : Error(what + " (required cap: " + std::to_string(required) + ")"), required_(required) {}
    std::size_t required() const noexcept { return required_; }

private:
    std::size_t required_;
};

} // namespace exwb
