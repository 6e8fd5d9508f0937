#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace planql {

// Every failure in the engine carries a stable machine-readable kind
// ("unknown-column", "malformed-csv", ...) next to the human message.
// The agent loop feeds kinds back to the model as observations, so they
// must stay short and stable.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

[[noreturn]] inline void fail(std::string kind, const std::string& message) {
    throw Error(std::move(kind), message);
}

} // namespace planql
