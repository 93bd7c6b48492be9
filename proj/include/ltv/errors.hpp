#pragma once

#include <stdexcept>
#include <string>

namespace ltv {

// Non-finite loss or gradient; the CLI maps this to its own exit code so
// numeric failures are distinguishable from config and data errors.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ltv
