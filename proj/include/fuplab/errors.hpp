#pragma once

#include <stdexcept>
#include <string>

namespace fuplab {

// Bad user input or configuration. The CLI maps this to exit code 2.
struct ConfigError : std::invalid_argument {
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// A computed quantity broke one of its stated numerical guarantees
// (leakage, hypothesis check, range invariant). CLI exit code 3.
struct ContractViolation : std::runtime_error {
    explicit ContractViolation(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fuplab
