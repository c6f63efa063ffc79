#pragma once

#include <stdexcept>
#include <string>

namespace msnet {

/// Raised when a request is mathematically infeasible (as opposed to
/// malformed): unstable hidden cancellations, marginal spectral factors,
/// stabilizability index >= 1, and similar conditions. The CLI maps this
/// to a distinct exit code.
class InfeasibleError : public std::runtime_error {
 public:
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace msnet
