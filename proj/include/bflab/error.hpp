#pragma once

#include <stdexcept>
#include <string>

namespace bflab {

/// Precondition or schema violation on user-supplied input.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Resource guard tripped (dense kernels, many-body tensors, OT supports).
class BudgetExceeded : public std::length_error {
public:
    using std::length_error::length_error;
};

/// Non-finite values or a violated numerical invariant during a run.
class NumericalAbort : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw InvalidArgument(what);
}

}  // namespace bflab
