#pragma once

#include <stdexcept>
#include <string>

namespace hapvec {

// Base class for every exception thrown by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

// Offered load reaches or exceeds the number of servers; no steady state exists.
struct UnstableQueue : Error {
    using Error::Error;
};

// An operation that divides by the arrival rate was asked about an empty flow.
struct ZeroArrivalRate : Error {
    using Error::Error;
};

// A single-server-only formula was applied to a multi-server queue.
struct NotSingleServer : Error {
    using Error::Error;
};

// An iterative procedure exhausted its budget without meeting its tolerance.
struct NoConvergence : Error {
    using Error::Error;
};

// The truncated balance system produced an unusable solution.
struct SingularSystem : Error {
    using Error::Error;
};

// A transmission was requested over a link with no capacity.
struct ZeroRate : Error {
    using Error::Error;
};

// No offloading factor satisfies both stability constraints.
struct InfeasibleScenario : Error {
    using Error::Error;
};

// Malformed input that could not be parsed at all.
struct ParseError : Error {
    using Error::Error;
};

// Structurally valid input carrying an out-of-range or unknown value.
struct ValidationError : Error {
    using Error::Error;
};

// A file could not be opened, read, or written.
struct IoError : Error {
    using Error::Error;
};

}  // namespace hapvec
