#pragma once

#include <stdexcept>
#include <string>

namespace brockwell {

// Contract violation in a library call (invalid distribution, bad shapes, ...).
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of a function, e.g. a quantile
// level outside (0, 1).
class domain_error : public error {
public:
    using error::error;
};

} // namespace brockwell
