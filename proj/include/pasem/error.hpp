#pragma once

#include <stdexcept>
#include <string>

namespace pasem {

// Library errors. Each maps onto one status code of the C API.

struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Raised by root finders when a target lies outside the reachable range.
struct OutOfRange : std::out_of_range {
    using std::out_of_range::out_of_range;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A decoding model that cannot produce a metric (e.g. a bit level with no
// supported point on either side).
struct InvalidModel : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace pasem
