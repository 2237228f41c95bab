#pragma once

#include <stdexcept>
#include <string>

namespace qkd {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent caller input (dimension mismatch, out-of-range
// parameter, dependent masks, bad file contents...). CLI maps this to exit 2.
struct InputError : Error {
    using Error::Error;
};

// Request exceeds a hard resource cap (qubit count, enumeration size).
struct CapacityError : Error {
    using Error::Error;
};

// Conditioning on a measurement outcome of probability zero.
struct ZeroProbabilityBranch : Error {
    using Error::Error;
};

} // namespace qkd
