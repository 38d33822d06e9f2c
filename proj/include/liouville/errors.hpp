#pragma once

#include <stdexcept>
#include <string>

namespace liouville {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A field that appears inverted (v_j, X) is zero.
struct SingularStateError : Error {
    using Error::Error;
};

/// The r-matrix is evaluated at sinh(lambda - mu) = 0.
struct PoleError : Error {
    using Error::Error;
};

/// A Laurent series with no coefficients where a leading term is required.
struct EmptySeriesError : Error {
    using Error::Error;
};

/// A truncated series does not carry enough known orders for the request.
struct PrecisionError : Error {
    using Error::Error;
};

/// Defect or Darboux data makes a required denominator vanish.
struct DegenerateError : Error {
    using Error::Error;
};

/// Numeric overflow that renormalization could not absorb.
struct OverflowError : Error {
    using Error::Error;
};

/// Invalid user input: bad mode, missing parameter, out-of-range index.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace liouville
