#pragma once

#include <stdexcept>
#include <string>

namespace condmom {

// A real-valued operation was handed an opaque-label map (or vice versa).
struct KindError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Maps passed to one operation belong to different spaces.
struct SpaceMismatchError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// The partialled-out direction lies (numerically) inside the subspace.
struct DegenerateDirectionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Binary decomposition called with coincident support points (b == d).
struct DegenerateSupportError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A treatment-effect operation was handed a non-{0,1} treatment column.
struct NonBinaryTreatmentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed fixture / CSV input.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace condmom
