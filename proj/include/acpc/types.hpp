#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace acpc {

using StateId = std::int32_t;
using ActionId = std::int32_t;
using DraStateId = std::int32_t;

// Atomic-proposition sets are bitmasks over the declaring model's ap list.
using LabelMask = std::uint32_t;

inline constexpr int kMaxProps = 20;      // model label masks stay in 32 bits
inline constexpr int kMaxDraProps = 16;   // DRA delta tables are dense over 2^|AP|

struct Transition {
  StateId to;
  double prob;
};

// Malformed or inconsistent input documents / models. CLI exit code 3.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The specification admits no controller for this model. CLI exit code 2.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A configured resource cap was exceeded. CLI exit code 4.
struct CapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A numeric routine could not certify its result (singular system,
// non-convergence past the iteration cap). Reported, never regularized.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace acpc
