#pragma once

#include <stdexcept>

namespace bohm {

// Bad input: grid bounds, detector placement, malformed configuration.
class config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical invariant failed during a run (norm drift, P > 1, negative
// variance). Indicates a discretization problem upstream, never bad input.
class invariant_violation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The detector never fires, so the conditional distribution is undefined.
class zero_detection : public invariant_violation {
 public:
  using invariant_violation::invariant_violation;
};

// rho fell below the floor while evaluating v = j / rho.
class singular_velocity : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bohm
