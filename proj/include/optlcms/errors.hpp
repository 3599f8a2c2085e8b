#pragma once

#include <stdexcept>

namespace optlcms {

// Thrown when no parameter assignment can satisfy the memory budget.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace optlcms
