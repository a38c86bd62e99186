#pragma once

#include <stdexcept>
#include <string>

namespace favar {

// All recoverable failures (bad input files, numerical degeneracy,
// violated preconditions) surface as favar::Error with a descriptive
// message. Callers that need to distinguish pipeline stages wrap this
// in StageError (see pipeline.hpp).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

}  // namespace favar
