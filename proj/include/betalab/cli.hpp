#pragma once

#include <iosfwd>

namespace betalab {

/// Entry point of the betalab tool. Exit codes: 0 success, 2 configuration
/// error (bad flag, bad value, unknown config key), 3 numeric failure
/// (undefined fiber, resource cap, non-convergence under --strict).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace betalab
