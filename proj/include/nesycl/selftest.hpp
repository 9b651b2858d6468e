#pragma once

#include <ostream>

namespace nesycl {

/// Fast invariant suite behind `nesycl selftest`. Prints one line per check
/// and returns the number of failed checks.
int run_selftest(std::ostream& out);

}  // namespace nesycl
