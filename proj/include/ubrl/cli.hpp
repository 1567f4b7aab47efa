#pragma once

#include <iostream>

namespace ubrl::cli {

/// Runs the `ubrl` command line. Returns 0 on success, 1 on a domain error
/// and 2 on a usage error (synopsis printed to `err`).
int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);

} // namespace ubrl::cli
