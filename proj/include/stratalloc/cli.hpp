#pragma once

#include <iosfwd>

namespace stratalloc {

// Runs one CLI invocation. Exit codes: 0 success, 1 categorized error
// (schema, parse, reference, infeasible, convergence, invalid), 2 usage error.
// The output directory is --out, else $STRATALLOC_OUT_DIR, else ".".
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace stratalloc
