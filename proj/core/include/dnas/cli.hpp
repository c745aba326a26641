#pragma once

#include <ostream>

namespace dnas {

/// The `dnas` command line. Subcommands: search, grid, bops, oracle-check,
/// sample. Returns 0 on success, 2 on usage errors and missing files, 1 on
/// any other failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dnas
