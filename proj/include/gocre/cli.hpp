#pragma once

#include <iosfwd>

namespace gocre {

/// Runs one command line. Returns 0 on success, 2 on usage errors and 1 on
/// runtime errors. Normal output goes to `out`, diagnostics to `err`.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Worker cap from GOCRE_THREADS; 0 or unset means one per hardware thread.
int worker_count_from_env();

}  // namespace gocre
