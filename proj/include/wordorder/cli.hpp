#pragma once

#include <string>
#include <vector>

namespace wordorder::cli {

/// Runs the `wordorder` command line. Returns the process exit code: 0 on
/// success, 2 for configuration errors, 3 for data errors.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args);

/// Worker threads for batch decoding, from WORDORDER_WORKERS (default: hardware threads).
unsigned worker_count();

}  // namespace wordorder::cli
