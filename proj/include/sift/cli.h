#pragma once

#include <iosfwd>

namespace sift::cli {

/// Runs one command. Exit codes: 0 success, 1 invalid input or flags,
/// 2 runtime failure (including a failed gradient check).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace sift::cli
