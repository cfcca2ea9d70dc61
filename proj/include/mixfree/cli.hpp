#pragma once

#include <iosfwd>

namespace mixfree {

/// `<command> --config <path> [--out <dir>] [--seed <u64>] [--quiet]` with
/// command one of simulate, bound, certify, sweep, coverage, diagnose.
/// Returns 0 on success, 1 on a config error, 2 on a numeric failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mixfree
