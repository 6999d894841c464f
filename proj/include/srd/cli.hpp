// The `srd` command line: run, sweep, characterize, serve.
#pragma once

#include <iosfwd>

namespace srd::cli {

/// Exit codes: 0 success, 1 assertion failure (run/sweep), 2 configuration
/// or usage error.
int main(int argc, const char* const argv[], std::ostream& out, std::ostream& err);

}  // namespace srd::cli
