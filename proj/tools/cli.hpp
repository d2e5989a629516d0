#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bargain::cli {

// Full command dispatch, separated from main() so tests can drive it
// in-process. Exit codes: 0 success, 1 validation/parse failures,
// 2 transport failures.
int run(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace bargain::cli
