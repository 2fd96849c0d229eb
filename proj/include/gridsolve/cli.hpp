#pragma once

// The gridsolve command line: solve, bench, gen.
//
// Exit codes: 0 success, 1 usage, 2 dimension mismatch, 3 singular pivot or
// not SPD, 4 iteration limit, 5 breakdown, 6 descriptor mismatch,
// 7 collective misuse, 8 I/O error.

#include <iosfwd>

namespace gridsolve::cli {

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gridsolve::cli
