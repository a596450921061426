#pragma once

#include <iosfwd>

namespace zsd::cli {

// Exit codes: 0 success, 1 validation or usage error, 2 adapter failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitAdapter = 2;

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace zsd::cli
