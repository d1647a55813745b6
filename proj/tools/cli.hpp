#pragma once
// Command-line front end. Exit codes: 0 success, 2 usage or validation
// error, 3 runtime failure.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace bcj::cli {

inline constexpr std::uint64_t kDefaultSeed = 20240601;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bcj::cli
