#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace atgrpo {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitContract = 3;

/// Entry point for `atgrpo train|eval|ablate`. `args` excludes the program
/// name. Returns the process exit status.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace atgrpo
