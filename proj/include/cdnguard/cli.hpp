#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cdnguard::cli {

inline constexpr int kOk = 0;
inline constexpr int kUsageError = 1;
inline constexpr int kInputError = 2;
inline constexpr int kCheckFailed = 3;

// Subcommands: model {eval,sweep}, simulate, generate, aggregate, detect,
// report hist. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace cdnguard::cli
