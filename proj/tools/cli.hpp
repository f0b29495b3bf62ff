#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kic::cli {

enum ExitCode : int {
    kOk = 0,
    kVerifyFailed = 1,
    kUsage = 2,
    kDomain = 3,
    kStrictRank = 4,
};

/// Runs one command line (args excludes the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace kic::cli
