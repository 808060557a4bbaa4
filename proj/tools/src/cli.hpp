#pragma once

namespace docparse::cli {

/// Stable exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,  // a check or metric failed, or input records were rejected
  kExitUsage = 2,        // bad arguments, configuration or protocol misuse
};

int run(int argc, char** argv);

}  // namespace docparse::cli
