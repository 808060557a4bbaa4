#pragma once

// Runs the built docparse binary through the shell and captures its output.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#ifndef DOCPARSE_CLI_PATH
#error "DOCPARSE_CLI_PATH must point at the docparse executable"
#endif

namespace docparse::testing {

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string shell_quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) {
    if (c == '\'') q += "'\\''";
    else q += c;
  }
  return q + "'";
}

class TempDir {
public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("docparse-test-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

private:
  fs::path path_;
};

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

/// `args` is appended verbatim to the binary path, so quote paths with
/// shell_quote. `env` is a prefix such as "VAR=value ".
inline CliResult run_cli(const std::string& args, const std::string& stdin_text = "", const std::string& env = "") {
  TempDir io;
  write_file(io / "stdin", stdin_text);
  const std::string cmd = env + shell_quote(DOCPARSE_CLI_PATH) + " " + args + " < " +
                          shell_quote((io / "stdin").string()) + " > " + shell_quote((io / "stdout").string()) +
                          " 2> " + shell_quote((io / "stderr").string());
  const int status = std::system(cmd.c_str());
  CliResult r;
  if (status != -1 && WIFEXITED(status)) r.exit_code = WEXITSTATUS(status);
  r.out = read_file(io / "stdout");
  r.err = read_file(io / "stderr");
  return r;
}

}  // namespace docparse::testing
