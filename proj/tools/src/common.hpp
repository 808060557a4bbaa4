#pragma once

#include <fstream>
#include <iosfwd>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

namespace docparse::cli {

using Json = nlohmann::ordered_json;

/// Reads from stdin for "-", otherwise opens the file. Throws ConfigError
/// when the file cannot be opened.
class Input {
public:
  explicit Input(const std::string& path);
  std::istream& stream() { return *in_; }

private:
  std::unique_ptr<std::ifstream> file_;
  std::istream* in_;
};

/// Writes to stdout for "-" or an empty path, otherwise creates the file.
class Output {
public:
  explicit Output(const std::string& path);
  std::ostream& stream() { return *out_; }

private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* out_;
};

/// Pretty-printed JSON followed by a newline.
void write_json(const std::string& path, const Json& value);

/// Absolute, lexically normalized form of a path; "-" is kept as is.
std::string resolve_path(const std::string& path);

/// Subcommand registration. Each returns the exit code through the
/// callback installed on the subcommand.
void add_gradcheck(CLI::App& app, int& exit_code);
void add_train_toy(CLI::App& app, int& exit_code);
void add_normalize(CLI::App& app, int& exit_code);
void add_eval_text(CLI::App& app, int& exit_code);
void add_eval_detect(CLI::App& app, int& exit_code);
void add_csr(CLI::App& app, int& exit_code);

}  // namespace docparse::cli
