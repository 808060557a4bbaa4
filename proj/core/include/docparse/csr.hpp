#pragma once

#include <optional>
#include <string>
#include <vector>

namespace docparse {

/// Version tag of the document wrapper below; bump when it changes.
inline constexpr const char* kCsrPreambleVersion = "csr-preamble-v1";

/// Minimal document every sample is compiled inside. Math samples are set
/// in a display environment; samples containing a tabular-like environment
/// are placed in the body as-is.
std::string csr_document(const std::string& sample);

struct CsrConfig {
  /// Compiler invocation; the .tex file name is appended as the last
  /// argument. Overridden by $DOCPARSE_LATEX_COMMAND when that is set.
  std::string command = "pdflatex -interaction=nonstopmode -halt-on-error";
  double timeout_seconds = 30.0;
  /// Parent of the per-run workspace; $DOCPARSE_TMPDIR, then the system
  /// temporary directory, when empty.
  std::string temp_dir;
  bool keep_workspace = false;
};

/// Applies the environment-variable overrides to a config.
CsrConfig csr_config_from_env(CsrConfig base = {});

struct CsrSample {
  std::size_t index = 0;
  bool compiled = false;
  bool timed_out = false;
  int exit_code = -1;
  std::string log;  // tail of the compiler output
};

struct CsrReport {
  bool available = false;
  std::string unavailable_reason;
  std::optional<double> rate;  // absent when unavailable
  std::size_t compiled = 0;
  std::vector<CsrSample> samples;
  std::string workspace;
};

/// True when the first word of `command` resolves to an executable.
bool compiler_available(const std::string& command);

/// Compiles every sample in its own subdirectory of a fresh workspace,
/// sequentially, and reports the fraction whose compiler exits with 0.
/// When the compiler is missing the report is marked unavailable and
/// carries no rate.
CsrReport compile_success_rate(const std::vector<std::string>& samples, const CsrConfig& config);

}  // namespace docparse
