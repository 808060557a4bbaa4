#include "docparse/csr.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "docparse/errors.hpp"

namespace docparse {

namespace fs = std::filesystem;

namespace {

std::string first_word(const std::string& command) {
  std::istringstream in(command);
  std::string w;
  in >> w;
  return w;
}

bool is_executable(const fs::path& p) {
  std::error_code ec;
  return fs::is_regular_file(p, ec) && ::access(p.c_str(), X_OK) == 0;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

std::string tail_of(const fs::path& p, std::size_t max_bytes) {
  std::ifstream in(p, std::ios::binary);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() > max_bytes) data = data.substr(data.size() - max_bytes);
  return data;
}

bool has_tabular(const std::string& s) { return s.find("\\begin{tabular") != std::string::npos; }

}  // namespace

std::string csr_document(const std::string& sample) {
  std::string doc;
  doc += "% ";
  doc += kCsrPreambleVersion;
  doc += "\n\\documentclass{article}\n\\usepackage{amsmath}\n\\usepackage{amssymb}\n\\pagestyle{empty}\n"
         "\\begin{document}\n";
  if (has_tabular(sample)) {
    doc += sample;
    doc += "\n";
  } else {
    doc += "\\[\n";
    doc += sample;
    doc += "\n\\]\n";
  }
  doc += "\\end{document}\n";
  return doc;
}

CsrConfig csr_config_from_env(CsrConfig base) {
  if (const char* cmd = std::getenv("DOCPARSE_LATEX_COMMAND"); cmd && *cmd) base.command = cmd;
  if (base.temp_dir.empty()) {
    if (const char* tmp = std::getenv("DOCPARSE_TMPDIR"); tmp && *tmp) base.temp_dir = tmp;
  }
  return base;
}

bool compiler_available(const std::string& command) {
  const std::string exe = first_word(command);
  if (exe.empty()) return false;
  if (exe.find('/') != std::string::npos) return is_executable(exe);
  const char* path = std::getenv("PATH");
  if (!path) return false;
  std::istringstream dirs(path);
  std::string dir;
  while (std::getline(dirs, dir, ':')) {
    if (!dir.empty() && is_executable(fs::path(dir) / exe)) return true;
  }
  return false;
}

CsrReport compile_success_rate(const std::vector<std::string>& samples, const CsrConfig& config) {
  CsrReport report;
  if (!compiler_available(config.command)) {
    report.unavailable_reason = "compiler '" + first_word(config.command) + "' not found";
    return report;
  }
  report.available = true;

  fs::path parent = config.temp_dir.empty() ? fs::temp_directory_path() : fs::path(config.temp_dir);
  fs::create_directories(parent);
  std::string tmpl = (parent / "docparse-csr-XXXXXX").string();
  if (!::mkdtemp(tmpl.data())) throw ConfigError("cannot create CSR workspace under " + parent.string());
  const fs::path workspace = tmpl;
  report.workspace = workspace.string();

  const bool have_timeout = compiler_available("timeout");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const fs::path dir = workspace / ("sample-" + std::to_string(i));
    fs::create_directories(dir);
    {
      std::ofstream tex(dir / "sample.tex", std::ios::binary);
      tex << csr_document(samples[i]);
    }
    std::string cmd = "cd " + shell_quote(dir.string()) + " && ";
    if (have_timeout) {
      std::ostringstream t;
      t << "timeout " << config.timeout_seconds << "s ";
      cmd += t.str();
    }
    cmd += config.command + " sample.tex > compile.log 2>&1 < /dev/null";

    CsrSample s;
    s.index = i;
    const int status = std::system(cmd.c_str());
    if (status != -1 && WIFEXITED(status)) {
      s.exit_code = WEXITSTATUS(status);
      s.timed_out = have_timeout && s.exit_code == 124;
      s.compiled = s.exit_code == 0;
    }
    s.log = tail_of(dir / "compile.log", 2000);
    if (s.compiled) ++report.compiled;
    report.samples.push_back(std::move(s));
  }
  report.rate = samples.empty() ? 0.0 : static_cast<double>(report.compiled) / static_cast<double>(samples.size());

  if (!config.keep_workspace) {
    std::error_code ec;
    fs::remove_all(workspace, ec);
    report.workspace.clear();
  }
  return report;
}

}  // namespace docparse
