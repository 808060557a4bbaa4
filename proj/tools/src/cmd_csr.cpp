#include <iostream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "common.hpp"
#include "docparse/csr.hpp"
#include "docparse/errors.hpp"

namespace docparse::cli {

namespace {

struct CsrArgs {
  std::string input = "-";
  std::string output = "-";
  std::string command;
  double timeout = 30.0;
  bool keep_workspace = false;
  bool include_logs = false;
};

}  // namespace

void add_csr(CLI::App& app, int& exit_code) {
  auto a = std::make_shared<CsrArgs>();
  auto* sub = app.add_subcommand("csr", "Compilation success rate of {id, latex} JSONL samples");
  sub->add_option("-i,--input", a->input, "Input JSONL, - for stdin")->capture_default_str();
  sub->add_option("-o,--output", a->output, "Report path, - for stdout")->capture_default_str();
  sub->add_option("--command", a->command,
                  "Compiler command; the .tex file is appended (default: $DOCPARSE_LATEX_COMMAND or pdflatex)");
  sub->add_option("--timeout", a->timeout, "Per-sample timeout in seconds")->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_flag("--keep-workspace", a->keep_workspace, "Keep the compile directory and report its path");
  sub->add_flag("--include-logs", a->include_logs, "Include the tail of each compiler log");

  sub->callback([a, &exit_code] {
    Input in(a->input);
    std::vector<std::string> samples;
    Json ids = Json::array();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in.stream(), line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      Json rec;
      try {
        rec = Json::parse(line);
      } catch (const Json::parse_error&) {
        throw ProtocolError("csr: line " + std::to_string(line_no) + ": invalid JSON");
      }
      if (!rec.is_object() || !rec.contains("latex") || !rec["latex"].is_string()) {
        throw ProtocolError("csr: line " + std::to_string(line_no) +
                            ": expected an object with a string \"latex\" field");
      }
      ids.push_back(rec.contains("id") ? rec["id"] : Json(samples.size()));
      samples.push_back(rec["latex"].get<std::string>());
    }

    CsrConfig config = csr_config_from_env();
    if (!a->command.empty()) config.command = a->command;
    config.timeout_seconds = a->timeout;
    config.keep_workspace = a->keep_workspace;
    const CsrReport r = compile_success_rate(samples, config);

    Json j;
    j["command"] = "csr";
    j["config"] = {{"input", resolve_path(a->input)},
                   {"compiler", config.command},
                   {"timeout_seconds", config.timeout_seconds},
                   {"preamble", kCsrPreambleVersion}};
    j["samples"] = samples.size();
    if (!r.available) {
      j["status"] = "unavailable";
      j["reason"] = r.unavailable_reason;
      j["csr"] = nullptr;
      std::cerr << "csr: unavailable: " << r.unavailable_reason << '\n';
    } else {
      j["status"] = "ok";
      j["csr"] = r.rate ? Json(*r.rate) : Json();
      j["compiled"] = r.compiled;
      Json per = Json::array();
      for (const auto& s : r.samples) {
        Json o = {{"id", ids[s.index]}, {"compiled", s.compiled}, {"timed_out", s.timed_out},
                  {"exit_code", s.exit_code}};
        if (a->include_logs) o["log"] = s.log;
        per.push_back(o);
      }
      j["per_sample"] = per;
      if (a->keep_workspace) j["workspace"] = r.workspace;
    }
    write_json(a->output, j);
    exit_code = kExitOk;
  });
}

}  // namespace docparse::cli
