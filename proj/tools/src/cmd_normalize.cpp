#include <algorithm>
#include <iostream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "common.hpp"
#include "docparse/errors.hpp"
#include "docparse/latex_normalizer.hpp"

namespace docparse::cli {

namespace {

struct NormalizeArgs {
  std::string input = "-";
  std::string output = "-";
  std::string summary;
  std::string rules = "all";
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void add_normalize(CLI::App& app, int& exit_code) {
  auto a = std::make_shared<NormalizeArgs>();
  auto* sub = app.add_subcommand(
      "normalize", "Normalize a JSON Lines corpus of {\"id\", \"latex\"} records, one record at a time");
  sub->add_option("-i,--input", a->input, "Input JSONL, - for stdin")->capture_default_str();
  sub->add_option("-o,--output", a->output, "Output JSONL, - for stdout")->capture_default_str();
  sub->add_option("-s,--summary", a->summary, "Summary JSON path (stderr when omitted)");
  sub->add_option("--rules", a->rules, "all, none, or a comma list of bracket,fraction,subsup,prime,space")
      ->capture_default_str();

  sub->callback([a, &exit_code] {
    const auto rules = latex::RuleSet::parse(a->rules);
    Input in(a->input);
    Output out(a->output);
    std::vector<double> reductions;
    std::size_t records = 0, normalized = 0, failed = 0, rejected = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in.stream(), line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      Json rec;
      try {
        rec = Json::parse(line);
      } catch (const Json::parse_error& e) {
        std::cerr << "normalize: line " << line_no << ": invalid JSON: " << e.what() << '\n';
        ++rejected;
        continue;
      }
      if (!rec.is_object() || !rec.contains("latex") || !rec["latex"].is_string()) {
        std::cerr << "normalize: line " << line_no << ": expected an object with a string \"latex\" field\n";
        ++rejected;
        continue;
      }
      ++records;
      const std::string src = rec["latex"].get<std::string>();
      Json o;
      o["id"] = rec.contains("id") ? rec["id"] : Json(line_no);
      o["latex"] = src;
      try {
        const std::string norm = latex::normalize(src, rules);
        o["normalized"] = norm;
        if (src.empty()) {
          o["reduction"] = nullptr;
        } else {
          const double r = latex::measure_reduction(src, norm);
          o["reduction"] = r;
          reductions.push_back(r);
        }
        ++normalized;
      } catch (const NormalizationError& e) {
        std::cerr << "normalize: line " << line_no << ": " << e.what() << '\n';
        o["error"] = e.what();
        o["position"] = e.position();
        ++failed;
      }
      out.stream() << o.dump() << '\n';
    }
    out.stream().flush();

    Json s;
    s["command"] = "normalize";
    s["config"] = {{"input", resolve_path(a->input)},
                   {"output", resolve_path(a->output)},
                   {"rules", rules.to_string()},
                   {"reduction", "1 - bytes(normalized) / bytes(latex)"}};
    s["records"] = records;
    s["normalized"] = normalized;
    s["normalization_errors"] = failed;
    s["rejected_lines"] = rejected;
    s["reduction_count"] = reductions.size();
    if (reductions.empty()) {
      s["mean_reduction"] = nullptr;
      s["median_reduction"] = nullptr;
    } else {
      double sum = 0.0;
      for (double r : reductions) sum += r;
      s["mean_reduction"] = sum / static_cast<double>(reductions.size());
      s["median_reduction"] = median(reductions);
    }
    if (a->summary.empty()) {
      std::cerr << s.dump(2) << '\n';
    } else {
      write_json(a->summary, s);
    }
    exit_code = rejected ? kExitCheckFailed : kExitOk;
  });
}

}  // namespace docparse::cli
