#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cli.hpp"
#include "common.hpp"
#include "docparse/detection_metrics.hpp"
#include "docparse/errors.hpp"
#include "docparse/sequence_metrics.hpp"
#include "docparse/table_metrics.hpp"

namespace docparse::cli {

namespace {

struct Diagnostics {
  std::string file;
  Json list = Json::array();

  void add(std::size_t line, const std::string& msg) {
    std::cerr << file << ':' << line << ": " << msg << '\n';
    list.push_back({{"line", line}, {"message", msg}});
  }
};

// Calls fn(line_no, object) for every non-blank line that parses as a JSON
// object; everything else becomes a diagnostic.
template <typename Fn>
void for_each_record(const std::string& path, Diagnostics& diag, Fn fn) {
  Input in(path);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in.stream(), line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json rec;
    try {
      rec = Json::parse(line);
    } catch (const Json::parse_error&) {
      diag.add(n, "invalid JSON");
      continue;
    }
    if (!rec.is_object()) {
      diag.add(n, "expected a JSON object");
      continue;
    }
    fn(n, rec);
  }
}

std::string fmt(const Json& v) {
  if (v.is_null()) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v.get<double>());
  return buf;
}

void print_table(const std::vector<std::pair<std::string, Json>>& rows) {
  std::size_t width = 0;
  for (const auto& [name, value] : rows) width = std::max(width, name.size());
  for (const auto& [name, value] : rows) {
    std::cerr << "  " << name << std::string(width - name.size() + 2, ' ')
              << (value.is_string() ? value.get<std::string>() : value.is_number_integer() ? value.dump() : fmt(value))
              << '\n';
  }
}

// ---- eval-text ----

struct TextArgs {
  std::string input = "-";
  std::string output = "-";
  std::string tokenizer = "whitespace";
  int max_n = 4;
  bool normalize = false;
  bool tables = false;
};

Tokens tokenize(const std::string& how, const std::string& text) {
  if (how == "chars") return tokenize_code_points(text);
  if (how == "latex") return tokenize_latex(text);
  return tokenize_whitespace(text);
}

// ---- eval-detect ----

struct DetectArgs {
  std::string input = "-";
  std::string output = "-";
  double iou = 0.5;
  bool sweep = false;
  bool plain = false;
};

std::optional<Box> parse_box(const Json& b) {
  auto num = [](const Json& v) -> std::optional<double> {
    if (!v.is_number()) return std::nullopt;
    const double d = v.get<double>();
    return std::isfinite(d) ? std::optional<double>(d) : std::nullopt;
  };
  std::optional<double> c[4];
  if (b.is_array() && b.size() == 4) {
    for (std::size_t i = 0; i < 4; ++i) c[i] = num(b[i]);
  } else if (b.is_object()) {
    const char* names[] = {"x0", "y0", "x1", "y1"};
    for (int i = 0; i < 4; ++i) {
      if (b.contains(names[i])) c[i] = num(b[names[i]]);
    }
  } else {
    return std::nullopt;
  }
  for (const auto& v : c) {
    if (!v) return std::nullopt;
  }
  return Box{*c[0], *c[1], *c[2], *c[3]};
}

// Parses one element of a preds/gts array. Returns an error message on failure.
std::optional<std::string> parse_detection(const Json& e, bool allow_confidence, ScoredDetection& out) {
  if (!e.is_object()) return "expected an object";
  if (!e.contains("label") || !e["label"].is_string()) return "missing string \"label\"";
  // The flat {label, x0, y0, x1, y1} layout-JSONL form is accepted too.
  const bool flat = !e.contains("box") && e.contains("x0");
  if (!e.contains("box") && !flat) return "missing \"box\"";
  const auto box = parse_box(flat ? e : e["box"]);
  if (!box) return "\"box\" must be [x0, y0, x1, y1] or {x0, y0, x1, y1} with finite numbers";
  if (box->x0 > box->x1 || box->y0 > box->y1) return "box corners out of order (need x0 <= x1 and y0 <= y1)";
  out = {{e["label"].get<std::string>(), *box}, std::nullopt};
  const char* key = e.contains("conf") ? "conf" : e.contains("confidence") ? "confidence" : nullptr;
  if (key && !e[key].is_null()) {
    if (!allow_confidence) return "ground truths must not carry a confidence";
    if (!e[key].is_number()) return "confidence must be a number";
    const double c = e[key].get<double>();
    if (!(c >= 0.0 && c <= 1.0)) return "confidence must lie in [0, 1]";
    out.confidence = c;
  }
  return std::nullopt;
}

Json score_json(const DetectionScore& s) {
  return {{"precision", s.precision},
          {"recall", s.recall},
          {"f1", s.f1},
          {"true_positives", s.true_positives},
          {"predictions", s.predictions},
          {"ground_truths", s.ground_truths},
          {"precision_undefined", s.precision_undefined},
          {"recall_undefined", s.recall_undefined}};
}

}  // namespace

void add_eval_text(CLI::App& app, int& exit_code) {
  auto a = std::make_shared<TextArgs>();
  auto* sub = app.add_subcommand(
      "eval-text", "Edit distance, BLEU, ExpRate and table cell F1 on {id, pred, ref} JSON Lines");
  sub->add_option("-i,--input", a->input, "Input JSONL, - for stdin")->capture_default_str();
  sub->add_option("-o,--output", a->output, "Report path, - for stdout")->capture_default_str();
  sub->add_option("--tokenizer", a->tokenizer, "BLEU tokens: whitespace, chars or latex")
      ->capture_default_str()
      ->check(CLI::IsMember({"whitespace", "chars", "latex"}));
  sub->add_option("--max-n", a->max_n, "Highest BLEU n-gram order")->capture_default_str()->check(CLI::Range(1, 8));
  sub->add_flag("--normalize", a->normalize, "Normalize LaTeX on both sides before ExpRate");
  sub->add_flag("--tables", a->tables, "Also score table cell F1 (texts are LaTeX tables)");

  sub->callback([a, &exit_code] {
    Diagnostics diag{a->input};
    std::vector<Tokens> cand_tokens;
    std::vector<std::vector<Tokens>> ref_tokens;
    std::vector<std::string> preds, refs;
    std::set<std::string> seen;
    Json samples = Json::array();
    double sum_ed = 0.0, sum_ned = 0.0, sum_bleu = 0.0;
    double sum_tp = 0.0, sum_tr = 0.0, sum_tf = 0.0;
    std::size_t table_failed = 0, empty_candidates = 0;

    for_each_record(a->input, diag, [&](std::size_t line, const Json& rec) {
      if (!rec.contains("id")) return diag.add(line, "missing \"id\"");
      if (!rec.contains("pred") || !rec["pred"].is_string()) return diag.add(line, "missing string \"pred\"");
      if (!rec.contains("ref") || !rec["ref"].is_string()) return diag.add(line, "missing string \"ref\"");
      if (!seen.insert(rec["id"].dump()).second) return diag.add(line, "duplicate id " + rec["id"].dump());
      const auto pred = rec["pred"].get<std::string>();
      const auto ref = rec["ref"].get<std::string>();
      const auto pc = tokenize_code_points(pred);
      const auto rc = tokenize_code_points(ref);
      const auto ed = edit_distance(pc, rc);
      const double ned = normalized_edit_distance(pc, rc);
      cand_tokens.push_back(tokenize(a->tokenizer, pred));
      ref_tokens.push_back({tokenize(a->tokenizer, ref)});
      const auto sb = bleu(cand_tokens.back(), ref_tokens.back(), a->max_n);
      empty_candidates += sb.empty_candidate;
      Json s = {{"id", rec["id"]},
                {"edit_distance", ed},
                {"normalized_edit_distance", ned},
                {"bleu", sb.score},
                {"exact", pred == ref}};
      if (a->tables) {
        const auto tf = table_cell_f1(pred, ref);
        s["table_cell_f1"] = tf.f1;
        if (tf.failed) {
          s["table_error"] = tf.message;
          ++table_failed;
        }
        sum_tp += tf.precision;
        sum_tr += tf.recall;
        sum_tf += tf.f1;
      }
      samples.push_back(s);
      preds.push_back(pred);
      refs.push_back(ref);
      sum_ed += static_cast<double>(ed);
      sum_ned += ned;
      sum_bleu += sb.score;
    });

    const auto n = static_cast<double>(preds.size());
    auto mean = [&](double v) { return preds.empty() ? Json() : Json(v / n); };
    Json m;
    m["corpus_bleu"] = preds.empty() ? Json() : Json(corpus_bleu(cand_tokens, ref_tokens, a->max_n).score);
    m["mean_sentence_bleu"] = mean(sum_bleu);
    m["empty_candidates"] = empty_candidates;
    m["mean_edit_distance"] = mean(sum_ed);
    m["mean_normalized_edit_distance"] = mean(sum_ned);
    m["exp_rate"] = preds.empty() ? Json() : Json(exp_rate(preds, refs, a->normalize));
    if (a->tables) {
      m["table_cell"] = {{"mean_precision", mean(sum_tp)},
                         {"mean_recall", mean(sum_tr)},
                         {"mean_f1", mean(sum_tf)},
                         {"extraction_failures", table_failed}};
    }
    Json j;
    j["command"] = "eval-text";
    j["config"] = {{"input", resolve_path(a->input)},
                   {"tokenizer", a->tokenizer},
                   {"max_n", a->max_n},
                   {"bleu_smoothing", "add-one for orders >= 2"},
                   {"normalize", a->normalize},
                   {"tables", a->tables},
                   {"edit_distance_unit", "code point"}};
    j["samples"] = preds.size();
    j["metrics"] = m;
    j["per_sample"] = samples;
    j["diagnostics"] = diag.list;
    write_json(a->output, j);

    std::vector<std::pair<std::string, Json>> rows = {{"samples", j["samples"]},
                                                      {"corpus BLEU", m["corpus_bleu"]},
                                                      {"mean sentence BLEU", m["mean_sentence_bleu"]},
                                                      {"mean edit distance", m["mean_edit_distance"]},
                                                      {"mean normalized edit distance", m["mean_normalized_edit_distance"]},
                                                      {"ExpRate", m["exp_rate"]}};
    if (a->tables) rows.emplace_back("mean table cell F1", m["table_cell"]["mean_f1"]);
    print_table(rows);
    exit_code = diag.list.empty() ? kExitOk : kExitCheckFailed;
  });
}

void add_eval_detect(CLI::App& app, int& exit_code) {
  auto a = std::make_shared<DetectArgs>();
  auto* sub = app.add_subcommand(
      "eval-detect",
      "Detection precision/recall/F1 on {id, preds, gts} JSON Lines; max-F1 sweep when predictions carry conf");
  sub->add_option("-i,--input", a->input, "Input JSONL, - for stdin")->capture_default_str();
  sub->add_option("-o,--output", a->output, "Report path, - for stdout")->capture_default_str();
  sub->add_option("--iou", a->iou, "IoU threshold for a match")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  auto* sw = sub->add_flag("--sweep", a->sweep, "Require confidences and report the max-F1 sweep");
  sub->add_flag("--plain", a->plain, "Ignore confidences and score every prediction")->excludes(sw);

  sub->callback([a, &exit_code] {
    Diagnostics diag{a->input};
    std::vector<std::vector<ScoredDetection>> per_pred;
    std::vector<std::vector<LayoutElement>> per_gt;
    Json ids = Json::array();
    std::set<std::string> seen;
    std::size_t total = 0, scored = 0;

    for_each_record(a->input, diag, [&](std::size_t line, const Json& rec) {
      if (!rec.contains("id")) return diag.add(line, "missing \"id\"");
      if (!seen.insert(rec["id"].dump()).second) return diag.add(line, "duplicate id " + rec["id"].dump());
      const Json empty = Json::array();
      const Json& preds = rec.contains("preds") ? rec["preds"] : empty;
      const Json& gts = rec.contains("gts") ? rec["gts"] : empty;
      if (!preds.is_array()) return diag.add(line, "\"preds\" must be an array");
      if (!gts.is_array()) return diag.add(line, "\"gts\" must be an array");
      std::vector<ScoredDetection> p(preds.size());
      std::vector<LayoutElement> g;
      for (std::size_t k = 0; k < preds.size(); ++k) {
        if (auto err = parse_detection(preds[k], true, p[k])) {
          return diag.add(line, "preds[" + std::to_string(k) + "]: " + *err);
        }
      }
      for (std::size_t k = 0; k < gts.size(); ++k) {
        ScoredDetection d;
        if (auto err = parse_detection(gts[k], false, d)) {
          return diag.add(line, "gts[" + std::to_string(k) + "]: " + *err);
        }
        g.push_back(d.element);
      }
      for (const auto& d : p) scored += d.confidence.has_value();
      total += p.size();
      ids.push_back(rec["id"]);
      per_pred.push_back(std::move(p));
      per_gt.push_back(std::move(g));
    });

    std::string mode;
    if (a->plain) {
      mode = "plain";
    } else if (a->sweep) {
      if (scored != total) {
        throw ProtocolError("--sweep needs a confidence on every prediction; " + std::to_string(total - scored) +
                            " of " + std::to_string(total) + " have none. Use plain scoring instead");
      }
      mode = "max_f1_sweep";
    } else if (scored == 0) {
      mode = "plain";
    } else if (scored == total) {
      mode = "max_f1_sweep";
    } else {
      throw ProtocolError("predictions mix scored and unscored detections (" + std::to_string(scored) + " of " +
                          std::to_string(total) + " scored); pass --plain to ignore confidences");
    }
    if (mode == "plain") {
      for (auto& preds : per_pred) {
        for (auto& d : preds) d.confidence.reset();
      }
    }

    Json j;
    j["command"] = "eval-detect";
    j["config"] = {{"input", resolve_path(a->input)},
                   {"iou_threshold", a->iou},
                   {"requested", a->plain ? "plain" : a->sweep ? "sweep" : "auto"},
                   {"matching", "greedy by descending IoU, then augmenting paths to maximum cardinality; label-equal pairs"}};
    j["mode"] = mode;
    j["images"] = per_pred.size();
    std::vector<DetectionScore> per_image;
    DetectionScore pooled;
    if (mode == "plain") {
      for (std::size_t i = 0; i < per_pred.size(); ++i) {
        per_image.push_back(score_detections(per_pred[i], per_gt[i], a->iou));
      }
      pooled = pool_scores(per_image);
      j["score"] = score_json(pooled);
      j["threshold"] = nullptr;
    } else {
      const auto sweep = max_f1_sweep(per_pred, per_gt, confidence_thresholds(per_pred), a->iou);
      pooled = sweep.best;
      j["score"] = score_json(sweep.best);
      j["threshold"] = sweep.best_threshold;
      Json points = Json::array();
      for (const auto& p : sweep.points) {
        points.push_back({{"threshold", p.threshold},
                          {"precision", p.score.precision},
                          {"recall", p.score.recall},
                          {"f1", p.score.f1}});
      }
      j["sweep"] = points;
      for (std::size_t i = 0; i < per_pred.size(); ++i) {
        std::vector<ScoredDetection> kept;
        for (const auto& d : per_pred[i]) {
          if (*d.confidence >= sweep.best_threshold) kept.push_back(d);
        }
        per_image.push_back(score_detections(kept, per_gt[i], a->iou));
      }
    }
    Json per = Json::array();
    for (std::size_t i = 0; i < per_image.size(); ++i) {
      per.push_back({{"id", ids[i]},
                     {"true_positives", per_image[i].true_positives},
                     {"predictions", per_image[i].predictions},
                     {"ground_truths", per_image[i].ground_truths}});
    }
    j["per_image"] = per;
    j["diagnostics"] = diag.list;
    write_json(a->output, j);

    print_table({{"images", j["images"]},
                 {"mode", Json(mode)},
                 {"precision", Json(pooled.precision)},
                 {"recall", Json(pooled.recall)},
                 {"F1", Json(pooled.f1)}});
    exit_code = diag.list.empty() ? kExitOk : kExitCheckFailed;
  });
}

}  // namespace docparse::cli
