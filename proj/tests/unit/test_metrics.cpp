#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <thread>

#include <doctest.h>

#include "docparse/detection_metrics.hpp"
#include "docparse/errors.hpp"
#include "docparse/fps.hpp"
#include "docparse/rng.hpp"
#include "docparse/sequence_metrics.hpp"
#include "docparse/table_metrics.hpp"
#include "metric_oracles.hpp"

using namespace docparse;

TEST_SUITE("edit distance") {
  TEST_CASE("small cases") {
    CHECK(edit_distance("abc", "abc") == 0);
    CHECK(edit_distance("kitten", "sitting") == 3);
    CHECK(edit_distance("", "abc") == 3);
    CHECK(edit_distance("abc", "") == 3);
    CHECK(normalized_edit_distance(std::string_view(""), std::string_view("")) == 0.0);
    CHECK(normalized_edit_distance(std::string_view("kitten"), std::string_view("sitting")) == doctest::Approx(3.0 / 7));
  }

  TEST_CASE("code points are the unit for UTF-8 text") {
    const auto a = tokenize_code_points("\xce\xb1\xce\xb2");
    const auto b = tokenize_code_points("\xce\xb1\xce\xb3");
    CHECK(a.size() == 2);
    CHECK(edit_distance(a, b) == 1);
  }

  TEST_CASE("agrees with the full-table recurrence and is a metric") {
    Rng rng(1);
    auto random_string = [&] {
      std::string s;
      const long n = rng.uniform_int(0, 12);
      for (long i = 0; i < n; ++i) s += static_cast<char>('a' + rng.uniform_int(0, 3));
      return s;
    };
    for (int t = 0; t < 1000; ++t) {
      const auto x = random_string(), y = random_string(), z = random_string();
      CHECK(edit_distance(x, y) == testing::levenshtein_table(x, y));
      CHECK(edit_distance(x, x) == 0);
      CHECK(edit_distance(x, y) == edit_distance(y, x));
      CHECK(edit_distance(x, z) <= edit_distance(x, y) + edit_distance(y, z));
      const double ned = normalized_edit_distance(x, y);
      CHECK(ned >= 0.0);
      CHECK(ned <= 1.0);
    }
  }
}

TEST_SUITE("bleu") {
  TEST_CASE("identity and disjoint") {
    const Tokens x = {"a", "b", "c", "d", "e"};
    CHECK(bleu(x, {x}).score == doctest::Approx(1.0));
    CHECK(bleu({"p", "q"}, {{"p", "q"}}).score == doctest::Approx(1.0));
    CHECK(bleu({"x", "y", "z"}, {{"a", "b", "c"}}).score == 0.0);
  }

  TEST_CASE("empty candidate is flagged") {
    const auto r = bleu({}, {{"a"}});
    CHECK(r.score == 0.0);
    CHECK(r.empty_candidate);
    CHECK_THROWS_AS(bleu({"a"}, {}), DomainError);
    CHECK_THROWS_AS(bleu({"a"}, {{"a"}}, 0), ConfigError);
  }

  TEST_CASE("hand-computed five-token example") {
    // precisions 5/5, (3+1)/(4+1), (2+1)/(3+1), (1+1)/(2+1); brevity exp(1 - 6/5)
    const Tokens cand = tokenize_whitespace("the cat sat on mat");
    const Tokens ref = tokenize_whitespace("the cat sat on the mat");
    const double expected = std::exp(-0.2) * std::pow(1.0 * 0.8 * 0.75 * (2.0 / 3.0), 0.25);
    CHECK(bleu(cand, {ref}).score == doctest::Approx(expected).epsilon(1e-12));
    CHECK(bleu(cand, {ref}).score == doctest::Approx(0.6511).epsilon(1e-4));
  }

  TEST_CASE("matches the straight-formula oracle") {
    Rng rng(5);
    const char* words[] = {"a", "b", "c", "d", "e", "f"};
    auto sentence = [&](long lo, long hi) {
      Tokens s;
      const long n = rng.uniform_int(lo, hi);
      for (long i = 0; i < n; ++i) s.push_back(words[rng.uniform_int(0, 5)]);
      return s;
    };
    for (int t = 0; t < 100; ++t) {
      const Tokens cand = sentence(1, 15);
      std::vector<Tokens> refs;
      const long nr = rng.uniform_int(1, 3);
      for (long r = 0; r < nr; ++r) refs.push_back(sentence(1, 15));
      const int max_n = static_cast<int>(rng.uniform_int(1, 4));
      CHECK(bleu(cand, refs, max_n).score == doctest::Approx(testing::bleu_formula(cand, refs, max_n)).epsilon(1e-12));
    }
  }

  TEST_CASE("bounded and corpus-level pooling") {
    Rng rng(9);
    std::vector<Tokens> cands;
    std::vector<std::vector<Tokens>> refs;
    for (int t = 0; t < 50; ++t) {
      Tokens c, r;
      for (long i = rng.uniform_int(1, 8); i > 0; --i) c.push_back(std::to_string(rng.uniform_int(0, 3)));
      for (long i = rng.uniform_int(1, 8); i > 0; --i) r.push_back(std::to_string(rng.uniform_int(0, 3)));
      const double s = bleu(c, {r}).score;
      CHECK(s >= 0.0);
      CHECK(s <= 1.0);
      cands.push_back(c);
      refs.push_back({r});
    }
    const double corpus = corpus_bleu(cands, refs).score;
    CHECK(corpus >= 0.0);
    CHECK(corpus <= 1.0);
    CHECK(corpus_bleu({cands[0]}, {refs[0]}).score == doctest::Approx(bleu(cands[0], refs[0]).score));
  }

  TEST_CASE("tokenizers") {
    CHECK(tokenize_whitespace("  a\tb\n c ") == Tokens{"a", "b", "c"});
    CHECK(tokenize_latex("\\frac{a} {b} % c") == Tokens{"\\frac", "{", "a", "}", "{", "b", "}"});
  }
}

TEST_SUITE("exp rate") {
  TEST_CASE("exact and normalized matching") {
    CHECK(exp_rate({"a", "b"}, {"a", "b"}) == 1.0);
    CHECK(exp_rate({"a", "b"}, {"c", "d"}) == 0.0);
    CHECK(exp_rate({"a^1_2"}, {"a_2^1"}) == 0.0);
    CHECK(exp_rate({"a^1_2"}, {"a_2^1"}, true) == 1.0);
    CHECK(exp_rate({"{"}, {"{"}, true) == 1.0);  // normalization failure falls back to raw text
    CHECK_THROWS_AS(exp_rate({"a"}, {"a", "b"}), DomainError);
  }
}

TEST_SUITE("detection") {
  TEST_CASE("iou") {
    CHECK(iou({0, 0, 1, 1}, {0, 0, 1, 1}) == 1.0);
    CHECK(iou({0, 0, 0.4, 0.4}, {0.5, 0.5, 1, 1}) == 0.0);
    CHECK(iou({0, 0, 1, 1}, {0.5, 0, 1, 1}) == doctest::Approx(0.5));
    CHECK(iou({0, 0, 0, 0}, {0, 0, 0, 0}) == 1.0);  // identical degenerate boxes
  }

  TEST_CASE("perfect and empty predictions") {
    const std::vector<LayoutElement> gts = {{"a", {0, 0, 0.5, 0.5}}, {"b", {0.5, 0.5, 1, 1}}};
    std::vector<ScoredDetection> preds;
    for (const auto& g : gts) preds.push_back({g, std::nullopt});
    const auto s = score_detections(preds, gts);
    CHECK(s.precision == 1.0);
    CHECK(s.recall == 1.0);
    CHECK(s.f1 == 1.0);
    const auto none = score_detections({}, gts);
    CHECK(none.recall == 0.0);
    CHECK(none.precision == 0.0);
    CHECK(none.precision_undefined);
    CHECK(none.f1 == 0.0);
  }

  TEST_CASE("labels must agree") {
    const auto s = score_detections({{{"a", {0, 0, 1, 1}}, std::nullopt}}, {{"b", {0, 0, 1, 1}}});
    CHECK(s.true_positives == 0);
  }

  TEST_CASE("matching structure and determinism") {
    Rng rng(3);
    for (int t = 0; t < 500; ++t) {
      auto inst = testing::random_detection_instance(rng, 6, 6);
      const auto m = match_detections(inst.preds, inst.gts, 0.5);
      std::vector<int> pu(inst.preds.size()), gu(inst.gts.size());
      for (const auto& p : m.pairs) {
        CHECK(p.iou >= 0.5);
        CHECK(inst.preds[p.pred].element.label == inst.gts[p.gt].label);
        ++pu[p.pred];
        ++gu[p.gt];
      }
      for (int c : pu) CHECK(c <= 1);
      for (int c : gu) CHECK(c <= 1);
      CHECK(m.pairs.size() + m.unmatched_preds.size() == inst.preds.size());
      CHECK(m.pairs.size() + m.unmatched_gts.size() == inst.gts.size());
      CHECK(m.pairs.size() == match_detections(inst.preds, inst.gts, 0.5).pairs.size());
    }
  }

  TEST_CASE("greedy-seeded matching equals exhaustive optimal assignment") {
    Rng rng(17);
    for (int t = 0; t < 3000; ++t) {
      auto inst = testing::random_detection_instance(rng, 4, 4);
      const double iou_t = t % 3 == 0 ? 0.3 : 0.5;
      const auto best = testing::brute_force_matches(inst.preds, inst.gts, iou_t);
      const auto s = score_detections(inst.preds, inst.gts, iou_t);
      CHECK(s.true_positives == best);
    }
  }

  TEST_CASE("greedy pass alone can strand a match") {
    // Full-height boxes; greedy by IoU pairs A with gt1 first.
    const std::vector<LayoutElement> gts = {{"t", {0, 0, 1.0, 1}}, {"t", {0, 0, 0.6, 1}}};
    const std::vector<ScoredDetection> preds = {{{"t", {0, 0, 0.95, 1}}, std::nullopt},
                                                {{"t", {0.2, 0, 1.0, 1}}, std::nullopt}};
    CHECK(score_detections(preds, gts).true_positives == 2);
  }

  TEST_CASE("F1 is invariant to input order") {
    Rng rng(23);
    for (int t = 0; t < 200; ++t) {
      auto inst = testing::random_detection_instance(rng, 6, 6);
      const double f1 = score_detections(inst.preds, inst.gts).f1;
      std::reverse(inst.preds.begin(), inst.preds.end());
      std::rotate(inst.gts.begin(), inst.gts.begin() + static_cast<std::ptrdiff_t>(inst.gts.size() / 2), inst.gts.end());
      CHECK(score_detections(inst.preds, inst.gts).f1 == f1);
    }
  }

  TEST_CASE("pooling sums counts before forming ratios") {
    DetectionScore a, b;
    a.true_positives = 1, a.predictions = 1, a.ground_truths = 4;
    b.true_positives = 3, b.predictions = 3, b.ground_truths = 4;
    const auto p = pool_scores({a, b});
    CHECK(p.precision == 1.0);
    CHECK(p.recall == 0.5);
    CHECK(p.f1 == doctest::Approx(2.0 / 3.0));
  }
}

TEST_SUITE("max-F1 sweep") {
  TEST_CASE("needs confidences") {
    CHECK_THROWS_AS(max_f1_sweep({{{"a", {0, 0, 1, 1}}, std::nullopt}}, {}, {0.0}), ProtocolError);
  }

  TEST_CASE("single threshold equals plain scoring at that threshold") {
    const std::vector<LayoutElement> gts = {{"a", {0, 0, 1, 1}}};
    const std::vector<ScoredDetection> preds = {{{"a", {0, 0, 1, 1}}, 0.9}, {{"a", {0, 0, 0.2, 0.2}}, 0.4}};
    const auto r = max_f1_sweep(preds, gts, {0.5});
    CHECK(r.best_threshold == 0.5);
    CHECK(r.best_f1 == score_detections({preds[0]}, gts).f1);
  }

  TEST_CASE("constant when every confidence is one") {
    const std::vector<LayoutElement> gts = {{"a", {0, 0, 1, 1}}, {"a", {0, 0, 0.5, 0.5}}};
    const std::vector<ScoredDetection> preds = {{{"a", {0, 0, 1, 1}}, 1.0}, {{"a", {0.6, 0.6, 1, 1}}, 1.0}};
    const auto r = max_f1_sweep(preds, gts, {0.0, 0.25, 0.5, 1.0});
    for (const auto& p : r.points) CHECK(p.score.f1 == r.points.front().score.f1);
  }

  TEST_CASE("a mid threshold drops a false positive") {
    const std::vector<LayoutElement> gts = {{"a", {0, 0, 0.5, 0.5}}, {"a", {0.5, 0.5, 1, 1}}};
    const std::vector<ScoredDetection> preds = {{{"a", {0, 0, 0.5, 0.5}}, 0.9},
                                                {{"a", {0.5, 0.5, 1, 1}}, 0.8},
                                                {{"a", {0, 0.6, 0.3, 1}}, 0.2}};
    const auto r = max_f1_sweep({preds}, {gts}, confidence_thresholds({preds}));
    // threshold 0 keeps all three: P 2/3, R 1, F1 0.8; threshold 0.8 gives 1.0
    CHECK(r.points.front().threshold == 0.0);
    CHECK(r.points.front().score.f1 == doctest::Approx(0.8));
    CHECK(r.best_f1 == 1.0);
    CHECK(r.best_threshold == 0.8);
  }

  TEST_CASE("best is at least any single-threshold F1") {
    Rng rng(29);
    for (int t = 0; t < 300; ++t) {
      std::vector<std::vector<ScoredDetection>> preds;
      std::vector<std::vector<LayoutElement>> gts;
      for (int img = 0; img < 3; ++img) {
        auto inst = testing::random_detection_instance(rng, 5, 4);
        for (auto& p : inst.preds) p.confidence = std::round(rng.uniform() * 20) / 20;
        preds.push_back(inst.preds);
        gts.push_back(inst.gts);
      }
      const auto r = max_f1_sweep(preds, gts, confidence_thresholds(preds));
      for (int k = 0; k <= 20; ++k) {
        const double th = k / 20.0 + (k % 2 ? 0.013 : 0.0);
        std::vector<DetectionScore> per;
        for (std::size_t i = 0; i < preds.size(); ++i) {
          std::vector<ScoredDetection> kept;
          for (const auto& p : preds[i]) {
            if (*p.confidence >= th) kept.push_back(p);
          }
          per.push_back(score_detections(kept, gts[i]));
        }
        CHECK(r.best_f1 >= pool_scores(per).f1);
      }
    }
  }

  TEST_CASE("thresholds are the distinct confidences plus zero") {
    const std::vector<std::vector<ScoredDetection>> preds = {{{{"a", {}}, 0.5}, {{"a", {}}, 0.2}}, {{{"a", {}}, 0.5}}};
    CHECK(confidence_thresholds(preds) == std::vector<double>{0.0, 0.2, 0.5});
  }
}

TEST_SUITE("table cells") {
  TEST_CASE("row and cell splitting") {
    const auto cells = extract_table_cells("\\begin{tabular}{cc} a & b \\\\ c & d \\end{tabular}");
    CHECK(cells == std::vector<std::string>{"a", "b", "c", "d"});
  }

  TEST_CASE("formatting is stripped and escapes do not split") {
    const auto cells =
        extract_table_cells("\\begin{tabular}{ll}\\hline \\textbf{x} & A \\& B \\\\ \\multicolumn{2}{c}{wide} \\\\ \\end{tabular}");
    CHECK(cells == std::vector<std::string>{"x", "A \\& B", "wide"});
  }

  TEST_CASE("redundant whitespace does not change cells") {
    CHECK(extract_table_cells("\\begin{tabular}{l} a   b \\\\ \\end{tabular}") ==
          extract_table_cells("\\begin{tabular}{l}a b\\\\\\end{tabular}"));
  }

  TEST_CASE("missing environment") {
    CHECK_THROWS_AS(extract_table_cells("a & b"), ExtractionError);
    const auto f = table_cell_f1("a & b", "\\begin{tabular}{l} a \\end{tabular}");
    CHECK(f.failed);
    CHECK(f.f1 == 0.0);
  }

  TEST_CASE("multiset F1") {
    const std::string gt = "\\begin{tabular}{cc} a & b \\\\ c & d \\end{tabular}";
    CHECK(table_cell_f1(gt, gt).f1 == 1.0);
    CHECK(table_cell_f1("\\begin{tabular}{cc} w & x \\\\ y & z \\end{tabular}", gt).f1 == 0.0);
    const auto missing = table_cell_f1("\\begin{tabular}{cc} a & b \\\\ c & \\end{tabular}", gt);
    CHECK(missing.precision == 1.0);
    CHECK(missing.recall == 0.75);
    CHECK(missing.f1 == doctest::Approx(0.857).epsilon(1e-3));
    const auto dup = table_cell_f1("\\begin{tabular}{cc} a & a \\end{tabular}", "\\begin{tabular}{cc} a & b \\end{tabular}");
    CHECK(dup.precision == 0.5);
  }
}

TEST_SUITE("throughput") {
  TEST_CASE("no-op is very fast but finite") {
    const auto s = fps_measure([](std::size_t) {}, 1000, 1, 3);
    CHECK(std::isfinite(s.mean));
    CHECK(s.mean > 1e5);
    CHECK(s.samples == 999);
  }

  TEST_CASE("sleeping processor and warmup exclusion") {
    const auto s = fps_measure(
        [](std::size_t i) {
          std::this_thread::sleep_for(std::chrono::milliseconds(i == 0 ? 300 : 10));
        },
        6, 1, 2);
    CHECK(s.mean == doctest::Approx(100.0).epsilon(0.1));
  }

  TEST_CASE("needs samples after warmup") {
    CHECK_THROWS_AS(fps_measure([](std::size_t) {}, 1, 1, 1), DomainError);
  }
}
