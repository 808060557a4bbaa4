#include "docparse/detection_metrics.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "docparse/errors.hpp"

namespace docparse {

double iou(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const double iy = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return (a == b) ? 1.0 : 0.0;
  return inter / uni;
}

MatchResult match_detections(const std::vector<ScoredDetection>& preds, const std::vector<LayoutElement>& gts,
                             double iou_threshold) {
  std::vector<MatchPair> candidates;
  for (std::size_t p = 0; p < preds.size(); ++p) {
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (preds[p].element.label != gts[g].label) continue;
      const double v = iou(preds[p].element.box, gts[g].box);
      if (v >= iou_threshold && v > 0.0) candidates.push_back({p, g, v});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const MatchPair& a, const MatchPair& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    return std::tie(a.pred, a.gt) < std::tie(b.pred, b.gt);
  });

  // Greedy pass in descending IoU order.
  std::vector<long> gt_of(preds.size(), -1);
  std::vector<long> pred_of(gts.size(), -1);
  for (const auto& c : candidates) {
    if (gt_of[c.pred] >= 0 || pred_of[c.gt] >= 0) continue;
    gt_of[c.pred] = static_cast<long>(c.gt);
    pred_of[c.gt] = static_cast<long>(c.pred);
  }

  // Greedy can strand a prediction whose only partner was taken by a
  // higher-IoU pair; augmenting paths lift the matching to maximum size.
  std::vector<std::vector<std::size_t>> adj(preds.size());
  for (const auto& c : candidates) adj[c.pred].push_back(c.gt);
  std::vector<char> seen;
  auto augment = [&](auto&& self, std::size_t p) -> bool {
    for (std::size_t g : adj[p]) {
      if (seen[g]) continue;
      seen[g] = 1;
      if (pred_of[g] < 0 || self(self, static_cast<std::size_t>(pred_of[g]))) {
        gt_of[p] = static_cast<long>(g);
        pred_of[g] = static_cast<long>(p);
        return true;
      }
    }
    return false;
  };
  for (std::size_t p = 0; p < preds.size(); ++p) {
    if (gt_of[p] >= 0 || adj[p].empty()) continue;
    seen.assign(gts.size(), 0);
    augment(augment, p);
  }

  MatchResult out;
  std::vector<bool> pred_used(preds.size(), false);
  for (const auto& c : candidates) {
    if (gt_of[c.pred] == static_cast<long>(c.gt)) {
      pred_used[c.pred] = true;
      out.pairs.push_back(c);
    }
  }
  std::vector<bool> gt_used(gts.size(), false);
  for (const auto& pr : out.pairs) gt_used[pr.gt] = true;
  for (std::size_t p = 0; p < preds.size(); ++p) {
    if (!pred_used[p]) out.unmatched_preds.push_back(p);
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (!gt_used[g]) out.unmatched_gts.push_back(g);
  }
  return out;
}

DetectionScore score_matches(const MatchResult& match, std::size_t n_preds, std::size_t n_gts) {
  DetectionScore s;
  s.true_positives = match.pairs.size();
  s.predictions = n_preds;
  s.ground_truths = n_gts;
  return pool_scores({s});
}

DetectionScore score_detections(const std::vector<ScoredDetection>& preds, const std::vector<LayoutElement>& gts,
                                double iou_threshold) {
  return score_matches(match_detections(preds, gts, iou_threshold), preds.size(), gts.size());
}

DetectionScore pool_scores(const std::vector<DetectionScore>& per_image) {
  DetectionScore s;
  for (const auto& d : per_image) {
    s.true_positives += d.true_positives;
    s.predictions += d.predictions;
    s.ground_truths += d.ground_truths;
  }
  s.precision_undefined = s.predictions == 0;
  s.recall_undefined = s.ground_truths == 0;
  s.precision = s.precision_undefined ? 0.0 : static_cast<double>(s.true_positives) / static_cast<double>(s.predictions);
  s.recall = s.recall_undefined ? 0.0 : static_cast<double>(s.true_positives) / static_cast<double>(s.ground_truths);
  s.f1 = (s.precision + s.recall > 0.0) ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

SweepResult max_f1_sweep(const std::vector<std::vector<ScoredDetection>>& preds,
                         const std::vector<std::vector<LayoutElement>>& gts, const std::vector<double>& thresholds,
                         double iou_threshold) {
  if (preds.size() != gts.size()) throw DomainError("max_f1_sweep: prediction/ground-truth image count mismatch");
  for (const auto& image : preds) {
    for (const auto& d : image) {
      if (!d.confidence) {
        throw ProtocolError("max-F1 sweep needs confidence scores; score confidence-free predictions with plain F1");
      }
    }
  }
  if (thresholds.empty()) throw DomainError("max_f1_sweep: no thresholds given");

  SweepResult out;
  bool first = true;
  for (double t : thresholds) {
    std::vector<DetectionScore> per_image;
    per_image.reserve(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
      std::vector<ScoredDetection> kept;
      for (const auto& d : preds[i]) {
        if (*d.confidence >= t) kept.push_back(d);
      }
      per_image.push_back(score_detections(kept, gts[i], iou_threshold));
    }
    const DetectionScore pooled = pool_scores(per_image);
    out.points.push_back({t, pooled});
    if (first || pooled.f1 > out.best_f1) {
      out.best_f1 = pooled.f1;
      out.best_threshold = t;
      out.best = pooled;
      first = false;
    }
  }
  return out;
}

SweepResult max_f1_sweep(const std::vector<ScoredDetection>& preds, const std::vector<LayoutElement>& gts,
                         const std::vector<double>& thresholds, double iou_threshold) {
  return max_f1_sweep(std::vector<std::vector<ScoredDetection>>{preds}, std::vector<std::vector<LayoutElement>>{gts},
                      thresholds, iou_threshold);
}

std::vector<double> confidence_thresholds(const std::vector<std::vector<ScoredDetection>>& preds) {
  std::set<double> values{0.0};
  for (const auto& image : preds) {
    for (const auto& d : image) {
      if (d.confidence) values.insert(*d.confidence);
    }
  }
  return {values.begin(), values.end()};
}

}  // namespace docparse
