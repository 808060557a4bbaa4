#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "docparse/coord_codec.hpp"

namespace docparse {

/// A predicted element. Generative decoders emit no confidence.
struct ScoredDetection {
  LayoutElement element;
  std::optional<double> confidence;
};

struct MatchPair {
  std::size_t pred;
  std::size_t gt;
  double iou;
};

struct MatchResult {
  std::vector<MatchPair> pairs;
  std::vector<std::size_t> unmatched_preds;
  std::vector<std::size_t> unmatched_gts;
};

struct DetectionScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t true_positives = 0;
  std::size_t predictions = 0;
  std::size_t ground_truths = 0;
  /// No predictions: precision is undefined and reported as 0.
  bool precision_undefined = false;
  /// No ground truths: recall is undefined and reported as 0.
  bool recall_undefined = false;
};

double iou(const Box& a, const Box& b);

/// One-to-one matching over label-equal pairs with IoU >= threshold. Pairs
/// are first taken greedily in descending IoU order (ties by ascending
/// (pred, gt)); augmenting paths then grow the greedy result to a
/// maximum-cardinality matching. Pairs are listed in descending IoU order.
MatchResult match_detections(const std::vector<ScoredDetection>& preds, const std::vector<LayoutElement>& gts,
                             double iou_threshold = 0.5);

DetectionScore score_matches(const MatchResult& match, std::size_t n_preds, std::size_t n_gts);

DetectionScore score_detections(const std::vector<ScoredDetection>& preds, const std::vector<LayoutElement>& gts,
                                double iou_threshold = 0.5);

/// Detection scores pooled over many images: true positives, prediction and
/// ground-truth counts are summed before precision and recall are formed.
DetectionScore pool_scores(const std::vector<DetectionScore>& per_image);

struct SweepPoint {
  double threshold;
  DetectionScore score;
};

struct SweepResult {
  double best_f1 = 0.0;
  double best_threshold = 0.0;
  DetectionScore best;
  std::vector<SweepPoint> points;
};

/// Keeps predictions with confidence >= threshold for every threshold and
/// reports the highest pooled F1 (first threshold wins ties). Each image is
/// a (predictions, ground truths) pair. Throws ProtocolError when any
/// prediction lacks a confidence.
SweepResult max_f1_sweep(const std::vector<std::vector<ScoredDetection>>& preds,
                         const std::vector<std::vector<LayoutElement>>& gts, const std::vector<double>& thresholds,
                         double iou_threshold = 0.5);

/// Single-image convenience overload.
SweepResult max_f1_sweep(const std::vector<ScoredDetection>& preds, const std::vector<LayoutElement>& gts,
                         const std::vector<double>& thresholds, double iou_threshold = 0.5);

/// Distinct confidences found in the predictions plus 0, ascending.
std::vector<double> confidence_thresholds(const std::vector<std::vector<ScoredDetection>>& preds);

}  // namespace docparse
