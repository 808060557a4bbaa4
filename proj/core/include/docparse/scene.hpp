#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "docparse/coord_codec.hpp"
#include "docparse/tensor.hpp"

namespace docparse::toy {

struct SceneConfig {
  int height = 32;
  int width = 32;
  int min_elements = 1;
  int max_elements = 3;
  int min_side = 3;
  int max_side = 16;
  int num_classes = 3;  // 0 solid, 1 outline, 2 checkerboard

  void validate() const;
};

/// Binary raster with 1-3 axis-aligned rectangles. Boxes are exact cell
/// boundaries divided by the grid size; elements are in reading order.
struct SyntheticScene {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> grid;  // row-major, 0/1
  std::vector<LayoutElement> elements;
  std::vector<std::vector<int>> text;  // per element, values in [0, kTextSymbols)
};

inline constexpr int kTextSymbols = 8;

/// Token layout shared by the toy model, the scene encoder and evaluation:
/// specials, class labels, text symbols, then the coordinate bins.
struct ToyVocab {
  static constexpr int kPad = 0;
  static constexpr int kBosDetect = 1;
  static constexpr int kBosText = 2;
  static constexpr int kEos = 3;
  static constexpr int kSep = 4;
  static constexpr int kClassBase = 5;

  int num_classes = 3;
  CoordSpec coords;
  int vocab_size = 0;

  static ToyVocab for_scenes(const SceneConfig& config);

  int text_base() const { return kClassBase + num_classes; }
  LabelMap label_map() const;
  static std::string class_name(int cls);
};

SyntheticScene generate_scene(std::uint64_t seed, const SceneConfig& config);

/// Label noise on coordinate bins.
struct NoiseSpec {
  int max_shift = 2;
  double probability = 0.5;

  void validate() const;
};

/// Detection target sequence: [label, x0, y0, x1, y1]* EOS.
TokenSequence detection_targets(const SyntheticScene& scene, const ToyVocab& vocab);

/// Text target sequence: per element its symbols followed by SEP, then EOS.
TokenSequence text_targets(const SyntheticScene& scene, const ToyVocab& vocab);

/// Detection targets (one row, every position active) in which each
/// coordinate bin is, with the given probability, shifted by a uniform
/// integer in [-max_shift, max_shift] and clamped to the bin range. Label
/// and end tokens are never touched.
TargetBatch perturb_labels(const SyntheticScene& scene, const NoiseSpec& noise, std::uint64_t seed,
                           const ToyVocab& vocab);

}  // namespace docparse::toy
