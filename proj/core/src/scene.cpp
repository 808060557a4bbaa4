#include "docparse/scene.hpp"

#include <algorithm>

#include "docparse/errors.hpp"
#include "docparse/rng.hpp"

namespace docparse::toy {

void SceneConfig::validate() const {
  if (height < 1 || width < 1) throw ConfigError("scene grid must be at least 1x1");
  if (min_elements < 1 || max_elements < min_elements) {
    throw ConfigError("scene element count range [" + std::to_string(min_elements) + ", " +
                      std::to_string(max_elements) + "] is empty");
  }
  if (min_side < 1) throw ConfigError("rectangle min_side must be positive");
  if (min_side > std::min(height, width)) {
    throw ConfigError("rectangle min_side " + std::to_string(min_side) + " exceeds the " + std::to_string(height) +
                      "x" + std::to_string(width) + " grid");
  }
  if (max_side < min_side) throw ConfigError("rectangle max_side is below min_side");
  if (num_classes < 1 || num_classes > 3) throw ConfigError("scene classes must be 1, 2 or 3");
}

void NoiseSpec::validate() const {
  if (max_shift < 0) throw ConfigError("noise max_shift must be nonnegative");
  if (!(probability >= 0.0 && probability <= 1.0)) throw ConfigError("noise probability must lie in [0, 1]");
}

ToyVocab ToyVocab::for_scenes(const SceneConfig& config) {
  ToyVocab v;
  v.num_classes = config.num_classes;
  const int bins = std::max(config.height, config.width) + 1;
  v.coords = CoordSpec::with_bins(bins, v.text_base() + kTextSymbols);
  v.vocab_size = v.coords.end + 1;
  return v;
}

std::string ToyVocab::class_name(int cls) {
  static const char* names[] = {"solid", "outline", "checker"};
  return (cls >= 0 && cls < 3) ? names[cls] : "class" + std::to_string(cls);
}

LabelMap ToyVocab::label_map() const {
  std::map<std::string, int> tokens;
  for (int c = 0; c < num_classes; ++c) tokens[class_name(c)] = kClassBase + c;
  return LabelMap(std::move(tokens), kEos);
}

SyntheticScene generate_scene(std::uint64_t seed, const SceneConfig& config) {
  config.validate();
  Rng rng(seed);
  SyntheticScene scene;
  scene.height = config.height;
  scene.width = config.width;
  scene.grid.assign(static_cast<std::size_t>(config.height * config.width), 0);

  const long count = rng.uniform_int(config.min_elements, config.max_elements);
  struct Rect {
    int r0, c0, h, w, cls;
  };
  std::vector<Rect> rects;
  for (long n = 0; n < count; ++n) {
    Rect r{};
    r.h = static_cast<int>(rng.uniform_int(config.min_side, std::min(config.max_side, config.height)));
    r.w = static_cast<int>(rng.uniform_int(config.min_side, std::min(config.max_side, config.width)));
    r.r0 = static_cast<int>(rng.uniform_int(0, config.height - r.h));
    r.c0 = static_cast<int>(rng.uniform_int(0, config.width - r.w));
    r.cls = static_cast<int>(rng.uniform_int(0, config.num_classes - 1));
    rects.push_back(r);
  }

  for (const auto& r : rects) {
    for (int y = r.r0; y < r.r0 + r.h; ++y) {
      for (int x = r.c0; x < r.c0 + r.w; ++x) {
        std::uint8_t v = 1;
        if (r.cls == 1) v = (y == r.r0 || y == r.r0 + r.h - 1 || x == r.c0 || x == r.c0 + r.w - 1) ? 1 : 0;
        else if (r.cls == 2) v = ((x - r.c0) + (y - r.r0)) % 2 == 0 ? 1 : 0;
        scene.grid[static_cast<std::size_t>(y * config.width + x)] = v;
      }
    }
  }

  std::vector<std::pair<LayoutElement, std::vector<int>>> items;
  for (const auto& r : rects) {
    LayoutElement el;
    el.label = ToyVocab::class_name(r.cls);
    el.box = {static_cast<double>(r.c0) / config.width, static_cast<double>(r.r0) / config.height,
              static_cast<double>(r.c0 + r.w) / config.width, static_cast<double>(r.r0 + r.h) / config.height};
    std::vector<int> text = {std::min(r.w, 31) / 4 % kTextSymbols, std::min(r.h, 31) / 4 % kTextSymbols};
    items.emplace_back(std::move(el), std::move(text));
  }
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.first.box.y0 != b.first.box.y0) return a.first.box.y0 < b.first.box.y0;
    return a.first.box.x0 < b.first.box.x0;
  });
  for (auto& [el, text] : items) {
    scene.elements.push_back(std::move(el));
    scene.text.push_back(std::move(text));
  }
  return scene;
}

TokenSequence detection_targets(const SyntheticScene& scene, const ToyVocab& vocab) {
  return encode_layout(scene.elements, vocab.coords, vocab.label_map());
}

TokenSequence text_targets(const SyntheticScene& scene, const ToyVocab& vocab) {
  TokenSequence seq;
  for (const auto& symbols : scene.text) {
    for (int s : symbols) seq.tokens.push_back(vocab.text_base() + s);
    seq.tokens.push_back(ToyVocab::kSep);
  }
  seq.tokens.push_back(ToyVocab::kEos);
  return seq;
}

TargetBatch perturb_labels(const SyntheticScene& scene, const NoiseSpec& noise, std::uint64_t seed,
                           const ToyVocab& vocab) {
  noise.validate();
  const TokenSequence clean = detection_targets(scene, vocab);
  TargetBatch out(1, clean.tokens.size());
  Rng rng(seed);
  for (std::size_t j = 0; j < clean.tokens.size(); ++j) {
    int t = clean.tokens[j];
    if (vocab.coords.contains(t)) {
      // Both draws are always taken so the stream does not depend on p.
      const bool hit = rng.bernoulli(noise.probability);
      const long shift = rng.uniform_int(-noise.max_shift, noise.max_shift);
      if (hit) t = static_cast<int>(std::clamp<long>(t + shift, vocab.coords.start, vocab.coords.end));
    }
    out.set(0, j, t);
  }
  return out;
}

}  // namespace docparse::toy
