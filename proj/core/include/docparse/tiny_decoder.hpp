#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace docparse::toy {

/// How the raster becomes prefix positions. Patches: one position per
/// square patch, embedding its flattened pixels. Lines: one position per
/// row and one per column, embedding that row's or column's pixels.
enum class PrefixKind { Patches, Lines };

struct TinyDecoderConfig {
  int embed_dim = 64;
  int num_layers = 2;
  int num_heads = 4;
  int vocab_size = 0;
  int max_seq_len = 32;  // token positions, not counting the image prefix
  int grid_height = 32;
  int grid_width = 32;
  PrefixKind prefix = PrefixKind::Lines;
  int patch_size = 8;  // Patches only
  int mlp_ratio = 4;
  double init_scale = 0.02;
  std::uint64_t seed = 0;

  void validate() const;
  int num_prefix() const {
    return prefix == PrefixKind::Lines ? grid_height + grid_width
                                       : (grid_height / patch_size) * (grid_width / patch_size);
  }
};

/// Opaque per-example activations kept between forward and backward.
struct ForwardState;
struct ForwardStateDeleter {
  void operator()(ForwardState* state) const noexcept;
};
using ForwardStatePtr = std::unique_ptr<ForwardState, ForwardStateDeleter>;

/// Prefix-LM transformer: the raster is linearly embedded into a set of
/// prefix positions (see PrefixKind). Prefix positions attend to each other freely; token positions attend to the
/// whole prefix and causally to earlier tokens. Pre-LayerNorm blocks with a
/// sigmoid-approximated GELU MLP, untied output projection.
///
/// All parameters live in one flat vector so optimizers and finite
/// differences can treat the model as a function of a single array.
class TinyDecoder {
public:
  explicit TinyDecoder(const TinyDecoderConfig& config);
  ~TinyDecoder();
  TinyDecoder(TinyDecoder&&) noexcept;
  TinyDecoder& operator=(TinyDecoder&&) noexcept;

  const TinyDecoderConfig& config() const noexcept { return config_; }
  std::size_t num_parameters() const noexcept { return params_.size(); }
  std::vector<double>& parameters() noexcept { return params_; }
  const std::vector<double>& parameters() const noexcept { return params_; }

  /// Logits for every token position, row-major tokens.size() x vocab_size.
  /// `grid` is the row-major 0/1 raster.
  std::vector<double> logits(std::span<const std::uint8_t> grid, std::span<const int> tokens) const;

  /// Same as logits() but keeps the activations needed by backward().
  ForwardStatePtr forward(std::span<const std::uint8_t> grid, std::span<const int> tokens,
                          std::vector<double>& logits_out) const;

  /// Adds d(loss)/d(parameters) to `grad` given d(loss)/d(logits).
  void backward(const ForwardState& state, std::span<const double> dlogits, std::span<double> grad) const;

private:
  TinyDecoderConfig config_;
  std::vector<double> params_;
  struct Layout;
  std::unique_ptr<Layout> layout_;
};

}  // namespace docparse::toy
