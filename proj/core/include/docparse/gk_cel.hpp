#pragma once

#include <optional>
#include <span>
#include <vector>

#include "docparse/coord_codec.hpp"
#include "docparse/gaussian_kernel.hpp"
#include "docparse/tensor.hpp"

namespace docparse {

inline constexpr double kDefaultLogFloor = 1e-12;

struct RangeMass {
  double before = 0.0;  // mean over active positions of sum_{k in [s,e]} P'
  double after = 0.0;   // mean over active positions of sum_{k in [s,e]} C
};

struct LossOutput {
  double loss = 0.0;
  std::optional<Tensor3> grad;
  /// Unscaled per-position negative log-likelihood (or squared error for the
  /// soft-argmax loss), B*L row-major, zero where the mask is off.
  std::vector<double> position_loss;
  RangeMass range_mass;
};

struct RangeProbs {
  Tensor3 probs;         // softmax over the vocabulary axis
  Tensor3 range_probs;   // probs restricted to [s,e], zero elsewhere
};

/// Vocabulary-axis softmax and its restriction to the coordinate range.
RangeProbs masked_range_probs(const LogitsBatch& logits, const CoordSpec& spec);

/// Zero-padded 1-D convolution of the range slice with the kernel. Entries
/// outside [s,e] are zero in the result. Throws ConfigError when the kernel
/// is wider than the range.
Tensor3 convolve_range(const Tensor3& range_probs, const GaussianKernel& kernel, const CoordSpec& spec);

/// Copies `convolved` on [s,e] and `probs` elsewhere.
Tensor3 splice(const Tensor3& probs, const Tensor3& convolved, const CoordSpec& spec);

struct GkCelOptions {
  double log_floor = kDefaultLogFloor;
  bool with_grad = false;
};

/// Gaussian-kernel cross-entropy: masked mean of -log P''[target], where P''
/// is the softmax with its coordinate slice replaced by the kernel-smoothed
/// slice. Positions whose target lies outside [s,e] reduce to plain
/// cross-entropy.
LossOutput gk_cel(const LogitsBatch& logits, const TargetBatch& targets, const CoordSpec& spec,
                  const GaussianKernel& kernel, GkCelOptions options = {});

/// Analytic gradient of gk_cel with respect to every logit.
Tensor3 gk_cel_grad(const LogitsBatch& logits, const TargetBatch& targets, const CoordSpec& spec,
                    const GaussianKernel& kernel, double log_floor = kDefaultLogFloor);

/// Masked mean negative log-likelihood under the vocabulary softmax.
LossOutput cross_entropy(const LogitsBatch& logits, const TargetBatch& targets, bool with_grad = false);

/// Soft-argmax regression over the coordinate range: squared error between
/// the expected bin under softmax(z[s..e] / temperature) and the target bin,
/// both scaled to [0, 1], averaged over active positions and multiplied by
/// `weight`. Throws DomainError if an active target is not a coordinate.
LossOutput softargmax_loss(const LogitsBatch& logits, const TargetBatch& targets, const CoordSpec& spec,
                           double temperature, double weight, bool with_grad = false);

namespace detail {

/// Numerically stable softmax of one row; returns log of the normalizer
/// (max + log sum exp(z - max)).
double softmax_row(std::span<const double> z, std::span<double> p);

}  // namespace detail

}  // namespace docparse
