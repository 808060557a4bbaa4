#include <cmath>
#include <string>
#include <vector>

#include "docparse/errors.hpp"
#include "docparse/gk_cel.hpp"

namespace docparse {

LossOutput softargmax_loss(const LogitsBatch& logits, const TargetBatch& targets, const CoordSpec& spec,
                           double temperature, double weight, bool with_grad) {
  if (!(temperature > 0.0)) throw ConfigError("soft-argmax temperature must be positive");
  if (!logits.all_finite()) throw DomainError("logits contain non-finite values");
  spec.validate(static_cast<int>(logits.vocab()));
  if (targets.batch != logits.batch() || targets.length != logits.length()) {
    throw DomainError("target batch shape does not match logits");
  }

  std::size_t n = 0;
  for (std::size_t idx = 0; idx < targets.labels.size(); ++idx) {
    if (!targets.mask[idx]) continue;
    if (!spec.contains(targets.labels[idx])) {
      throw DomainError("soft-argmax target " + std::to_string(targets.labels[idx]) +
                        " is not a coordinate token");
    }
    ++n;
  }
  if (n == 0) throw EmptyBatchError("no active target positions (N == 0)");

  const double scale = weight / static_cast<double>(n);
  const double denom = static_cast<double>(spec.bins - 1);
  const auto range = static_cast<std::size_t>(spec.size());
  const auto s = static_cast<std::size_t>(spec.start);

  LossOutput out;
  out.position_loss.assign(targets.labels.size(), 0.0);
  if (with_grad) out.grad.emplace(logits.batch(), logits.length(), logits.vocab(), 0.0);

  std::vector<double> scaled(range);
  std::vector<double> q(range);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.batch(); ++i) {
    for (std::size_t j = 0; j < logits.length(); ++j) {
      if (!targets.active(i, j)) continue;
      auto z = logits.row(i, j);
      for (std::size_t k = 0; k < range; ++k) scaled[k] = z[s + k] / temperature;
      detail::softmax_row(scaled, q);
      double expected = 0.0;
      for (std::size_t k = 0; k < range; ++k) expected += static_cast<double>(k) * q[k];

      const double target = static_cast<double>(targets.label(i, j) - spec.start);
      const double diff = (expected - target) / denom;
      out.position_loss[i * targets.length + j] = diff * diff;
      total += diff * diff;

      if (with_grad) {
        // d/dz_k of E = q_k (k - E) / T
        const double d_expected = scale * 2.0 * diff / denom;
        auto g = out.grad->row(i, j);
        for (std::size_t k = 0; k < range; ++k) {
          g[s + k] = d_expected * q[k] * (static_cast<double>(k) - expected) / temperature;
        }
      }
    }
  }
  out.loss = total * scale;
  return out;
}

}  // namespace docparse
