#pragma once

#include <span>
#include <vector>

namespace docparse {

/// Discrete 1-D Gaussian window of odd size centered on its middle tap.
///
/// Unnormalized weights are exp(-(p - (n+1)/2)^2 / (2 sigma^2)) for 1-based
/// tap p, so the center tap is exactly 1. A normalized kernel divides every
/// tap by their sum and therefore maps probability vectors to sub-probability
/// vectors.
class GaussianKernel {
public:
  /// Throws ConfigError for even or < 3 sizes and for non-positive sigma.
  static GaussianKernel build(int size, double sigma, bool normalize);

  int size() const noexcept { return static_cast<int>(weights_.size()); }
  int half_width() const noexcept { return size() / 2; }
  double sigma() const noexcept { return sigma_; }
  bool normalized() const noexcept { return normalized_; }
  std::span<const double> weights() const noexcept { return weights_; }

  /// Weight at signed offset d from the center, zero outside the window.
  double at_offset(int d) const noexcept {
    const int h = half_width();
    return (d < -h || d > h) ? 0.0 : weights_[static_cast<std::size_t>(d + h)];
  }

private:
  GaussianKernel(std::vector<double> w, double sigma, bool normalized)
      : weights_(std::move(w)), sigma_(sigma), normalized_(normalized) {}

  std::vector<double> weights_;
  double sigma_ = 1.0;
  bool normalized_ = true;
};

}  // namespace docparse
