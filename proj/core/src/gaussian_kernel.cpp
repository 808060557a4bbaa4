#include "docparse/gaussian_kernel.hpp"

#include <cmath>
#include <string>

#include "docparse/errors.hpp"

namespace docparse {

GaussianKernel GaussianKernel::build(int size, double sigma, bool normalize) {
  if (size < 3 || size % 2 == 0) {
    throw ConfigError("kernel size must be an odd integer >= 3, got " + std::to_string(size));
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ConfigError("kernel sigma must be positive and finite, got " + std::to_string(sigma));
  }
  std::vector<double> w(static_cast<std::size_t>(size));
  const double center = (size + 1) / 2.0;
  for (int p = 1; p <= size; ++p) {
    const double d = p - center;
    w[static_cast<std::size_t>(p - 1)] = std::exp(-(d * d) / (2.0 * sigma * sigma));
  }
  if (normalize) {
    double sum = 0.0;
    for (double v : w) sum += v;
    for (double& v : w) v /= sum;
  }
  return GaussianKernel(std::move(w), sigma, normalize);
}

}  // namespace docparse
