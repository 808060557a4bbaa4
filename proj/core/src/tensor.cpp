#include "docparse/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace docparse {

bool Tensor3::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::size_t TargetBatch::count() const noexcept {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; }));
}

}  // namespace docparse
