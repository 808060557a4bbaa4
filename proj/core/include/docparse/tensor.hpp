#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace docparse {

/// Dense row-major B x L x V array of doubles. The innermost (vocabulary)
/// axis is contiguous.
class Tensor3 {
public:
  Tensor3() = default;
  Tensor3(std::size_t batch, std::size_t length, std::size_t vocab, double fill = 0.0)
      : batch_(batch), length_(length), vocab_(vocab), data_(batch * length * vocab, fill) {}

  std::size_t batch() const noexcept { return batch_; }
  std::size_t length() const noexcept { return length_; }
  std::size_t vocab() const noexcept { return vocab_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j, std::size_t k) { return data_[(i * length_ + j) * vocab_ + k]; }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const { return data_[(i * length_ + j) * vocab_ + k]; }

  std::span<double> row(std::size_t i, std::size_t j) { return {data_.data() + (i * length_ + j) * vocab_, vocab_}; }
  std::span<const double> row(std::size_t i, std::size_t j) const {
    return {data_.data() + (i * length_ + j) * vocab_, vocab_};
  }

  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  bool same_shape(const Tensor3& o) const noexcept {
    return batch_ == o.batch_ && length_ == o.length_ && vocab_ == o.vocab_;
  }
  bool all_finite() const noexcept;

private:
  std::size_t batch_ = 0;
  std::size_t length_ = 0;
  std::size_t vocab_ = 0;
  std::vector<double> data_;
};

/// Model output logits, shape batch x sequence x vocabulary.
using LogitsBatch = Tensor3;

/// Target token per position plus the mask of positions that contribute to
/// a loss.
struct TargetBatch {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::vector<int> labels;
  std::vector<std::uint8_t> mask;

  TargetBatch() = default;
  TargetBatch(std::size_t b, std::size_t l) : batch(b), length(l), labels(b * l, 0), mask(b * l, 0) {}

  int& label(std::size_t i, std::size_t j) { return labels[i * length + j]; }
  int label(std::size_t i, std::size_t j) const { return labels[i * length + j]; }
  bool active(std::size_t i, std::size_t j) const { return mask[i * length + j] != 0; }
  void set(std::size_t i, std::size_t j, int target, bool on = true) {
    labels[i * length + j] = target;
    mask[i * length + j] = on ? 1 : 0;
  }
  std::size_t count() const noexcept;
};

}  // namespace docparse
