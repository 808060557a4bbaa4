#include "docparse/gk_cel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "docparse/errors.hpp"

namespace docparse {

namespace detail {

double softmax_row(std::span<const double> z, std::span<double> p) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    p[k] = std::exp(z[k] - zmax);
    sum += p[k];
  }
  const double inv = 1.0 / sum;
  for (double& v : p) v *= inv;
  return zmax + std::log(sum);
}

}  // namespace detail

namespace {

void check_logits(const LogitsBatch& logits) {
  if (logits.vocab() == 0) throw DomainError("logits have an empty vocabulary axis");
  if (!logits.all_finite()) throw DomainError("logits contain non-finite values");
}

std::size_t check_targets(const LogitsBatch& logits, const TargetBatch& targets) {
  if (targets.batch != logits.batch() || targets.length != logits.length() ||
      targets.labels.size() != targets.batch * targets.length || targets.mask.size() != targets.labels.size()) {
    throw DomainError("target batch shape does not match logits");
  }
  std::size_t n = 0;
  const int vocab = static_cast<int>(logits.vocab());
  for (std::size_t idx = 0; idx < targets.labels.size(); ++idx) {
    if (!targets.mask[idx]) continue;
    const int t = targets.labels[idx];
    if (t < 0 || t >= vocab) {
      throw DomainError("target " + std::to_string(t) + " outside vocabulary of size " + std::to_string(vocab));
    }
    ++n;
  }
  if (n == 0) throw EmptyBatchError("no active target positions (N == 0)");
  return n;
}

void check_kernel_fits(const GaussianKernel& kernel, const CoordSpec& spec) {
  if (kernel.size() > spec.size()) {
    throw ConfigError("kernel of size " + std::to_string(kernel.size()) + " is wider than the coordinate range of " +
                      std::to_string(spec.size()) + " tokens");
  }
}

// Zero-padded convolution at a single in-range index.
double convolve_at(std::span<const double> p, const GaussianKernel& kernel, const CoordSpec& spec, int k) {
  const int h = kernel.half_width();
  const int lo = std::max(spec.start, k - h);
  const int hi = std::min(spec.end, k + h);
  double c = 0.0;
  for (int m = lo; m <= hi; ++m) c += kernel.at_offset(m - k) * p[static_cast<std::size_t>(m)];
  return c;
}

// Plain cross-entropy contribution of one row: returns -log P[t] and, when
// grad is non-empty, writes scale * (P - onehot(t)).
double ce_row(std::span<const double> z, std::span<double> p, int t, double scale, std::span<double> grad) {
  const double log_norm = detail::softmax_row(z, p);
  const double nll = log_norm - z[static_cast<std::size_t>(t)];
  if (!grad.empty()) {
    for (std::size_t k = 0; k < p.size(); ++k) grad[k] = scale * p[k];
    grad[static_cast<std::size_t>(t)] -= scale;
  }
  return nll;
}

LossOutput gk_cel_impl(const LogitsBatch& logits, const TargetBatch& targets, const CoordSpec& spec,
                       const GaussianKernel& kernel, double log_floor, bool with_grad) {
  check_logits(logits);
  spec.validate(static_cast<int>(logits.vocab()));
  check_kernel_fits(kernel, spec);
  const std::size_t n = check_targets(logits, targets);
  const double scale = 1.0 / static_cast<double>(n);

  LossOutput out;
  out.position_loss.assign(targets.labels.size(), 0.0);
  if (with_grad) out.grad.emplace(logits.batch(), logits.length(), logits.vocab(), 0.0);

  std::vector<double> p(logits.vocab());
  double total = 0.0;
  double mass_before = 0.0;
  double mass_after = 0.0;
  const int h = kernel.half_width();

  for (std::size_t i = 0; i < logits.batch(); ++i) {
    for (std::size_t j = 0; j < logits.length(); ++j) {
      if (!targets.active(i, j)) continue;
      const int t = targets.label(i, j);
      auto z = logits.row(i, j);
      std::span<double> g = with_grad ? out.grad->row(i, j) : std::span<double>{};

      double nll = 0.0;
      if (!spec.contains(t)) {
        nll = ce_row(z, p, t, scale, g);
      } else {
        detail::softmax_row(z, p);
        const double c_t = convolve_at(p, kernel, spec, t);
        nll = -std::log(std::max(c_t, log_floor));
        if (with_grad && c_t > log_floor) {
          // dL/dP_k = -scale / C_t * K(k - t) on the kernel support, then the
          // softmax Jacobian: dL/dz_j = P_j (a_j - sum_k P_k a_k).
          const double coef = -scale / c_t;
          const int lo = std::max(spec.start, t - h);
          const int hi = std::min(spec.end, t + h);
          double dot = 0.0;
          for (int m = lo; m <= hi; ++m) dot += p[static_cast<std::size_t>(m)] * coef * kernel.at_offset(m - t);
          for (std::size_t k = 0; k < p.size(); ++k) g[k] = -p[k] * dot;
          for (int m = lo; m <= hi; ++m) {
            const auto mk = static_cast<std::size_t>(m);
            g[mk] += p[mk] * coef * kernel.at_offset(m - t);
          }
        }
      }

      double before = 0.0;
      double after = 0.0;
      for (int k = spec.start; k <= spec.end; ++k) {
        before += p[static_cast<std::size_t>(k)];
        after += convolve_at(p, kernel, spec, k);
      }
      mass_before += before;
      mass_after += after;

      out.position_loss[i * targets.length + j] = nll;
      total += nll;
    }
  }
  out.loss = total * scale;
  out.range_mass = {mass_before * scale, mass_after * scale};
  return out;
}

}  // namespace

RangeProbs masked_range_probs(const LogitsBatch& logits, const CoordSpec& spec) {
  check_logits(logits);
  spec.validate(static_cast<int>(logits.vocab()));
  RangeProbs out{Tensor3(logits.batch(), logits.length(), logits.vocab()),
                 Tensor3(logits.batch(), logits.length(), logits.vocab())};
  for (std::size_t i = 0; i < logits.batch(); ++i) {
    for (std::size_t j = 0; j < logits.length(); ++j) {
      auto p = out.probs.row(i, j);
      detail::softmax_row(logits.row(i, j), p);
      auto pr = out.range_probs.row(i, j);
      for (int k = spec.start; k <= spec.end; ++k) pr[static_cast<std::size_t>(k)] = p[static_cast<std::size_t>(k)];
    }
  }
  return out;
}

Tensor3 convolve_range(const Tensor3& range_probs, const GaussianKernel& kernel, const CoordSpec& spec) {
  spec.validate(static_cast<int>(range_probs.vocab()));
  check_kernel_fits(kernel, spec);
  Tensor3 out(range_probs.batch(), range_probs.length(), range_probs.vocab());
  for (std::size_t i = 0; i < range_probs.batch(); ++i) {
    for (std::size_t j = 0; j < range_probs.length(); ++j) {
      auto in = range_probs.row(i, j);
      auto c = out.row(i, j);
      for (int k = spec.start; k <= spec.end; ++k) c[static_cast<std::size_t>(k)] = convolve_at(in, kernel, spec, k);
    }
  }
  return out;
}

Tensor3 splice(const Tensor3& probs, const Tensor3& convolved, const CoordSpec& spec) {
  if (!probs.same_shape(convolved)) throw DomainError("splice operands differ in shape");
  spec.validate(static_cast<int>(probs.vocab()));
  Tensor3 out = probs;
  for (std::size_t i = 0; i < probs.batch(); ++i) {
    for (std::size_t j = 0; j < probs.length(); ++j) {
      auto dst = out.row(i, j);
      auto src = convolved.row(i, j);
      std::copy(src.begin() + spec.start, src.begin() + spec.end + 1, dst.begin() + spec.start);
    }
  }
  return out;
}

LossOutput gk_cel(const LogitsBatch& logits, const TargetBatch& targets, const CoordSpec& spec,
                  const GaussianKernel& kernel, GkCelOptions options) {
  return gk_cel_impl(logits, targets, spec, kernel, options.log_floor, options.with_grad);
}

Tensor3 gk_cel_grad(const LogitsBatch& logits, const TargetBatch& targets, const CoordSpec& spec,
                    const GaussianKernel& kernel, double log_floor) {
  return std::move(*gk_cel_impl(logits, targets, spec, kernel, log_floor, true).grad);
}

LossOutput cross_entropy(const LogitsBatch& logits, const TargetBatch& targets, bool with_grad) {
  check_logits(logits);
  const std::size_t n = check_targets(logits, targets);
  const double scale = 1.0 / static_cast<double>(n);

  LossOutput out;
  out.position_loss.assign(targets.labels.size(), 0.0);
  if (with_grad) out.grad.emplace(logits.batch(), logits.length(), logits.vocab(), 0.0);
  std::vector<double> p(logits.vocab());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.batch(); ++i) {
    for (std::size_t j = 0; j < logits.length(); ++j) {
      if (!targets.active(i, j)) continue;
      std::span<double> g = with_grad ? out.grad->row(i, j) : std::span<double>{};
      const double nll = ce_row(logits.row(i, j), p, targets.label(i, j), scale, g);
      out.position_loss[i * targets.length + j] = nll;
      total += nll;
    }
  }
  out.loss = total * scale;
  return out;
}

}  // namespace docparse
