#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "docparse/loss_config.hpp"

namespace docparse {

struct GradcheckOptions {
  int instances = 100;  // per loss
  std::uint64_t seed = 0;
  double step = 1e-5;   // central-difference step
  double tolerance = 1e-4;
  LossConfig loss;      // kernel and soft-argmax settings; range is randomized
  /// Negates every analytic gradient. Used to prove the check can fail.
  bool inject_sign_flip = false;
};

struct GradcheckCase {
  std::string name;
  int instances = 0;
  double max_rel_error = 0.0;
  double mean_rel_error = 0.0;
  int worst_instance = -1;
  bool passed = false;
};

struct GradcheckReport {
  std::vector<GradcheckCase> cases;
  bool passed = false;
};

/// max_i |a_i - n_i| / max(max_i |a_i|, max_i |n_i|); zero when both are
/// identically zero.
double relative_error(std::span<const double> analytic, std::span<const double> numeric);

/// Compares analytic gradients of gk_cel, cross_entropy and softargmax_loss
/// against central finite differences on random shapes, ranges, targets and
/// masks.
GradcheckReport run_gradcheck(const GradcheckOptions& options);

}  // namespace docparse
