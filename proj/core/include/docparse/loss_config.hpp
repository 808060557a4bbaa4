#pragma once

#include <istream>
#include <map>
#include <optional>
#include <string>

#include "docparse/coord_codec.hpp"
#include "docparse/gaussian_kernel.hpp"

namespace docparse {

/// Loss hyperparameters read from a `key = value` text file. Lines starting
/// with '#' are comments. Per-task weights use the key form `weight.<task>`.
struct LossConfig {
  int kernel_size = 5;
  double sigma = 1.0;
  bool normalized = true;
  double epsilon = 1e-12;
  std::optional<int> range_start;
  std::optional<int> range_end;
  double softargmax_temperature = 1.0;
  double softargmax_weight = 1.0;
  std::map<std::string, double> task_weights;

  GaussianKernel kernel() const { return GaussianKernel::build(kernel_size, sigma, normalized); }

  /// Coordinate spec from range_start/range_end; throws ConfigError if unset.
  CoordSpec coord_spec() const;

  double weight(const std::string& task) const {
    auto it = task_weights.find(task);
    return it == task_weights.end() ? 1.0 : it->second;
  }

  /// Applies one `key = value` assignment. Throws ConfigError on unknown
  /// keys or unparsable values.
  void set(const std::string& key, const std::string& value);

  std::string to_text() const;
};

LossConfig parse_loss_config(std::istream& in);
LossConfig load_loss_config(const std::string& path);

}  // namespace docparse
