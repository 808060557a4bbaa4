#pragma once

#include <cstddef>
#include <functional>

namespace docparse {

struct FpsStats {
  double mean = 0.0;    // samples per second
  double stddev = 0.0;  // across repeats
  std::size_t samples = 0;
  int repeats = 0;
};

/// Wall-clock throughput of `process(i)` over samples [0, n). The first
/// `warmup` calls of every repeat are run but not timed.
FpsStats fps_measure(const std::function<void(std::size_t)>& process, std::size_t n, std::size_t warmup = 1,
                     int repeats = 3);

}  // namespace docparse
