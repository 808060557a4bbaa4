#include "docparse/fps.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <vector>

#include "docparse/errors.hpp"

namespace docparse {

FpsStats fps_measure(const std::function<void(std::size_t)>& process, std::size_t n, std::size_t warmup,
                     int repeats) {
  if (n <= warmup) throw DomainError("fps_measure needs at least one sample after warmup");
  if (repeats < 1) throw DomainError("fps_measure needs at least one repeat");
  using clock = std::chrono::steady_clock;

  std::vector<double> rates;
  for (int r = 0; r < repeats; ++r) {
    for (std::size_t i = 0; i < warmup; ++i) process(i);
    const auto t0 = clock::now();
    for (std::size_t i = warmup; i < n; ++i) process(i);
    const double secs = std::chrono::duration<double>(clock::now() - t0).count();
    const double timed = static_cast<double>(n - warmup);
    rates.push_back(secs > 0.0 ? timed / secs : std::numeric_limits<double>::max());
  }

  FpsStats out;
  out.samples = n - warmup;
  out.repeats = repeats;
  for (double v : rates) out.mean += v;
  out.mean /= static_cast<double>(rates.size());
  if (rates.size() > 1) {
    double ss = 0.0;
    for (double v : rates) ss += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(ss / static_cast<double>(rates.size() - 1));
  }
  return out;
}

}  // namespace docparse
