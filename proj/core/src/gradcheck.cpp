#include "docparse/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "docparse/gk_cel.hpp"
#include "docparse/rng.hpp"

namespace docparse {

namespace {

struct Instance {
  LogitsBatch logits;
  TargetBatch targets;
  CoordSpec spec;
};

Instance random_instance(Rng& rng, int min_range, bool coords_only) {
  const auto b = static_cast<std::size_t>(rng.uniform_int(1, 3));
  const auto l = static_cast<std::size_t>(rng.uniform_int(1, 4));
  const int range = static_cast<int>(rng.uniform_int(min_range, min_range + 8));
  const int before = static_cast<int>(rng.uniform_int(1, 4));
  const int after = static_cast<int>(rng.uniform_int(0, 3));
  const int vocab = before + range + after;
  Instance in{LogitsBatch(b, l, static_cast<std::size_t>(vocab)), TargetBatch(b, l),
              CoordSpec::with_bins(range, before)};
  const double spread = rng.uniform(0.5, 3.0);
  for (double& z : in.logits.values()) z = rng.normal(0.0, spread);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < l; ++j) {
      const bool in_range = coords_only || rng.bernoulli(0.7);
      const int t = in_range ? static_cast<int>(rng.uniform_int(in.spec.start, in.spec.end))
                             : static_cast<int>(rng.uniform_int(0, before - 1));
      in.targets.set(i, j, t, rng.bernoulli(0.8));
    }
  }
  if (in.targets.count() == 0) in.targets.mask[0] = 1;
  return in;
}

GradcheckCase check(const std::string& name, const GradcheckOptions& opt, std::uint64_t salt, int min_range,
                    bool coords_only,
                    const std::function<LossOutput(const LogitsBatch&, const TargetBatch&, const CoordSpec&, bool)>& fn) {
  GradcheckCase c;
  c.name = name;
  c.instances = opt.instances;
  Rng rng = Rng::derive(opt.seed, salt);
  double sum = 0.0;
  for (int k = 0; k < opt.instances; ++k) {
    Instance in = random_instance(rng, min_range, coords_only);
    auto analytic = std::move(*fn(in.logits, in.targets, in.spec, true).grad);
    if (opt.inject_sign_flip) {
      for (double& g : analytic.values()) g = -g;
    }
    std::vector<double> numeric(in.logits.size());
    auto& z = in.logits.values();
    for (std::size_t idx = 0; idx < z.size(); ++idx) {
      const double orig = z[idx];
      z[idx] = orig + opt.step;
      const double up = fn(in.logits, in.targets, in.spec, false).loss;
      z[idx] = orig - opt.step;
      const double down = fn(in.logits, in.targets, in.spec, false).loss;
      z[idx] = orig;
      numeric[idx] = (up - down) / (2.0 * opt.step);
    }
    const double err = relative_error(analytic.values(), numeric);
    sum += err;
    if (c.worst_instance < 0 || err > c.max_rel_error) {
      c.max_rel_error = err;
      c.worst_instance = k;
    }
  }
  c.mean_rel_error = opt.instances > 0 ? sum / opt.instances : 0.0;
  c.passed = c.max_rel_error < opt.tolerance;
  return c;
}

}  // namespace

double relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  return scale > 0.0 ? diff / scale : 0.0;
}

GradcheckReport run_gradcheck(const GradcheckOptions& opt) {
  const GaussianKernel kernel = opt.loss.kernel();
  const LossConfig& lc = opt.loss;
  GradcheckReport r;
  r.cases.push_back(check("gk_cel", opt, 1, kernel.size(), false,
                          [&](const LogitsBatch& z, const TargetBatch& t, const CoordSpec& s, bool g) {
                            return gk_cel(z, t, s, kernel, {lc.epsilon, g});
                          }));
  r.cases.push_back(check("cross_entropy", opt, 2, 2, false,
                          [](const LogitsBatch& z, const TargetBatch& t, const CoordSpec&, bool g) {
                            return cross_entropy(z, t, g);
                          }));
  r.cases.push_back(check("softargmax_loss", opt, 3, 2, true,
                          [&](const LogitsBatch& z, const TargetBatch& t, const CoordSpec& s, bool g) {
                            return softargmax_loss(z, t, s, lc.softargmax_temperature, lc.softargmax_weight, g);
                          }));
  r.passed = std::all_of(r.cases.begin(), r.cases.end(), [](const GradcheckCase& c) { return c.passed; });
  return r;
}

}  // namespace docparse
