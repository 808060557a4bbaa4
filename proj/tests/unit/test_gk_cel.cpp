#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include <doctest.h>

#include "docparse/errors.hpp"
#include "docparse/gaussian_kernel.hpp"
#include "docparse/gk_cel.hpp"
#include "docparse/gradcheck.hpp"
#include "docparse/loss_config.hpp"
#include "docparse/rng.hpp"

using namespace docparse;

namespace {

LogitsBatch random_logits(Rng& rng, std::size_t b, std::size_t l, std::size_t v, double scale = 2.0) {
  LogitsBatch z(b, l, v);
  for (auto& x : z.values()) x = rng.normal(0.0, scale);
  return z;
}

// Straight-line evaluation of the smoothed NLL at one position, written from
// the definition without sharing any code with the library.
double reference_position_loss(const std::vector<double>& z, int target, int s, int e, const std::vector<double>& w) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double x : z) sum += std::exp(x - m);
  std::vector<double> p(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) p[k] = std::exp(z[k] - m) / sum;
  double q = p[static_cast<std::size_t>(target)];
  if (target >= s && target <= e) {
    const int h = static_cast<int>(w.size()) / 2;
    q = 0.0;
    for (int d = -h; d <= h; ++d) {
      const int k = target + d;
      if (k < s || k > e) continue;
      q += w[static_cast<std::size_t>(d + h)] * p[static_cast<std::size_t>(k)];
    }
  }
  return -std::log(std::max(q, 1e-12));
}

}  // namespace

TEST_SUITE("gaussian kernel") {
  TEST_CASE("unnormalized n=3 sigma=1 has unit center") {
    const auto k = GaussianKernel::build(3, 1.0, false);
    REQUIRE(k.size() == 3);
    CHECK(k.weights()[0] == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK(k.weights()[1] == 1.0);
    CHECK(k.weights()[2] == doctest::Approx(0.6065).epsilon(1e-4));
  }

  TEST_CASE("normalized n=5 sigma=1") {
    const auto k = GaussianKernel::build(5, 1.0, true);
    const double raw_sum = 1.0 + 2.0 * std::exp(-0.5) + 2.0 * std::exp(-2.0);
    CHECK(raw_sum == doctest::Approx(2.4836).epsilon(1e-4));
    const double expected[] = {0.0545, 0.2442, 0.4026, 0.2442, 0.0545};
    for (int p = 0; p < 5; ++p) CHECK(k.weights()[static_cast<std::size_t>(p)] == doctest::Approx(expected[p]).epsilon(1e-3));
    CHECK(std::accumulate(k.weights().begin(), k.weights().end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("tiny sigma collapses to a delta") {
    const auto k = GaussianKernel::build(3, 1e-6, true);
    CHECK(k.weights()[0] == 0.0);
    CHECK(k.weights()[1] == 1.0);
    CHECK(k.weights()[2] == 0.0);
  }

  TEST_CASE("symmetric with monotone decay from the center") {
    for (int n : {3, 5, 7, 9, 15}) {
      for (double sigma : {0.3, 1.0, 2.5}) {
        for (bool norm : {false, true}) {
          const auto k = GaussianKernel::build(n, sigma, norm);
          const auto w = k.weights();
          for (int p = 0; p < n; ++p) CHECK(w[static_cast<std::size_t>(p)] == w[static_cast<std::size_t>(n - 1 - p)]);
          for (int d = 0; d < k.half_width(); ++d) CHECK(k.at_offset(d) >= k.at_offset(d + 1));
          CHECK(k.at_offset(k.half_width() + 1) == 0.0);
        }
      }
    }
  }

  TEST_CASE("rejects even, tiny and non-positive-width kernels") {
    CHECK_THROWS_AS(GaussianKernel::build(4, 1.0, true), ConfigError);
    CHECK_THROWS_AS(GaussianKernel::build(1, 1.0, true), ConfigError);
    CHECK_THROWS_AS(GaussianKernel::build(3, 0.0, true), ConfigError);
    CHECK_THROWS_AS(GaussianKernel::build(3, -1.0, true), ConfigError);
  }
}

TEST_SUITE("range probabilities and convolution") {
  TEST_CASE("uniform logits restrict to the range") {
    LogitsBatch z(1, 1, 10, 0.0);
    const CoordSpec spec{3, 3, 5};
    const auto rp = masked_range_probs(z, spec);
    for (int k = 0; k < 10; ++k) {
      CHECK(rp.probs(0, 0, static_cast<std::size_t>(k)) == doctest::Approx(0.1));
      CHECK(rp.range_probs(0, 0, static_cast<std::size_t>(k)) == (spec.contains(k) ? doctest::Approx(0.1) : doctest::Approx(0.0)));
    }
  }

  TEST_CASE("a spike at the range start saturates") {
    LogitsBatch z(1, 1, 8, 0.0);
    z(0, 0, 2) = 60.0;
    const auto rp = masked_range_probs(z, CoordSpec{4, 2, 5});
    CHECK(rp.range_probs(0, 0, 2) == doctest::Approx(1.0));
    for (std::size_t k = 0; k < 8; ++k) {
      if (k != 2) CHECK(rp.range_probs(0, 0, k) < 1e-20);
    }
  }

  TEST_CASE("range mass never exceeds one") {
    Rng rng(3);
    for (int t = 0; t < 200; ++t) {
      const auto z = random_logits(rng, 2, 3, 12, 4.0);
      const auto rp = masked_range_probs(z, CoordSpec{6, 4, 9});
      for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
          double mass = 0.0, full = 0.0;
          for (std::size_t k = 0; k < 12; ++k) {
            mass += rp.range_probs(i, j, k);
            full += rp.probs(i, j, k);
          }
          CHECK(mass <= 1.0 + 1e-15);
          CHECK(full == doctest::Approx(1.0).epsilon(1e-12));
        }
      }
    }
  }

  TEST_CASE("point mass at the center spreads with kernel weights") {
    const auto kernel = GaussianKernel::build(3, 1.0, true);
    const CoordSpec spec{5, 2, 6};
    Tensor3 pp(1, 1, 9, 0.0);
    pp(0, 0, 4) = 1.0;
    const auto c = convolve_range(pp, kernel, spec);
    CHECK(c(0, 0, 4) == doctest::Approx(0.4519).epsilon(1e-4));
    CHECK(c(0, 0, 3) == doctest::Approx(0.2741).epsilon(1e-4));
    CHECK(c(0, 0, 5) == doctest::Approx(0.2741).epsilon(1e-4));
    CHECK(c(0, 0, 2) == 0.0);
    CHECK(c(0, 0, 0) == 0.0);
  }

  TEST_CASE("zero input gives zero output and the edge loses mass to padding") {
    const auto kernel = GaussianKernel::build(3, 1.0, true);
    const CoordSpec spec{5, 2, 6};
    Tensor3 zero(1, 1, 9, 0.0);
    const auto zc = convolve_range(zero, kernel, spec);
    for (double v : zc.values()) CHECK(v == 0.0);
    Tensor3 edge(1, 1, 9, 0.0);
    edge(0, 0, 2) = 1.0;
    const auto c = convolve_range(edge, kernel, spec);
    const double total = std::accumulate(c.values().begin(), c.values().end(), 0.0);
    CHECK(total < 1.0);
    CHECK(total == doctest::Approx(0.4519 + 0.2741).epsilon(1e-3));
  }

  TEST_CASE("kernel wider than the range is a configuration error") {
    const auto kernel = GaussianKernel::build(5, 1.0, true);
    Tensor3 pp(1, 1, 6, 0.0);
    CHECK_THROWS_AS(convolve_range(pp, kernel, CoordSpec{3, 1, 3}), ConfigError);
  }

  TEST_CASE("splice copies outside the range and convolution inside") {
    Rng rng(5);
    const auto z = random_logits(rng, 1, 2, 10);
    const CoordSpec spec{5, 4, 8};
    const auto rp = masked_range_probs(z, spec);
    const auto c = convolve_range(rp.range_probs, GaussianKernel::build(3, 1e-6, true), spec);
    const auto spliced = splice(rp.probs, c, spec);
    for (std::size_t j = 0; j < 2; ++j) {
      for (std::size_t k = 0; k < 10; ++k) {
        CHECK(spliced(0, j, k) == doctest::Approx(rp.probs(0, j, k)).epsilon(1e-15));
      }
    }
  }
}

TEST_SUITE("gk-cel") {
  TEST_CASE("worked example with uniform logits") {
    LogitsBatch z(1, 1, 6, 0.0);
    TargetBatch t(1, 1);
    t.set(0, 0, 3);
    const auto out = gk_cel(z, t, CoordSpec{3, 2, 4}, GaussianKernel::build(3, 1.0, true));
    CHECK(out.loss == doctest::Approx(1.7917).epsilon(1e-3));
    CHECK(out.loss == doctest::Approx(-std::log((0.4519 + 2 * 0.2741) / 6.0)).epsilon(1e-3));
  }

  TEST_CASE("matches an independent per-position evaluation") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t b = 2, l = 3, v = 14;
      const CoordSpec spec{7, 5, 11};
      const auto kernel = GaussianKernel::build(5, 0.8, trial % 2 == 0);
      const auto z = random_logits(rng, b, l, v);
      TargetBatch t(b, l);
      double expected = 0.0;
      std::size_t n = 0;
      std::vector<double> w(kernel.weights().begin(), kernel.weights().end());
      for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < l; ++j) {
          const int target = static_cast<int>(rng.uniform_int(0, static_cast<long>(v) - 1));
          const bool on = rng.bernoulli(0.8) || (i == 0 && j == 0);
          t.set(i, j, target, on);
          if (!on) continue;
          std::vector<double> row(z.row(i, j).begin(), z.row(i, j).end());
          expected += reference_position_loss(row, target, spec.start, spec.end, w);
          ++n;
        }
      }
      const auto out = gk_cel(z, t, spec, kernel);
      CHECK(out.loss == doctest::Approx(expected / static_cast<double>(n)).epsilon(1e-12));
    }
  }

  TEST_CASE("off-range targets reduce to cross-entropy exactly") {
    Rng rng(13);
    const CoordSpec spec{6, 4, 9};
    const auto kernel = GaussianKernel::build(5, 1.0, true);
    for (int trial = 0; trial < 100; ++trial) {
      const auto z = random_logits(rng, 2, 4, 13);
      TargetBatch t(2, 4);
      for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
          long target = rng.uniform_int(0, 6);
          if (target >= 4) target += 6;  // 0..3 or 10..12
          t.set(i, j, static_cast<int>(target));
        }
      }
      const auto g = gk_cel(z, t, spec, kernel, {.with_grad = true});
      const auto c = cross_entropy(z, t, true);
      CHECK(std::abs(g.loss - c.loss) < 1e-12);
      for (std::size_t k = 0; k < g.position_loss.size(); ++k) {
        CHECK(std::abs(g.position_loss[k] - c.position_loss[k]) < 1e-12);
      }
      for (std::size_t k = 0; k < z.size(); ++k) {
        CHECK(std::abs(g.grad->values()[k] - c.grad->values()[k]) < 1e-12);
      }
    }
  }

  TEST_CASE("delta kernel agrees with cross-entropy on coordinate targets") {
    Rng rng(17);
    const CoordSpec spec{8, 3, 10};
    const auto kernel = GaussianKernel::build(3, 1e-6, true);
    for (int trial = 0; trial < 100; ++trial) {
      const auto z = random_logits(rng, 1, 3, 12);
      TargetBatch t(1, 3);
      for (std::size_t j = 0; j < 3; ++j) t.set(0, j, static_cast<int>(rng.uniform_int(3, 10)));
      CHECK(std::abs(gk_cel(z, t, spec, kernel).loss - cross_entropy(z, t).loss) < 1e-6);
    }
  }

  TEST_CASE("nonnegative with a normalized kernel") {
    Rng rng(19);
    const CoordSpec spec{6, 2, 7};
    const auto kernel = GaussianKernel::build(5, 2.0, true);
    for (int trial = 0; trial < 200; ++trial) {
      auto z = random_logits(rng, 1, 2, 10, 8.0);
      TargetBatch t(1, 2);
      for (std::size_t j = 0; j < 2; ++j) t.set(0, j, static_cast<int>(rng.uniform_int(0, 9)));
      CHECK(gk_cel(z, t, spec, kernel).loss >= 0.0);
    }
  }

  TEST_CASE("unnormalized kernel has unit peak, so it never beats a perfect prediction") {
    LogitsBatch z(1, 1, 8, -50.0);
    for (std::size_t k = 2; k <= 6; ++k) z(0, 0, k) = 10.0;
    TargetBatch t(1, 1);
    t.set(0, 0, 4);
    const CoordSpec spec{5, 2, 6};
    const auto raw = gk_cel(z, t, spec, GaussianKernel::build(5, 3.0, false));
    const auto norm = gk_cel(z, t, spec, GaussianKernel::build(5, 3.0, true));
    CHECK(raw.loss >= 0.0);
    CHECK(raw.loss < norm.loss);
    // Uniform over five bins: P'' = (1 + 2 e^{-1/18} + 2 e^{-4/18}) / 5.
    const double expect = -std::log((1 + 2 * std::exp(-1.0 / 18) + 2 * std::exp(-4.0 / 18)) / 5);
    CHECK(raw.loss == doctest::Approx(expect).epsilon(1e-9));
  }

  TEST_CASE("log floor guards vanishing smoothed probability") {
    LogitsBatch z(1, 1, 20, 0.0);
    z(0, 0, 2) = 800.0;  // all mass on the first bin
    TargetBatch t(1, 1);
    t.set(0, 0, 19);
    const auto out = gk_cel(z, t, CoordSpec{18, 2, 19}, GaussianKernel::build(3, 1.0, true), {.with_grad = true});
    CHECK(out.loss == doctest::Approx(-std::log(1e-12)));
    CHECK(std::isfinite(out.loss));
    for (double g : out.grad->values()) CHECK(std::isfinite(g));
  }

  TEST_CASE("gradient rows sum to zero") {
    Rng rng(23);
    const CoordSpec spec{6, 3, 8};
    const auto kernel = GaussianKernel::build(3, 1.0, true);
    for (int trial = 0; trial < 50; ++trial) {
      const auto z = random_logits(rng, 2, 2, 11);
      TargetBatch t(2, 2);
      for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) t.set(i, j, static_cast<int>(rng.uniform_int(0, 10)));
      }
      const auto g = gk_cel_grad(z, t, spec, kernel);
      for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
          const auto r = g.row(i, j);
          CHECK(std::abs(std::accumulate(r.begin(), r.end(), 0.0)) < 1e-13);
        }
      }
    }
  }

  TEST_CASE("masked positions get no gradient") {
    Rng rng(29);
    const auto z = random_logits(rng, 1, 3, 9);
    TargetBatch t(1, 3);
    t.set(0, 0, 4);
    t.set(0, 1, 5, false);
    t.set(0, 2, 1);
    const auto g = gk_cel_grad(z, t, CoordSpec{5, 3, 7}, GaussianKernel::build(3, 1.0, true));
    for (double v : g.row(0, 1)) CHECK(v == 0.0);
  }

  TEST_CASE("errors") {
    LogitsBatch z(1, 2, 8, 0.0);
    TargetBatch t(1, 2);
    const CoordSpec spec{5, 2, 6};
    const auto kernel = GaussianKernel::build(3, 1.0, true);
    CHECK_THROWS_AS(gk_cel(z, t, spec, kernel), EmptyBatchError);
    CHECK_THROWS_AS(cross_entropy(z, t), EmptyBatchError);
    t.set(0, 0, 3);
    z(0, 1, 0) = std::nan("");
    CHECK_THROWS_AS(gk_cel(z, t, spec, kernel), DomainError);
    CHECK_THROWS_AS(cross_entropy(z, t), DomainError);
  }

  TEST_CASE("range diagnostics report mass before and after smoothing") {
    LogitsBatch z(1, 1, 6, 0.0);
    TargetBatch t(1, 1);
    t.set(0, 0, 3);
    const auto out = gk_cel(z, t, CoordSpec{3, 2, 4}, GaussianKernel::build(3, 1.0, true));
    CHECK(out.range_mass.before == doctest::Approx(0.5));
    // Edges lose one side lobe each to the zero padding.
    CHECK(out.range_mass.after == doctest::Approx((3 * 0.4519 + 4 * 0.2741) / 6.0).epsilon(1e-3));
  }
}

TEST_SUITE("cross-entropy") {
  TEST_CASE("uniform logits over six tokens") {
    LogitsBatch z(1, 1, 6, 0.0);
    TargetBatch t(1, 1);
    t.set(0, 0, 2);
    CHECK(cross_entropy(z, t).loss == doctest::Approx(std::log(6.0)).epsilon(1e-12));
    CHECK(cross_entropy(z, t).loss == doctest::Approx(1.7918).epsilon(1e-4));
  }

  TEST_CASE("saturated correct logits") {
    LogitsBatch z(1, 1, 6, 0.0);
    z(0, 0, 4) = 50.0;
    TargetBatch t(1, 1);
    t.set(0, 0, 4);
    CHECK(cross_entropy(z, t).loss < 1e-20);
  }

  TEST_CASE("gradient is softmax minus one-hot over N") {
    Rng rng(31);
    const auto z = random_logits(rng, 1, 2, 5);
    TargetBatch t(1, 2);
    t.set(0, 0, 1);
    t.set(0, 1, 4);
    const auto out = cross_entropy(z, t, true);
    for (std::size_t j = 0; j < 2; ++j) {
      const auto row = z.row(0, j);
      double sum = 0.0;
      for (double x : row) sum += std::exp(x);
      for (std::size_t k = 0; k < 5; ++k) {
        const double expected = (std::exp(row[k]) / sum - (static_cast<int>(k) == t.label(0, j) ? 1.0 : 0.0)) / 2.0;
        CHECK((*out.grad)(0, j, k) == doctest::Approx(expected).epsilon(1e-12));
      }
    }
  }
}

TEST_SUITE("soft-argmax loss") {
  TEST_CASE("point mass at the target bin") {
    LogitsBatch z(1, 1, 10, 0.0);
    z(0, 0, 6) = 200.0;
    TargetBatch t(1, 1);
    t.set(0, 0, 6);
    CHECK(softargmax_loss(z, t, CoordSpec{6, 3, 8}, 1.0, 1.0).loss < 1e-20);
  }

  TEST_CASE("uniform distribution with a center target") {
    LogitsBatch z(1, 1, 10, 0.0);
    TargetBatch t(1, 1);
    t.set(0, 0, 5);
    CHECK(softargmax_loss(z, t, CoordSpec{5, 3, 7}, 1.0, 1.0).loss == doctest::Approx(0.0).epsilon(1e-15));
  }

  TEST_CASE("value from the definition") {
    // q over 3 bins = softmax([0, ln 2, ln 3]) = [1/6, 2/6, 3/6]; expected bin 8/6.
    LogitsBatch z(1, 1, 5, 0.0);
    z(0, 0, 3) = std::log(2.0);
    z(0, 0, 4) = std::log(3.0);
    TargetBatch t(1, 1);
    t.set(0, 0, 2);
    const double diff = (8.0 / 6.0) / 2.0;
    CHECK(softargmax_loss(z, t, CoordSpec{3, 2, 4}, 1.0, 0.5).loss == doctest::Approx(0.5 * diff * diff));
    // Temperature 2 halves the logits: q proportional to [1, sqrt 2, sqrt 3].
    const double s2 = std::sqrt(2.0), s3 = std::sqrt(3.0);
    const double e2 = (s2 + 2 * s3) / (1 + s2 + s3) / 2.0;
    CHECK(softargmax_loss(z, t, CoordSpec{3, 2, 4}, 2.0, 1.0).loss == doctest::Approx(e2 * e2));
  }

  TEST_CASE("non-coordinate target is a domain error") {
    LogitsBatch z(1, 1, 10, 0.0);
    TargetBatch t(1, 1);
    t.set(0, 0, 1);
    CHECK_THROWS_AS(softargmax_loss(z, t, CoordSpec{5, 3, 7}, 1.0, 1.0), DomainError);
  }
}

TEST_SUITE("gradient check") {
  TEST_CASE("relative error definition") {
    const std::vector<double> a = {1.0, -2.0, 0.5};
    const std::vector<double> n = {1.0, -2.0001, 0.5};
    CHECK(relative_error(a, n) == doctest::Approx(1e-4 / 2.0001));
    const std::vector<double> zero = {0.0, 0.0};
    CHECK(relative_error(zero, zero) == 0.0);
  }

  TEST_CASE("analytic gradients of all three losses pass") {
    GradcheckOptions opts;
    opts.instances = 40;
    const auto report = run_gradcheck(opts);
    REQUIRE(report.cases.size() == 3);
    CHECK(report.passed);
    for (const auto& c : report.cases) {
      CAPTURE(c.name);
      CHECK(c.instances == 40);
      CHECK(c.max_rel_error < 1e-4);
    }
  }

  TEST_CASE("unnormalized kernel passes too") {
    GradcheckOptions opts;
    opts.instances = 20;
    opts.loss.normalized = false;
    opts.loss.sigma = 1.7;
    opts.loss.kernel_size = 7;
    CHECK(run_gradcheck(opts).passed);
  }

  TEST_CASE("a sign flip is caught") {
    GradcheckOptions opts;
    opts.instances = 5;
    opts.inject_sign_flip = true;
    const auto report = run_gradcheck(opts);
    CHECK_FALSE(report.passed);
    for (const auto& c : report.cases) CHECK(c.max_rel_error > 0.5);
  }
}

TEST_SUITE("loss config") {
  TEST_CASE("parses key-value text") {
    std::istringstream in(
        "# kernel\nkernel_size = 7\nsigma=0.5\nnormalized = false\nepsilon = 1e-9\n"
        "range_start = 10\nrange_end = 19\nweight.detection = 2.5\n\n");
    const auto c = parse_loss_config(in);
    CHECK(c.kernel_size == 7);
    CHECK(c.sigma == 0.5);
    CHECK_FALSE(c.normalized);
    CHECK(c.epsilon == 1e-9);
    CHECK(c.coord_spec().bins == 10);
    CHECK(c.weight("detection") == 2.5);
    CHECK(c.weight("text") == 1.0);
    std::istringstream again(c.to_text());
    CHECK(parse_loss_config(again).to_text() == c.to_text());
  }

  TEST_CASE("rejects unknown keys and bad values") {
    std::istringstream unknown("kernel = 5\n");
    CHECK_THROWS_AS(parse_loss_config(unknown), ConfigError);
    std::istringstream bad("sigma = wide\n");
    CHECK_THROWS_AS(parse_loss_config(bad), ConfigError);
    std::istringstream missing_eq("sigma 1\n");
    CHECK_THROWS_AS(parse_loss_config(missing_eq), ConfigError);
    CHECK_THROWS_AS(LossConfig{}.coord_spec(), ConfigError);
  }
}
