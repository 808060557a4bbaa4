#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "docparse/gaussian_kernel.hpp"
#include "docparse/gk_cel.hpp"
#include "docparse/latex_normalizer.hpp"
#include "docparse/rng.hpp"
#include "docparse/sequence_metrics.hpp"
#include "docparse/tiny_decoder.hpp"

namespace {

using namespace docparse;

// Batch of 8 sequences of 32 positions over a vocabulary whose last
// range(0) entries are coordinate bins.
struct LossInput {
  LogitsBatch logits;
  TargetBatch targets;
  CoordSpec spec;

  explicit LossInput(int bins) : logits(8, 32, static_cast<std::size_t>(bins + 64)), targets(8, 32) {
    spec = CoordSpec::with_bins(bins, 64);
    Rng rng(1);
    for (auto& z : logits.values()) z = rng.normal(0.0, 2.0);
    for (std::size_t i = 0; i < 8; ++i) {
      for (std::size_t j = 0; j < 32; ++j) targets.set(i, j, static_cast<int>(rng.uniform_int(0, bins + 63)));
    }
  }
};

void BM_CrossEntropy(benchmark::State& state) {
  const LossInput in(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(cross_entropy(in.logits, in.targets, true));
  state.SetItemsProcessed(state.iterations() * 8 * 32);
}
BENCHMARK(BM_CrossEntropy)->Arg(100)->Arg(1000);

void BM_GkCelForward(benchmark::State& state) {
  const LossInput in(static_cast<int>(state.range(0)));
  const auto kernel = GaussianKernel::build(5, 1.0, true);
  for (auto _ : state) benchmark::DoNotOptimize(gk_cel(in.logits, in.targets, in.spec, kernel));
  state.SetItemsProcessed(state.iterations() * 8 * 32);
}
BENCHMARK(BM_GkCelForward)->Arg(100)->Arg(1000);

void BM_GkCelForwardBackward(benchmark::State& state) {
  const LossInput in(static_cast<int>(state.range(0)));
  const auto kernel = GaussianKernel::build(static_cast<int>(state.range(1)), 1.0, true);
  for (auto _ : state) benchmark::DoNotOptimize(gk_cel(in.logits, in.targets, in.spec, kernel, {.with_grad = true}));
  state.SetItemsProcessed(state.iterations() * 8 * 32);
}
BENCHMARK(BM_GkCelForwardBackward)->Args({100, 5})->Args({1000, 5})->Args({1000, 21});

void BM_EditDistance(benchmark::State& state) {
  Rng rng(2);
  std::string a, b;
  for (long i = 0; i < state.range(0); ++i) {
    a += static_cast<char>('a' + rng.uniform_int(0, 25));
    b += static_cast<char>('a' + rng.uniform_int(0, 25));
  }
  for (auto _ : state) benchmark::DoNotOptimize(edit_distance(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_EditDistance)->RangeMultiplier(4)->Range(16, 1024)->Complexity(benchmark::oNSquared);

void BM_Normalize(benchmark::State& state) {
  std::string src;
  for (long i = 0; i < state.range(0); ++i) src += "{ x _ { i } ^ { 2 } \\over y ' } + \\{ a ^ 1 _ 2 \\} ";
  for (auto _ : state) benchmark::DoNotOptimize(latex::normalize(src));
  state.SetBytesProcessed(state.iterations() * static_cast<long>(src.size()));
}
BENCHMARK(BM_Normalize)->Arg(1)->Arg(16)->Arg(256);

void BM_DecoderStep(benchmark::State& state) {
  toy::TinyDecoderConfig c;
  c.vocab_size = 40;
  c.embed_dim = static_cast<int>(state.range(0));
  c.num_heads = 4;
  c.num_layers = 2;
  c.max_seq_len = 24;
  c.grid_height = c.grid_width = 16;
  const toy::TinyDecoder model(c);
  std::vector<std::uint8_t> grid(256, 0);
  for (std::size_t k = 0; k < grid.size(); k += 3) grid[k] = 1;
  std::vector<int> tokens(16);
  for (std::size_t k = 0; k < tokens.size(); ++k) tokens[k] = static_cast<int>(k % 40);
  std::vector<double> logits, dlogits(tokens.size() * 40, 1e-3), grad(model.num_parameters());
  for (auto _ : state) {
    const auto fwd = model.forward(grid, tokens, logits);
    model.backward(*fwd, dlogits, grad);
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(BM_DecoderStep)->Arg(32)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
