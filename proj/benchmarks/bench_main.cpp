#include <benchmark/benchmark.h>

#include <random>

#include "newscnn/embeddings.hpp"
#include "newscnn/network.hpp"
#include "newscnn/training.hpp"

using namespace newscnn;

namespace {

Vocabulary make_vocab(std::size_t n) {
  TokenList toks;
  for (std::size_t i = 0; i < n; ++i) toks.push_back("tok" + std::to_string(i));
  return Vocabulary::build({toks});
}

ModelConfig default_config(std::size_t m) {
  ModelConfig c;  // p=300, widths {3,4,5}, 12 filters each
  c.m = m;
  return c;
}

EncodedHeadline sample(std::size_t m, std::size_t vocab, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  EncodedHeadline enc;
  enc.indices.resize(m, 0);
  enc.true_len = static_cast<int>(m * 3 / 4);
  for (int i = 0; i < enc.true_len; ++i) {
    enc.indices[static_cast<std::size_t>(i)] =
        static_cast<std::int32_t>(std::uniform_int_distribution<std::size_t>(1, vocab)(rng));
  }
  return enc;
}

}  // namespace

static void BM_ConvForward(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const std::size_t p = 300;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> x(m * p), w(4 * p);
  for (auto& v : x) v = n(rng);
  for (auto& v : w) v = n(rng);
  for (auto _ : state) benchmark::DoNotOptimize(conv_forward(x, w, 0.1, 4));
}
BENCHMARK(BM_ConvForward)->Arg(12)->Arg(30);

static void BM_Forward(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  auto vocab = make_vocab(2000);
  auto c = default_config(m);
  auto table = init_self_learnt(vocab, c.p, 0.0, 0.1, 1);
  auto params = init_parameters(c, 1);
  auto enc = sample(m, 2000, 2);
  for (auto _ : state) benchmark::DoNotOptimize(forward(enc, table, params, c, PassMode::kTest));
}
BENCHMARK(BM_Forward)->Arg(12)->Arg(30);

static void BM_ForwardBackward(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  auto vocab = make_vocab(2000);
  auto c = default_config(m);
  auto table = init_self_learnt(vocab, c.p, 0.0, 0.1, 1);
  auto params = init_parameters(c, 1);
  auto enc = sample(m, 2000, 2);
  Rng rng = make_stream(1, "dropout");
  ForwardCache cache;
  auto grads = Gradients::zeros(c);
  for (auto _ : state) {
    forward(enc, table, params, c, PassMode::kTrain, &rng, &cache);
    backward_accumulate(cache, 1, params, c, table, grads);
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(12)->Arg(30);

static void BM_NearestNeighbors(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto vocab = make_vocab(n);
  auto table = init_self_learnt(vocab, 300, 0.0, 0.1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(nearest_neighbors("tok0", 10, table, vocab));
}
BENCHMARK(BM_NearestNeighbors)->Arg(1000)->Arg(20000);

static void BM_AdamStep(benchmark::State& state) {
  auto vocab = make_vocab(5000);
  auto c = default_config(20);
  auto table = init_self_learnt(vocab, c.p, 0.0, 0.1, 1);
  auto params = init_parameters(c, 1);
  auto grads = Gradients::zeros(c);
  Adam adam;
  for (auto _ : state) adam.step(params, table, grads);
}
BENCHMARK(BM_AdamStep);
BENCHMARK_MAIN();
