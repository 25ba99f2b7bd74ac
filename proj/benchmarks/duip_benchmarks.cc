// Copyright 2026 The DUIP Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <cstddef>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "duip/data.h"
#include "duip/eval.h"
#include "duip/lstm.h"
#include "duip/model.h"
#include "duip/ops.h"
#include "duip/rng.h"
#include "duip/trainer.h"

namespace duip {
namespace {

ItemVocab vocab_of(std::size_t n_items) {
  ItemVocab vocab;
  for (std::size_t i = 0; i < n_items; ++i) vocab.add("i" + std::to_string(i));
  return vocab;
}

std::vector<std::size_t> prefix_of(std::size_t length, std::size_t n_items, Rng& rng) {
  std::vector<std::size_t> prefix(length);
  for (auto& t : prefix) t = rng.below(n_items);
  return prefix;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  Tensor a({n, n});
  Tensor b({n, n});
  rng.fill_uniform(a, -1.0, 1.0);
  rng.fill_uniform(b, -1.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(16)->Arg(64)->Arg(128);

void BM_LstmForward(benchmark::State& state) {
  const auto length = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  LstmConfig cfg;
  cfg.n_tokens = 104;
  cfg.d_in = 64;
  cfg.d_h = 64;
  const LstmParams params = LstmParams::initialize(cfg, rng);
  const auto prefix = prefix_of(length, 100, rng);
  for (auto _ : state) benchmark::DoNotOptimize(encode_sequence(params, prefix));
}
BENCHMARK(BM_LstmForward)->Arg(4)->Arg(16)->Arg(64);

void BM_LstmBackward(benchmark::State& state) {
  const auto length = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  LstmConfig cfg;
  cfg.n_tokens = 104;
  cfg.d_in = 64;
  cfg.d_h = 64;
  const LstmParams params = LstmParams::initialize(cfg, rng);
  const auto prefix = prefix_of(length, 100, rng);
  const Encoding enc = encode_sequence(params, prefix);
  const std::vector<double> grad_h(64, 1.0);
  LstmParams grads = LstmParams::zeros(cfg);
  for (auto _ : state) {
    lstm_backward_acc(params, enc.trace, grad_h, grads);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_LstmBackward)->Arg(4)->Arg(16)->Arg(64);

void BM_ModelForward(benchmark::State& state) {
  const auto n_items = static_cast<std::size_t>(state.range(0));
  const DuipModel model = DuipModel::initialize(ModelConfig{}, vocab_of(n_items), 4);
  Rng rng(5);
  const auto prefix = prefix_of(8, n_items, rng);
  for (auto _ : state) benchmark::DoNotOptimize(forward(model, prefix));
}
BENCHMARK(BM_ModelForward)->Arg(50)->Arg(1000);

void BM_ModelBackward(benchmark::State& state) {
  const auto n_items = static_cast<std::size_t>(state.range(0));
  const DuipModel model = DuipModel::initialize(ModelConfig{}, vocab_of(n_items), 6);
  Rng rng(7);
  const auto prefix = prefix_of(8, n_items, rng);
  const ModelForward fwd = forward(model, prefix);
  DuipParams grads = model.params.zeros_like();
  for (auto _ : state) {
    backward_acc(model, fwd, 0, grads);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_ModelBackward)->Arg(50)->Arg(1000);

void BM_TrainStep(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  DuipModel model = DuipModel::initialize(ModelConfig{}, vocab_of(50), 8);
  Rng rng(9);
  std::vector<Example> examples(batch);
  for (auto& ex : examples) {
    ex.prefix = prefix_of(1 + rng.below(8), 50, rng);
    ex.target = rng.below(50);
  }
  const TrainConfig config;
  AdamState adam{model.params.zeros_like(), model.params.zeros_like(), 0};
  for (auto _ : state) {
    DuipParams grads = model.params.zeros_like();
    for (const auto& ex : examples) loss_and_gradient(model, ex, grads);
    clip_global_norm(grads, config.grad_clip_norm);
    adam_update(model.params, grads, adam, config);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_TrainStep)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_SknnRank(benchmark::State& state) {
  const auto n_sessions = static_cast<std::size_t>(state.range(0));
  constexpr std::size_t kItems = 1000;
  Rng rng(10);
  std::vector<Session> train(n_sessions);
  for (auto& s : train) s.items = prefix_of(2 + rng.below(10), kItems, rng);
  const SknnRecommender sknn(train, kItems);
  const auto prefix = prefix_of(5, kItems, rng);
  for (auto _ : state) benchmark::DoNotOptimize(sknn.rank(prefix, 5));
}
BENCHMARK(BM_SknnRank)->Arg(1000)->Arg(10000);

}  // namespace
}  // namespace duip

BENCHMARK_MAIN();
