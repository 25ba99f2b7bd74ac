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

#ifndef DUIP_TRAINER_H_
#define DUIP_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "duip/data.h"
#include "duip/model.h"

namespace duip {

struct TrainConfig {
  std::uint64_t seed = 42;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double grad_clip_norm = 5.0;
  std::size_t early_stop_patience = 3;
  ModelConfig model;

  void validate() const;
  std::string to_json() const;
  static TrainConfig from_json(std::string_view text);

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct AdamState {
  DuipParams m;
  DuipParams v;
  std::uint64_t step = 0;
};

// One Adam update with bias correction, applied to every tensor.
void adam_update(DuipParams& params, const DuipParams& grads, AdamState& state,
                 const TrainConfig& config);

double global_norm(const DuipParams& grads);

// Rescales grads so their global L2 norm is at most max_norm. Returns the
// norm before clipping.
double clip_global_norm(DuipParams& grads, double max_norm);

struct Checkpoint {
  TrainConfig config;
  ItemVocab vocab;
  DuipParams params;
  AdamState adam;
  std::size_t epoch = 0;

  DuipModel model() const { return {config.model, vocab, params}; }
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
};

// Called after each epoch; purely observational.
using EpochCallback = std::function<void(const EpochLog&)>;

// Joint Adam training on next-item cross-entropy. Examples are reshuffled
// each epoch; after every epoch the mean validation loss decides the best
// snapshot, and training stops after `early_stop_patience` epochs without
// improvement. The returned parameters are rounded to 32-bit floats, the
// precision they are stored at. Examples whose target is UNK are skipped.
TrainResult train(const TrainConfig& config, const SplitDataset& split,
                  const EpochCallback& on_epoch = {});

// Mean loss over examples with predictable targets; NaN if there are none.
double mean_loss(const DuipModel& model, std::span<const Example> examples);

// Binary checkpoint, little-endian:
//   "DUIP" | u32 version | u32 len + config JSON | u32 tensor count |
//   per tensor: u16 len + name, u8 rank, u32 dims[rank], f32 payload |
//   u32 len + vocabulary JSON
std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace duip

#endif  // DUIP_TRAINER_H_
