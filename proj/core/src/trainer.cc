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

#include "duip/trainer.h"

#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "duip/errors.h"
#include "duip/ops.h"

namespace duip {
namespace {

constexpr char kMagic[4] = {'D', 'U', 'I', 'P'};
// Separates the shuffling stream from the initialization stream.
constexpr std::uint64_t kShuffleStream = 0x9e3779b97f4a7c15ULL;

nlohmann::ordered_json model_config_json(const ModelConfig& m) {
  nlohmann::ordered_json j;
  j["d_in"] = m.d_in;
  j["d_h"] = m.d_h;
  j["d_cat"] = m.d_cat;
  j["d_lm"] = m.d_lm;
  j["d_ff"] = m.d_ff;
  j["layers"] = m.layers;
  j["heads"] = m.heads;
  j["soft_len"] = m.soft_len;
  j["max_hard_len"] = m.max_hard_len;
  j["max_len"] = m.max_len;
  j["transform"] = std::string(transform_mode_name(m.transform));
  j["mlp_hidden"] = m.mlp_hidden;
  return j;
}

nlohmann::ordered_json train_config_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["adam_epsilon"] = c.adam_epsilon;
  j["grad_clip_norm"] = c.grad_clip_norm;
  j["early_stop_patience"] = c.early_stop_patience;
  j["model"] = model_config_json(c.model);
  return j;
}

TrainConfig train_config_from(const nlohmann::json& j) {
  TrainConfig c;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.adam_epsilon = j.at("adam_epsilon").get<double>();
  c.grad_clip_norm = j.at("grad_clip_norm").get<double>();
  c.early_stop_patience = j.at("early_stop_patience").get<std::size_t>();
  const auto& m = j.at("model");
  c.model.d_in = m.at("d_in").get<std::size_t>();
  c.model.d_h = m.at("d_h").get<std::size_t>();
  c.model.d_cat = m.at("d_cat").get<std::size_t>();
  c.model.d_lm = m.at("d_lm").get<std::size_t>();
  c.model.d_ff = m.at("d_ff").get<std::size_t>();
  c.model.layers = m.at("layers").get<std::size_t>();
  c.model.heads = m.at("heads").get<std::size_t>();
  c.model.soft_len = m.at("soft_len").get<std::size_t>();
  c.model.max_hard_len = m.at("max_hard_len").get<std::size_t>();
  c.model.max_len = m.at("max_len").get<std::size_t>();
  c.model.transform = parse_transform_mode(m.at("transform").get<std::string>());
  c.model.mlp_hidden = m.at("mlp_hidden").get<std::size_t>();
  return c;
}

std::vector<Example> predictable_examples(std::span<const Session> sessions,
                                          std::size_t n_items) {
  std::vector<Example> out;
  for (auto& ex : make_examples(sessions)) {
    if (ex.target < n_items) out.push_back(std::move(ex));
  }
  return out;
}

// Little-endian byte writer.
class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    out_.append(static_cast<const char*>(p), n);
  }
  template <typename T>
  void uint(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
  }
  void f32(float v) { uint(std::bit_cast<std::uint32_t>(v)); }
  void string32(std::string_view s) {
    uint(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  std::size_t offset() const { return pos_; }
  bool done() const { return pos_ == data_.size(); }

  std::string_view bytes(std::size_t n, const char* what) {
    if (data_.size() - pos_ < n) {
      throw FormatError(pos_, std::string("truncated ") + what + ": need " +
                                  std::to_string(n) + " bytes, have " +
                                  std::to_string(data_.size() - pos_));
    }
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  template <typename T>
  T uint(const char* what) {
    const auto b = bytes(sizeof(T), what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<unsigned char>(b[i])) << (8 * i);
    }
    return v;
  }
  float f32(const char* what) {
    return std::bit_cast<float>(uint<std::uint32_t>(what));
  }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
};

void write_tensor(Writer& w, std::string_view name, const Tensor& t) {
  w.uint(static_cast<std::uint16_t>(name.size()));
  w.bytes(name.data(), name.size());
  w.uint(static_cast<std::uint8_t>(t.rank()));
  for (std::size_t d : t.shape()) w.uint(static_cast<std::uint32_t>(d));
  for (double v : t.data()) w.f32(static_cast<float>(v));
}

}  // namespace

void TrainConfig::validate() const {
  model.validate();
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in (0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw ConfigError("adam epsilon must be positive");
  if (!(grad_clip_norm > 0.0)) throw ConfigError("grad_clip_norm must be positive");
  if (early_stop_patience == 0) throw ConfigError("early_stop_patience must be positive");
}

std::string TrainConfig::to_json() const { return train_config_json(*this).dump(); }

TrainConfig TrainConfig::from_json(std::string_view text) {
  return train_config_from(nlohmann::json::parse(text));
}

double global_norm(const DuipParams& grads) {
  double sq = 0.0;
  grads.for_each([&](std::string_view, const Tensor& t) {
    for (double v : t.data()) sq += v * v;
  });
  return std::sqrt(sq);
}

double clip_global_norm(DuipParams& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    grads.for_each([&](std::string_view, Tensor& t) {
      for (double& v : t.data()) v *= scale;
    });
  }
  return norm;
}

void adam_update(DuipParams& params, const DuipParams& grads, AdamState& state,
                 const TrainConfig& config) {
  ++state.step;
  const double b1 = config.beta1;
  const double b2 = config.beta2;
  const auto step = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(b1, step);
  const double correction2 = 1.0 - std::pow(b2, step);
  const double lr = config.learning_rate;
  const double eps = config.adam_epsilon;

  std::vector<Tensor*> m_tensors;
  std::vector<Tensor*> v_tensors;
  state.m.for_each([&](std::string_view, Tensor& t) { m_tensors.push_back(&t); });
  state.v.for_each([&](std::string_view, Tensor& t) { v_tensors.push_back(&t); });
  std::size_t idx = 0;
  for_each_pair(params, grads, [&](std::string_view, Tensor& p, const Tensor& g) {
    Tensor& m = *m_tensors[idx];
    Tensor& v = *v_tensors[idx];
    ++idx;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i];
      m[i] = b1 * m[i] + (1.0 - b1) * gi;
      v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  });
}

double mean_loss(const DuipModel& model, std::span<const Example> examples) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& ex : examples) {
    if (ex.target >= model.n_items()) continue;
    total += forward_loss(model, ex);
    ++n;
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN()
                : total / static_cast<double>(n);
}

TrainResult train(const TrainConfig& config, const SplitDataset& split,
                  const EpochCallback& on_epoch) {
  config.validate();
  const std::size_t n_items = split.vocab.n_items();
  const auto train_examples = predictable_examples(split.train, n_items);
  if (train_examples.empty()) {
    throw DomainError("train: the training split yields no examples");
  }
  const auto valid_examples = predictable_examples(split.valid, n_items);

  DuipModel model = DuipModel::initialize(config.model, split.vocab, config.seed);
  AdamState adam{model.params.zeros_like(), model.params.zeros_like(), 0};

  TrainResult result;
  auto snapshot = [&](std::size_t epoch) {
    result.checkpoint.config = config;
    result.checkpoint.vocab = model.vocab;
    result.checkpoint.params = model.params;
    result.checkpoint.adam = adam;
    result.checkpoint.epoch = epoch;
  };
  snapshot(0);

  Rng shuffle_rng(config.seed ^ kShuffleStream);
  std::vector<std::size_t> order(train_examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  DuipParams grads = model.params.zeros_like();

  double best_valid = std::numeric_limits<double>::infinity();
  std::size_t stale_epochs = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      grads.for_each([](std::string_view, Tensor& t) { t.set_zero(); });
      for (std::size_t b = start; b < end; ++b) {
        epoch_loss += loss_and_gradient(model, train_examples[order[b]], grads);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      grads.for_each([&](std::string_view, Tensor& t) {
        for (double& v : t.data()) v *= inv;
      });
      clip_global_norm(grads, config.grad_clip_norm);
      adam_update(model.params, grads, adam, config);
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = epoch_loss / static_cast<double>(order.size());
    entry.valid_loss = mean_loss(model, valid_examples);
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);

    // Without validation examples every epoch counts as an improvement.
    if (std::isnan(entry.valid_loss) || entry.valid_loss < best_valid) {
      if (!std::isnan(entry.valid_loss)) best_valid = entry.valid_loss;
      stale_epochs = 0;
      snapshot(epoch);
    } else if (++stale_epochs >= config.early_stop_patience) {
      break;
    }
  }

  round_to_float(result.checkpoint.params);
  round_to_float(result.checkpoint.adam.m);
  round_to_float(result.checkpoint.adam.v);
  return result;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.uint(kCheckpointVersion);

  nlohmann::ordered_json meta;
  meta["config"] = train_config_json(ckpt.config);
  meta["epoch"] = ckpt.epoch;
  meta["adam_step"] = ckpt.adam.step;
  w.string32(meta.dump());

  std::vector<std::pair<std::string, const Tensor*>> tensors;
  ckpt.params.for_each([&](std::string_view name, const Tensor& t) {
    tensors.emplace_back(std::string(name), &t);
  });
  ckpt.adam.m.for_each([&](std::string_view name, const Tensor& t) {
    tensors.emplace_back("adam.m." + std::string(name), &t);
  });
  ckpt.adam.v.for_each([&](std::string_view name, const Tensor& t) {
    tensors.emplace_back("adam.v." + std::string(name), &t);
  });
  w.uint(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) write_tensor(w, name, *t);

  w.string32(ckpt.vocab.to_json());
  return w.take();
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  const auto magic = r.bytes(sizeof(kMagic), "magic");
  if (magic != std::string_view(kMagic, sizeof(kMagic))) {
    throw FormatError(0, "bad magic; not a DUIP checkpoint");
  }
  const std::size_t version_at = r.offset();
  const auto version = r.uint<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw FormatError(version_at, "unsupported checkpoint version " +
                                      std::to_string(version));
  }

  const std::size_t meta_at = r.offset();
  const auto meta_len = r.uint<std::uint32_t>("config length");
  const auto meta_text = r.bytes(meta_len, "config JSON");
  Checkpoint ckpt;
  try {
    const auto meta = nlohmann::json::parse(meta_text);
    ckpt.config = train_config_from(meta.at("config"));
    ckpt.epoch = meta.at("epoch").get<std::size_t>();
    ckpt.adam.step = meta.at("adam_step").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(meta_at, std::string("bad config JSON: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(meta_at, std::string("bad config JSON: ") + e.what());
  }

  struct Stored {
    Shape shape;
    std::vector<double> data;
    std::size_t offset;
  };
  std::map<std::string, Stored> stored;
  const auto count = r.uint<std::uint32_t>("tensor count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t at = r.offset();
    const auto name_len = r.uint<std::uint16_t>("tensor name length");
    std::string name(r.bytes(name_len, "tensor name"));
    const auto rank = r.uint<std::uint8_t>("tensor rank");
    if (rank == 0) throw FormatError(at, "tensor '" + name + "' has rank 0");
    Stored s;
    s.offset = at;
    std::size_t n = 1;
    for (std::uint8_t d = 0; d < rank; ++d) {
      const auto dim = r.uint<std::uint32_t>("tensor dims");
      if (dim == 0) throw FormatError(at, "tensor '" + name + "' has a zero dimension");
      s.shape.push_back(dim);
      n *= dim;
    }
    if (n > bytes.size()) throw FormatError(at, "tensor '" + name + "' is too large");
    s.data.resize(n);
    for (double& v : s.data) v = static_cast<double>(r.f32("tensor payload"));
    if (!stored.emplace(name, std::move(s)).second) {
      throw FormatError(at, "duplicate tensor '" + name + "'");
    }
  }

  const std::size_t vocab_at = r.offset();
  const auto vocab_len = r.uint<std::uint32_t>("vocabulary length");
  const auto vocab_text = r.bytes(vocab_len, "vocabulary JSON");
  try {
    ckpt.vocab = ItemVocab::from_json(vocab_text);
  } catch (const std::exception& e) {
    throw FormatError(vocab_at, std::string("bad vocabulary JSON: ") + e.what());
  }
  if (!r.done()) throw FormatError(r.offset(), "trailing bytes after vocabulary");

  DuipModel shape_model;
  try {
    shape_model = DuipModel::zeros(ckpt.config.model, ckpt.vocab);
  } catch (const Error& e) {
    throw FormatError(meta_at, std::string("config does not describe a model: ") + e.what());
  }
  auto fill = [&](const std::string& name, Tensor& t) {
    auto it = stored.find(name);
    if (it == stored.end()) {
      throw FormatError(r.offset(), "missing tensor '" + name + "'");
    }
    if (it->second.shape != t.shape()) {
      throw FormatError(it->second.offset,
                        "tensor '" + name + "' has shape " +
                            shape_to_string(it->second.shape) + ", expected " +
                            shape_to_string(t.shape()));
    }
    t = Tensor(t.shape(), std::move(it->second.data));
    stored.erase(it);
  };
  ckpt.params = shape_model.params;
  ckpt.adam.m = shape_model.params;
  ckpt.adam.v = shape_model.params;
  ckpt.params.for_each([&](std::string_view name, Tensor& t) { fill(std::string(name), t); });
  ckpt.adam.m.for_each([&](std::string_view name, Tensor& t) {
    fill("adam.m." + std::string(name), t);
  });
  ckpt.adam.v.for_each([&](std::string_view name, Tensor& t) {
    fill("adam.v." + std::string(name), t);
  });
  if (!stored.empty()) {
    throw FormatError(stored.begin()->second.offset,
                      "unexpected tensor '" + stored.begin()->first + "'");
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::string bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_checkpoint(buf.str());
}

}  // namespace duip
