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


#include "cli.h"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string_view>
#include <thread>

#include "CLI11.hpp"
#include "duip/data.h"
#include "duip/errors.h"
#include "duip/eval.h"
#include "duip/model.h"
#include "duip/scorer.h"
#include "duip/trainer.h"

namespace duip::cli {
namespace {

namespace fs = std::filesystem;

// Bad invocation: exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct RunConfig {
  std::string data;
  std::string format = "tsv";
  std::string sessions = "daily";
  std::string categories;
  std::size_t max_malformed = 0;
  double train_fraction = 0.8;
  double valid_fraction = 0.1;
  double test_fraction = 0.1;
  TrainConfig train;
  std::string transform = "affine";
  std::string out = ".";
  std::vector<std::string> models;
  std::string checkpoint;
  std::vector<std::size_t> ks = kDefaultCutoffs;
  std::size_t sknn_k = 50;
  std::string items;
  std::size_t k = 10;
  std::string config;
};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string_view::npos ? text.size() : comma;
    std::string piece = trim(text.substr(start, end - start));
    if (!piece.empty()) out.push_back(std::move(piece));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void require_file(const std::string& path, const char* what) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw UsageError(std::string(what) + " not found: " + path);
  }
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f << text;
  if (!f) throw IoError("write failed: " + path.string());
}

fs::path output_dir(const RunConfig& cfg) {
  const fs::path dir(cfg.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw IoError("cannot create output directory: " + cfg.out);
  return dir;
}

std::size_t evaluation_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  std::size_t threads = hw == 0 ? 1 : hw;
  if (const char* env = std::getenv("DUIP_THREADS"); env != nullptr && *env != '\0') {
    std::size_t cap = 0;
    const std::string_view text(env);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), cap);
    if (ec != std::errc() || ptr != text.data() + text.size() || cap == 0) {
      throw ConfigError("DUIP_THREADS must be a positive integer, got '" + std::string(text) + "'");
    }
    threads = std::min(threads, cap);
  }
  return threads;
}

// Options shared by every command that reads an interaction log.
void add_data_options(CLI::App* app, RunConfig& cfg) {
  app->add_option("--data", cfg.data, "Interaction log");
  app->add_option("--format", cfg.format, "tsv or movielens-dat");
  app->add_option("--sessions", cfg.sessions, "daily or pre-sessionized");
  app->add_option("--categories", cfg.categories, "Item to category table");
  app->add_option("--max-malformed", cfg.max_malformed, "Malformed lines to skip");
  app->add_option("--train-fraction", cfg.train_fraction);
  app->add_option("--valid-fraction", cfg.valid_fraction);
  app->add_option("--test-fraction", cfg.test_fraction);
}

void add_train_options(CLI::App* app, RunConfig& cfg) {
  TrainConfig& t = cfg.train;
  ModelConfig& m = t.model;
  app->add_option("--seed", t.seed);
  app->add_option("--epochs", t.epochs);
  app->add_option("--batch-size", t.batch_size);
  app->add_option("--lr", t.learning_rate);
  app->add_option("--beta1", t.beta1);
  app->add_option("--beta2", t.beta2);
  app->add_option("--adam-epsilon", t.adam_epsilon);
  app->add_option("--clip", t.grad_clip_norm);
  app->add_option("--patience", t.early_stop_patience);
  app->add_option("--d-in", m.d_in);
  app->add_option("--d-h", m.d_h);
  app->add_option("--d-cat", m.d_cat);
  app->add_option("--d-lm", m.d_lm);
  app->add_option("--d-ff", m.d_ff);
  app->add_option("--layers", m.layers);
  app->add_option("--heads", m.heads);
  app->add_option("--soft-len", m.soft_len);
  app->add_option("--max-hard-len", m.max_hard_len);
  app->add_option("--max-len", m.max_len);
  app->add_option("--transform", cfg.transform, "affine or mlp1");
  app->add_option("--mlp-hidden", m.mlp_hidden);
}

void add_common_options(CLI::App* app, RunConfig& cfg) {
  app->add_option("--config", cfg.config, "key = value file; flags take precedence");
  app->add_option("--out", cfg.out, "Output directory");
}

// Applies `key = value` lines to options not given on the command line.
// Keys known to another command are ignored.
void apply_config_file(CLI::App& root, CLI::App* command, const std::string& path) {
  require_file(path, "config file");
  std::ifstream f(path);
  if (!f) throw IoError("cannot read config file: " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    const std::string where = path + ":" + std::to_string(line_no);
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    std::replace(key.begin(), key.end(), '_', '-');
    if (key.empty() || value.empty()) throw ConfigError(where + ": expected key = value");
    if (key == "config") throw ConfigError(where + ": config files do not nest");

    CLI::Option* opt = command->get_option_no_throw("--" + key);
    if (opt == nullptr) {
      bool known = false;
      for (const CLI::App* sub : root.get_subcommands({})) {
        known = known || sub->get_option_no_throw("--" + key) != nullptr;
      }
      if (!known) throw ConfigError(where + ": unknown key '" + key + "'");
      continue;
    }
    if (opt->count() > 0) continue;
    try {
      opt->add_result(value);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
}

void finalize(RunConfig& cfg) {
  cfg.train.model.transform = parse_transform_mode(cfg.transform);
  const double sum = cfg.train_fraction + cfg.valid_fraction + cfg.test_fraction;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("split fractions sum to " + format_double(sum) + ", not 1");
  }
  if (!cfg.data.empty()) require_file(cfg.data, "data file");
  if (!cfg.categories.empty()) require_file(cfg.categories, "category file");
  if (!cfg.checkpoint.empty()) require_file(cfg.checkpoint, "checkpoint");
}

std::vector<RawSession> load_sessions(const RunConfig& cfg, std::ostream& err) {
  if (cfg.data.empty()) throw UsageError("--data is required");
  const InteractionLog log = load_interactions(cfg.data, parse_input_format(cfg.format),
                                               cfg.max_malformed);
  if (log.malformed_lines > 0) {
    err << "warning: skipped " << log.malformed_lines << " malformed line(s) in "
        << cfg.data << "\n";
  }
  return sessionize(log.events, parse_session_policy(cfg.sessions));
}

SplitDataset load_split(const RunConfig& cfg, std::ostream& err) {
  const auto sessions = load_sessions(cfg, err);
  CategoryTable table;
  if (!cfg.categories.empty()) table = load_category_table(cfg.categories);
  const SplitFractions fractions{cfg.train_fraction, cfg.valid_fraction, cfg.test_fraction};
  return chronological_split(sessions, fractions,
                             cfg.categories.empty() ? nullptr : &table);
}

// Test hook: ranks the observed next item of each test prefix first.
class OracleRecommender : public Recommender {
 public:
  OracleRecommender(std::span<const Example> examples, std::size_t n_items)
      : n_items_(n_items) {
    for (const auto& ex : examples) answers_.emplace(ex.prefix, ex.target);
  }

  std::vector<std::size_t> rank(std::span<const std::size_t> prefix,
                                std::size_t k) const override {
    std::vector<std::size_t> out;
    const auto it = answers_.find(std::vector<std::size_t>(prefix.begin(), prefix.end()));
    if (it != answers_.end() && it->second < n_items_) out.push_back(it->second);
    for (std::size_t i = 0; i < n_items_ && out.size() < k; ++i) {
      if (out.empty() || i != out.front()) out.push_back(i);
    }
    if (out.size() > k) out.resize(k);
    return out;
  }

 private:
  std::size_t n_items_;
  std::map<std::vector<std::size_t>, std::size_t> answers_;
};

int cmd_stats(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto sessions = load_sessions(cfg, err);
  out << dataset_stats(sessions).to_json() << "\n";
  return kExitOk;
}

int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  cfg.train.validate();
  const SplitDataset split = load_split(cfg, err);
  const fs::path dir = output_dir(cfg);
  const TrainResult result = train(cfg.train, split, [&](const EpochLog& e) {
    out << "epoch " << e.epoch << " train_loss " << format_double(e.train_loss)
        << " valid_loss " << format_double(e.valid_loss) << "\n";
  });
  std::string csv = "epoch,train_loss,valid_loss\n";
  for (const auto& e : result.log) {
    csv += std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," +
           format_double(e.valid_loss) + "\n";
  }
  save_checkpoint(result.checkpoint, dir / kCheckpointFile);
  write_file(dir / kTrainLogFile, csv);
  out << "checkpoint " << (dir / kCheckpointFile).string() << " (epoch "
      << result.checkpoint.epoch << ")\n";
  return kExitOk;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  std::vector<std::string> models = cfg.models;
  if (models.empty()) {
    models = cfg.checkpoint.empty() ? std::vector<std::string>{"mostpop", "sknn"}
                                    : std::vector<std::string>{"duip", "mostpop", "sknn"};
  }
  if (cfg.ks.empty()) throw UsageError("--ks needs at least one cutoff");
  const SplitDataset split = load_split(cfg, err);
  const std::size_t n_items = split.vocab.n_items();
  for (std::size_t k : cfg.ks) {
    if (k == 0 || k > n_items) {
      throw ConfigError("cutoff " + std::to_string(k) + " outside [1, " +
                        std::to_string(n_items) + "]");
    }
  }

  std::unique_ptr<Checkpoint> ckpt;
  std::unique_ptr<DuipModel> model;
  std::vector<std::unique_ptr<Recommender>> owned;
  std::vector<NamedRecommender> named;
  const auto examples = make_examples(split.test);
  for (const auto& name : models) {
    if (name == "duip") {
      if (cfg.checkpoint.empty()) throw UsageError("model duip needs --checkpoint");
      ckpt = std::make_unique<Checkpoint>(load_checkpoint(cfg.checkpoint));
      if (!(ckpt->vocab == split.vocab)) {
        throw ConfigError("checkpoint vocabulary does not match the training split of " +
                          cfg.data);
      }
      model = std::make_unique<DuipModel>(ckpt->model());
      owned.push_back(std::make_unique<DuipRecommender>(*model));
    } else if (name == "mostpop") {
      owned.push_back(mostpop_baseline(split.train, n_items));
    } else if (name == "sknn") {
      owned.push_back(sknn_baseline(split.train, n_items, cfg.sknn_k));
    } else if (name == "oracle") {
      owned.push_back(std::make_unique<OracleRecommender>(examples, n_items));
    } else {
      throw ConfigError("unknown model '" + name + "'; expected duip, mostpop, sknn or oracle");
    }
    named.push_back({name, owned.back().get()});
  }

  const std::size_t threads = evaluation_threads();
  std::vector<MetricsReport> reports;
  for (const auto& m : named) {
    reports.push_back(evaluate_examples(*m.recommender, examples, cfg.ks, m.name, threads));
  }
  const fs::path dir = output_dir(cfg);
  write_file(dir / kMetricsFile, metrics_csv(reports));
  out << metrics_table(reports);
  return kExitOk;
}

int cmd_recommend(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.checkpoint.empty()) throw UsageError("--checkpoint is required");
  const auto ids = split_list(cfg.items);
  if (ids.empty()) throw UsageError("--items needs at least one item id");
  if (cfg.k == 0) throw UsageError("--k must be positive");
  const Checkpoint ckpt = load_checkpoint(cfg.checkpoint);
  const DuipModel model = ckpt.model();
  std::vector<std::size_t> prefix;
  for (const auto& id : ids) {
    const std::size_t token = model.vocab.index_or_unk(id);
    if (token == model.vocab.unk()) {
      err << "warning: unknown item '" << id << "' mapped to UNK\n";
    }
    prefix.push_back(token);
  }
  const ModelForward f = forward(model, prefix);
  const auto& probs = f.probs();
  const auto top = top_k_by_probability(probs, std::min(cfg.k, model.n_items()));
  char buf[40];
  for (std::size_t r = 0; r < top.size(); ++r) {
    std::snprintf(buf, sizeof(buf), "%.8f", probs[top[r]]);
    out << (r + 1) << "," << model.vocab.id_of(top[r]) << "," << buf << "\n";
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Dynamic user intent prediction for session recommendation", "duip"};
  app.require_subcommand(1);

  CLI::App* stats = app.add_subcommand("stats", "Print dataset statistics as JSON");
  add_common_options(stats, cfg);
  add_data_options(stats, cfg);

  CLI::App* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  add_common_options(train_cmd, cfg);
  add_data_options(train_cmd, cfg);
  add_train_options(train_cmd, cfg);

  CLI::App* evaluate_cmd =
      app.add_subcommand("evaluate", "Compare models on the test split");
  add_common_options(evaluate_cmd, cfg);
  add_data_options(evaluate_cmd, cfg);
  evaluate_cmd->add_option("--checkpoint", cfg.checkpoint);
  evaluate_cmd->add_option("--models", cfg.models, "duip, mostpop, sknn, oracle")
      ->delimiter(',');
  evaluate_cmd->add_option("--ks", cfg.ks, "Cutoffs")->delimiter(',');
  evaluate_cmd->add_option("--sknn-k", cfg.sknn_k, "SKNN neighbours");

  CLI::App* recommend_cmd =
      app.add_subcommand("recommend", "Rank next items for a session prefix");
  add_common_options(recommend_cmd, cfg);
  recommend_cmd->add_option("--checkpoint", cfg.checkpoint);
  recommend_cmd->add_option("--items", cfg.items, "Comma-separated item ids");
  recommend_cmd->add_option("--k", cfg.k, "Number of items");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "duip: error: " << e.what() << "\n";
    return kExitUsage;
  }

  CLI::App* command = app.get_subcommands().front();
  try {
    if (!cfg.config.empty()) apply_config_file(app, command, cfg.config);
    finalize(cfg);
    if (command == stats) return cmd_stats(cfg, out, err);
    if (command == train_cmd) return cmd_train(cfg, out, err);
    if (command == evaluate_cmd) return cmd_evaluate(cfg, out, err);
    return cmd_recommend(cfg, out, err);
  } catch (const UsageError& e) {
    err << "duip: error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "duip: error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "duip: error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("duip");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace duip::cli
