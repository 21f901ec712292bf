#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "laconv/checkpoint.hpp"
#include "laconv/datasets.hpp"
#include "laconv/errors.hpp"
#include "laconv/gconv.hpp"
#include "laconv/optim.hpp"
#include "laconv/pendulum.hpp"
#include "laconv/rng.hpp"

namespace laconv {

enum class Optimizer { adam, sgd };
enum class ValidationMode { holdout_90_10, train_val_test_80_10_10 };

/// Where the training data comes from. "pendulum" simulates from parameters,
/// "synthetic" generates rotated patterns, "lads"/"idx" load files.
struct DataSpec {
  std::string kind = "pendulum";
  PendulumParams pendulum;
  // synthetic
  int classes = 4;
  int per_class_train = 128;
  int per_class_test = 32;
  int size = 16;
  AngleLaw angle_law = AngleLaw::uniform;
  std::uint64_t data_seed = 0;
  // lads
  std::string train_path, test_path;
  // idx
  std::string images_path, labels_path;
  double idx_split = 0.9;
};

struct TrainConfig {
  TaskKind task = TaskKind::pendulum;
  GroupId group = GroupId::SO2;
  double lr = 1e-3;
  Optimizer optimizer = Optimizer::adam;
  int kernel_hidden = 32;
  int n_hidden_layers = 1;
  int hidden_channels = 16;
  int batch_size = 16;
  int epochs = 100;
  int n_algebra_samples = 10;
  std::vector<Interval> algebra_bounds;  // empty => group defaults
  bool strict_mode = false;
  bool exact_c4 = false;
  bool pretrain_mapping = false;
  int kernel_size = 3;  // lifting layer's spatial kernel (grid axis)
  PoolMode pool = PoolMode::mean;
  Activation mapping_activation = Activation::sigmoid;
  int n_classes = 4;
  int image_size = 16;
  ValidationMode validation = ValidationMode::holdout_90_10;
  std::uint64_t seed = 0;
  DataSpec data;

  void validate() const {
    if (!(lr > 0)) throw ConfigError("config: lr must be positive");
    if (epochs < 1) throw ConfigError("config: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
    if (n_hidden_layers < 1) throw ConfigError("config: n_hidden_layers must be >= 1");
    if (hidden_channels < 1) throw ConfigError("config: hidden_channels must be >= 1");
    if (n_algebra_samples < 1) throw ConfigError("config: n_algebra_samples must be >= 1");
  }

  ArchitectureConfig to_arch() const {
    ArchitectureConfig a;
    a.task = task;
    a.group = group;
    a.n_hidden_layers = n_hidden_layers;
    a.hidden_channels = hidden_channels;
    a.kernel_hidden = kernel_hidden;
    a.spatial_kernel = kernel_size;
    a.n_algebra_samples = n_algebra_samples;
    a.algebra_bounds = algebra_bounds;
    a.strict_mode = strict_mode;
    a.exact_c4 = exact_c4;
    a.pool = pool;
    a.mapping_activation = mapping_activation;
    a.n_classes = n_classes;
    a.image_size = image_size;
    a.init_seed = seed;
    return a;
  }
};

/// Per-run outcome: losses, validation metric per epoch, final test metric.
struct RunRecord {
  TrainConfig config;
  std::vector<std::pair<double, double>> per_epoch;  // (train_loss, val_metric)
  double final_metric = 0.0;  // test RMSE (pendulum) or accuracy (classify)
  double wall_time = 0.0;     // seconds; reported, never serialized
  std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Config JSON (strict unknown-key rejection)
// ---------------------------------------------------------------------------

inline nlohmann::json data_spec_to_json(const DataSpec& d) {
  nlohmann::json j{{"kind", d.kind}};
  if (d.kind == "pendulum") {
    j["m"] = d.pendulum.m;
    j["L"] = d.pendulum.L;
    j["g"] = d.pendulum.g;
    j["lambda"] = d.pendulum.lambda;
    j["theta0"] = d.pendulum.theta0;
    j["omega0"] = d.pendulum.omega0;
    j["dt"] = d.pendulum.dt;
    j["n_steps"] = d.pendulum.n_steps;
  } else if (d.kind == "synthetic") {
    j["classes"] = d.classes;
    j["per_class_train"] = d.per_class_train;
    j["per_class_test"] = d.per_class_test;
    j["size"] = d.size;
    j["angle_law"] = d.angle_law == AngleLaw::c4 ? "c4" : "uniform";
    j["data_seed"] = d.data_seed;
  } else if (d.kind == "lads") {
    j["train_path"] = d.train_path;
    j["test_path"] = d.test_path;
  } else if (d.kind == "idx") {
    j["images_path"] = d.images_path;
    j["labels_path"] = d.labels_path;
    j["idx_split"] = d.idx_split;
  }
  return j;
}

inline DataSpec data_spec_from_json(const nlohmann::json& j) {
  static const char* known[] = {"kind",          "m",           "L",         "g",
                                "lambda",        "theta0",      "omega0",    "dt",
                                "n_steps",       "classes",     "per_class_train",
                                "per_class_test", "size",       "angle_law", "data_seed",
                                "train_path",    "test_path",   "images_path",
                                "labels_path",   "idx_split"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError("unknown data key: " + it.key());
  }
  DataSpec d;
  d.kind = j.at("kind").get<std::string>();
  if (d.kind == "pendulum") {
    d.pendulum.m = j.value("m", 1.0);
    d.pendulum.L = j.value("L", 1.0);
    d.pendulum.g = j.value("g", 9.8);
    d.pendulum.lambda = j.value("lambda", 0.2);
    d.pendulum.theta0 = j.value("theta0", std::acos(-1.0) / 3);
    d.pendulum.omega0 = j.value("omega0", 0.0);
    d.pendulum.dt = j.value("dt", 0.01);
    d.pendulum.n_steps = j.value("n_steps", 6000);
  } else if (d.kind == "synthetic") {
    d.classes = j.value("classes", 4);
    d.per_class_train = j.value("per_class_train", 128);
    d.per_class_test = j.value("per_class_test", 32);
    d.size = j.value("size", 16);
    d.angle_law = j.value("angle_law", std::string("uniform")) == "c4" ? AngleLaw::c4
                                                                       : AngleLaw::uniform;
    d.data_seed = j.value("data_seed", std::uint64_t{0});
  } else if (d.kind == "lads") {
    d.train_path = j.at("train_path").get<std::string>();
    d.test_path = j.at("test_path").get<std::string>();
  } else if (d.kind == "idx") {
    d.images_path = j.at("images_path").get<std::string>();
    d.labels_path = j.at("labels_path").get<std::string>();
    d.idx_split = j.value("idx_split", 0.9);
  } else {
    throw ConfigError("unknown data kind: " + d.kind);
  }
  return d;
}

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
  nlohmann::json bounds = nlohmann::json::array();
  for (const auto& b : c.algebra_bounds) bounds.push_back({b.lo, b.hi});
  return {{"config_version", 1},
          {"task", task_name(c.task)},
          {"group", group_name(c.group)},
          {"lr", c.lr},
          {"optimizer", c.optimizer == Optimizer::adam ? "adam" : "sgd"},
          {"kernel_hidden", c.kernel_hidden},
          {"n_hidden_layers", c.n_hidden_layers},
          {"hidden_channels", c.hidden_channels},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"n_algebra_samples", c.n_algebra_samples},
          {"algebra_bounds", bounds},
          {"strict_mode", c.strict_mode},
          {"exact_c4", c.exact_c4},
          {"pretrain_mapping", c.pretrain_mapping},
          {"kernel_size", c.kernel_size},
          {"pool", c.pool == PoolMode::mean ? "mean" : "max"},
          {"mapping_activation", c.mapping_activation == Activation::relu ? "relu" : "sigmoid"},
          {"n_classes", c.n_classes},
          {"image_size", c.image_size},
          {"validation", c.validation == ValidationMode::holdout_90_10 ? "90/10" : "80/10/10"},
          {"seed", c.seed},
          {"data", data_spec_to_json(c.data)}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  static const char* known[] = {"config_version", "task", "group", "lr", "optimizer",
                                "kernel_hidden", "n_hidden_layers", "hidden_channels",
                                "batch_size", "epochs", "n_algebra_samples", "algebra_bounds",
                                "strict_mode", "exact_c4", "pretrain_mapping", "kernel_size",
                                "pool", "mapping_activation", "n_classes", "image_size",
                                "validation", "seed", "data"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError("unknown config key: " + it.key());
  }
  TrainConfig c;
  c.task = task_from_name(j.at("task").get<std::string>());
  c.group = group_from_name(j.value("group", std::string("SO2")));
  c.lr = j.value("lr", 1e-3);
  const std::string opt = j.value("optimizer", std::string("adam"));
  if (opt != "adam" && opt != "sgd") throw ConfigError("unknown optimizer: " + opt);
  c.optimizer = opt == "adam" ? Optimizer::adam : Optimizer::sgd;
  c.kernel_hidden = j.value("kernel_hidden", 32);
  c.n_hidden_layers = j.value("n_hidden_layers", 1);
  c.hidden_channels = j.value("hidden_channels", 16);
  c.batch_size = j.value("batch_size", 16);
  c.epochs = j.value("epochs", 100);
  c.n_algebra_samples = j.value("n_algebra_samples", 10);
  if (j.contains("algebra_bounds"))
    for (const auto& b : j.at("algebra_bounds"))
      c.algebra_bounds.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
  c.strict_mode = j.value("strict_mode", false);
  c.exact_c4 = j.value("exact_c4", false);
  c.pretrain_mapping = j.value("pretrain_mapping", false);
  c.kernel_size = j.value("kernel_size", 3);
  c.pool = j.value("pool", std::string("mean")) == "max" ? PoolMode::max : PoolMode::mean;
  c.mapping_activation = j.value("mapping_activation", std::string("sigmoid")) == "relu"
                             ? Activation::relu
                             : Activation::sigmoid;
  c.n_classes = j.value("n_classes", 4);
  c.image_size = j.value("image_size", 16);
  const std::string vm = j.value("validation", std::string("90/10"));
  if (vm != "90/10" && vm != "80/10/10") throw ConfigError("unknown validation mode: " + vm);
  c.validation = vm == "90/10" ? ValidationMode::holdout_90_10
                               : ValidationMode::train_val_test_80_10_10;
  c.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("data")) c.data = data_spec_from_json(j.at("data"));
  c.validate();
  return c;
}

/// Run report without the volatile wall time, so identical seeded runs
/// serialize byte-identically.
inline nlohmann::json run_record_to_json(const RunRecord& r) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& [l, v] : r.per_epoch) per.push_back({l, v});
  return {{"report_version", 1},
          {"kind", "run"},
          {"config", train_config_to_json(r.config)},
          {"seed", r.seed},
          {"per_epoch", per},
          {"final_metric", r.final_metric}};
}

// ---------------------------------------------------------------------------
// Training loops
// ---------------------------------------------------------------------------

struct TrainOutcome {
  RunRecord record;
  Model model;
};

namespace detail {

inline double rmse_times(const Model& m, const std::vector<TimePoint>& pts) {
  if (pts.empty()) return 0.0;
  double s = 0.0;
  for (const auto& [t, xy] : pts) {
    const Vec2 p = m.predict_xy(t);
    s += (p.x - xy.x) * (p.x - xy.x) + (p.y - xy.y) * (p.y - xy.y);
  }
  return std::sqrt(s / (2.0 * pts.size()));
}

inline double accuracy(const Model& m, const LabeledImageSet& set) {
  if (set.images.empty()) return 0.0;
  int hits = 0;
  for (std::size_t i = 0; i < set.images.size(); ++i) {
    const auto logits = m.predict_logits(set.images[i]);
    const int pred = static_cast<int>(std::max_element(logits.begin(), logits.end()) -
                                      logits.begin());
    hits += pred == set.labels[i];
  }
  return static_cast<double>(hits) / set.images.size();
}

inline double epoch_lr(const TrainConfig& cfg, int epoch) {
  // linear decay to zero for classification, constant for the pendulum
  if (cfg.task == TaskKind::classify)
    return cfg.lr * (1.0 - static_cast<double>(epoch) / cfg.epochs);
  return cfg.lr;
}

inline void optimizer_step(const TrainConfig& cfg, const std::vector<NodePtr>& params,
                           AdamState& state, double lr) {
  if (cfg.optimizer == Optimizer::adam)
    adam_step(params, state, lr);
  else
    sgd_step(params, lr);
}

}  // namespace detail

/// Pendulum regression: minibatch MSE in chronological order (the series is
/// never shuffled), constant learning rate, per-epoch validation RMSE.
inline TrainOutcome train_pendulum(const TrainConfig& cfg,
                                   const std::vector<TimePoint>& train_pts,
                                   const std::vector<TimePoint>& val_pts,
                                   const std::vector<TimePoint>& test_pts) {
  cfg.validate();
  if (train_pts.empty()) throw InvalidArgumentError("train: empty dataset");
  const auto t0 = std::chrono::steady_clock::now();

  Model model = build_model(cfg.to_arch());
  if (cfg.pretrain_mapping && !cfg.strict_mode)
    for (auto& layer : model.layers) pretrain_mapping_to_exp(layer);
  auto params = model.parameters();
  AdamState state = AdamState::init(params);

  RunRecord rec;
  rec.config = cfg;
  rec.seed = cfg.seed;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = detail::epoch_lr(cfg, epoch);
    double loss_sum = 0.0;
    int n_batches = 0;
    for (std::size_t k = 0; k < train_pts.size(); k += cfg.batch_size) {
      const std::size_t hi = std::min(train_pts.size(), k + cfg.batch_size);
      std::vector<double> ts;
      Tensor target({static_cast<int>(hi - k), 2});
      for (std::size_t i = k; i < hi; ++i) {
        ts.push_back(train_pts[i].first);
        target.at(static_cast<int>(i - k), 0) = train_pts[i].second.x;
        target.at(static_cast<int>(i - k), 1) = train_pts[i].second.y;
      }
      NodePtr loss;
      try {
        loss = mse_loss(model.forward_times(ts), constant(std::move(target)));
      } catch (const NumericalError&) {
        throw DivergenceError("train: non-finite loss", epoch);
      }
      if (!std::isfinite(loss->value.data[0]))
        throw DivergenceError("train: non-finite loss", epoch);
      zero_grad(params);
      backward(loss);
      detail::optimizer_step(cfg, params, state, lr);
      loss_sum += loss->value.data[0];
      ++n_batches;
    }
    rec.per_epoch.emplace_back(loss_sum / std::max(1, n_batches),
                               detail::rmse_times(model, val_pts));
  }
  rec.final_metric = detail::rmse_times(model, test_pts);
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {rec, std::move(model)};
}

/// Classification: seeded minibatch order, softmax cross-entropy, linear
/// learning-rate decay, per-epoch validation accuracy.
inline TrainOutcome train_classify(const TrainConfig& cfg, const LabeledImageSet& train_set,
                                   const LabeledImageSet& val_set,
                                   const LabeledImageSet& test_set) {
  cfg.validate();
  train_set.validate();
  if (train_set.images.empty()) throw InvalidArgumentError("train: empty dataset");
  const auto t0 = std::chrono::steady_clock::now();

  Model model = build_model(cfg.to_arch());
  if (cfg.pretrain_mapping && !cfg.strict_mode)
    for (auto& layer : model.layers) pretrain_mapping_to_exp(layer);
  auto params = model.parameters();
  AdamState state = AdamState::init(params);

  std::vector<std::size_t> order(train_set.images.size());
  std::iota(order.begin(), order.end(), 0);

  RunRecord rec;
  rec.config = cfg;
  rec.seed = cfg.seed;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = detail::epoch_lr(cfg, epoch);
    Rng shuffle_rng(derive_seed(cfg.seed, 0xB47C4 + static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    int n_batches = 0;
    for (std::size_t k = 0; k < order.size(); k += cfg.batch_size) {
      const std::size_t hi = std::min(order.size(), k + cfg.batch_size);
      std::vector<Image> batch;
      std::vector<int> labels;
      for (std::size_t i = k; i < hi; ++i) {
        batch.push_back(train_set.images[order[i]]);
        labels.push_back(train_set.labels[order[i]]);
      }
      NodePtr loss;
      try {
        loss = softmax_cross_entropy(model.forward_images(batch), labels);
      } catch (const NumericalError&) {
        throw DivergenceError("train: non-finite loss", epoch);
      }
      if (!std::isfinite(loss->value.data[0]))
        throw DivergenceError("train: non-finite loss", epoch);
      zero_grad(params);
      backward(loss);
      detail::optimizer_step(cfg, params, state, lr);
      loss_sum += loss->value.data[0];
      ++n_batches;
    }
    rec.per_epoch.emplace_back(loss_sum / std::max(1, n_batches),
                               detail::accuracy(model, val_set));
  }
  rec.final_metric = detail::accuracy(model, test_set);
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {rec, std::move(model)};
}

/// Resolves the data spec and dispatches to the task loop.
inline TrainOutcome train(const TrainConfig& cfg) {
  if (cfg.task == TaskKind::pendulum) {
    if (cfg.data.kind != "pendulum")
      throw ConfigError("train: pendulum task requires pendulum data");
    const Trajectory traj = simulate_pendulum(cfg.data.pendulum);
    if (cfg.validation == ValidationMode::holdout_90_10) {
      const auto split = pendulum_dataset(traj, 0.9);
      return train_pendulum(cfg, split.train, split.test, split.test);
    }
    // 80/10/10 chronological
    const std::size_t n = traj.size();
    const std::size_t n_tr = static_cast<std::size_t>(0.8 * n);
    const std::size_t n_val = static_cast<std::size_t>(0.1 * n);
    std::vector<TimePoint> tr, va, te;
    for (std::size_t i = 0; i < n; ++i) {
      TimePoint p{traj.t[i], traj.xy[i]};
      if (i < n_tr) tr.push_back(p);
      else if (i < n_tr + n_val) va.push_back(p);
      else te.push_back(p);
    }
    return train_pendulum(cfg, tr, va, te);
  }

  // classify
  LabeledImageSet train_set, test_set;
  if (cfg.data.kind == "synthetic") {
    train_set = synthetic_rotated_patterns(cfg.data.per_class_train, cfg.data.classes,
                                           cfg.data.size, cfg.data.angle_law,
                                           derive_seed(cfg.data.data_seed, 0x7124));
    test_set = synthetic_rotated_patterns(cfg.data.per_class_test, cfg.data.classes,
                                          cfg.data.size, cfg.data.angle_law,
                                          derive_seed(cfg.data.data_seed, 0x7E57));
  } else if (cfg.data.kind == "lads") {
    train_set = load_image_set(cfg.data.train_path);
    test_set = load_image_set(cfg.data.test_path);
  } else if (cfg.data.kind == "idx") {
    LabeledImageSet all = load_idx_images(cfg.data.images_path, cfg.data.labels_path);
    const std::size_t n_tr = static_cast<std::size_t>(cfg.data.idx_split * all.size());
    train_set.n_classes = test_set.n_classes = all.n_classes;
    train_set.meta = test_set.meta = all.meta;
    for (std::size_t i = 0; i < all.size(); ++i) {
      auto& dst = i < n_tr ? train_set : test_set;
      dst.images.push_back(all.images[i]);
      dst.labels.push_back(all.labels[i]);
    }
  } else {
    throw ConfigError("train: classify task requires synthetic, lads, or idx data");
  }
  return train_classify(cfg, train_set, test_set, test_set);
}

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

struct GridSpec {
  TrainConfig base;
  std::vector<double> lrs;
  std::vector<std::string> optimizers;
  std::vector<int> kernel_sizes;
  std::vector<int> hidden_channels;
  std::vector<int> n_hidden_layers;
  std::vector<int> batch_sizes;
};

inline GridSpec grid_spec_from_json(const nlohmann::json& j) {
  static const char* known[] = {"base", "lr", "optimizer", "kernel_size", "hidden_channels",
                                "n_hidden_layers", "batch_size"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError("unknown grid key: " + it.key());
  }
  GridSpec g;
  g.base = train_config_from_json(j.at("base"));
  if (j.contains("lr")) g.lrs = j.at("lr").get<std::vector<double>>();
  if (j.contains("optimizer")) g.optimizers = j.at("optimizer").get<std::vector<std::string>>();
  if (j.contains("kernel_size")) g.kernel_sizes = j.at("kernel_size").get<std::vector<int>>();
  if (j.contains("hidden_channels"))
    g.hidden_channels = j.at("hidden_channels").get<std::vector<int>>();
  if (j.contains("n_hidden_layers"))
    g.n_hidden_layers = j.at("n_hidden_layers").get<std::vector<int>>();
  if (j.contains("batch_size")) g.batch_sizes = j.at("batch_size").get<std::vector<int>>();
  return g;
}

/// Cartesian product of the grid axes over the base config. Empty axes keep
/// the base value.
inline std::vector<TrainConfig> enumerate_grid(const GridSpec& g) {
  auto lrs = g.lrs.empty() ? std::vector<double>{g.base.lr} : g.lrs;
  auto opts = g.optimizers.empty()
                  ? std::vector<std::string>{g.base.optimizer == Optimizer::adam ? "adam" : "sgd"}
                  : g.optimizers;
  auto ks = g.kernel_sizes.empty() ? std::vector<int>{g.base.kernel_size} : g.kernel_sizes;
  auto hc = g.hidden_channels.empty() ? std::vector<int>{g.base.hidden_channels}
                                      : g.hidden_channels;
  auto nl = g.n_hidden_layers.empty() ? std::vector<int>{g.base.n_hidden_layers}
                                      : g.n_hidden_layers;
  auto bs = g.batch_sizes.empty() ? std::vector<int>{g.base.batch_size} : g.batch_sizes;

  std::vector<TrainConfig> out;
  for (double lr : lrs)
    for (const auto& opt : opts)
      for (int k : ks)
        for (int c : hc)
          for (int l : nl)
            for (int b : bs) {
              TrainConfig cfg = g.base;
              cfg.lr = lr;
              if (opt != "adam" && opt != "sgd") throw ConfigError("unknown optimizer: " + opt);
              cfg.optimizer = opt == "adam" ? Optimizer::adam : Optimizer::sgd;
              cfg.kernel_size = k;
              cfg.hidden_channels = c;
              cfg.n_hidden_layers = l;
              cfg.batch_size = b;
              out.push_back(cfg);
            }
  return out;
}

/// Stable identity of a config (seed excluded): FNV-1a of the canonical JSON.
inline std::string config_hash(const TrainConfig& cfg) {
  nlohmann::json j = train_config_to_json(cfg);
  j.erase("seed");
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct GridEntry {
  TrainConfig config;
  std::string hash;
  double mean = 0.0;
  double stdev = 0.0;
  int n_ok = 0;
  bool failed = false;  // every seeded run diverged
};

namespace detail {

struct LedgerRow {
  std::string hash;
  std::uint64_t seed = 0;
  bool ok = false;
  double metric = 0.0;
};

inline std::vector<LedgerRow> read_ledger(const std::string& path) {
  std::vector<LedgerRow> rows;
  std::ifstream is(path);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    rows.push_back({j.at("config_hash").get<std::string>(), j.at("seed").get<std::uint64_t>(),
                    j.at("status").get<std::string>() == "ok",
                    j.value("final_metric", 0.0)});
  }
  return rows;
}

inline int worker_count() {
  const char* env = std::getenv("LACONV_THREADS");
  if (!env) return 1;
  const int n = std::atoi(env);
  return n < 1 ? 1 : n;
}

}  // namespace detail

/// Trains every grid point with n_seeds seeds (base seed, base seed + 1, ...),
/// aggregating the per-config mean/std of the final metric. Completed runs are
/// recorded in <out_dir>/ledger.jsonl and skipped on restart, so an
/// interrupted search resumes to the identical ranking. Ranking is ascending
/// RMSE for the pendulum, descending accuracy for classification. Individual
/// run divergence marks the run failed without aborting the search.
/// max_new_runs limits how many new runs are executed (-1 = no limit).
inline std::vector<GridEntry> grid_search(const GridSpec& spec, int n_seeds,
                                          const std::string& out_dir, int max_new_runs = -1) {
  if (n_seeds < 1) throw ConfigError("grid_search: need >= 1 seed");
  const auto configs = enumerate_grid(spec);
  if (configs.empty()) throw ConfigError("grid_search: empty grid");
  std::filesystem::create_directories(out_dir);
  const std::string ledger_path = out_dir + "/ledger.jsonl";

  auto done = detail::read_ledger(ledger_path);
  auto is_done = [&done](const std::string& h, std::uint64_t s) {
    for (const auto& r : done)
      if (r.hash == h && r.seed == s) return true;
    return false;
  };

  struct Job {
    TrainConfig cfg;
    std::string hash;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& cfg : configs) {
    const std::string h = config_hash(cfg);
    for (int s = 0; s < n_seeds; ++s) {
      const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(s);
      if (!is_done(h, seed)) jobs.push_back({cfg, h, seed});
    }
  }
  if (max_new_runs >= 0 && static_cast<int>(jobs.size()) > max_new_runs)
    jobs.resize(max_new_runs);

  std::mutex ledger_mutex;
  std::ofstream ledger(ledger_path, std::ios::app);
  std::size_t next = 0;
  std::mutex queue_mutex;
  auto worker = [&]() {
    for (;;) {
      Job job;
      {
        std::lock_guard<std::mutex> lk(queue_mutex);
        if (next >= jobs.size()) return;
        job = jobs[next++];
      }
      TrainConfig cfg = job.cfg;
      cfg.seed = job.seed;
      nlohmann::json row{{"config_hash", job.hash}, {"seed", job.seed}};
      try {
        const auto outcome = train(cfg);
        row["status"] = "ok";
        row["final_metric"] = outcome.record.final_metric;
        row["wall_time_seconds"] = outcome.record.wall_time;
      } catch (const DivergenceError& e) {
        row["status"] = "failed";
        row["error"] = e.what();
      }
      std::lock_guard<std::mutex> lk(ledger_mutex);
      ledger << row.dump() << '\n';
      ledger.flush();
    }
  };
  const int n_workers = std::min<int>(detail::worker_count(), static_cast<int>(jobs.size()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  ledger.close();

  // aggregate from the full ledger
  done = detail::read_ledger(ledger_path);
  std::vector<GridEntry> entries;
  for (const auto& cfg : configs) {
    GridEntry e;
    e.config = cfg;
    e.hash = config_hash(cfg);
    std::vector<double> metrics;
    for (int s = 0; s < n_seeds; ++s) {
      const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(s);
      for (const auto& r : done)
        if (r.hash == e.hash && r.seed == seed && r.ok) metrics.push_back(r.metric);
    }
    e.n_ok = static_cast<int>(metrics.size());
    if (metrics.empty()) {
      e.failed = true;
    } else {
      double mean = 0.0;
      for (double m : metrics) mean += m;
      mean /= metrics.size();
      double var = 0.0;
      for (double m : metrics) var += (m - mean) * (m - mean);
      e.mean = mean;
      e.stdev = std::sqrt(var / metrics.size());
    }
    entries.push_back(std::move(e));
  }
  const bool ascending = spec.base.task == TaskKind::pendulum;
  std::sort(entries.begin(), entries.end(), [ascending](const GridEntry& a, const GridEntry& b) {
    if (a.failed != b.failed) return !a.failed;
    if (a.mean != b.mean) return ascending ? a.mean < b.mean : a.mean > b.mean;
    return a.hash < b.hash;
  });
  return entries;
}

inline nlohmann::json ranking_to_json(const std::vector<GridEntry>& entries) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : entries)
    arr.push_back({{"config", train_config_to_json(e.config)},
                   {"config_hash", e.hash},
                   {"mean", e.mean},
                   {"std", e.stdev},
                   {"n_ok", e.n_ok},
                   {"failed", e.failed}});
  return {{"report_version", 1}, {"kind", "grid_ranking"}, {"ranking", arr}};
}

}  // namespace laconv
