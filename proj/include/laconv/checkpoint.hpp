#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "laconv/errors.hpp"
#include "laconv/gconv.hpp"
#include "laconv/io.hpp"

namespace laconv {

inline std::string task_name(TaskKind t) {
  return t == TaskKind::pendulum ? "pendulum" : "classify";
}

inline TaskKind task_from_name(const std::string& s) {
  if (s == "pendulum") return TaskKind::pendulum;
  if (s == "classify") return TaskKind::classify;
  throw ConfigError("unknown task: " + s);
}

inline nlohmann::json arch_to_json(const ArchitectureConfig& a) {
  nlohmann::json bounds = nlohmann::json::array();
  for (const auto& b : a.algebra_bounds) bounds.push_back({b.lo, b.hi});
  return {
      {"format_version", 1},
      {"task", task_name(a.task)},
      {"group", group_name(a.group)},
      {"n_hidden_layers", a.n_hidden_layers},
      {"hidden_channels", a.hidden_channels},
      {"kernel_hidden", a.kernel_hidden},
      {"spatial_kernel", a.spatial_kernel},
      {"n_algebra_samples", a.n_algebra_samples},
      {"algebra_bounds", bounds},
      {"strict_mode", a.strict_mode},
      {"exact_c4", a.exact_c4},
      {"pool", a.pool == PoolMode::mean ? "mean" : "max"},
      {"mapping_activation", a.mapping_activation == Activation::relu ? "relu" : "sigmoid"},
      {"n_classes", a.n_classes},
      {"image_size", a.image_size},
      {"image_channels", a.image_channels},
      {"init_seed", a.init_seed},
  };
}

inline ArchitectureConfig arch_from_json(const nlohmann::json& j) {
  static const char* known[] = {"format_version", "task", "group", "n_hidden_layers",
                                "hidden_channels", "kernel_hidden", "spatial_kernel",
                                "n_algebra_samples", "algebra_bounds", "strict_mode",
                                "exact_c4", "pool", "mapping_activation", "n_classes",
                                "image_size", "image_channels", "init_seed"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError("unknown architecture key: " + it.key());
  }
  ArchitectureConfig a;
  a.task = task_from_name(j.at("task").get<std::string>());
  a.group = group_from_name(j.at("group").get<std::string>());
  a.n_hidden_layers = j.at("n_hidden_layers").get<int>();
  a.hidden_channels = j.at("hidden_channels").get<int>();
  a.kernel_hidden = j.value("kernel_hidden", 32);
  a.spatial_kernel = j.value("spatial_kernel", 3);
  a.n_algebra_samples = j.value("n_algebra_samples", 10);
  a.algebra_bounds.clear();
  if (j.contains("algebra_bounds"))
    for (const auto& b : j.at("algebra_bounds"))
      a.algebra_bounds.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
  a.strict_mode = j.value("strict_mode", false);
  a.exact_c4 = j.value("exact_c4", false);
  a.pool = j.value("pool", std::string("mean")) == "max" ? PoolMode::max : PoolMode::mean;
  a.mapping_activation = j.value("mapping_activation", std::string("sigmoid")) == "relu"
                             ? Activation::relu
                             : Activation::sigmoid;
  a.n_classes = j.value("n_classes", 4);
  a.image_size = j.value("image_size", 16);
  a.image_channels = j.value("image_channels", 1);
  a.init_seed = j.value("init_seed", std::uint64_t{0});
  return a;
}

/// Checkpoint layout (all multi-byte values little-endian):
///   magic "LACV1" | u8 group id | u64 json length | arch config JSON (UTF-8)
///   | u64 double count | flat f64 parameter block in declaration order.
inline void save_checkpoint(const Model& model, const std::string& path) {
  std::ostringstream os(std::ios::binary);
  os.write("LACV1", 5);
  os.put(static_cast<char>(static_cast<int>(model.arch.group)));
  const std::string js = arch_to_json(model.arch).dump();
  write_u64le(os, js.size());
  os.write(js.data(), static_cast<std::streamsize>(js.size()));
  const auto params = model.parameters();
  std::uint64_t total = 0;
  for (const auto& p : params) total += p->value.numel();
  write_u64le(os, total);
  for (const auto& p : params)
    for (double v : p->value.data) write_f64le(os, v);
  write_file_bytes(path, os.str());
}

inline Model load_checkpoint(const std::string& path) {
  std::istringstream is(read_file_bytes(path), std::ios::binary);
  char magic[5];
  is.read(magic, 5);
  if (!is || std::string(magic, 5) != "LACV1")
    throw FormatError("checkpoint: bad magic (expected LACV1)");
  const int gid = is.get();
  if (gid < 0 || gid > 2) throw FormatError("checkpoint: bad group id");
  const std::uint64_t jlen = read_u64le(is);
  std::string js(jlen, '\0');
  is.read(js.data(), static_cast<std::streamsize>(jlen));
  if (!is) throw LengthError("checkpoint: truncated config block");
  ArchitectureConfig arch = arch_from_json(nlohmann::json::parse(js));
  if (static_cast<int>(arch.group) != gid)
    throw ConsistencyError("checkpoint: header group id and config disagree");

  Model model = build_model(arch);
  const std::uint64_t total = read_u64le(is);
  if (total != model.parameter_count())
    throw ConsistencyError("checkpoint: parameter count does not match architecture");
  for (const auto& p : model.parameters())
    for (double& v : p->value.data) v = read_f64le(is);
  return model;
}

}  // namespace laconv
