#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace numlex {

// Flat run configuration; serialized as minimal TOML (sections + key = value).
struct RunConfig {
  uint64_t seed = 0;
  std::string numtok_mode = "addback";

  // [numbed]
  std::string numbed_kind = "charlstm";
  std::string numbed_tier = "0.1M";
  uint64_t model_dim = 64;

  // [pretrain]
  std::string pretrain_mode = "scratch";
  double mask_rate = 0.15;
  double eps = 1e-6;
  double tau = 0.995;
  double alpha_max = 0.5;
  uint64_t warmup_steps = 0;  // 0 -> 10% of steps
  uint64_t steps = 200;
  double lr = 1e-3;

  // [probe]
  std::string probe_task = "listmax";
  uint64_t probe_count = 10000;
  uint64_t probe_epochs = 20;
  uint64_t probe_hidden = 128;
  uint64_t probe_hidden_layers = 2;
  uint64_t probe_batch = 16;
  double probe_lr = 1e-3;
  bool probe_joint = true;
  double train_fraction = 0.8;
  uint64_t list_len = 5;

  // [numbers]
  int64_t e_min = -4;
  int64_t e_max = 8;
  double integer_fraction = 0.91;
  double percent_fraction = 0.0151;
  double comma_fraction = 0.0502;
  double negative_fraction = 0.0012;

  // [paths]
  std::string corpus_path;
  std::string out_dir;

  bool operator==(const RunConfig&) const = default;
  void validate() const;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& toml_text);
std::string serialize_config(const RunConfig& cfg);

struct RunManifest {
  std::string tool_version = "0.1.0";
  std::string command;
  std::string config_toml;  // snapshot of the effective config
  uint64_t input_hash = 0;  // FNV-1a over all input file contents
  double wall_seconds = 0.0;
  std::vector<std::string> outputs;
};

uint64_t fnv1a(std::string_view data, uint64_t h = 14695981039346656037ull);
uint64_t hash_file(const std::string& path);

// Atomic write (tmp + rename) of the manifest as JSON.
void write_manifest(const std::string& path, const RunManifest& m);

}  // namespace numlex
