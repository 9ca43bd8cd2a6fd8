#include "numlex/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

#include "numlex/errors.hpp"

namespace numlex {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// key -> (line, raw value); section names are folded into the key as
// "section.key".
std::map<std::string, std::pair<int, std::string>> parse_toml(const std::string& text) {
  std::map<std::string, std::pair<int, std::string>> kv;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = std::string::npos;
    bool in_str = false;
    for (size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_str = !in_str;
      if (line[i] == '#' && !in_str) {
        hash = i;
        break;
      }
    }
    if (hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ParseError(lineno, "unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty()) throw ParseError(lineno, "empty section name");
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos) throw ParseError(lineno, "expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    if (key.empty()) throw ParseError(lineno, "empty key");
    if (val.empty()) throw ParseError(lineno, "empty value");
    std::string full = section.empty() ? key : section + "." + key;
    if (kv.count(full)) throw ParseError(lineno, "duplicate key: " + full);
    kv[full] = {lineno, val};
  }
  return kv;
}

std::string unquote(const std::string& key, const std::string& raw) {
  if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"')
    return raw.substr(1, raw.size() - 2);
  if (raw.find('"') != std::string::npos)
    throw ValidationError(key, "badly quoted string");
  return raw;
}

struct Binder {
  std::map<std::string, std::pair<int, std::string>> kv;

  void bind(const std::string& key, std::string& out) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    out = unquote(key, it->second.second);
    kv.erase(it);
  }
  void bind(const std::string& key, bool& out) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    const std::string& v = it->second.second;
    if (v == "true") out = true;
    else if (v == "false") out = false;
    else throw ValidationError(key, "expected true or false");
    kv.erase(it);
  }
  void bind(const std::string& key, double& out) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    const char* s = it->second.second.c_str();
    char* end = nullptr;
    double v = std::strtod(s, &end);
    if (end == s || *end != '\0') throw ValidationError(key, "expected a number");
    out = v;
    kv.erase(it);
  }
  void bind(const std::string& key, uint64_t& out) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    const char* s = it->second.second.c_str();
    char* end = nullptr;
    unsigned long long v = std::strtoull(s, &end, 10);
    if (end == s || *end != '\0' || it->second.second.front() == '-')
      throw ValidationError(key, "expected a non-negative integer");
    out = v;
    kv.erase(it);
  }
  void bind(const std::string& key, int64_t& out) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    const char* s = it->second.second.c_str();
    char* end = nullptr;
    long long v = std::strtoll(s, &end, 10);
    if (end == s || *end != '\0') throw ValidationError(key, "expected an integer");
    out = v;
    kv.erase(it);
  }
};

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  std::string s = os.str();
  if (s.find_first_of(".eEnif") == std::string::npos) s += ".0";
  return s;
}

void check_range(const std::string& key, double v, double lo, double hi) {
  if (v < lo || v > hi) {
    std::ostringstream os;
    os << "out of [" << lo << ", " << hi << "]";
    throw ValidationError(key, os.str());
  }
}

void check_choice(const std::string& key, const std::string& v,
                  std::initializer_list<const char*> choices) {
  for (const char* c : choices)
    if (v == c) return;
  std::string msg = "must be one of";
  for (const char* c : choices) msg += std::string(" ") + c;
  throw ValidationError(key, msg);
}

}  // namespace

void RunConfig::validate() const {
  check_choice("numtok_mode", numtok_mode, {"addback", "replace", "addembed"});
  check_choice("numbed.kind", numbed_kind, {"charlstm", "charformer", "dice"});
  check_choice("numbed.tier", numbed_tier, {"0.1M", "1M", "9M"});
  if (model_dim == 0) throw ValidationError("numbed.model_dim", "must be positive");
  check_choice("pretrain.mode", pretrain_mode, {"scratch", "checkpoint"});
  check_range("pretrain.mask_rate", mask_rate, 0.0, 1.0);
  if (eps <= 0.0) throw ValidationError("pretrain.eps", "must be positive");
  check_range("pretrain.tau", tau, 0.0, 1.0);
  check_range("pretrain.alpha_max", alpha_max, 0.0, 1.0);
  if (lr < 0.0) throw ValidationError("pretrain.lr", "must be non-negative");
  check_choice("probe.task", probe_task, {"decode", "add", "sub", "listmax"});
  if (probe_lr < 0.0) throw ValidationError("probe.lr", "must be non-negative");
  if (probe_batch == 0) throw ValidationError("probe.batch", "must be positive");
  if (train_fraction <= 0.0 || train_fraction >= 1.0)
    throw ValidationError("probe.train_fraction", "out of (0, 1)");
  if (list_len < 2) throw ValidationError("probe.list_len", "must be >= 2");
  if (e_min > e_max) throw ValidationError("numbers.e_min", "exceeds e_max");
  check_range("numbers.integer_fraction", integer_fraction, 0.0, 1.0);
  check_range("numbers.percent_fraction", percent_fraction, 0.0, 1.0);
  check_range("numbers.comma_fraction", comma_fraction, 0.0, 1.0);
  check_range("numbers.negative_fraction", negative_fraction, 0.0, 1.0);
}

RunConfig parse_config(const std::string& toml_text) {
  RunConfig c;
  Binder b{parse_toml(toml_text)};
  b.bind("seed", c.seed);
  b.bind("numtok_mode", c.numtok_mode);
  b.bind("numbed.kind", c.numbed_kind);
  b.bind("numbed.tier", c.numbed_tier);
  b.bind("numbed.model_dim", c.model_dim);
  b.bind("pretrain.mode", c.pretrain_mode);
  b.bind("pretrain.mask_rate", c.mask_rate);
  b.bind("pretrain.eps", c.eps);
  b.bind("pretrain.tau", c.tau);
  b.bind("pretrain.alpha_max", c.alpha_max);
  b.bind("pretrain.warmup_steps", c.warmup_steps);
  b.bind("pretrain.steps", c.steps);
  b.bind("pretrain.lr", c.lr);
  b.bind("probe.task", c.probe_task);
  b.bind("probe.count", c.probe_count);
  b.bind("probe.epochs", c.probe_epochs);
  b.bind("probe.hidden", c.probe_hidden);
  b.bind("probe.hidden_layers", c.probe_hidden_layers);
  b.bind("probe.batch", c.probe_batch);
  b.bind("probe.lr", c.probe_lr);
  b.bind("probe.joint", c.probe_joint);
  b.bind("probe.train_fraction", c.train_fraction);
  b.bind("probe.list_len", c.list_len);
  b.bind("numbers.e_min", c.e_min);
  b.bind("numbers.e_max", c.e_max);
  b.bind("numbers.integer_fraction", c.integer_fraction);
  b.bind("numbers.percent_fraction", c.percent_fraction);
  b.bind("numbers.comma_fraction", c.comma_fraction);
  b.bind("numbers.negative_fraction", c.negative_fraction);
  b.bind("paths.corpus", c.corpus_path);
  b.bind("paths.out", c.out_dir);
  if (!b.kv.empty()) throw ValidationError(b.kv.begin()->first, "unknown key");
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream os;
  os << "seed = " << c.seed << "\n";
  os << "numtok_mode = \"" << c.numtok_mode << "\"\n";
  os << "\n[numbed]\n";
  os << "kind = \"" << c.numbed_kind << "\"\n";
  os << "tier = \"" << c.numbed_tier << "\"\n";
  os << "model_dim = " << c.model_dim << "\n";
  os << "\n[pretrain]\n";
  os << "mode = \"" << c.pretrain_mode << "\"\n";
  os << "mask_rate = " << fmt_double(c.mask_rate) << "\n";
  os << "eps = " << fmt_double(c.eps) << "\n";
  os << "tau = " << fmt_double(c.tau) << "\n";
  os << "alpha_max = " << fmt_double(c.alpha_max) << "\n";
  os << "warmup_steps = " << c.warmup_steps << "\n";
  os << "steps = " << c.steps << "\n";
  os << "lr = " << fmt_double(c.lr) << "\n";
  os << "\n[probe]\n";
  os << "task = \"" << c.probe_task << "\"\n";
  os << "count = " << c.probe_count << "\n";
  os << "epochs = " << c.probe_epochs << "\n";
  os << "hidden = " << c.probe_hidden << "\n";
  os << "hidden_layers = " << c.probe_hidden_layers << "\n";
  os << "batch = " << c.probe_batch << "\n";
  os << "lr = " << fmt_double(c.probe_lr) << "\n";
  os << "joint = " << (c.probe_joint ? "true" : "false") << "\n";
  os << "train_fraction = " << fmt_double(c.train_fraction) << "\n";
  os << "list_len = " << c.list_len << "\n";
  os << "\n[numbers]\n";
  os << "e_min = " << c.e_min << "\n";
  os << "e_max = " << c.e_max << "\n";
  os << "integer_fraction = " << fmt_double(c.integer_fraction) << "\n";
  os << "percent_fraction = " << fmt_double(c.percent_fraction) << "\n";
  os << "comma_fraction = " << fmt_double(c.comma_fraction) << "\n";
  os << "negative_fraction = " << fmt_double(c.negative_fraction) << "\n";
  os << "\n[paths]\n";
  os << "corpus = \"" << c.corpus_path << "\"\n";
  os << "out = \"" << c.out_dir << "\"\n";
  return os.str();
}

uint64_t fnv1a(std::string_view data, uint64_t h) {
  for (char c : data) {
    h ^= static_cast<uint8_t>(c);
    h *= 1099511628211ull;
  }
  return h;
}

uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file for hashing: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return fnv1a(buf.str());
}

void write_manifest(const std::string& path, const RunManifest& m) {
  nlohmann::ordered_json j;
  j["version"] = m.tool_version;
  j["command"] = m.command;
  j["config"] = m.config_toml;
  j["input_hash"] = m.input_hash;
  j["wall_seconds"] = m.wall_seconds;
  j["outputs"] = m.outputs;
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write manifest: " + tmp);
    out << j.dump(2) << "\n";
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw IoError("cannot rename manifest into place: " + path);
}

}  // namespace numlex
