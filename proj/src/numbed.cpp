#include "numlex/numbed.hpp"

#include <algorithm>

#include "numlex/errors.hpp"

namespace numlex {

std::string_view numbed_kind_name(NumBedKind k) {
  switch (k) {
    case NumBedKind::CharLstm: return "charlstm";
    case NumBedKind::CharFormer: return "charformer";
    case NumBedKind::Dice: return "dice";
  }
  return "?";
}

NumBedKind numbed_kind_from(const std::string& name) {
  if (name == "charlstm") return NumBedKind::CharLstm;
  if (name == "charformer") return NumBedKind::CharFormer;
  if (name == "dice") return NumBedKind::Dice;
  throw ConfigError("unknown numbed kind: " + name);
}

void NumBedConfig::validate() const {
  if (model_dim == 0) throw ConfigError("numbed: model_dim must be positive");
  if (max_chars < 1) throw ConfigError("numbed: max_chars must be >= 1");
  if (kind != NumBedKind::Dice && (char_embed_dim == 0 || lstm_hidden == 0 || lstm_layers == 0))
    throw ConfigError("numbed: embedder dimensions must be positive");
  if (kind == NumBedKind::Dice && model_dim < 3)
    throw ConfigError("numbed: DICE needs model_dim >= 3");
  if (dice_log_max <= dice_log_min) throw ConfigError("numbed: empty DICE log-value range");
}

NumBedConfig NumBedConfig::for_tier(NumBedKind kind, const std::string& tier, size_t model_dim) {
  NumBedConfig cfg;
  cfg.kind = kind;
  cfg.model_dim = model_dim;
  cfg.param_budget_label = tier;
  if (kind == NumBedKind::Dice) return cfg;
  // Desk-scale ladder: ~1K / ~10K / ~100K parameters, keeping roughly 10x
  // steps between size tiers.
  if (tier == "0.1M") {
    cfg.char_embed_dim = 4;
    cfg.lstm_hidden = 8;
    cfg.lstm_layers = 1;
    cfg.former_heads = 2;
    cfg.former_ff = 8;
  } else if (tier == "1M") {
    cfg.char_embed_dim = 8;
    cfg.lstm_hidden = 16;
    cfg.lstm_layers = 2;
    cfg.former_heads = 2;
    cfg.former_ff = 16;
  } else if (tier == "9M") {
    cfg.char_embed_dim = 16;
    cfg.lstm_hidden = 48;
    cfg.lstm_layers = 2;
    cfg.former_heads = 4;
    cfg.former_ff = 32;
  } else {
    throw ConfigError("unknown size tier: " + tier);
  }
  return cfg;
}

int CharVocab::index_of(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  switch (c) {
    case '%': return 10;
    case '+': return 11;
    case '-': return 12;
    case '.': return 13;
    case ',': return 14;
    default: return unk_index;
  }
}

char CharVocab::char_at(int index) {
  static const char table[] = "0123456789%+-.,";
  if (index >= 0 && index < 15) return table[index];
  return '\0';
}

std::vector<int> digit_positions(const std::string& num) {
  size_t dp = num.find('.');
  if (dp == std::string::npos) dp = num.size();
  std::vector<int> pos(num.size(), kDigitPositionSentinel);
  for (size_t i = 0; i < num.size(); ++i) {
    char c = num[i];
    if (c < '0' || c > '9') continue;
    int count = 0;
    if (i < dp) {
      for (size_t j = i + 1; j < dp; ++j)
        if (num[j] >= '0' && num[j] <= '9') ++count;
      pos[i] = count;
    } else {
      for (size_t j = dp + 1; j <= i; ++j)
        if (num[j] >= '0' && num[j] <= '9') ++count;
      pos[i] = -count;
    }
  }
  return pos;
}

namespace {

std::vector<int> char_indices(const std::string& num, size_t max_chars) {
  if (num.empty()) throw EmptyNumber("cannot embed an empty number string");
  std::string s = num.size() > max_chars ? num.substr(0, max_chars) : num;
  std::vector<int> idx;
  idx.reserve(s.size());
  for (char c : s) idx.push_back(CharVocab::index_of(c));
  return idx;
}

// Mean over the per-(layer, direction) final hidden states.
Tensor mean_final_hidden(const std::vector<Tensor>& finals) {
  Tensor acc = finals[0];
  for (size_t i = 1; i < finals.size(); ++i) acc = add(acc, finals[i]);
  return scale(acc, 1.0 / static_cast<double>(finals.size()));
}

}  // namespace

CharLstmEmbedder::CharLstmEmbedder(NumBedConfig cfg, uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.kind = NumBedKind::CharLstm;
  cfg_.validate();
  Rng rng = Rng::substream(seed, "numbed.charlstm.init");
  char_table_ = params_.add(
      "chars", Tensor::uniform_init(CharVocab::size, cfg_.char_embed_dim, cfg_.char_embed_dim, rng));
  lstm_ = Lstm(params_, "lstm", cfg_.char_embed_dim, cfg_.lstm_hidden, cfg_.lstm_layers,
               /*bidirectional=*/true, rng);
  proj_ = Linear(params_, "proj", cfg_.lstm_hidden, cfg_.model_dim, rng);
}

CharLstmEmbedder::CharLstmEmbedder(NumBedConfig cfg, ParamSet existing)
    : cfg_(std::move(cfg)), params_(std::move(existing)) {
  cfg_.kind = NumBedKind::CharLstm;
  cfg_.validate();
  char_table_ = params_.get("chars");
  lstm_ = Lstm(params_, "lstm", cfg_.char_embed_dim, cfg_.lstm_hidden, cfg_.lstm_layers,
               /*bidirectional=*/true);
  proj_ = Linear(params_, "proj");
}

Tensor CharLstmEmbedder::embed(const std::string& num) {
  Tensor x = select_rows(char_table_, char_indices(num, cfg_.max_chars));
  auto out = lstm_.forward(x);
  return proj_(mean_final_hidden(out.final_hidden));
}

CharFormerEmbedder::CharFormerEmbedder(NumBedConfig cfg, uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.kind = NumBedKind::CharFormer;
  cfg_.validate();
  Rng rng = Rng::substream(seed, "numbed.charformer.init");
  char_table_ = params_.add(
      "chars", Tensor::uniform_init(CharVocab::size, cfg_.char_embed_dim, cfg_.char_embed_dim, rng));
  size_t pos_entries = 2 * cfg_.max_chars + 2;  // [-max_chars, +max_chars] plus sentinel
  pos_table_ = params_.add(
      "positions",
      Tensor::uniform_init(pos_entries, cfg_.char_embed_dim, cfg_.char_embed_dim, rng));
  former_ = TransformerEncoderLayer(params_, "former", cfg_.char_embed_dim, cfg_.former_heads,
                                    cfg_.former_ff, rng);
  lstm_ = Lstm(params_, "lstm", cfg_.char_embed_dim, cfg_.lstm_hidden, cfg_.lstm_layers,
               /*bidirectional=*/true, rng);
  proj_ = Linear(params_, "proj", cfg_.lstm_hidden, cfg_.model_dim, rng);
}

CharFormerEmbedder::CharFormerEmbedder(NumBedConfig cfg, ParamSet existing)
    : cfg_(std::move(cfg)), params_(std::move(existing)) {
  cfg_.kind = NumBedKind::CharFormer;
  cfg_.validate();
  char_table_ = params_.get("chars");
  pos_table_ = params_.get("positions");
  former_ = TransformerEncoderLayer(params_, "former", cfg_.char_embed_dim, cfg_.former_heads,
                                    cfg_.former_ff);
  lstm_ = Lstm(params_, "lstm", cfg_.char_embed_dim, cfg_.lstm_hidden, cfg_.lstm_layers,
               /*bidirectional=*/true);
  proj_ = Linear(params_, "proj");
}

int CharFormerEmbedder::position_table_index(int position) const {
  int cap = static_cast<int>(cfg_.max_chars);
  if (position == kDigitPositionSentinel) return 2 * cap + 1;
  return std::clamp(position, -cap, cap) + cap;
}

Tensor CharFormerEmbedder::embed(const std::string& num) {
  auto chars = char_indices(num, cfg_.max_chars);
  std::string truncated = num.size() > cfg_.max_chars ? num.substr(0, cfg_.max_chars) : num;
  auto positions = digit_positions(truncated);
  std::vector<int> pos_idx(positions.size());
  for (size_t i = 0; i < positions.size(); ++i) pos_idx[i] = position_table_index(positions[i]);
  Tensor x = add(select_rows(char_table_, chars), select_rows(pos_table_, pos_idx));
  auto out = lstm_.forward(former_.forward(x));
  return proj_(mean_final_hidden(out.final_hidden));
}

DiceEmbedder::DiceEmbedder(NumBedConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.kind = NumBedKind::Dice;
  cfg_.validate();
}

Tensor DiceEmbedder::embed(const std::string& num) {
  if (num.empty()) throw EmptyNumber("cannot embed an empty number string");
  return embed_value(parse_value(num).value);
}

Tensor DiceEmbedder::embed_value(double value) {
  double la = std::log(cfg_.dice_eps + std::fabs(value));
  double u = (la - cfg_.dice_log_min) / (cfg_.dice_log_max - cfg_.dice_log_min);
  // Angles stay in [0, pi/2]: on that range the polar curve's cosine
  // similarity is monotone in the angle difference.
  double theta = std::clamp(u, 0.0, 1.0) * (std::acos(-1.0) / 2.0);

  size_t d = cfg_.model_dim;
  std::vector<double> v(d, 0.0);
  double sign_coord = 0.2 * sgn(value);
  double polar_scale = std::sqrt(1.0 - sign_coord * sign_coord);
  size_t pd = d - 1;
  double running_sin = 1.0;
  for (size_t i = 0; i + 1 < pd; ++i) {
    v[i] = polar_scale * running_sin * std::cos(theta);
    running_sin *= std::sin(theta);
  }
  v[pd - 1] = polar_scale * running_sin;
  v[d - 1] = sign_coord;
  return Tensor::from(1, d, std::move(v));
}

std::unique_ptr<NumberEmbedder> make_embedder(const NumBedConfig& cfg, uint64_t seed) {
  switch (cfg.kind) {
    case NumBedKind::CharLstm: return std::make_unique<CharLstmEmbedder>(cfg, seed);
    case NumBedKind::CharFormer: return std::make_unique<CharFormerEmbedder>(cfg, seed);
    case NumBedKind::Dice: return std::make_unique<DiceEmbedder>(cfg);
  }
  throw ConfigError("bad numbed kind");
}

std::unique_ptr<NumberEmbedder> make_embedder(const NumBedConfig& cfg, ParamSet existing) {
  switch (cfg.kind) {
    case NumBedKind::CharLstm:
      return std::make_unique<CharLstmEmbedder>(cfg, std::move(existing));
    case NumBedKind::CharFormer:
      return std::make_unique<CharFormerEmbedder>(cfg, std::move(existing));
    case NumBedKind::Dice: return std::make_unique<DiceEmbedder>(cfg);
  }
  throw ConfigError("bad numbed kind");
}

std::vector<Tensor> combine(NumTokMode mode, const Tensor& num_vec,
                            const std::vector<Tensor>& base_vecs) {
  for (const auto& b : base_vecs)
    if (b.rows() != 1 || b.cols() != num_vec.cols())
      throw DimMismatch("combine: base row dims do not match number embedding");
  switch (mode) {
    case NumTokMode::AddBack: {
      auto rows = base_vecs;
      rows.push_back(num_vec);
      return rows;
    }
    case NumTokMode::Replace:
      return {num_vec};
    case NumTokMode::AddOnEmbedding: {
      std::vector<Tensor> rows;
      rows.reserve(base_vecs.size());
      for (const auto& b : base_vecs) rows.push_back(add(b, num_vec));
      return rows;
    }
  }
  throw ConfigError("bad numtok mode");
}

}  // namespace numlex
