#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "numlex/layers.hpp"
#include "numlex/numeric.hpp"
#include "numlex/numtok.hpp"
#include "numlex/tensor.hpp"

namespace numlex {

enum class NumBedKind { CharLstm, CharFormer, Dice };

std::string_view numbed_kind_name(NumBedKind k);
NumBedKind numbed_kind_from(const std::string& name);

struct NumBedConfig {
  NumBedKind kind = NumBedKind::CharLstm;
  size_t char_embed_dim = 8;
  size_t lstm_layers = 1;
  size_t lstm_hidden = 16;
  size_t model_dim = 16;  // host word-embedding dimension
  size_t max_chars = 32;  // truncation keeps the leftmost characters
  std::string param_budget_label;  // "9M" | "1M" | "0.1M" (desk-scaled)
  size_t former_heads = 2;
  size_t former_ff = 32;
  // DICE angle mapping: ln(eps+|v|) maps linearly onto [0, pi/2].
  double dice_eps = 1e-6;
  double dice_log_min = std::log(1e-6);
  double dice_log_max = std::log(1e12);

  // Desk-scaled analogues of the 9M/1M/0.1M budget ladder.
  static NumBedConfig for_tier(NumBedKind kind, const std::string& tier, size_t model_dim);
  void validate() const;
};

// Character vocabulary: the 15 NumTok charset characters plus padding and
// unknown symbols.
struct CharVocab {
  static constexpr int pad_index = 15;
  static constexpr int unk_index = 16;
  static constexpr size_t size = 17;
  static int index_of(char c);     // unk for out-of-charset characters
  static char char_at(int index);  // '\0' for pad/unk
};

// Signed position of each character relative to the decimal point: units
// digit = 0, tens = 1, tenths = -1; non-digits get the sentinel.
constexpr int kDigitPositionSentinel = std::numeric_limits<int>::min();
std::vector<int> digit_positions(const std::string& num);

class NumberEmbedder {
 public:
  virtual ~NumberEmbedder() = default;
  virtual Tensor embed(const std::string& num) = 0;  // [1, model_dim]
  virtual ParamSet* params() { return nullptr; }     // null for DICE
  virtual const NumBedConfig& config() const = 0;
};

// One-hot lookup embedding -> multi-layer BiLSTM; characteristic embedding is
// the mean of the final hidden states over all layers and directions,
// projected to model_dim.
class CharLstmEmbedder : public NumberEmbedder {
 public:
  CharLstmEmbedder(NumBedConfig cfg, uint64_t seed);
  CharLstmEmbedder(NumBedConfig cfg, ParamSet existing);  // rebind
  Tensor embed(const std::string& num) override;
  ParamSet* params() override { return &params_; }
  const NumBedConfig& config() const override { return cfg_; }

 private:
  NumBedConfig cfg_;
  ParamSet params_;
  Tensor char_table_;
  Lstm lstm_;
  Linear proj_;
};

// One-hot lookup embedding plus digit-significance positional embedding,
// passed through a transformer encoder layer and then a BiLSTM.
class CharFormerEmbedder : public NumberEmbedder {
 public:
  CharFormerEmbedder(NumBedConfig cfg, uint64_t seed);
  CharFormerEmbedder(NumBedConfig cfg, ParamSet existing);  // rebind
  Tensor embed(const std::string& num) override;
  ParamSet* params() override { return &params_; }
  const NumBedConfig& config() const override { return cfg_; }

  int position_table_index(int position) const;

 private:
  NumBedConfig cfg_;
  ParamSet params_;
  Tensor char_table_;
  Tensor pos_table_;
  TransformerEncoderLayer former_;
  Lstm lstm_;
  Linear proj_;
};

// Deterministic, parameter-free baseline: maps ln(eps+|v|) to an angle and
// emits the polar unit vector; one coordinate is reserved for the sign.
class DiceEmbedder : public NumberEmbedder {
 public:
  explicit DiceEmbedder(NumBedConfig cfg);
  Tensor embed(const std::string& num) override;
  Tensor embed_value(double value);
  const NumBedConfig& config() const override { return cfg_; }

 private:
  NumBedConfig cfg_;
};

std::unique_ptr<NumberEmbedder> make_embedder(const NumBedConfig& cfg, uint64_t seed);
std::unique_ptr<NumberEmbedder> make_embedder(const NumBedConfig& cfg, ParamSet existing);

// Merges a number embedding with the base token embeddings it covers,
// producing the input rows for the span.
std::vector<Tensor> combine(NumTokMode mode, const Tensor& num_vec,
                            const std::vector<Tensor>& base_vecs);

}  // namespace numlex
