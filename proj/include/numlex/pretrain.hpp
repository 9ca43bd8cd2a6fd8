#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "numlex/layers.hpp"
#include "numlex/numbed.hpp"
#include "numlex/optim.hpp"
#include "numlex/numtok.hpp"
#include "numlex/rng.hpp"
#include "numlex/tensor.hpp"

namespace numlex {

struct HostConfig {
  size_t base_vocab = 0;  // base tokenizer vocabulary; specials appended after
  size_t model_dim = 64;
  size_t layers = 2;
  size_t heads = 4;
  size_t ff_dim = 128;
  size_t max_seq = 128;
  size_t head_hidden = 64;

  size_t vocab_size() const { return base_vocab + 3; }  // + [MASK], [CLS], [SEP]
  int mask_id() const { return static_cast<int>(base_vocab); }
  int cls_id() const { return static_cast<int>(base_vocab) + 1; }
  int sep_id() const { return static_cast<int>(base_vocab) + 2; }
};

struct HostModel {
  HostConfig cfg;
  ParamSet params;
  Tensor tok_embed;  // [vocab_size, d]
  Tensor pos_embed;  // [max_seq, d]
  std::vector<TransformerEncoderLayer> encoder;
  Mlp head_cla;  // d -> vocab_size
  Mlp head_reg;  // d -> 2 ([log_abs, sign])

  HostModel(HostConfig cfg, uint64_t seed);
  HostModel(HostConfig cfg, ParamSet loaded);  // rebind from checkpoint

  Tensor encode(const Tensor& rows) const;  // [T, d] -> [T, d]
};

enum class MaskAction { MaskToken, RandomToken, Keep };

struct MaskedPosition {
  size_t index = 0;
  MaskAction action = MaskAction::MaskToken;
  int random_id = -1;  // for RandomToken
  bool is_num = false;
  int vocab_target = -1;           // T-set target token id
  RegressionTarget num_target{};   // N-set target
};

struct MaskingPlan {
  std::vector<MaskedPosition> positions;
  size_t k() const { return positions.size(); }
};

struct LossBreakdown {
  size_t step = 0;
  size_t k = 0;
  double l_reg = 0, l_cla = 0, l_mlm = 0, l_distill = 0;
  double alpha = 0, total = 0;
};

// Each maskable (non-special) position is masked independently with
// probability mask_rate; masked positions get 80% [MASK] / 10% random token /
// 10% keep. Random replacement ids are drawn from [random_lo, random_hi].
MaskingPlan build_masking_plan(const TokenSequence& seq, Rng& rng, double mask_rate,
                               int random_lo, int random_hi, double eps = 1e-6);

// Builds the input embedding rows for a (sequence, plan) pair: [CLS] ... [SEP]
// with position embeddings added. Number rows come from `numbed` per the
// sequence's combine mode; masked rows follow the plan's actions.
// Plan indices refer to positions in the final row layout (CLS at 0).
Tensor apply_plan(const TokenSequence& seq, const MaskingPlan& plan, NumberEmbedder& numbed,
                  const HostModel& host);

// Prepends CLS, appends SEP, truncates to max_seq. The result's token list is
// what plan indices refer to.
TokenSequence prepare_sequence(const TokenSequence& seq, size_t max_seq);

struct MlmLosses {
  Tensor reg, cla, mlm;  // scalars; reg/cla are sums over N / T sets
};

// masked_outputs: [k, d] host output rows in plan order.
MlmLosses mlm_loss(const Tensor& masked_outputs, const MaskingPlan& plan, const Mlp& head_reg,
                   const Mlp& head_cla);

// (1/k) sum of row-wise soft cross-entropy -sum_c p_m[c] ln p[c].
Tensor distill_loss(const Tensor& student_probs, const Tensor& teacher_probs, size_t k);

// teacher <- tau * teacher + (1 - tau) * student, element-wise.
void momentum_update(ParamSet& teacher, const ParamSet& student, double tau);

// Linear warm-up ramp: alpha_max * min(1, step / warmup_steps).
double alpha_schedule(size_t step, size_t warmup_steps, double alpha_max);

enum class PretrainMode { FromScratch, FromCheckpoint };

struct PretrainConfig {
  PretrainMode mode = PretrainMode::FromScratch;
  NumTokMode numtok_mode = NumTokMode::AddBack;
  double mask_rate = 0.15;
  double eps = 1e-6;
  double tau = 0.995;
  double alpha_max = 0.5;
  size_t warmup_steps = 0;  // 0 -> 10% of steps
  size_t steps = 200;
  double lr = 1e-3;
  uint64_t seed = 0;
};

struct PretrainJob {
  PretrainJob(PretrainConfig cfg, HostModel student, std::unique_ptr<NumberEmbedder> numbed,
              std::vector<TokenSequence> corpus);

  // Runs all steps; returns one LossBreakdown per step.
  std::vector<LossBreakdown> run();
  LossBreakdown step(size_t step_index);

  PretrainConfig cfg;
  HostModel student;
  std::unique_ptr<NumberEmbedder> numbed;
  std::vector<TokenSequence> corpus;

  // Teacher side (FromCheckpoint only).
  std::unique_ptr<HostModel> teacher;
  std::unique_ptr<NumberEmbedder> teacher_numbed;

 private:
  Adam opt_;
};

}  // namespace numlex
