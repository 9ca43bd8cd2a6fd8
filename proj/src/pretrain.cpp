#include "numlex/pretrain.hpp"

#include <algorithm>
#include <cmath>

#include "numlex/errors.hpp"

namespace numlex {

HostModel::HostModel(HostConfig cfg_, uint64_t seed) : cfg(cfg_) {
  if (cfg.base_vocab == 0 || cfg.model_dim == 0 || cfg.layers == 0 || cfg.max_seq == 0)
    throw ConfigError("host: dimensions must be positive");
  Rng rng = Rng::substream(seed, "host.init");
  tok_embed = params.add(
      "tok_embed", Tensor::uniform_init(cfg.vocab_size(), cfg.model_dim, cfg.model_dim, rng));
  pos_embed = params.add(
      "pos_embed", Tensor::uniform_init(cfg.max_seq, cfg.model_dim, cfg.model_dim, rng));
  for (size_t l = 0; l < cfg.layers; ++l)
    encoder.emplace_back(params, "enc" + std::to_string(l), cfg.model_dim, cfg.heads, cfg.ff_dim,
                         rng);
  head_cla = Mlp(params, "head_cla", cfg.model_dim, {cfg.head_hidden}, cfg.vocab_size(),
                 Activation::Relu, rng);
  head_reg = Mlp(params, "head_reg", cfg.model_dim, {cfg.head_hidden}, 2, Activation::Relu, rng);
}

HostModel::HostModel(HostConfig cfg_, ParamSet loaded) : cfg(cfg_), params(std::move(loaded)) {
  tok_embed = params.get("tok_embed");
  pos_embed = params.get("pos_embed");
  if (tok_embed.rows() != cfg.vocab_size() || tok_embed.cols() != cfg.model_dim)
    throw ArchMismatch("host checkpoint does not match configuration");
  for (size_t l = 0; l < cfg.layers; ++l)
    encoder.emplace_back(params, "enc" + std::to_string(l), cfg.model_dim, cfg.heads, cfg.ff_dim);
  head_cla = Mlp(params, "head_cla", cfg.model_dim, {cfg.head_hidden}, cfg.vocab_size(),
                 Activation::Relu);
  head_reg = Mlp(params, "head_reg", cfg.model_dim, {cfg.head_hidden}, 2, Activation::Relu);
}

Tensor HostModel::encode(const Tensor& rows) const {
  Tensor x = rows;
  for (const auto& layer : encoder) x = layer.forward(x);
  return x;
}

TokenSequence prepare_sequence(const TokenSequence& seq, size_t max_seq) {
  TokenSequence out;
  out.mode = seq.mode;
  out.numbers = seq.numbers;
  out.tokens.push_back(Token{TokenKind::Cls, -1, std::nullopt, 0, 0});
  size_t budget = max_seq >= 2 ? max_seq - 2 : 0;
  for (size_t i = 0; i < seq.tokens.size() && i < budget; ++i) out.tokens.push_back(seq.tokens[i]);
  out.tokens.push_back(Token{TokenKind::Sep, -1, std::nullopt, 0, 0});
  return out;
}

MaskingPlan build_masking_plan(const TokenSequence& seq, Rng& rng, double mask_rate,
                               int random_lo, int random_hi, double eps) {
  if (seq.tokens.empty()) throw EmptySequence("cannot build a masking plan for an empty sequence");
  MaskingPlan plan;
  for (size_t i = 0; i < seq.tokens.size(); ++i) {
    const Token& t = seq.tokens[i];
    if (t.kind == TokenKind::Cls || t.kind == TokenKind::Sep || t.kind == TokenKind::Mask)
      continue;
    if (!rng.bernoulli(mask_rate)) continue;
    MaskedPosition mp;
    mp.index = i;
    double u = rng.uniform();
    if (u < 0.8) {
      mp.action = MaskAction::MaskToken;
    } else if (u < 0.9) {
      mp.action = MaskAction::RandomToken;
      mp.random_id = static_cast<int>(rng.uniform_int(random_lo, random_hi));
    } else {
      mp.action = MaskAction::Keep;
    }
    // A position carrying a number (a <num ?> token, or a vocab token with an
    // attached span in AddOnEmbedding mode) gets the regression target.
    if (t.span.has_value()) {
      mp.is_num = true;
      mp.num_target = regression_target(parse_value(*t.span), eps);
    } else {
      mp.is_num = false;
      mp.vocab_target = t.vocab_id;
    }
    plan.positions.push_back(mp);
  }
  return plan;
}

Tensor apply_plan(const TokenSequence& seq, const MaskingPlan& plan, NumberEmbedder& numbed,
                  const HostModel& host) {
  size_t T = seq.tokens.size();
  if (T == 0) throw EmptySequence("apply_plan: empty sequence");
  if (T > host.cfg.max_seq) throw PlanMismatch("sequence exceeds host max_seq");
  for (const auto& mp : plan.positions) {
    if (mp.index >= T) throw PlanMismatch("plan index out of range");
    if (mp.is_num != seq.tokens[mp.index].span.has_value())
      throw PlanMismatch("plan target kind does not match token kind");
  }

  auto embed_id = [&](int id) { return select_rows(host.tok_embed, {id}); };

  std::vector<Tensor> rows(T);
  for (size_t i = 0; i < T; ++i) {
    const Token& t = seq.tokens[i];
    switch (t.kind) {
      case TokenKind::Cls: rows[i] = embed_id(host.cfg.cls_id()); break;
      case TokenKind::Sep: rows[i] = embed_id(host.cfg.sep_id()); break;
      case TokenKind::Mask: rows[i] = embed_id(host.cfg.mask_id()); break;
      case TokenKind::Num:
        rows[i] = combine(NumTokMode::Replace, numbed.embed(t.span->text), {})[0];
        break;
      case TokenKind::Vocab:
        if (t.span.has_value() && seq.mode == NumTokMode::AddOnEmbedding)
          rows[i] = combine(NumTokMode::AddOnEmbedding, numbed.embed(t.span->text),
                            {embed_id(t.vocab_id)})[0];
        else
          rows[i] = embed_id(t.vocab_id);
        break;
    }
  }
  for (const auto& mp : plan.positions) {
    switch (mp.action) {
      case MaskAction::MaskToken: rows[mp.index] = embed_id(host.cfg.mask_id()); break;
      case MaskAction::RandomToken: rows[mp.index] = embed_id(mp.random_id); break;
      case MaskAction::Keep: break;
    }
  }
  return add(concat_rows(rows), slice_rows(host.pos_embed, 0, T));
}

MlmLosses mlm_loss(const Tensor& masked_outputs, const MaskingPlan& plan, const Mlp& head_reg,
                   const Mlp& head_cla) {
  if (masked_outputs.rows() != plan.k())
    throw PlanMismatch("mlm_loss: one output row per masked position required");
  MlmLosses out;
  if (plan.k() == 0) {
    out.reg = Tensor::scalar(0.0);
    out.cla = Tensor::scalar(0.0);
    out.mlm = Tensor::scalar(0.0);
    return out;
  }
  std::vector<Tensor> num_rows, vocab_rows;
  std::vector<double> reg_targets;
  std::vector<int> cla_targets;
  for (size_t i = 0; i < plan.positions.size(); ++i) {
    const auto& mp = plan.positions[i];
    if (mp.is_num) {
      num_rows.push_back(slice_rows(masked_outputs, i, 1));
      reg_targets.push_back(mp.num_target.log_abs);
      reg_targets.push_back(static_cast<double>(mp.num_target.sign));
    } else {
      vocab_rows.push_back(slice_rows(masked_outputs, i, 1));
      cla_targets.push_back(mp.vocab_target);
    }
  }
  if (!num_rows.empty()) {
    Tensor pred = head_reg(concat_rows(num_rows));  // [n, 2]
    Tensor target = Tensor::from(num_rows.size(), 2, std::move(reg_targets));
    Tensor d = sub(pred, target);
    // sum over rows of per-row MSE (mean over the 2 components)
    out.reg = scale(sum_all(mul(d, d)), 0.5);
  } else {
    out.reg = Tensor::scalar(0.0);
  }
  if (!vocab_rows.empty()) {
    out.cla = cross_entropy_logits_sum(head_cla(concat_rows(vocab_rows)), cla_targets);
  } else {
    out.cla = Tensor::scalar(0.0);
  }
  out.mlm = scale(add(out.reg, out.cla), 1.0 / static_cast<double>(plan.k()));
  return out;
}

Tensor distill_loss(const Tensor& student_probs, const Tensor& teacher_probs, size_t k) {
  if (student_probs.rows() != teacher_probs.rows() ||
      student_probs.cols() != teacher_probs.cols())
    throw ShapeMismatch("distill_loss: probability shapes differ");
  if (k == 0) return Tensor::scalar(0.0);
  for (const Tensor* p : {&student_probs, &teacher_probs}) {
    for (size_t i = 0; i < p->rows(); ++i) {
      double s = 0.0;
      for (size_t j = 0; j < p->cols(); ++j) s += p->at(i, j);
      if (std::fabs(s - 1.0) > 1e-6)
        throw NonDistribution("distill_loss: probability row does not sum to 1");
    }
  }
  return scale(sum_all(mul(teacher_probs, log_op(student_probs))),
               -1.0 / static_cast<double>(k));
}

void momentum_update(ParamSet& teacher, const ParamSet& student, double tau) {
  if (teacher.size() != student.size())
    throw ArchMismatch("momentum_update: parameter sets differ in size");
  auto ti = teacher.begin();
  auto si = student.begin();
  for (; ti != teacher.end(); ++ti, ++si) {
    if (ti->first != si->first || ti->second.size() != si->second.size())
      throw ArchMismatch("momentum_update: parameter mismatch at " + ti->first);
    auto& tv = ti->second.data();
    const auto& sv = si->second.data();
    for (size_t i = 0; i < tv.size(); ++i) tv[i] = tau * tv[i] + (1.0 - tau) * sv[i];
  }
}

double alpha_schedule(size_t step, size_t warmup_steps, double alpha_max) {
  if (warmup_steps == 0) return alpha_max;
  double ramp = static_cast<double>(step) / static_cast<double>(warmup_steps);
  return alpha_max * std::min(1.0, ramp);
}

PretrainJob::PretrainJob(PretrainConfig cfg_, HostModel student_,
                         std::unique_ptr<NumberEmbedder> numbed_,
                         std::vector<TokenSequence> corpus_)
    : cfg(cfg_), student(std::move(student_)), numbed(std::move(numbed_)),
      corpus(std::move(corpus_)) {
  if (corpus.empty()) throw ConfigError("pretrain: corpus is empty");
  if (cfg.steps == 0) throw ConfigError("pretrain: steps must be positive");
  if (cfg.tau < 0 || cfg.tau > 1) throw ConfigError("pretrain: tau out of [0,1]");
  if (cfg.warmup_steps == 0) cfg.warmup_steps = std::max<size_t>(1, cfg.steps / 10);
  opt_.lr = cfg.lr;
  if (cfg.mode == PretrainMode::FromCheckpoint) {
    teacher = std::make_unique<HostModel>(student.cfg, student.params.clone(false));
    if (numbed->params())
      teacher_numbed = make_embedder(numbed->config(), numbed->params()->clone(false));
    else
      teacher_numbed = make_embedder(numbed->config(), ParamSet{});
  }
}

LossBreakdown PretrainJob::step(size_t step_index) {
  const TokenSequence& doc = corpus[step_index % corpus.size()];
  TokenSequence seq = prepare_sequence(doc, student.cfg.max_seq);
  Rng rng = Rng::substream(cfg.seed, "mask", step_index);
  int random_hi = static_cast<int>(student.cfg.base_vocab) - 1;
  MaskingPlan plan = build_masking_plan(seq, rng, cfg.mask_rate, 0, random_hi, cfg.eps);

  LossBreakdown lb;
  lb.step = step_index;
  lb.k = plan.k();
  lb.alpha = (cfg.mode == PretrainMode::FromScratch)
                 ? 0.0
                 : alpha_schedule(step_index, cfg.warmup_steps, cfg.alpha_max);
  if (plan.k() == 0) return lb;

  Tensor rows = apply_plan(seq, plan, *numbed, student);
  Tensor outs = student.encode(rows);
  std::vector<Tensor> gathered;
  for (const auto& mp : plan.positions) gathered.push_back(slice_rows(outs, mp.index, 1));
  Tensor masked = concat_rows(gathered);

  MlmLosses losses = mlm_loss(masked, plan, student.head_reg, student.head_cla);
  lb.l_reg = losses.reg.item();
  lb.l_cla = losses.cla.item();
  lb.l_mlm = losses.mlm.item();

  Tensor total = losses.mlm;
  if (cfg.mode == PretrainMode::FromCheckpoint && lb.alpha > 0.0) {
    Tensor trows = apply_plan(seq, plan, *teacher_numbed, *teacher);
    Tensor touts = teacher->encode(trows);
    std::vector<Tensor> tg;
    for (const auto& mp : plan.positions) tg.push_back(slice_rows(touts, mp.index, 1));
    Tensor teacher_probs = softmax_rows(teacher->head_cla(concat_rows(tg)));
    Tensor student_probs = softmax_rows(student.head_cla(masked));
    Tensor ld = distill_loss(student_probs, teacher_probs, plan.k());
    lb.l_distill = ld.item();
    total = add(scale(losses.mlm, 1.0 - lb.alpha), scale(ld, lb.alpha));
  } else if (cfg.mode == PretrainMode::FromCheckpoint) {
    total = scale(losses.mlm, 1.0 - lb.alpha);
  }
  lb.total = total.item();

  student.params.zero_grad();
  if (numbed->params()) numbed->params()->zero_grad();
  backward(total);
  opt_.step(student.params);
  if (numbed->params()) opt_.step(*numbed->params());
  if (teacher) {
    momentum_update(teacher->params, student.params, cfg.tau);
    if (teacher_numbed && teacher_numbed->params())
      momentum_update(*teacher_numbed->params(), *numbed->params(), cfg.tau);
  }
  return lb;
}

std::vector<LossBreakdown> PretrainJob::run() {
  std::vector<LossBreakdown> metrics;
  metrics.reserve(cfg.steps);
  for (size_t s = 0; s < cfg.steps; ++s) metrics.push_back(step(s));
  return metrics;
}

}  // namespace numlex
