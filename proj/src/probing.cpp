#include "numlex/probing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "numlex/errors.hpp"
#include "numlex/layers.hpp"
#include "numlex/numtok.hpp"
#include "numlex/optim.hpp"

namespace numlex {

std::string_view probe_task_name(ProbeTaskKind k) {
  switch (k) {
    case ProbeTaskKind::Decoding: return "decode";
    case ProbeTaskKind::Addition: return "add";
    case ProbeTaskKind::Subtraction: return "sub";
    case ProbeTaskKind::ListMax: return "listmax";
  }
  return "?";
}

ProbeTaskKind probe_task_from(const std::string& name) {
  if (name == "decode") return ProbeTaskKind::Decoding;
  if (name == "add") return ProbeTaskKind::Addition;
  if (name == "sub") return ProbeTaskKind::Subtraction;
  if (name == "listmax") return ProbeTaskKind::ListMax;
  throw ConfigError("unknown probe task: " + name);
}

void NumberGenConfig::validate() const {
  if (e_min > e_max) throw ConfigError("number generator: e_min > e_max");
  for (double f : {integer_fraction, percent_fraction, comma_fraction, negative_fraction,
                   dot_started_fraction})
    if (f < 0.0 || f > 1.0) throw ConfigError("number generator: fractions must be in [0,1]");
}

namespace {

std::string group_thousands(const std::string& digits) {
  std::string out;
  size_t lead = digits.size() % 3;
  if (lead == 0) lead = 3;
  out.append(digits, 0, lead);
  for (size_t i = lead; i < digits.size(); i += 3) {
    out.push_back(',');
    out.append(digits, i, 3);
  }
  return out;
}

std::string draw_number(const NumberGenConfig& cfg, Rng& rng) {
  bool neg = rng.bernoulli(cfg.negative_fraction);
  bool pct = rng.bernoulli(cfg.percent_fraction);
  bool comma = rng.bernoulli(cfg.comma_fraction);
  bool is_int = rng.bernoulli(cfg.integer_fraction);

  std::string s;
  auto digit = [&](int lo) { return static_cast<char>('0' + rng.uniform_int(lo, 9)); };
  if (is_int) {
    int lo = comma ? 3 : 0;
    int e = static_cast<int>(rng.uniform_int(lo, std::max(cfg.e_max, lo)));
    std::string digits(1, digit(1));
    for (int i = 0; i < e; ++i) digits.push_back(digit(0));
    s = comma ? group_thousands(digits) : digits;
  } else {
    int lo = comma ? 3 : cfg.e_min;
    int e = static_cast<int>(rng.uniform_int(lo, std::max(cfg.e_max, lo)));
    std::string digits(1, digit(1));
    if (e >= 0) {
      int total = e + 1 + static_cast<int>(rng.uniform_int(1, 3));
      while (static_cast<int>(digits.size()) < total - 1) digits.push_back(digit(0));
      digits.push_back(digit(1));  // nonzero tail keeps the fraction visible
      std::string intpart = digits.substr(0, e + 1);
      s = (comma ? group_thousands(intpart) : intpart) + "." + digits.substr(e + 1);
    } else {
      int extra = static_cast<int>(rng.uniform_int(1, 3));
      for (int i = 0; i < extra - 1; ++i) digits.push_back(digit(0));
      digits.push_back(digit(1));
      std::string frac(std::string(-e - 1, '0') + digits);
      s = rng.bernoulli(cfg.dot_started_fraction) ? "." + frac : "0." + frac;
    }
  }
  if (pct) s.push_back('%');
  if (neg) s.insert(s.begin(), '-');
  return s;
}

}  // namespace

std::vector<std::string> generate_numbers(const NumberGenConfig& cfg) {
  cfg.validate();
  Rng rng = Rng::substream(cfg.seed, "probe.numbers");
  std::vector<std::string> out;
  out.reserve(cfg.count);
  while (out.size() < cfg.count) {
    std::string s = draw_number(cfg, rng);
    auto spans = recognize_numbers(s);
    if (spans.size() != 1 || spans[0].start != 0 || spans[0].end != s.size())
      throw ConfigError("number generator produced an unrecognizable string: " + s);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ProbeTask> make_task(ProbeTaskKind kind, const std::vector<std::string>& numbers,
                                 Rng& rng, size_t list_len) {
  if (numbers.empty()) throw ConfigError("make_task: no numbers given");
  std::vector<ProbeTask> tasks;
  switch (kind) {
    case ProbeTaskKind::Decoding:
      for (const auto& n : numbers) {
        ProbeTask t;
        t.kind = kind;
        t.inputs = {n};
        t.gold_sigexp = decompose(parse_value(n));
        tasks.push_back(std::move(t));
      }
      break;
    case ProbeTaskKind::Addition:
    case ProbeTaskKind::Subtraction:
      for (size_t i = 0; i + 1 < numbers.size(); i += 2) {
        ProbeTask t;
        t.kind = kind;
        t.inputs = {numbers[i], numbers[i + 1]};
        double a = parse_value(numbers[i]).value;
        double b = parse_value(numbers[i + 1]).value;
        t.gold_sigexp = decompose(kind == ProbeTaskKind::Addition ? a + b : a - b);
        tasks.push_back(std::move(t));
      }
      break;
    case ProbeTaskKind::ListMax: {
      if (list_len < 2) throw ConfigError("make_task: list_len must be >= 2");
      for (size_t i = 0; i + list_len <= numbers.size(); i += list_len) {
        ProbeTask t;
        t.kind = kind;
        t.inputs.assign(numbers.begin() + i, numbers.begin() + i + list_len);
        // A strict maximum is required; duplicates of the max are replaced by
        // other pool entries, giving up after a bounded number of redraws.
        for (int attempt = 0;; ++attempt) {
          std::vector<double> vals;
          for (const auto& n : t.inputs) vals.push_back(parse_value(n).value);
          size_t best = 0;
          for (size_t j = 1; j < vals.size(); ++j)
            if (vals[j] > vals[best]) best = j;
          size_t dup = list_len;
          for (size_t j = 0; j < vals.size(); ++j)
            if (j != best && vals[j] == vals[best]) dup = j;
          if (dup == list_len) {
            t.gold_index = static_cast<int>(best);
            break;
          }
          if (attempt >= 100) throw DegenerateTask("listmax: could not break max ties");
          t.inputs[dup] = numbers[rng.uniform_int(0, static_cast<int64_t>(numbers.size()) - 1)];
        }
        tasks.push_back(std::move(t));
      }
      break;
    }
  }
  if (tasks.empty()) throw ConfigError("make_task: not enough numbers for any task");
  return tasks;
}

namespace {

struct FeatureBuilder {
  NumberEmbedder& embedder;
  bool live;  // rebuild the graph per call (joint training)
  std::unordered_map<std::string, Tensor> cache;

  Tensor row(const ProbeTask& task) {
    std::vector<Tensor> parts;
    parts.reserve(task.inputs.size());
    for (const auto& n : task.inputs) {
      if (live) {
        parts.push_back(embedder.embed(n));
        continue;
      }
      auto it = cache.find(n);
      if (it == cache.end()) {
        Tensor e = embedder.embed(n);
        Tensor frozen = Tensor::from(1, e.cols(), e.data());
        it = cache.emplace(n, std::move(frozen)).first;
      }
      parts.push_back(it->second);
    }
    return parts.size() == 1 ? parts[0] : concat_cols(parts);
  }
};

size_t argmax_row(const Tensor& t, size_t row, size_t start, size_t len) {
  size_t best = 0;
  for (size_t j = 1; j < len; ++j)
    if (t.at(row, start + j) > t.at(row, start + best)) best = j;
  return best;
}

}  // namespace

ProbeResult train_probe(NumberEmbedder& embedder, const std::vector<ProbeTask>& tasks,
                        const ProbeConfig& cfg) {
  if (tasks.empty()) throw ConfigError("train_probe: no tasks");
  if (cfg.train_fraction <= 0.0 || cfg.train_fraction >= 1.0)
    throw ConfigError("train_probe: train_fraction must be in (0,1)");
  ProbeTaskKind kind = tasks[0].kind;
  size_t inputs_per_task = tasks[0].inputs.size();
  for (const auto& t : tasks)
    if (t.kind != kind || t.inputs.size() != inputs_per_task)
      throw ConfigError("train_probe: mixed task shapes");

  bool listmax = kind == ProbeTaskKind::ListMax;
  int bin_min = 0, bin_max = 0;
  if (!listmax) {
    bin_min = tasks[0].gold_sigexp.exponent;
    bin_max = bin_min;
    for (const auto& t : tasks) {
      bin_min = std::min(bin_min, t.gold_sigexp.exponent);
      bin_max = std::max(bin_max, t.gold_sigexp.exponent);
    }
  }
  size_t n_bins = listmax ? 0 : static_cast<size_t>(bin_max - bin_min + 1);

  size_t model_dim = embedder.config().model_dim;
  size_t in_dim = model_dim * inputs_per_task;
  size_t out_dim = listmax ? inputs_per_task : 1 + n_bins;

  Rng init_rng = Rng::substream(cfg.seed, "probe.init");
  ParamSet probe_params;
  Mlp probe(probe_params, "probe", in_dim,
            std::vector<size_t>(cfg.hidden_layers, cfg.hidden), out_dim, Activation::Relu,
            init_rng);

  std::vector<size_t> order(tasks.size());
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng = Rng::substream(cfg.seed, "probe.split");
  std::shuffle(order.begin(), order.end(), split_rng.engine());
  size_t n_train = static_cast<size_t>(static_cast<double>(tasks.size()) * cfg.train_fraction);
  n_train = std::clamp<size_t>(n_train, 1, tasks.size() - 1);
  std::vector<size_t> train_idx(order.begin(), order.begin() + n_train);
  std::vector<size_t> test_idx(order.begin() + n_train, order.end());

  bool joint = cfg.joint && embedder.params() != nullptr;
  FeatureBuilder features{embedder, joint, {}};
  Adam probe_opt, embed_opt;
  probe_opt.lr = cfg.lr;
  embed_opt.lr = cfg.lr;

  for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng epoch_rng = Rng::substream(cfg.seed, "probe.epoch", epoch);
    std::shuffle(train_idx.begin(), train_idx.end(), epoch_rng.engine());
    for (size_t off = 0; off < train_idx.size(); off += cfg.batch) {
      size_t bsz = std::min(cfg.batch, train_idx.size() - off);
      std::vector<Tensor> rows;
      std::vector<int> cls_targets;
      std::vector<double> sig_targets;
      rows.reserve(bsz);
      for (size_t b = 0; b < bsz; ++b) {
        const ProbeTask& t = tasks[train_idx[off + b]];
        rows.push_back(features.row(t));
        if (listmax) {
          cls_targets.push_back(t.gold_index);
        } else {
          cls_targets.push_back(t.gold_sigexp.exponent - bin_min);
          sig_targets.push_back(t.gold_sigexp.significand);
        }
      }
      Tensor out = probe(concat_rows(rows));
      Tensor loss;
      if (listmax) {
        loss = scale(cross_entropy_logits_sum(out, cls_targets), 1.0 / double(bsz));
      } else {
        Tensor sig = slice_cols(out, 0, 1);
        Tensor diff = sub(sig, Tensor::from(bsz, 1, sig_targets));
        Tensor sq = sum_all(mul(diff, diff));
        Tensor ce = cross_entropy_logits_sum(slice_cols(out, 1, n_bins), cls_targets);
        loss = scale(add(sq, ce), 1.0 / double(bsz));
      }
      probe_params.zero_grad();
      if (joint) embedder.params()->zero_grad();
      backward(loss);
      probe_opt.step(probe_params);
      if (joint) embed_opt.step(*embedder.params());
    }
  }

  std::vector<ProbePrediction> preds;
  std::vector<ProbeTask> golds;
  preds.reserve(test_idx.size());
  for (size_t i : test_idx) {
    const ProbeTask& t = tasks[i];
    Tensor out = probe(features.row(t));
    ProbePrediction p;
    if (listmax) {
      p.index = static_cast<int>(argmax_row(out, 0, 0, inputs_per_task));
    } else {
      p.sigexp.significand = out.at(0, 0);
      p.sigexp.exponent = bin_min + static_cast<int>(argmax_row(out, 0, 1, n_bins));
    }
    preds.push_back(p);
    golds.push_back(t);
  }

  ProbeResult result;
  result.metrics = evaluate(preds, golds, kind);
  result.test_count = test_idx.size();
  result.exp_bin_min = bin_min;
  result.exp_bin_max = bin_max;
  return result;
}

ProbeMetrics evaluate(const std::vector<ProbePrediction>& preds,
                      const std::vector<ProbeTask>& golds, ProbeTaskKind kind) {
  if (preds.size() != golds.size())
    throw LengthMismatch("evaluate: prediction and gold counts differ");
  if (preds.empty()) throw LengthMismatch("evaluate: empty evaluation set");
  ProbeMetrics m;
  double n = static_cast<double>(preds.size());
  if (kind == ProbeTaskKind::ListMax) {
    size_t hit = 0;
    for (size_t i = 0; i < preds.size(); ++i)
      if (preds[i].index == golds[i].gold_index) ++hit;
    m.acc = static_cast<double>(hit) / n;
    return m;
  }
  double sq = 0.0;
  size_t hit = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    double d = preds[i].sigexp.significand - golds[i].gold_sigexp.significand;
    sq += d * d;
    if (preds[i].sigexp.exponent == golds[i].gold_sigexp.exponent) ++hit;
  }
  m.rmse_sig = std::sqrt(sq / n);
  m.acc_exp = static_cast<double>(hit) / n;
  return m;
}

}  // namespace numlex
