#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>

#include "numlex/errors.hpp"
#include "numlex/numtok.hpp"
#include "numlex/probing.hpp"
#include "numlex/rng.hpp"

using namespace numlex;

namespace {

// Emits the gold answer directly as features; any residual probe error is
// then attributable to the probe, not the representation.
class OracleEmbedder : public NumberEmbedder {
 public:
  OracleEmbedder() {
    cfg_.kind = NumBedKind::Dice;
    cfg_.model_dim = 20;
  }
  Tensor embed(const std::string& num) override {
    NumericValue v = parse_value(num);
    SigExp se = decompose(v);
    std::vector<double> f(20, 0.0);
    f[0] = se.significand / 10.0;
    f[1] = sgn(v.value);
    f[2] = 1.0;
    int bin = std::clamp(se.exponent + 6, 0, 16);  // exponents -6..10 one-hot
    f[3 + bin] = 1.0;
    return Tensor::from(1, 20, std::move(f));
  }
  const NumBedConfig& config() const override { return cfg_; }

 private:
  NumBedConfig cfg_;
};

NumBedConfig dice_cfg(size_t dim = 8) {
  NumBedConfig cfg;
  cfg.kind = NumBedKind::Dice;
  cfg.model_dim = dim;
  return cfg;
}

}  // namespace

TEST_CASE("task names round-trip") {
  for (ProbeTaskKind k : {ProbeTaskKind::Decoding, ProbeTaskKind::Addition,
                          ProbeTaskKind::Subtraction, ProbeTaskKind::ListMax})
    CHECK(probe_task_from(std::string(probe_task_name(k))) == k);
  CHECK_THROWS_AS(probe_task_from("sort"), ConfigError);
}

TEST_CASE("generated numbers are always single full recognized spans") {
  NumberGenConfig cfg;
  cfg.count = 5000;
  cfg.seed = 3;
  auto nums = generate_numbers(cfg);
  REQUIRE(nums.size() == 5000);
  for (const auto& n : nums) {
    auto spans = recognize_numbers(n);
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].start == 0);
    CHECK(spans[0].end == n.size());
    CHECK(spans[0].text == n);
  }
  CHECK(generate_numbers(NumberGenConfig{.count = 0}).empty());
}

TEST_CASE("generator fractions land near their targets") {
  NumberGenConfig cfg;
  cfg.seed = 9;
  auto nums = generate_numbers(cfg);
  double ints = 0, pct = 0, neg = 0, comma = 0;
  for (const auto& n : nums) {
    if (n.find('.') == std::string::npos) ints += 1;
    if (n.back() == '%') pct += 1;
    if (n.front() == '-') neg += 1;
    if (n.find(',') != std::string::npos) comma += 1;
  }
  double c = static_cast<double>(nums.size());
  CHECK(ints / c > 0.89);
  CHECK(ints / c < 0.93);
  CHECK(pct / c > 0.010);
  CHECK(pct / c < 0.022);
  CHECK(comma / c > 0.040);
  CHECK(comma / c < 0.062);
  CHECK(neg / c < 0.005);
}

TEST_CASE("extreme fractions force the corresponding surface forms") {
  NumberGenConfig all_pct;
  all_pct.count = 300;
  all_pct.percent_fraction = 1.0;
  for (const auto& n : generate_numbers(all_pct)) CHECK(n.back() == '%');

  NumberGenConfig all_neg;
  all_neg.count = 300;
  all_neg.negative_fraction = 1.0;
  for (const auto& n : generate_numbers(all_neg)) CHECK(n.front() == '-');

  NumberGenConfig dots;
  dots.count = 300;
  dots.integer_fraction = 0.0;
  dots.comma_fraction = 0.0;
  dots.percent_fraction = 0.0;
  dots.negative_fraction = 0.0;
  dots.dot_started_fraction = 1.0;
  dots.e_min = -4;
  dots.e_max = -1;
  for (const auto& n : generate_numbers(dots)) CHECK(n.front() == '.');

  NumberGenConfig bad;
  bad.integer_fraction = 1.5;
  CHECK_THROWS_AS(generate_numbers(bad), ConfigError);
  NumberGenConfig inverted;
  inverted.e_min = 5;
  inverted.e_max = 2;
  CHECK_THROWS_AS(generate_numbers(inverted), ConfigError);
}

TEST_CASE("task construction produces the documented gold answers") {
  Rng rng(4);
  auto dec = make_task(ProbeTaskKind::Decoding, {"3142"}, rng);
  REQUIRE(dec.size() == 1);
  CHECK(dec[0].gold_sigexp.exponent == 3);
  CHECK(dec[0].gold_sigexp.significand == doctest::Approx(3.142).epsilon(1e-12));

  auto sub = make_task(ProbeTaskKind::Subtraction, {"5", "5"}, rng);
  CHECK(sub[0].gold_sigexp == SigExp{0.0, 0});

  auto add = make_task(ProbeTaskKind::Addition, {"1.76%", "2.50%"}, rng);
  CHECK(add[0].gold_sigexp.exponent == -2);
  CHECK(add[0].gold_sigexp.significand == doctest::Approx(4.26).epsilon(1e-9));

  auto lm = make_task(ProbeTaskKind::ListMax, {"1", "9", "3", "2", "5"}, rng);
  REQUIRE(lm.size() == 1);
  CHECK(lm[0].gold_index == 1);
  auto lm2 = make_task(ProbeTaskKind::ListMax, {"5", "2", "3", "9", "1"}, rng);
  CHECK(lm2[0].gold_index == 3);
}

TEST_CASE("degenerate and invalid task requests are rejected") {
  Rng rng(5);
  std::vector<std::string> same(10, "7");
  CHECK_THROWS_AS(make_task(ProbeTaskKind::ListMax, same, rng), DegenerateTask);
  CHECK_THROWS_AS(make_task(ProbeTaskKind::Decoding, {}, rng), ConfigError);
  CHECK_THROWS_AS(make_task(ProbeTaskKind::ListMax, {"1", "2", "3"}, rng, 5), ConfigError);
  CHECK_THROWS_AS(make_task(ProbeTaskKind::ListMax, {"1", "2", "3"}, rng, 1), ConfigError);
}

TEST_CASE("listmax gold always points at the strict maximum") {
  NumberGenConfig ng;
  ng.count = 600;
  ng.seed = 12;
  auto nums = generate_numbers(ng);
  Rng rng(12);
  auto tasks = make_task(ProbeTaskKind::ListMax, nums, rng);
  for (const auto& t : tasks) {
    REQUIRE(t.inputs.size() == 5);
    double best = parse_value(t.inputs[t.gold_index]).value;
    for (size_t j = 0; j < t.inputs.size(); ++j)
      if (static_cast<int>(j) != t.gold_index) CHECK(parse_value(t.inputs[j]).value < best);
  }
}

TEST_CASE("evaluate matches a naive recomputation") {
  Rng rng(77);
  std::vector<ProbePrediction> preds;
  std::vector<ProbeTask> golds;
  for (int i = 0; i < 100; ++i) {
    ProbeTask g;
    g.kind = ProbeTaskKind::Decoding;
    g.gold_sigexp = {rng.uniform(1.0, 10.0), static_cast<int>(rng.uniform_int(-3, 5))};
    ProbePrediction p;
    p.sigexp = {rng.uniform(1.0, 10.0), static_cast<int>(rng.uniform_int(-3, 5))};
    golds.push_back(g);
    preds.push_back(p);
  }
  ProbeMetrics m = evaluate(preds, golds, ProbeTaskKind::Decoding);
  double sq = 0;
  int hit = 0;
  for (int i = 0; i < 100; ++i) {
    double d = preds[i].sigexp.significand - golds[i].gold_sigexp.significand;
    sq += d * d;
    if (preds[i].sigexp.exponent == golds[i].gold_sigexp.exponent) ++hit;
  }
  CHECK(m.rmse_sig == doctest::Approx(std::sqrt(sq / 100.0)).epsilon(1e-12));
  CHECK(m.acc_exp == doctest::Approx(hit / 100.0).epsilon(1e-12));

  // Perfect and fully wrong extremes.
  std::vector<ProbePrediction> exact;
  for (const auto& g : golds) exact.push_back(ProbePrediction{g.gold_sigexp, -1});
  ProbeMetrics perfect = evaluate(exact, golds, ProbeTaskKind::Decoding);
  CHECK(perfect.rmse_sig == 0.0);
  CHECK(perfect.acc_exp == 1.0);

  std::vector<ProbePrediction> lp = {{.index = 2}, {.index = 0}};
  std::vector<ProbeTask> lg(2);
  lg[0].kind = lg[1].kind = ProbeTaskKind::ListMax;
  lg[0].gold_index = 2;
  lg[1].gold_index = 1;
  CHECK(evaluate(lp, lg, ProbeTaskKind::ListMax).acc == 0.5);

  CHECK_THROWS_AS(evaluate({}, {}, ProbeTaskKind::ListMax), LengthMismatch);
  CHECK_THROWS_AS(evaluate(lp, golds, ProbeTaskKind::ListMax), LengthMismatch);
}

TEST_CASE("an untrained listmax probe scores at chance level") {
  NumberGenConfig ng;
  ng.seed = 21;
  auto nums = generate_numbers(ng);
  Rng rng(21);
  auto tasks = make_task(ProbeTaskKind::ListMax, nums, rng);
  DiceEmbedder dice(dice_cfg());
  ProbeConfig pc;
  pc.epochs = 0;
  pc.seed = 21;
  ProbeResult r = train_probe(dice, tasks, pc);
  CHECK(r.test_count == tasks.size() - static_cast<size_t>(0.8 * tasks.size()));
  CHECK(r.metrics.acc > 0.10);
  CHECK(r.metrics.acc < 0.30);
}

TEST_CASE("oracle features let the probe nearly solve decoding") {
  NumberGenConfig ng;
  ng.count = 1000;
  ng.seed = 33;
  auto nums = generate_numbers(ng);
  Rng rng(33);
  auto tasks = make_task(ProbeTaskKind::Decoding, nums, rng);
  OracleEmbedder oracle;
  ProbeConfig pc;
  pc.hidden = 32;
  pc.epochs = 25;
  pc.seed = 33;
  ProbeResult r = train_probe(oracle, tasks, pc);
  CHECK(r.exp_bin_min <= 0);
  CHECK(r.exp_bin_max >= 4);
  CHECK(r.metrics.rmse_sig < 0.5);
  CHECK(r.metrics.acc_exp > 0.85);
}

TEST_CASE("probe training is deterministic for a fixed seed") {
  NumberGenConfig ng;
  ng.count = 400;
  ng.seed = 8;
  auto nums = generate_numbers(ng);
  Rng r1(8), r2(8);
  auto t1 = make_task(ProbeTaskKind::Decoding, nums, r1);
  auto t2 = make_task(ProbeTaskKind::Decoding, nums, r2);
  ProbeConfig pc;
  pc.epochs = 3;
  pc.hidden = 16;
  pc.seed = 8;
  DiceEmbedder d1(dice_cfg()), d2(dice_cfg());
  ProbeResult a = train_probe(d1, t1, pc);
  ProbeResult b = train_probe(d2, t2, pc);
  CHECK(a.metrics.rmse_sig == b.metrics.rmse_sig);
  CHECK(a.metrics.acc_exp == b.metrics.acc_exp);
}

TEST_CASE("joint training moves the embedder parameters, frozen mode does not") {
  NumberGenConfig ng;
  ng.count = 120;
  ng.seed = 14;
  auto nums = generate_numbers(ng);
  Rng rng(14);
  auto tasks = make_task(ProbeTaskKind::Decoding, nums, rng);

  NumBedConfig nc = NumBedConfig::for_tier(NumBedKind::CharLstm, "0.1M", 8);
  ProbeConfig pc;
  pc.hidden = 8;
  pc.epochs = 1;
  pc.seed = 14;

  auto moved = make_embedder(nc, 14);
  ParamSet before = moved->params()->clone(false);
  train_probe(*moved, tasks, pc);
  bool changed = false;
  auto bi = before.begin();
  for (auto mi = moved->params()->begin(); mi != moved->params()->end(); ++mi, ++bi)
    for (size_t i = 0; i < mi->second.size(); ++i)
      if (mi->second.data()[i] != bi->second.data()[i]) changed = true;
  CHECK(changed);

  auto frozen = make_embedder(nc, 14);
  ParamSet fb = frozen->params()->clone(false);
  ProbeConfig pf = pc;
  pf.joint = false;
  train_probe(*frozen, tasks, pf);
  auto fi = fb.begin();
  for (auto mi = frozen->params()->begin(); mi != frozen->params()->end(); ++mi, ++fi)
    for (size_t i = 0; i < mi->second.size(); ++i)
      CHECK(mi->second.data()[i] == fi->second.data()[i]);
}

TEST_CASE("train_probe validates its inputs") {
  DiceEmbedder dice(dice_cfg());
  ProbeConfig pc;
  CHECK_THROWS_AS(train_probe(dice, {}, pc), ConfigError);

  Rng rng(1);
  auto a = make_task(ProbeTaskKind::Decoding, {"1", "2"}, rng);
  auto b = make_task(ProbeTaskKind::Addition, {"1", "2"}, rng);
  std::vector<ProbeTask> mixed = {a[0], b[0]};
  CHECK_THROWS_AS(train_probe(dice, mixed, pc), ConfigError);

  ProbeConfig bad = pc;
  bad.train_fraction = 1.0;
  CHECK_THROWS_AS(train_probe(dice, a, bad), ConfigError);
}
