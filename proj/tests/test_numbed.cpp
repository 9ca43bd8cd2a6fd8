#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "numlex/errors.hpp"
#include "numlex/numbed.hpp"
#include "numlex/rng.hpp"

using namespace numlex;
using numlex::testing::check_gradients;

namespace {

double cosine(const Tensor& a, const Tensor& b) {
  double dot = 0, na = 0, nb = 0;
  for (size_t j = 0; j < a.cols(); ++j) {
    dot += a.at(0, j) * b.at(0, j);
    na += a.at(0, j) * a.at(0, j);
    nb += b.at(0, j) * b.at(0, j);
  }
  return dot / std::sqrt(na * nb);
}

NumBedConfig small(NumBedKind kind) {
  NumBedConfig cfg;
  cfg.kind = kind;
  cfg.char_embed_dim = 4;
  cfg.lstm_hidden = 3;
  cfg.lstm_layers = 2;
  cfg.model_dim = 6;
  cfg.former_heads = 2;
  cfg.former_ff = 5;
  return cfg;
}

}  // namespace

TEST_CASE("digit positions measure distance from the decimal point") {
  auto p = digit_positions("12.5");
  REQUIRE(p.size() == 4);
  CHECK(p[0] == 1);
  CHECK(p[1] == 0);
  CHECK(p[2] == kDigitPositionSentinel);
  CHECK(p[3] == -1);

  auto q = digit_positions("-1,234%");
  CHECK(q[0] == kDigitPositionSentinel);  // sign
  CHECK(q[1] == 3);
  CHECK(q[2] == kDigitPositionSentinel);  // comma
  CHECK(q[3] == 2);
  CHECK(q[5] == 0);
  CHECK(q[6] == kDigitPositionSentinel);  // percent

  auto r = digit_positions(".25");
  CHECK(r[1] == -1);
  CHECK(r[2] == -2);
}

TEST_CASE("char vocabulary covers exactly the numtok charset") {
  for (size_t i = 0; i < NumTokCharset::size; ++i) {
    char c = NumTokCharset::chars[i];
    int idx = CharVocab::index_of(c);
    CHECK(idx >= 0);
    CHECK(idx < 15);
    CHECK(CharVocab::char_at(idx) == c);
  }
  CHECK(CharVocab::index_of('x') == CharVocab::unk_index);
}

TEST_CASE("embedders meet the shape contract and distinguish digit order") {
  for (NumBedKind kind : {NumBedKind::CharLstm, NumBedKind::CharFormer, NumBedKind::Dice}) {
    CAPTURE(numbed_kind_name(kind));
    auto emb = make_embedder(small(kind), 42);
    Tensor a = emb->embed("123");
    CHECK(a.rows() == 1);
    CHECK(a.cols() == 6);
    if (kind != NumBedKind::Dice) {
      Tensor b = emb->embed("321");
      bool differs = false;
      for (size_t j = 0; j < a.cols(); ++j)
        if (a.at(0, j) != b.at(0, j)) differs = true;
      CHECK(differs);
    }
    CHECK_THROWS_AS(emb->embed(""), EmptyNumber);
  }
}

TEST_CASE("embedding is deterministic for a fixed seed and input") {
  for (NumBedKind kind : {NumBedKind::CharLstm, NumBedKind::CharFormer, NumBedKind::Dice}) {
    auto e1 = make_embedder(small(kind), 7);
    auto e2 = make_embedder(small(kind), 7);
    Tensor a = e1->embed("1,234.5%");
    Tensor b = e2->embed("1,234.5%");
    for (size_t j = 0; j < a.cols(); ++j) CHECK(a.at(0, j) == b.at(0, j));
  }
}

TEST_CASE("DICE vectors are unit norm with the reserved sign coordinate") {
  NumBedConfig cfg = small(NumBedKind::Dice);
  cfg.model_dim = 8;
  DiceEmbedder dice(cfg);
  for (double v : {0.0, 0.5, -3.0, 2082.0, 1e9, -1e-5}) {
    CAPTURE(v);
    Tensor e = dice.embed_value(v);
    double norm = 0;
    for (size_t j = 0; j < e.cols(); ++j) norm += e.at(0, j) * e.at(0, j);
    CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e.at(0, 7) == 0.2 * sgn(v));
  }
}

TEST_CASE("DICE similarity is monotone in magnitude over random triples") {
  NumBedConfig cfg = small(NumBedKind::Dice);
  cfg.model_dim = 16;
  DiceEmbedder dice(cfg);
  Rng rng(99);
  for (int iter = 0; iter < 1000; ++iter) {
    double a = std::exp(rng.uniform(-5.0, 20.0));
    double b = std::exp(rng.uniform(-5.0, 20.0));
    double c = std::exp(rng.uniform(-5.0, 20.0));
    if (a > b) std::swap(a, b);
    if (b > c) std::swap(b, c);
    if (a > b) std::swap(a, b);
    Tensor ea = dice.embed_value(a), eb = dice.embed_value(b), ec = dice.embed_value(c);
    CHECK(cosine(ea, eb) >= cosine(ea, ec) - 1e-12);
  }
}

TEST_CASE("DICE percent strings embed the scaled value") {
  NumBedConfig cfg = small(NumBedKind::Dice);
  DiceEmbedder dice(cfg);
  Tensor a = dice.embed("50%");
  Tensor b = dice.embed_value(0.5);
  for (size_t j = 0; j < a.cols(); ++j) CHECK(a.at(0, j) == b.at(0, j));
}

TEST_CASE("size tiers step parameter counts by roughly 10x") {
  for (NumBedKind kind : {NumBedKind::CharLstm, NumBedKind::CharFormer}) {
    CAPTURE(numbed_kind_name(kind));
    auto s = make_embedder(NumBedConfig::for_tier(kind, "0.1M", 16), 1);
    auto m = make_embedder(NumBedConfig::for_tier(kind, "1M", 16), 1);
    auto l = make_embedder(NumBedConfig::for_tier(kind, "9M", 16), 1);
    double ns = static_cast<double>(s->params()->total_elements());
    double nm = static_cast<double>(m->params()->total_elements());
    double nl = static_cast<double>(l->params()->total_elements());
    CHECK(nm / ns > 3.0);
    CHECK(nm / ns < 30.0);
    CHECK(nl / nm > 3.0);
    CHECK(nl / nm < 30.0);
  }
  CHECK_THROWS_AS(NumBedConfig::for_tier(NumBedKind::CharLstm, "huge", 16), ConfigError);
}

TEST_CASE("trainable embedders pass finite-difference gradient checks") {
  for (NumBedKind kind : {NumBedKind::CharLstm, NumBedKind::CharFormer}) {
    CAPTURE(numbed_kind_name(kind));
    for (uint64_t seed = 1; seed <= 3; ++seed) {
      auto emb = make_embedder(small(kind), seed);
      check_gradients(*emb->params(), [&] { return sum_all(tanh_op(emb->embed("-12.5%"))); });
    }
  }
}

TEST_CASE("rebinding an embedder to saved parameters reproduces its output") {
  for (NumBedKind kind : {NumBedKind::CharLstm, NumBedKind::CharFormer}) {
    auto emb = make_embedder(small(kind), 5);
    auto again = make_embedder(small(kind), emb->params()->clone(true));
    Tensor a = emb->embed("9,870.1");
    Tensor b = again->embed("9,870.1");
    for (size_t j = 0; j < a.cols(); ++j) CHECK(a.at(0, j) == b.at(0, j));
  }
}

TEST_CASE("combine implements the three span-merge modes") {
  Tensor num = Tensor::from(1, 3, {1, 2, 3});
  Tensor b1 = Tensor::from(1, 3, {10, 10, 10});
  Tensor b2 = Tensor::from(1, 3, {20, 20, 20});

  auto addback = combine(NumTokMode::AddBack, num, {b1, b2});
  REQUIRE(addback.size() == 3);
  CHECK(addback[2].at(0, 0) == 1);

  auto repl = combine(NumTokMode::Replace, num, {b1, b2});
  REQUIRE(repl.size() == 1);
  CHECK(repl[0].at(0, 2) == 3);

  auto aoe = combine(NumTokMode::AddOnEmbedding, num, {b1, b2});
  REQUIRE(aoe.size() == 2);
  CHECK(aoe[0].at(0, 0) == 11);
  CHECK(aoe[1].at(0, 1) == 22);

  CHECK_THROWS_AS(combine(NumTokMode::AddBack, num, {Tensor::from(1, 2, {1, 2})}), DimMismatch);
}

TEST_CASE("inputs longer than max_chars keep the leftmost characters") {
  NumBedConfig cfg = small(NumBedKind::CharLstm);
  cfg.max_chars = 4;
  CharLstmEmbedder emb(cfg, 3);
  Tensor full = emb.embed("123456789");
  Tensor head = emb.embed("1234");
  for (size_t j = 0; j < full.cols(); ++j) CHECK(full.at(0, j) == head.at(0, j));
}
