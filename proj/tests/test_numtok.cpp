#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <regex>
#include <string>
#include <vector>

#include "numlex/numtok.hpp"
#include "numlex/rng.hpp"

using namespace numlex;

namespace {

// Independent recognizer built on std::regex: maximal charset runs, then a
// longest-match scan with precedence thousands > conventional > dot-started,
// the trailing-dot trim, the thousands grouping backoff, and the
// sign-after-span separator rule.
const std::regex re_conv(R"([+-]?\d+(\.\d*)?%?)");
const std::regex re_thou(R"([+-]?\d{1,3}(,\d{3})*(\.\d+)?%?)");
const std::regex re_dot(R"([+-]?\.\d+%?)");

size_t re_match_len(const std::string& s, size_t pos, const std::regex& re, bool allow_sign) {
  if (!allow_sign && (s[pos] == '+' || s[pos] == '-')) return 0;
  std::smatch m;
  if (!std::regex_search(s.begin() + pos, s.end(), m, re, std::regex_constants::match_continuous))
    return 0;
  return static_cast<size_t>(m.length(0));
}

bool dig(char c) { return c >= '0' && c <= '9'; }

size_t oracle_thousands(const std::string& s, size_t pos, bool allow_sign) {
  size_t len = re_match_len(s, pos, re_thou, allow_sign);
  if (len == 0) return 0;
  // Grouping backoff: a match ending in a digit must not touch another digit.
  while (len > 0 && dig(s[pos + len - 1]) && pos + len < s.size() && dig(s[pos + len])) {
    std::string text = s.substr(pos, len);
    size_t comma = text.rfind(',');
    if (comma == std::string::npos) return 0;
    len = comma;
  }
  return len;
}

size_t oracle_conventional(const std::string& s, size_t pos, bool allow_sign) {
  size_t len = re_match_len(s, pos, re_conv, allow_sign);
  if (len >= 2 && s[pos + len - 1] == '%' && s[pos + len - 2] == '.') return len - 2;
  if (len >= 1 && s[pos + len - 1] == '.') return len - 1;
  return len;
}

std::vector<NumberSpan> oracle_recognize(const std::string& src) {
  std::vector<NumberSpan> out;
  size_t i = 0;
  while (i < src.size()) {
    if (!NumTokCharset::contains(src[i])) {
      ++i;
      continue;
    }
    size_t run_start = i;
    while (i < src.size() && NumTokCharset::contains(src[i])) ++i;
    std::string run = src.substr(run_start, i - run_start);
    size_t p = 0;
    size_t last_end = std::string::npos;
    while (p < run.size()) {
      bool allow_sign = (last_end != p);
      size_t lt = oracle_thousands(run, p, allow_sign);
      size_t lc = oracle_conventional(run, p, allow_sign);
      size_t ld = re_match_len(run, p, re_dot, allow_sign);
      size_t best = std::max({lt, lc, ld});
      if (best == 0) {
        ++p;
        continue;
      }
      NumberSpan sp;
      sp.text = run.substr(p, best);
      sp.start = run_start + p;
      sp.end = run_start + p + best;
      out.push_back(sp);
      last_end = p + best;
      p += best;
    }
  }
  return out;
}

std::vector<std::string> texts(const std::vector<NumberSpan>& spans) {
  std::vector<std::string> out;
  for (const auto& s : spans) out.push_back(s.text);
  return out;
}

std::string random_text(Rng& rng) {
  static const std::string pool = "0123456789%+-.,0123456789 ,. abz|:%%--++5";
  size_t len = static_cast<size_t>(rng.uniform_int(0, 40));
  std::string s;
  for (size_t i = 0; i < len; ++i)
    s.push_back(pool[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(pool.size()) - 1))]);
  return s;
}

}  // namespace

TEST_CASE("fixture: all three shapes and edge forms match the regex oracle") {
  struct Case {
    const char* input;
    std::vector<std::string> expected;
  };
  const Case cases[] = {
      {"1.76%-2.50%", {"1.76%", "2.50%"}},
      {"3142", {"3142"}},
      {"2,082", {"2,082"}},
      {"the total was 2,082 units", {"2,082"}},
      {".5", {".5"}},
      {"-.5", {"-.5"}},
      {"+.25%", {"+.25%"}},
      {"5.", {"5"}},
      {"grew by 5.", {"5"}},
      {"5.%", {"5"}},
      {"0.12", {"0.12"}},
      {"+3.14", {"+3.14"}},
      {"-0.5%", {"-0.5%"}},
      {"100%", {"100%"}},
      {"1,2345", {"1", "2345"}},
      {"12,34", {"12", "34"}},
      {"1,234,567.89%", {"1,234,567.89%"}},
      {"1,234,5678", {"1,234", "5678"}},
      {"12345,678", {"12345", "678"}},
      {"1,000", {"1,000"}},
      {"1,000.5", {"1,000.5"}},
      {"1..5", {"1", ".5"}},
      {"--5", {"-5"}},
      {"++5", {"+5"}},
      {"1.76%+2.50%", {"1.76%", "2.50%"}},
      {"5-3", {"5", "3"}},
      {"5 -3", {"5", "-3"}},
      {"a1b", {"1"}},
      {"v1.2.3", {"1.2", ".3"}},
      {"", {}},
      {"no numbers here", {}},
      {"%,+-.", {}},
      {"+", {}},
      {"-", {}},
      {".", {}},
      {",", {}},
      {"0", {"0"}},
      {"-0", {"-0"}},
      {"007", {"007"}},
      {"1,", {"1"}},
      {",1", {"1"}},
      {"1,23", {"1", "23"}},
      {"3.14159", {"3.14159"}},
      {"10,000,000", {"10,000,000"}},
      {"-1,234.56", {"-1,234.56"}},
      {"price: 19.99, tax: 1.60", {"19.99", "1.60"}},
      {"range .1-.2", {".1", ".2"}},
      {"50%-60%", {"50%", "60%"}},
      {"2019-2020", {"2019", "2020"}},
      {"+1-2+3", {"+1", "2", "3"}},
  };
  for (const auto& c : cases) {
    CAPTURE(c.input);
    auto got = recognize_numbers(c.input);
    CHECK(texts(got) == c.expected);
    CHECK(texts(oracle_recognize(c.input)) == c.expected);
  }
}

TEST_CASE("fixture covers shapes") {
  CHECK(recognize_numbers("2,082")[0].shape == NumberShape::ThousandsSeparated);
  CHECK(recognize_numbers("3.14")[0].shape == NumberShape::Conventional);
  CHECK(recognize_numbers("-.5%")[0].shape == NumberShape::DotStartedDecimal);
}

TEST_CASE("fuzz: implementation agrees with the regex oracle") {
  Rng rng(20240817);
  for (int iter = 0; iter < 4000; ++iter) {
    std::string s = random_text(rng);
    CAPTURE(s);
    auto got = recognize_numbers(s);
    auto want = oracle_recognize(s);
    REQUIRE(got.size() == want.size());
    for (size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].text == want[i].text);
      CHECK(got[i].start == want[i].start);
      CHECK(got[i].end == want[i].end);
    }
  }
}

TEST_CASE("fuzz: spans are sorted, disjoint, verbatim, and idempotent") {
  Rng rng(4242);
  for (int iter = 0; iter < 3000; ++iter) {
    std::string s = random_text(rng);
    CAPTURE(s);
    auto spans = recognize_numbers(s);
    size_t prev_end = 0;
    for (const auto& sp : spans) {
      CHECK(sp.start >= prev_end);
      CHECK(sp.end > sp.start);
      CHECK(s.substr(sp.start, sp.end - sp.start) == sp.text);
      prev_end = sp.end;
      // Re-recognizing an extracted span reproduces it whole.
      auto again = recognize_numbers(sp.text);
      REQUIRE(again.size() == 1);
      CHECK(again[0].text == sp.text);
    }
  }
}

TEST_CASE("filter_split_check rejects out-of-charset input") {
  CHECK_THROWS_AS(filter_split_check("12a"), std::invalid_argument);
}

TEST_CASE("AddBack round-trip: dropping Num tokens restores base encoding") {
  Rng rng(77);
  WhitespaceTokenizer ws;
  for (int iter = 0; iter < 2000; ++iter) {
    std::string s = random_text(rng);
    CAPTURE(s);
    auto base = ws.encode(s);
    auto seq = tokenize(s, ws, NumTokMode::AddBack);
    std::vector<int> kept;
    for (const auto& t : seq.tokens)
      if (t.kind == TokenKind::Vocab) kept.push_back(t.vocab_id);
    std::vector<int> want;
    for (const auto& t : base) want.push_back(t.id);
    CHECK(kept == want);
  }
}

TEST_CASE("AddBack places the Num token right after the covering subwords") {
  WhitespaceTokenizer ws;
  auto seq = tokenize("sum 1,234 end", ws, NumTokMode::AddBack);
  std::vector<TokenKind> kinds;
  for (const auto& t : seq.tokens) kinds.push_back(t.kind);
  // "sum" "1" "," "234" <num> "end"
  REQUIRE(kinds.size() == 6);
  CHECK(kinds[4] == TokenKind::Num);
  CHECK(seq.tokens[4].span->text == "1,234");
  CHECK(kinds[5] == TokenKind::Vocab);
}

TEST_CASE("Replace drops covered subwords and keeps span order") {
  Rng rng(88);
  WhitespaceTokenizer ws;
  for (int iter = 0; iter < 1500; ++iter) {
    std::string s = random_text(rng);
    CAPTURE(s);
    auto seq = tokenize(s, ws, NumTokMode::Replace);
    std::vector<std::string> nums;
    for (const auto& t : seq.tokens) {
      if (t.kind == TokenKind::Num) {
        nums.push_back(t.span->text);
      } else {
        // No surviving vocab token overlaps a recognized span.
        for (const auto& sp : seq.numbers)
          CHECK_FALSE((t.start < sp.end && t.end > sp.start));
      }
    }
    CHECK(nums == texts(seq.numbers));
  }
}

TEST_CASE("AddOnEmbedding keeps all subwords and annotates covered ones") {
  WhitespaceTokenizer ws;
  std::string s = "x 12.5% y";
  auto seq = tokenize(s, ws, NumTokMode::AddOnEmbedding);
  auto base = ws.encode(s);
  REQUIRE(seq.tokens.size() == base.size());
  for (size_t i = 0; i < base.size(); ++i) {
    CHECK(seq.tokens[i].vocab_id == base[i].id);
    bool covered = base[i].start < 8 && base[i].end > 2;  // span "12.5%" at [2,8)
    CHECK(seq.tokens[i].span.has_value() == covered);
  }
}

TEST_CASE("BPE tokenizer offsets tile and round-trip through AddBack") {
  std::vector<std::string> docs = {"total 1,234 and 5.5% growth", "1,234 again and again 5.5%"};
  BpeTokenizer bpe(40);
  bpe.fit(docs);
  for (const auto& d : docs) {
    auto base = bpe.encode(d);
    size_t prev = 0;
    for (const auto& t : base) {
      CHECK(t.start >= prev);
      prev = t.end;
    }
    auto seq = tokenize(d, bpe, NumTokMode::AddBack);
    std::vector<int> kept;
    for (const auto& t : seq.tokens)
      if (t.kind == TokenKind::Vocab) kept.push_back(t.vocab_id);
    std::vector<int> want;
    for (const auto& t : base) want.push_back(t.id);
    CHECK(kept == want);
  }
}

TEST_CASE("frozen whitespace tokenizer maps unseen pieces to <unk>") {
  WhitespaceTokenizer ws;
  ws.fit({"alpha beta"});
  ws.freeze();
  auto toks = ws.encode("alpha gamma");
  REQUIRE(toks.size() == 2);
  CHECK(toks[0].id != ws.unk_id());
  CHECK(toks[1].id == ws.unk_id());
}
