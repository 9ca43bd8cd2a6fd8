#include "numlex/numtok.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>

#include "numlex/errors.hpp"

namespace numlex {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_sign(char c) { return c == '+' || c == '-'; }

// Maximal match of [+-]?\d+(?:\.\d*)?%? at `pos`.
size_t match_conventional(std::string_view s, size_t pos, bool allow_sign) {
  size_t i = pos, n = s.size();
  if (i < n && is_sign(s[i])) {
    if (!allow_sign) return 0;
    ++i;
  }
  size_t d = i;
  while (i < n && is_digit(s[i])) ++i;
  if (i == d) return 0;
  if (i < n && s[i] == '.') {
    ++i;
    while (i < n && is_digit(s[i])) ++i;
  }
  if (i < n && s[i] == '%') ++i;
  return i - pos;
}

// Maximal match of [+-]?\.\d+%? at `pos`.
size_t match_dot_started(std::string_view s, size_t pos, bool allow_sign) {
  size_t i = pos, n = s.size();
  if (i < n && is_sign(s[i])) {
    if (!allow_sign) return 0;
    ++i;
  }
  if (i >= n || s[i] != '.') return 0;
  ++i;
  size_t d = i;
  while (i < n && is_digit(s[i])) ++i;
  if (i == d) return 0;
  if (i < n && s[i] == '%') ++i;
  return i - pos;
}

// Match of [+-]?\d{1,3}(?:,\d{3})*(?:\.\d+)?%? at `pos`, with the grouping
// check: a candidate ending in a digit must not be directly followed by a
// digit, otherwise trailing comma groups are dropped (and the whole match is
// rejected when the bare head is still extendable). This rejects e.g.
// "1,234" inside "1,2345", where the comma is not a thousands separator.
size_t match_thousands(std::string_view s, size_t pos, bool allow_sign) {
  size_t i = pos, n = s.size();
  if (i < n && is_sign(s[i])) {
    if (!allow_sign) return 0;
    ++i;
  }
  size_t head = i;
  while (i < n && is_digit(s[i]) && i - head < 3) ++i;
  if (i == head) return 0;
  size_t after_head = i;
  std::vector<size_t> group_ends;
  while (i + 3 < n && s[i] == ',' && is_digit(s[i + 1]) && is_digit(s[i + 2]) &&
         is_digit(s[i + 3])) {
    i += 4;
    group_ends.push_back(i);
  }
  bool has_fraction = false;
  if (i < n && s[i] == '.' && i + 1 < n && is_digit(s[i + 1])) {
    i += 2;
    while (i < n && is_digit(s[i])) ++i;
    has_fraction = true;
  }
  if (i < n && s[i] == '%') ++i;
  size_t end = i;
  // Grouping check applies only when the match ends in a bare digit.
  if (!has_fraction && s[end - 1] != '%' && end < n && is_digit(s[end])) {
    while (!group_ends.empty() && end < n && is_digit(s[end])) {
      group_ends.pop_back();
      end = group_ends.empty() ? after_head : group_ends.back();
    }
    if (end < n && is_digit(s[end])) return 0;
  }
  return end - pos;
}

// A '.' not followed by a digit is sentence punctuation, not part of the
// number ("grew by 5." yields "5"). Only the conventional pattern can end
// that way ("5." or "5.%").
size_t trim_trailing_dot(std::string_view s, size_t pos, size_t len) {
  if (len >= 2 && s[pos + len - 1] == '%' && s[pos + len - 2] == '.') return len - 2;
  if (len >= 1 && s[pos + len - 1] == '.') return len - 1;
  return len;
}

NumberShape classify(std::string_view text) {
  if (text.find(',') != std::string_view::npos) return NumberShape::ThousandsSeparated;
  size_t i = (!text.empty() && is_sign(text[0])) ? 1 : 0;
  if (i < text.size() && text[i] == '.') return NumberShape::DotStartedDecimal;
  return NumberShape::Conventional;
}

}  // namespace

std::string_view shape_name(NumberShape s) {
  switch (s) {
    case NumberShape::Conventional: return "conventional";
    case NumberShape::ThousandsSeparated: return "thousands_separated";
    case NumberShape::DotStartedDecimal: return "dot_started_decimal";
  }
  return "?";
}

std::string_view mode_name(NumTokMode m) {
  switch (m) {
    case NumTokMode::AddBack: return "addback";
    case NumTokMode::Replace: return "replace";
    case NumTokMode::AddOnEmbedding: return "addembed";
  }
  return "?";
}

bool NumTokCharset::contains(char c) {
  return is_digit(c) || c == '%' || c == '+' || c == '-' || c == '.' || c == ',';
}

std::vector<NumberSpan> filter_split_check(std::string_view candidate) {
  for (char c : candidate)
    if (!NumTokCharset::contains(c))
      throw std::invalid_argument("filter_split_check: character outside NumTok charset");

  std::vector<NumberSpan> out;
  size_t i = 0;
  size_t last_span_end = std::string_view::npos;
  while (i < candidate.size()) {
    // A sign directly after a completed number is a separator, not a sign
    // ("1.76%-2.50%" is two positive percentages).
    bool allow_sign = (last_span_end != i);
    size_t lt = match_thousands(candidate, i, allow_sign);
    size_t lc = match_conventional(candidate, i, allow_sign);
    if (lc) lc = trim_trailing_dot(candidate, i, lc);
    size_t ld = match_dot_started(candidate, i, allow_sign);
    // Longest match wins; precedence thousands > conventional > dot-started
    // breaks ties.
    size_t best = std::max({lt, lc, ld});
    if (best == 0) {
      ++i;
      continue;
    }
    std::string_view text = candidate.substr(i, best);
    out.push_back(NumberSpan{std::string(text), i, i + best, classify(text)});
    last_span_end = i + best;
    i += best;
  }
  return out;
}

std::vector<NumberSpan> recognize_numbers(std::string_view source) {
  std::vector<NumberSpan> out;
  size_t i = 0;
  while (i < source.size()) {
    if (!NumTokCharset::contains(source[i])) {
      ++i;
      continue;
    }
    size_t run_start = i;
    while (i < source.size() && NumTokCharset::contains(source[i])) ++i;
    for (NumberSpan sp : filter_split_check(source.substr(run_start, i - run_start))) {
      sp.start += run_start;
      sp.end += run_start;
      out.push_back(std::move(sp));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Base tokenizers
// ---------------------------------------------------------------------------

namespace {

enum class CharClass { Space, Letter, Digit, Symbol };

CharClass classify_char(unsigned char c) {
  if (std::isspace(c)) return CharClass::Space;
  if (std::isalpha(c) || c >= 0x80) return CharClass::Letter;
  if (std::isdigit(c)) return CharClass::Digit;
  return CharClass::Symbol;
}

// Shared pre-tokenization: letter runs, digit runs, single symbols.
std::vector<std::pair<size_t, size_t>> segment(const std::string& text) {
  std::vector<std::pair<size_t, size_t>> segs;
  size_t i = 0, n = text.size();
  while (i < n) {
    CharClass cc = classify_char(static_cast<unsigned char>(text[i]));
    if (cc == CharClass::Space) {
      ++i;
      continue;
    }
    if (cc == CharClass::Symbol) {
      segs.emplace_back(i, i + 1);
      ++i;
      continue;
    }
    size_t start = i;
    while (i < n && classify_char(static_cast<unsigned char>(text[i])) == cc) ++i;
    segs.emplace_back(start, i);
  }
  return segs;
}

}  // namespace

WhitespaceTokenizer::WhitespaceTokenizer() { intern("<unk>"); }

int WhitespaceTokenizer::intern(const std::string& piece) {
  auto it = index_.find(piece);
  if (it != index_.end()) return it->second;
  if (frozen_) return unk_id();
  int id = static_cast<int>(entries_.size());
  entries_.push_back(piece);
  index_.emplace(piece, id);
  return id;
}

int WhitespaceTokenizer::id_of(const std::string& piece) const {
  auto it = index_.find(piece);
  return it == index_.end() ? unk_id() : it->second;
}

std::string WhitespaceTokenizer::token_text(int id) const {
  if (id < 0 || id >= static_cast<int>(entries_.size()))
    throw BaseTokenizerError("token id out of range");
  return entries_[id];
}

std::vector<BaseToken> WhitespaceTokenizer::encode(const std::string& text) {
  std::vector<BaseToken> out;
  for (auto [s, e] : segment(text)) out.push_back({intern(text.substr(s, e - s)), s, e});
  return out;
}

void WhitespaceTokenizer::fit(const std::vector<std::string>& docs) {
  for (const auto& d : docs) encode(d);
}

BpeTokenizer::BpeTokenizer(size_t merge_count) : target_merges_(merge_count) { intern("<unk>"); }

int BpeTokenizer::intern(const std::string& piece) {
  auto it = index_.find(piece);
  if (it != index_.end()) return it->second;
  int id = static_cast<int>(entries_.size());
  entries_.push_back(piece);
  index_.emplace(piece, id);
  return id;
}

std::string BpeTokenizer::token_text(int id) const {
  if (id < 0 || id >= static_cast<int>(entries_.size()))
    throw BaseTokenizerError("token id out of range");
  return entries_[id];
}

void BpeTokenizer::fit(const std::vector<std::string>& docs) {
  std::vector<std::vector<std::string>> runs;
  for (const auto& d : docs)
    for (auto [s, e] : segment(d)) {
      std::vector<std::string> chars;
      for (size_t i = s; i < e; ++i) chars.emplace_back(1, d[i]);
      runs.push_back(std::move(chars));
    }
  merges_.clear();
  merge_rank_.clear();
  for (size_t m = 0; m < target_merges_; ++m) {
    std::map<std::pair<std::string, std::string>, size_t> counts;
    for (const auto& run : runs)
      for (size_t i = 0; i + 1 < run.size(); ++i) counts[{run[i], run[i + 1]}]++;
    if (counts.empty()) break;
    auto best = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it)
      if (it->second > best->second) best = it;
    if (best->second < 2) break;
    auto [a, b] = best->first;
    merge_rank_[a + "\x01" + b] = static_cast<int>(merges_.size());
    merges_.emplace_back(a, b);
    for (auto& run : runs) {
      for (size_t i = 0; i + 1 < run.size();) {
        if (run[i] == a && run[i + 1] == b) {
          run[i] += b;
          run.erase(run.begin() + i + 1);
        } else {
          ++i;
        }
      }
    }
  }
}

std::vector<BaseToken> BpeTokenizer::encode(const std::string& text) {
  std::vector<BaseToken> out;
  for (auto [s, e] : segment(text)) {
    std::vector<std::string> pieces;
    std::vector<size_t> starts;
    for (size_t i = s; i < e; ++i) {
      pieces.emplace_back(1, text[i]);
      starts.push_back(i);
    }
    while (true) {
      int best_rank = -1;
      size_t best_i = 0;
      for (size_t i = 0; i + 1 < pieces.size(); ++i) {
        auto it = merge_rank_.find(pieces[i] + "\x01" + pieces[i + 1]);
        if (it != merge_rank_.end() && (best_rank < 0 || it->second < best_rank)) {
          best_rank = it->second;
          best_i = i;
        }
      }
      if (best_rank < 0) break;
      pieces[best_i] += pieces[best_i + 1];
      pieces.erase(pieces.begin() + best_i + 1);
      starts.erase(starts.begin() + best_i + 1);
    }
    for (size_t i = 0; i < pieces.size(); ++i) {
      size_t pe = (i + 1 < pieces.size()) ? starts[i + 1] : e;
      out.push_back({intern(pieces[i]), starts[i], pe});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Token-stream rewriting
// ---------------------------------------------------------------------------

TokenSequence tokenize(const std::string& source, BaseTokenizer& base, NumTokMode mode) {
  auto bt = base.encode(source);
  size_t prev_end = 0;
  for (const auto& t : bt) {
    if (t.end <= t.start || t.start < prev_end || t.end > source.size())
      throw OffsetMismatch("base tokenizer offsets do not tile the input at byte " +
                           std::to_string(t.start));
    for (size_t j = prev_end; j < t.start; ++j)
      if (!std::isspace(static_cast<unsigned char>(source[j])))
        throw OffsetMismatch("non-whitespace gap in base tokenization at byte " +
                             std::to_string(j));
    prev_end = t.end;
  }

  auto spans = recognize_numbers(source);
  auto overlaps = [](const BaseToken& t, const NumberSpan& sp) {
    return t.start < sp.end && t.end > sp.start;
  };

  TokenSequence seq;
  seq.mode = mode;
  seq.numbers = spans;

  size_t si = 0;  // next span to place (Replace)
  for (size_t ti = 0; ti < bt.size(); ++ti) {
    const BaseToken& t = bt[ti];
    const NumberSpan* cover = nullptr;
    for (const auto& sp : spans)
      if (overlaps(t, sp)) {
        cover = &sp;
        break;
      }
    if (mode == NumTokMode::Replace && cover) {
      while (si < spans.size() && spans[si].end <= t.start) ++si;
      if (si < spans.size() && overlaps(t, spans[si])) {
        seq.tokens.push_back(
            Token{TokenKind::Num, -1, spans[si], spans[si].start, spans[si].end});
        ++si;
      }
      continue;  // drop the covered vocab token
    }
    Token tok{TokenKind::Vocab, t.id, std::nullopt, t.start, t.end};
    if (mode == NumTokMode::AddOnEmbedding && cover) tok.span = *cover;
    seq.tokens.push_back(tok);
    if (mode == NumTokMode::AddBack && cover) {
      bool last_covering = (ti + 1 >= bt.size()) || !overlaps(bt[ti + 1], *cover);
      if (last_covering)
        seq.tokens.push_back(Token{TokenKind::Num, -1, *cover, cover->start, cover->end});
    }
  }
  return seq;
}

}  // namespace numlex
