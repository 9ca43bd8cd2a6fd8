#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace numlex {

// ---------------------------------------------------------------------------
// Number recognition
// ---------------------------------------------------------------------------

enum class NumberShape { Conventional, ThousandsSeparated, DotStartedDecimal };

std::string_view shape_name(NumberShape s);

struct NumberSpan {
  std::string text;   // verbatim number string, e.g. "2,082" or "1.76%"
  size_t start = 0;   // byte offset into source
  size_t end = 0;     // exclusive
  NumberShape shape = NumberShape::Conventional;

  bool operator==(const NumberSpan&) const = default;
};

// The closed character set numbers are built from: digits, '%', '+', '-',
// '.', and the thousands separator ','.
struct NumTokCharset {
  static bool contains(char c);
  static constexpr const char* chars = "0123456789%+-.,";
  static constexpr size_t size = 15;
};

// Scans arbitrary text and returns all recognized numbers, non-overlapping,
// sorted by start offset.
std::vector<NumberSpan> recognize_numbers(std::string_view source);

// The split/check stage over a single run of charset characters. Offsets in
// the returned spans are relative to `candidate`. Throws std::invalid_argument
// if `candidate` contains characters outside the charset.
std::vector<NumberSpan> filter_split_check(std::string_view candidate);

// ---------------------------------------------------------------------------
// Token stream rewriting
// ---------------------------------------------------------------------------

enum class TokenKind { Vocab, Num, Mask, Cls, Sep };
enum class NumTokMode { AddBack, Replace, AddOnEmbedding };

std::string_view mode_name(NumTokMode m);

struct Token {
  TokenKind kind = TokenKind::Vocab;
  int vocab_id = -1;                // valid for Vocab
  std::optional<NumberSpan> span;  // always set for Num; set on Vocab tokens
                                   // covering a number in AddOnEmbedding mode
  size_t start = 0, end = 0;       // source byte range (zero for specials)
};

struct TokenSequence {
  std::vector<Token> tokens;
  NumTokMode mode = NumTokMode::AddBack;
  std::vector<NumberSpan> numbers;  // all spans recognized in the source
};

struct BaseToken {
  int id = -1;
  size_t start = 0, end = 0;
};

// Injected subword tokenizer contract: encode text into vocab ids with byte
// offsets that tile the input (sorted, non-overlapping, whitespace-only gaps).
class BaseTokenizer {
 public:
  virtual ~BaseTokenizer() = default;
  virtual std::vector<BaseToken> encode(const std::string& text) = 0;
  virtual size_t vocab_size() const = 0;
  virtual std::string token_text(int id) const = 0;
};

// Whitespace + punctuation toy tokenizer. Splits into letter runs, digit
// runs, and single symbol characters. Vocabulary grows on first sight until
// freeze() is called; afterwards unseen tokens map to <unk>.
class WhitespaceTokenizer : public BaseTokenizer {
 public:
  WhitespaceTokenizer();
  std::vector<BaseToken> encode(const std::string& text) override;
  size_t vocab_size() const override { return entries_.size(); }
  std::string token_text(int id) const override;

  void fit(const std::vector<std::string>& docs);
  void freeze() { frozen_ = true; }
  int unk_id() const { return 0; }
  int id_of(const std::string& piece) const;

 private:
  int intern(const std::string& piece);
  std::vector<std::string> entries_;
  std::unordered_map<std::string, int> index_;
  bool frozen_ = false;
};

// Byte-pair-style trainable toy tokenizer. Pre-tokenizes like the whitespace
// tokenizer, then applies learned merges inside each run.
class BpeTokenizer : public BaseTokenizer {
 public:
  explicit BpeTokenizer(size_t merge_count = 200);
  void fit(const std::vector<std::string>& docs);
  std::vector<BaseToken> encode(const std::string& text) override;
  size_t vocab_size() const override { return entries_.size(); }
  std::string token_text(int id) const override;
  size_t merge_count() const { return merges_.size(); }

 private:
  int intern(const std::string& piece);
  size_t target_merges_;
  std::vector<std::pair<std::string, std::string>> merges_;
  std::unordered_map<std::string, int> merge_rank_;
  std::vector<std::string> entries_;
  std::unordered_map<std::string, int> index_;
};

// Rewrites the base tokenizer's output with <num ?> tokens per `mode`.
TokenSequence tokenize(const std::string& source, BaseTokenizer& base, NumTokMode mode);

}  // namespace numlex
