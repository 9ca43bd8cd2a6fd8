#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "numlex/probing.hpp"

namespace numlex {

// Synthetic pre-training corpus: serialized table rows rendered
// "header : cell | cell | ..." mixed with short number-bearing sentences.
struct CorpusGenConfig {
  size_t docs = 200;
  size_t cells_min = 3;
  size_t cells_max = 6;
  double sentence_fraction = 0.3;
  NumberGenConfig numbers;
  uint64_t seed = 0;
};

std::vector<std::string> generate_corpus(const CorpusGenConfig& cfg);

struct CorpusStats {
  size_t docs = 0;
  size_t chars = 0;
  size_t numbers = 0;
};

CorpusStats corpus_stats(const std::vector<std::string>& docs);

// Reads documents from JSONL ({"text": ...} per line), CSV (each row
// serialized "first-cell : cell | cell"), or plain text (blank-line-separated
// blocks). Format chosen by extension (.jsonl/.json, .csv), with a fallback
// sniff for JSONL.
std::vector<std::string> ingest_corpus(const std::string& path);

}  // namespace numlex
