#include "numlex/corpus.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "numlex/errors.hpp"
#include "numlex/numtok.hpp"

namespace numlex {

namespace {

const char* kHeaders[] = {"revenue", "total",  "price", "growth", "count", "net income",
                          "assets",  "shares", "rate",  "margin", "cost",  "volume"};
const char* kVerbs[] = {"rose to", "fell to", "reached", "was reported at", "stands at"};
const char* kPeriods[] = {"in q1", "in q2", "in q3", "in q4", "this year", "last year"};

}  // namespace

std::vector<std::string> generate_corpus(const CorpusGenConfig& cfg) {
  if (cfg.cells_min < 1 || cfg.cells_max < cfg.cells_min)
    throw ConfigError("corpus generator: bad cell range");
  NumberGenConfig ncfg = cfg.numbers;
  ncfg.seed = Rng::derive(cfg.seed, "corpus.numbers");
  // One draw per potential cell; generous upper bound.
  ncfg.count = cfg.docs * (cfg.cells_max + 2);
  std::vector<std::string> pool = generate_numbers(ncfg);

  Rng rng = Rng::substream(cfg.seed, "corpus.layout");
  size_t next = 0;
  auto take = [&]() -> const std::string& { return pool[next++ % pool.size()]; };

  std::vector<std::string> docs;
  docs.reserve(cfg.docs);
  for (size_t d = 0; d < cfg.docs; ++d) {
    std::string doc;
    if (rng.bernoulli(cfg.sentence_fraction)) {
      doc = std::string(kHeaders[rng.uniform_int(0, std::size(kHeaders) - 1)]) + " " +
            kVerbs[rng.uniform_int(0, std::size(kVerbs) - 1)] + " " + take() + " " +
            kPeriods[rng.uniform_int(0, std::size(kPeriods) - 1)];
    } else {
      size_t cells = static_cast<size_t>(rng.uniform_int(cfg.cells_min, cfg.cells_max));
      doc = std::string(kHeaders[rng.uniform_int(0, std::size(kHeaders) - 1)]) + " : " + take();
      for (size_t c = 1; c < cells; ++c) doc += " | " + take();
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

CorpusStats corpus_stats(const std::vector<std::string>& docs) {
  CorpusStats s;
  s.docs = docs.size();
  for (const auto& d : docs) {
    s.chars += d.size();
    s.numbers += recognize_numbers(d).size();
  }
  return s;
}

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<std::string> split_csv_row(const std::string& line, int lineno) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw MalformedRecord(lineno, "unterminated quote in CSV row");
  cells.push_back(std::move(cur));
  return cells;
}

std::vector<std::string> read_jsonl(std::istream& in) {
  std::vector<std::string> docs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("text") || !j["text"].is_string())
      throw MalformedRecord(lineno, "expected a JSON object with a string \"text\" field");
    docs.push_back(j["text"].get<std::string>());
  }
  return docs;
}

std::vector<std::string> read_csv(std::istream& in) {
  std::vector<std::string> docs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_row(line, lineno);
    std::string doc = cells[0];
    for (size_t i = 1; i < cells.size(); ++i) doc += (i == 1 ? " : " : " | ") + cells[i];
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<std::string> read_blocks(std::istream& in) {
  std::vector<std::string> docs;
  std::string line, block;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (!block.empty()) docs.push_back(std::move(block));
      block.clear();
    } else {
      if (!block.empty()) block.push_back('\n');
      block += line;
    }
  }
  if (!block.empty()) docs.push_back(std::move(block));
  return docs;
}

}  // namespace

std::vector<std::string> ingest_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file: " + path);
  if (ends_with(path, ".jsonl") || ends_with(path, ".json")) return read_jsonl(in);
  if (ends_with(path, ".csv")) return read_csv(in);
  // Sniff: a file whose first non-space byte is '{' is treated as JSONL.
  char c;
  while (in.get(c) && (c == ' ' || c == '\n' || c == '\r' || c == '\t')) {
  }
  bool jsonl = in && c == '{';
  in.clear();
  in.seekg(0);
  return jsonl ? read_jsonl(in) : read_blocks(in);
}

}  // namespace numlex
