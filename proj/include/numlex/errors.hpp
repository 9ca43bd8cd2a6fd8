#pragma once

#include <stdexcept>
#include <string>

namespace numlex {

// Error classes map 1:1 onto CLI exit codes, see cli.hpp.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : ConfigError {
  ValidationError(const std::string& key, const std::string& reason)
      : ConfigError("invalid config key '" + key + "': " + reason), key(key) {}
  std::string key;
};
struct ParseError : ConfigError {
  ParseError(int line, const std::string& what)
      : ConfigError("parse error at line " + std::to_string(line) + ": " + what), line(line) {}
  int line;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MalformedRecord : std::runtime_error {
  MalformedRecord(int line, const std::string& what)
      : std::runtime_error("malformed record at line " + std::to_string(line) + ": " + what),
        line(line) {}
  int line;
};

// numtok
struct BaseTokenizerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OffsetMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// numeric
struct MalformedNumber : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// tensorcore
struct ShapeMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotScalarLoss : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MissingGradient : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// numbed
struct EmptyNumber : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// pretrain
struct EmptySequence : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PlanMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonDistribution : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ArchMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CheckpointMissing : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// probing
struct DegenerateTask : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct LengthMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace numlex
