#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "numlex/numbed.hpp"
#include "numlex/numeric.hpp"
#include "numlex/rng.hpp"

namespace numlex {

enum class ProbeTaskKind { Decoding, Addition, Subtraction, ListMax };

std::string_view probe_task_name(ProbeTaskKind k);
ProbeTaskKind probe_task_from(const std::string& name);

struct ProbeTask {
  ProbeTaskKind kind = ProbeTaskKind::Decoding;
  std::vector<std::string> inputs;
  SigExp gold_sigexp{};  // Decoding / Addition / Subtraction
  int gold_index = -1;   // ListMax
};

struct ProbeMetrics {
  double rmse_sig = 0.0;
  double acc_exp = 0.0;
  double acc = 0.0;  // ListMax
};

// Synthetic replacement for the real-table number source; the default
// fractions mirror the corpus statistics (91% integers, 1.51% percent,
// 5.02% comma, 0.12% negative).
struct NumberGenConfig {
  size_t count = 10000;
  int e_min = -4;
  int e_max = 8;
  double integer_fraction = 0.91;
  double percent_fraction = 0.0151;
  double comma_fraction = 0.0502;
  double negative_fraction = 0.0012;
  double dot_started_fraction = 0.02;  // of floats with e < 0
  uint64_t seed = 0;

  void validate() const;
};

// Every returned string is recognized by numtok as exactly one span.
std::vector<std::string> generate_numbers(const NumberGenConfig& cfg);

std::vector<ProbeTask> make_task(ProbeTaskKind kind, const std::vector<std::string>& numbers,
                                 Rng& rng, size_t list_len = 5);

struct ProbeConfig {
  size_t hidden = 128;
  size_t hidden_layers = 2;
  size_t epochs = 20;
  double lr = 1e-3;
  size_t batch = 16;
  bool joint = true;  // fine-tune the embedder together with the probe
  double train_fraction = 0.8;
  uint64_t seed = 0;
};

struct ProbePrediction {
  SigExp sigexp{};
  int index = -1;
};

struct ProbeResult {
  ProbeMetrics metrics;
  size_t test_count = 0;
  int exp_bin_min = 0;  // exponent bins used by the classifier head
  int exp_bin_max = 0;
};

ProbeResult train_probe(NumberEmbedder& embedder, const std::vector<ProbeTask>& tasks,
                        const ProbeConfig& cfg);

ProbeMetrics evaluate(const std::vector<ProbePrediction>& preds,
                      const std::vector<ProbeTask>& golds, ProbeTaskKind kind);

}  // namespace numlex
