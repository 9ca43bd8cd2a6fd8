#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "numlex/config.hpp"
#include "numlex/corpus.hpp"
#include "numlex/errors.hpp"
#include "numlex/numbed.hpp"
#include "numlex/numtok.hpp"
#include "numlex/pretrain.hpp"
#include "numlex/probing.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace numlex;

namespace {

// Exit codes: 0 ok, 2 config, 3 io, 4 data, 5 internal.
constexpr int kOk = 0, kConfigExit = 2, kIoExit = 3, kDataExit = 4, kInternalExit = 5;

uint64_t effective_seed(uint64_t config_seed, bool cli_given, uint64_t cli_seed) {
  if (const char* env = std::getenv("NUMLEX_SEED")) {
    char* end = nullptr;
    uint64_t v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') throw ConfigError("NUMLEX_SEED is not an integer");
    return v;
  }
  return cli_given ? cli_seed : config_seed;
}

void atomic_write(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write: " + tmp);
    out << content;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw IoError("cannot rename into place: " + path);
}

struct ManifestScope {
  RunManifest m;
  std::string dir;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  void finish() {
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest((fs::path(dir) / "manifest.json").string(), m);
  }
};

NumTokMode numtok_mode_from(const std::string& name) {
  if (name == "addback") return NumTokMode::AddBack;
  if (name == "replace") return NumTokMode::Replace;
  if (name == "addembed") return NumTokMode::AddOnEmbedding;
  throw ConfigError("unknown numtok mode: " + name);
}

std::string config_footer() {
  return "Config keys and defaults (TOML):\n" + serialize_config(RunConfig{});
}

// ---- tokenize ----

struct TokenizeArgs {
  std::string mode = "addback";
  std::string base = "ws";
  bool spans_only = false;
  std::string input;
  std::string out_dir;
};

ordered_json doc_to_json(const TokenSequence& ts, BaseTokenizer& base, bool spans_only) {
  ordered_json j;
  if (!spans_only) {
    ordered_json toks = ordered_json::array();
    for (const auto& t : ts.tokens) {
      if (t.kind == TokenKind::Num)
        toks.push_back("<num>");
      else
        toks.push_back(base.token_text(t.vocab_id));
    }
    j["tokens"] = std::move(toks);
  }
  ordered_json nums = ordered_json::array();
  for (const auto& n : ts.numbers) {
    ordered_json s;
    s["text"] = n.text;
    s["start"] = n.start;
    s["end"] = n.end;
    s["shape"] = std::string(shape_name(n.shape));
    nums.push_back(std::move(s));
  }
  j["numbers"] = std::move(nums);
  return j;
}

int run_tokenize(const TokenizeArgs& a) {
  std::vector<std::string> docs;
  if (!a.input.empty()) {
    docs = ingest_corpus(a.input);
  } else {
    std::string line;
    while (std::getline(std::cin, line))
      if (!line.empty()) docs.push_back(line);
  }
  std::unique_ptr<BaseTokenizer> base;
  if (a.base == "ws") {
    auto ws = std::make_unique<WhitespaceTokenizer>();
    ws->fit(docs);
    ws->freeze();
    base = std::move(ws);
  } else {
    auto bpe = std::make_unique<BpeTokenizer>();
    bpe->fit(docs);
    base = std::move(bpe);
  }
  NumTokMode mode = numtok_mode_from(a.mode);

  std::ostringstream body;
  for (const auto& d : docs)
    body << doc_to_json(tokenize(d, *base, mode), *base, a.spans_only).dump() << "\n";

  if (a.out_dir.empty()) {
    std::cout << body.str();
    return kOk;
  }
  fs::create_directories(a.out_dir);
  ManifestScope ms;
  ms.dir = a.out_dir;
  ms.m.command = "tokenize";
  if (!a.input.empty()) ms.m.input_hash = hash_file(a.input);
  std::string out_path = (fs::path(a.out_dir) / "tokens.jsonl").string();
  atomic_write(out_path, body.str());
  ms.m.outputs = {"tokens.jsonl"};
  ms.finish();
  return kOk;
}

// ---- pretrain ----

struct PretrainArgs {
  std::string config_path;
  std::string mode, numbed, numtok, tier, corpus, init_checkpoint, out_dir;
  uint64_t steps = 0;
  bool steps_given = false;
  uint64_t seed = 0;
  bool seed_given = false;
  uint64_t corpus_docs = 64;
};

ordered_json numbed_header(const NumBedConfig& nc) {
  ordered_json j;
  j["kind"] = std::string(numbed_kind_name(nc.kind));
  j["tier"] = nc.param_budget_label;
  j["model_dim"] = nc.model_dim;
  j["char_embed_dim"] = nc.char_embed_dim;
  j["lstm_hidden"] = nc.lstm_hidden;
  j["lstm_layers"] = nc.lstm_layers;
  return j;
}

ordered_json host_header(const HostConfig& hc) {
  ordered_json j;
  j["base_vocab"] = hc.base_vocab;
  j["model_dim"] = hc.model_dim;
  j["layers"] = hc.layers;
  j["heads"] = hc.heads;
  j["ff_dim"] = hc.ff_dim;
  j["max_seq"] = hc.max_seq;
  j["head_hidden"] = hc.head_hidden;
  return j;
}

void save_models(const std::string& dir, const HostModel& host, NumberEmbedder& numbed) {
  fs::create_directories(dir);
  save_checkpoint((fs::path(dir) / "host.json").string(), host.params,
                  host_header(host.cfg).dump());
  if (numbed.params())
    save_checkpoint((fs::path(dir) / "numbed.json").string(), *numbed.params(),
                    numbed_header(numbed.config()).dump());
}

std::string metrics_lines(const std::vector<LossBreakdown>& log) {
  std::ostringstream os;
  for (const auto& lb : log) {
    ordered_json j;
    j["step"] = lb.step;
    j["k"] = lb.k;
    j["l_reg"] = lb.l_reg;
    j["l_cla"] = lb.l_cla;
    j["l_mlm"] = lb.l_mlm;
    j["l_distill"] = lb.l_distill;
    j["alpha"] = lb.alpha;
    j["total"] = lb.total;
    os << j.dump() << "\n";
  }
  return os.str();
}

int run_pretrain(const PretrainArgs& a) {
  RunConfig rc = a.config_path.empty() ? RunConfig{} : load_config(a.config_path);
  if (!a.mode.empty()) rc.pretrain_mode = a.mode;
  if (!a.numbed.empty()) rc.numbed_kind = a.numbed;
  if (!a.numtok.empty()) rc.numtok_mode = a.numtok;
  if (!a.tier.empty()) rc.numbed_tier = a.tier;
  if (!a.corpus.empty()) rc.corpus_path = a.corpus;
  if (!a.out_dir.empty()) rc.out_dir = a.out_dir;
  if (a.steps_given) rc.steps = a.steps;
  rc.seed = effective_seed(rc.seed, a.seed_given, a.seed);
  rc.validate();
  if (rc.out_dir.empty()) throw ConfigError("pretrain: --out is required");

  std::vector<std::string> docs;
  uint64_t input_hash = 0;
  if (rc.corpus_path.empty()) {
    CorpusGenConfig cg;
    cg.docs = a.corpus_docs;
    cg.seed = rc.seed;
    cg.numbers.e_min = static_cast<int>(rc.e_min);
    cg.numbers.e_max = static_cast<int>(rc.e_max);
    cg.numbers.integer_fraction = rc.integer_fraction;
    cg.numbers.percent_fraction = rc.percent_fraction;
    cg.numbers.comma_fraction = rc.comma_fraction;
    cg.numbers.negative_fraction = rc.negative_fraction;
    docs = generate_corpus(cg);
  } else {
    docs = ingest_corpus(rc.corpus_path);
    input_hash = hash_file(rc.corpus_path);
  }
  if (docs.empty()) throw ConfigError("pretrain: corpus is empty");

  WhitespaceTokenizer base;
  base.fit(docs);
  base.freeze();
  NumTokMode ntm = numtok_mode_from(rc.numtok_mode);
  std::vector<TokenSequence> seqs;
  seqs.reserve(docs.size());
  for (const auto& d : docs) seqs.push_back(tokenize(d, base, ntm));

  HostConfig hc;
  hc.base_vocab = base.vocab_size();
  hc.model_dim = rc.model_dim;
  NumBedConfig nc = NumBedConfig::for_tier(numbed_kind_from(rc.numbed_kind), rc.numbed_tier,
                                           rc.model_dim);

  PretrainConfig pc;
  pc.numtok_mode = ntm;
  pc.mask_rate = rc.mask_rate;
  pc.eps = rc.eps;
  pc.tau = rc.tau;
  pc.alpha_max = rc.alpha_max;
  pc.warmup_steps = rc.warmup_steps;
  pc.steps = rc.steps;
  pc.lr = rc.lr;
  pc.seed = rc.seed;

  fs::create_directories(rc.out_dir);
  ManifestScope ms;
  ms.dir = rc.out_dir;
  ms.m.command = "pretrain";
  ms.m.config_toml = serialize_config(rc);
  ms.m.input_hash = input_hash;

  auto load_models = [&](const std::string& dir) {
    std::string host_path = (fs::path(dir) / "host.json").string();
    std::string numbed_path = (fs::path(dir) / "numbed.json").string();
    if (!fs::exists(host_path)) throw CheckpointMissing("no host checkpoint at " + host_path);
    HostModel host(hc, load_checkpoint(host_path));
    std::unique_ptr<NumberEmbedder> emb;
    if (fs::exists(numbed_path))
      emb = make_embedder(nc, load_checkpoint(numbed_path));
    else
      emb = make_embedder(nc, ParamSet{});
    return std::make_pair(std::move(host), std::move(emb));
  };

  std::vector<LossBreakdown> log;
  if (rc.pretrain_mode == "scratch") {
    pc.mode = PretrainMode::FromScratch;
    PretrainJob job(pc, HostModel(hc, rc.seed), make_embedder(nc, rc.seed), seqs);
    log = job.run();
    save_models(rc.out_dir, job.student, *job.numbed);
  } else {
    std::string init_dir = a.init_checkpoint;
    if (init_dir.empty()) {
      // Bootstrap: a short plugin-free phase provides the checkpoint to
      // continue from with distillation.
      init_dir = (fs::path(rc.out_dir) / "bootstrap").string();
      PretrainConfig bc = pc;
      bc.mode = PretrainMode::FromScratch;
      bc.steps = std::max<size_t>(1, rc.steps / 5);
      bc.warmup_steps = 0;
      PretrainJob boot(bc, HostModel(hc, rc.seed), make_embedder(nc, rc.seed), seqs);
      boot.run();
      save_models(init_dir, boot.student, *boot.numbed);
    }
    auto [host, emb] = load_models(init_dir);
    pc.mode = PretrainMode::FromCheckpoint;
    PretrainJob job(pc, std::move(host), std::move(emb), seqs);
    log = job.run();
    save_models(rc.out_dir, job.student, *job.numbed);
  }

  atomic_write((fs::path(rc.out_dir) / "metrics.jsonl").string(), metrics_lines(log));
  ms.m.outputs = {"metrics.jsonl", "host.json"};
  if (fs::exists(fs::path(rc.out_dir) / "numbed.json")) ms.m.outputs.push_back("numbed.json");
  ms.finish();
  return kOk;
}

// ---- probe ----

struct ProbeArgs {
  std::string config_path;
  std::string task, numbed, tier, data, out;
  uint64_t count = 0;
  bool count_given = false;
  uint64_t seed = 0;
  bool seed_given = false;
};

NumberGenConfig gen_config(const RunConfig& rc) {
  NumberGenConfig g;
  g.count = rc.probe_count;
  g.e_min = static_cast<int>(rc.e_min);
  g.e_max = static_cast<int>(rc.e_max);
  g.integer_fraction = rc.integer_fraction;
  g.percent_fraction = rc.percent_fraction;
  g.comma_fraction = rc.comma_fraction;
  g.negative_fraction = rc.negative_fraction;
  g.seed = rc.seed;
  return g;
}

ordered_json task_to_json(const ProbeTask& t) {
  ordered_json j;
  j["task"] = std::string(probe_task_name(t.kind));
  j["inputs"] = t.inputs;
  if (t.kind == ProbeTaskKind::ListMax) {
    j["gold"] = ordered_json{{"index", t.gold_index}};
  } else {
    j["gold"] = ordered_json{{"significand", t.gold_sigexp.significand},
                             {"exponent", t.gold_sigexp.exponent}};
  }
  return j;
}

std::vector<ProbeTask> tasks_from_jsonl(const std::string& path, ProbeTaskKind kind) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset: " + path);
  std::vector<ProbeTask> tasks;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("task") || !j.contains("inputs") ||
        !j.contains("gold"))
      throw MalformedRecord(lineno, "expected {\"task\",\"inputs\",\"gold\"}");
    ProbeTask t;
    t.kind = probe_task_from(j["task"].get<std::string>());
    if (t.kind != kind) throw MalformedRecord(lineno, "dataset task does not match --task");
    t.inputs = j["inputs"].get<std::vector<std::string>>();
    const auto& g = j["gold"];
    if (t.kind == ProbeTaskKind::ListMax) {
      if (!g.contains("index")) throw MalformedRecord(lineno, "listmax gold needs \"index\"");
      t.gold_index = g["index"].get<int>();
    } else {
      if (!g.contains("significand") || !g.contains("exponent"))
        throw MalformedRecord(lineno, "gold needs \"significand\" and \"exponent\"");
      t.gold_sigexp.significand = g["significand"].get<double>();
      t.gold_sigexp.exponent = g["exponent"].get<int>();
    }
    tasks.push_back(std::move(t));
  }
  return tasks;
}

int run_probe_gen(const ProbeArgs& a) {
  RunConfig rc = a.config_path.empty() ? RunConfig{} : load_config(a.config_path);
  if (!a.task.empty()) rc.probe_task = a.task;
  if (a.count_given) rc.probe_count = a.count;
  rc.seed = effective_seed(rc.seed, a.seed_given, a.seed);
  rc.validate();
  if (a.out.empty()) throw ConfigError("probe gen: --out is required");

  auto numbers = generate_numbers(gen_config(rc));
  Rng rng = Rng::substream(rc.seed, "probe.tasks");
  auto tasks = make_task(probe_task_from(rc.probe_task), numbers, rng, rc.list_len);

  std::ostringstream body;
  for (const auto& t : tasks) body << task_to_json(t).dump() << "\n";
  fs::path out(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  atomic_write(a.out, body.str());
  return kOk;
}

int run_probe_run(const ProbeArgs& a) {
  RunConfig rc = a.config_path.empty() ? RunConfig{} : load_config(a.config_path);
  if (!a.task.empty()) rc.probe_task = a.task;
  if (!a.numbed.empty()) rc.numbed_kind = a.numbed;
  if (!a.tier.empty()) rc.numbed_tier = a.tier;
  if (a.count_given) rc.probe_count = a.count;
  rc.seed = effective_seed(rc.seed, a.seed_given, a.seed);
  rc.validate();
  if (a.out.empty()) throw ConfigError("probe run: --out is required");

  ProbeTaskKind kind = probe_task_from(rc.probe_task);
  std::vector<ProbeTask> tasks;
  uint64_t input_hash = 0;
  if (!a.data.empty()) {
    tasks = tasks_from_jsonl(a.data, kind);
    input_hash = hash_file(a.data);
  } else {
    auto numbers = generate_numbers(gen_config(rc));
    Rng rng = Rng::substream(rc.seed, "probe.tasks");
    tasks = make_task(kind, numbers, rng, rc.list_len);
  }

  NumBedConfig nc = NumBedConfig::for_tier(numbed_kind_from(rc.numbed_kind), rc.numbed_tier,
                                           rc.model_dim);
  auto embedder = make_embedder(nc, rc.seed);

  ProbeConfig pc;
  pc.hidden = rc.probe_hidden;
  pc.hidden_layers = rc.probe_hidden_layers;
  pc.epochs = rc.probe_epochs;
  pc.lr = rc.probe_lr;
  pc.batch = rc.probe_batch;
  pc.joint = rc.probe_joint;
  pc.train_fraction = rc.train_fraction;
  pc.seed = rc.seed;

  ManifestScope ms;
  fs::path out(a.out);
  ms.dir = out.has_parent_path() ? out.parent_path().string() : ".";
  fs::create_directories(ms.dir);
  ms.m.command = "probe run";
  ms.m.config_toml = serialize_config(rc);
  ms.m.input_hash = input_hash;

  ProbeResult res = train_probe(*embedder, tasks, pc);

  ordered_json j;
  j["task"] = rc.probe_task;
  j["numbed"] = rc.numbed_kind;
  j["seed"] = rc.seed;
  j["rmse_sig"] = res.metrics.rmse_sig;
  j["acc_exp"] = res.metrics.acc_exp;
  j["acc"] = res.metrics.acc;
  j["test_count"] = res.test_count;
  atomic_write(a.out, j.dump(2) + "\n");
  ms.m.outputs = {out.filename().string()};
  ms.finish();
  return kOk;
}

// ---- inspect-checkpoint ----

int run_inspect(const std::string& path) {
  if (!fs::exists(path)) throw CheckpointMissing("no checkpoint at " + path);
  std::string extra;
  ParamSet params = load_checkpoint(path, &extra);
  ordered_json j;
  nlohmann::json header = nlohmann::json::parse(extra, nullptr, false);
  j["header"] = header.is_discarded() ? nlohmann::json(extra) : header;
  ordered_json shapes;
  for (const auto& [name, t] : params) shapes[name] = {t.rows(), t.cols()};
  j["params"] = std::move(shapes);
  j["total_elements"] = params.total_elements();
  std::cout << j.dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numlex: number-aware tokenization and embedding toolkit"};
  app.require_subcommand(1);

  TokenizeArgs tok;
  auto* tokenize_cmd = app.add_subcommand("tokenize", "Rewrite text into number-aware tokens");
  tokenize_cmd->add_option("--mode", tok.mode, "Rewrite mode")
      ->check(CLI::IsMember({"addback", "replace"}))
      ->capture_default_str();
  tokenize_cmd->add_option("--base", tok.base, "Base tokenizer")
      ->check(CLI::IsMember({"ws", "bpe"}))
      ->capture_default_str();
  tokenize_cmd->add_flag("--spans-only", tok.spans_only, "Emit only recognized number spans");
  tokenize_cmd->add_option("--input", tok.input, "Input corpus file (default: stdin lines)");
  tokenize_cmd->add_option("--out", tok.out_dir, "Output directory (default: stdout)");

  PretrainArgs pre;
  auto* pretrain_cmd = app.add_subcommand("pretrain", "Masked-recovery pretraining");
  pretrain_cmd->add_option("--mode", pre.mode, "scratch | checkpoint (with distillation)")
      ->check(CLI::IsMember({"scratch", "checkpoint"}));
  pretrain_cmd->add_option("--numbed", pre.numbed, "Number embedder")
      ->check(CLI::IsMember({"charlstm", "charformer", "dice"}));
  pretrain_cmd->add_option("--numtok", pre.numtok, "Number token rewrite mode")
      ->check(CLI::IsMember({"addback", "replace", "addembed"}));
  pretrain_cmd->add_option("--steps", pre.steps, "Training steps")
      ->each([&](const std::string&) { pre.steps_given = true; });
  pretrain_cmd->add_option("--seed", pre.seed, "Root RNG seed")
      ->each([&](const std::string&) { pre.seed_given = true; });
  pretrain_cmd->add_option("--config", pre.config_path, "TOML config file");
  pretrain_cmd->add_option("--corpus", pre.corpus, "Corpus file (default: built-in generator)");
  pretrain_cmd->add_option("--corpus-docs", pre.corpus_docs,
                           "Documents drawn from the built-in generator")
      ->capture_default_str();
  pretrain_cmd->add_option("--init-checkpoint", pre.init_checkpoint,
                           "Directory with host.json/numbed.json to continue from");
  pretrain_cmd->add_option("--out", pre.out_dir, "Output directory")->required();
  pretrain_cmd->footer(config_footer());

  auto* probe_cmd = app.add_subcommand("probe", "Numeracy probing");
  probe_cmd->require_subcommand(1);
  ProbeArgs pg;
  auto* gen_cmd = probe_cmd->add_subcommand("gen", "Generate a probing dataset");
  gen_cmd->add_option("--config", pg.config_path, "TOML config file");
  gen_cmd->add_option("--task", pg.task, "Probe task")
      ->check(CLI::IsMember({"decode", "add", "sub", "listmax"}));
  gen_cmd->add_option("--count", pg.count, "Number of generated numbers")
      ->each([&](const std::string&) { pg.count_given = true; });
  gen_cmd->add_option("--seed", pg.seed, "Root RNG seed")
      ->each([&](const std::string&) { pg.seed_given = true; });
  gen_cmd->add_option("--out", pg.out, "Output dataset (JSONL)")->required();
  gen_cmd->footer(config_footer());

  ProbeArgs pr;
  auto* run_cmd = probe_cmd->add_subcommand("run", "Train and evaluate a probe");
  run_cmd->add_option("--config", pr.config_path, "TOML config file");
  run_cmd->add_option("--task", pr.task, "Probe task")
      ->check(CLI::IsMember({"decode", "add", "sub", "listmax"}));
  run_cmd->add_option("--numbed", pr.numbed, "Number embedder")
      ->check(CLI::IsMember({"charlstm", "charformer", "dice"}));
  run_cmd->add_option("--tier", pr.tier, "Embedder size tier")
      ->check(CLI::IsMember({"0.1M", "1M", "9M"}));
  run_cmd->add_option("--data", pr.data, "Dataset from 'probe gen' (default: generate)");
  run_cmd->add_option("--count", pr.count, "Number of generated numbers")
      ->each([&](const std::string&) { pr.count_given = true; });
  run_cmd->add_option("--seed", pr.seed, "Root RNG seed")
      ->each([&](const std::string&) { pr.seed_given = true; });
  run_cmd->add_option("--out", pr.out, "Output metrics file (JSON)")->required();
  run_cmd->footer(config_footer());

  std::string inspect_path;
  auto* inspect_cmd = app.add_subcommand("inspect-checkpoint", "Summarize a checkpoint file");
  inspect_cmd->add_option("file", inspect_path, "Checkpoint path")->required();

  try {
    app.parse(argc, argv);
    if (*tokenize_cmd) return run_tokenize(tok);
    if (*pretrain_cmd) return run_pretrain(pre);
    if (*gen_cmd) return run_probe_gen(pg);
    if (*run_cmd) return run_probe_run(pr);
    if (*inspect_cmd) return run_inspect(inspect_path);
    return kInternalExit;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigExit;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoExit;
  } catch (const CheckpointMissing& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoExit;
  } catch (const MalformedRecord& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataExit;
  } catch (const MalformedNumber& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataExit;
  } catch (const DegenerateTask& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataExit;
  } catch (const LengthMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataExit;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternalExit;
  }
}
