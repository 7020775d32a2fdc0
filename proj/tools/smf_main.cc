// Copyright 2026 The SMF Rewrite Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// smf: command-line driver for data generation, constraint extraction,
// training, rewriting, evaluation and flag inspection.

#include <cctype>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "smf/datagen.h"
#include "smf/decode.h"
#include "smf/error.h"
#include "smf/eval.h"
#include "smf/flags.h"
#include "smf/model.h"
#include "smf/pipeline.h"
#include "smf/text.h"
#include "smf/train.h"
#include "smf/treebank.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace smf {
namespace {

constexpr const char* kEnvPrefix = "SMF_";

std::string env_name(const std::string& option) {
  std::string out = kEnvPrefix;
  for (char c : option) out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

// Registers options and remembers them for the resolved-config snapshot.
class Options {
 public:
  Options(CLI::App* app, std::string name) : app_(app), name_(std::move(name)) {}

  template <typename T>
  CLI::Option* add(const std::string& name, T& var, const std::string& help) {
    fields_.push_back({name, [&var] { return json(var); }, false});
    return app_->add_option("--" + name, var, help)->capture_default_str()->envname(env_name(name));
  }

  CLI::Option* flag(const std::string& name, bool& var, const std::string& help) {
    fields_.push_back({name, [&var] { return json(var); }, true});
    return app_->add_flag("--" + name, var, help)->envname(env_name(name));
  }

  CLI::App* app() const { return app_; }

  json snapshot() const {
    json options = json::object();
    json argv = json::array({"smf", name_});
    for (const Field& f : fields_) {
      const json v = f.get();
      options[f.name] = v;
      if (f.is_flag) {
        argv.push_back("--" + f.name + "=" + (v.get<bool>() ? "true" : "false"));
      } else if (v.is_array()) {
        for (const auto& item : v) argv.push_back("--" + f.name + "=" + scalar_text(item));
      } else if (!(v.is_string() && v.get<std::string>().empty())) {
        argv.push_back("--" + f.name + "=" + scalar_text(v));
      }
    }
    json out;
    out["subcommand"] = name_;
    out["options"] = options;
    out["command_line"] = argv;
    out["env_prefix"] = kEnvPrefix;
    return out;
  }

 private:
  struct Field {
    std::string name;
    std::function<json()> get;
    bool is_flag;
  };

  static std::string scalar_text(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_float()) {
      std::ostringstream s;
      s.precision(17);
      s << v.get<double>();
      return s.str();
    }
    return v.dump();
  }

  CLI::App* app_;
  std::string name_;
  std::vector<Field> fields_;
};

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_snapshot(const Options& opts, const fs::path& path) {
  write_file(path, opts.snapshot().dump(2) + "\n");
}

std::vector<PQAInstance> select_split(std::vector<PQAInstance> all, const std::string& split) {
  if (split == "all") return all;
  std::vector<PQAInstance> out;
  for (auto& inst : all) {
    if (inst.split == split || inst.split.empty()) out.push_back(std::move(inst));
  }
  return out;
}

// Satisfier settings shared by train, rewrite and inspect-flags.
struct SatisfierArgs {
  std::string mode = "semantic";
  double threshold_a = 0.8;
  double threshold_b = 0.3;
  std::string style = "off";
  std::string style_trigger = "first_person";

  void add_to(Options& o, bool from_checkpoint) {
    const std::string suffix = from_checkpoint ? " (default: the checkpoint's setting)" : "";
    if (from_checkpoint) {
      mode.clear();
      threshold_a = -1.0;
      threshold_b = -1.0;
      style.clear();
      style_trigger.clear();
    }
    o.add("mode", mode, "Flag satisfaction mode: semantic, lexical or off" + suffix);
    o.add("threshold-a", threshold_a, "Absolute similarity floor" + suffix);
    o.add("threshold-b", threshold_b, "Minimum similarity increase per step" + suffix);
    o.add("style", style, "Style flags: on or off" + suffix);
    o.add("style-trigger", style_trigger, "first_person or second_person" + suffix);
  }

  void fill_from(const json& j) {
    if (mode.empty()) mode = j.value("mode", "semantic");
    if (threshold_a < 0) threshold_a = j.value("threshold_a", 0.8);
    if (threshold_b < 0) threshold_b = j.value("threshold_b", 0.3);
    if (style.empty()) style = j.value("style", "off");
    if (style_trigger.empty()) style_trigger = j.value("style_trigger", "first_person");
  }

  SatisfierConfig resolve() const {
    SatisfierConfig c;
    c.mode = parse_mode(mode);
    c.threshold_a = threshold_a;
    c.threshold_b = threshold_b;
    if (style != "on" && style != "off") {
      throw Error(ErrorCode::kInvalidArgument, "--style must be on or off");
    }
    c.style_enabled = style == "on";
    c.style_trigger = parse_style_trigger(style_trigger);
    c.validate();
    return c;
  }

  json to_json() const {
    json j;
    j["mode"] = mode;
    j["threshold_a"] = threshold_a;
    j["threshold_b"] = threshold_b;
    j["style"] = style;
    j["style_trigger"] = style_trigger;
    return j;
  }
};

CategoryMix parse_mix(const std::string& text) {
  CategoryMix mix{};
  std::stringstream in(text);
  std::string item;
  size_t i = 0;
  while (std::getline(in, item, ',')) {
    if (i >= mix.size()) throw Error(ErrorCode::kInvalidMix, "mix needs exactly four proportions");
    try {
      mix[i++] = std::stod(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kInvalidMix, "bad proportion '" + item + "'");
    }
  }
  if (i != mix.size()) throw Error(ErrorCode::kInvalidMix, "mix needs exactly four proportions");
  return mix;
}

// ---- datagen

struct DatagenArgs {
  std::string out;
  size_t n = 1500;
  uint64_t seed = 2023;
  std::string mix = "0.25,0.25,0.25,0.25";
  double first_person_rate = 0.2;
  std::string holdout_domain;
};

void cmd_datagen(const DatagenArgs& a, const Options& opts) {
  GeneratorConfig cfg;
  cfg.seed = a.seed;
  cfg.n = a.n;
  cfg.mix = parse_mix(a.mix);
  cfg.first_person_rate = a.first_person_rate;
  std::vector<PQAInstance> all = generate(cfg);
  if (!a.holdout_domain.empty()) leave_one_domain_out(all, a.holdout_domain);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  json splits = json::object(), categories = json::object(), domains = json::object();
  json files = json::array();
  for (const char* split : {"train", "dev", "test"}) {
    std::vector<PQAInstance> part;
    for (const auto& inst : all) {
      if (inst.split == split) part.push_back(inst);
    }
    const fs::path file = dir / (std::string(split) + ".jsonl");
    write_jsonl(file.string(), part);
    splits[split] = part.size();
    files.push_back(file.filename().string());
  }
  for (Category c : kAllCategories) categories[std::string(category_name(c))] = 0;
  for (const auto& inst : all) {
    categories[std::string(category_name(inst.category))] =
        categories[std::string(category_name(inst.category))].get<size_t>() + 1;
    domains[inst.domain] = domains.value(inst.domain, 0) + 1;
  }
  json manifest;
  manifest["seed"] = a.seed;
  manifest["n"] = a.n;
  manifest["mix"] = cfg.mix;
  manifest["first_person_rate"] = a.first_person_rate;
  manifest["holdout_domain"] = a.holdout_domain;
  manifest["splits"] = splits;
  manifest["categories"] = categories;
  manifest["domains"] = domains;
  manifest["files"] = files;
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  write_snapshot(opts, dir / "config.json");
  std::cout << "wrote " << all.size() << " instances to " << dir.string() << " (train "
            << splits["train"] << ", dev " << splits["dev"] << ", test " << splits["test"] << ")\n";
}

// ---- extract-constraints

struct ExtractArgs {
  std::string input;
  std::string out;
  std::string question;
  std::string answer;
  bool include_toplevel_np = false;
};

json constraints_json(const std::vector<Constraint>& cs) {
  json arr = json::array();
  for (const Constraint& c : cs) {
    json j;
    j["text"] = c.text();
    j["start"] = c.span.start;
    j["end"] = c.span.end;
    j["label"] = c.label;
    j["source"] = side_name(c.source);
    arr.push_back(j);
  }
  return arr;
}

void cmd_extract(const ExtractArgs& a, const Options& opts) {
  ExtractionOptions ex;
  ex.include_toplevel_np = a.include_toplevel_np;
  if (!a.question.empty()) {
    const ParseTree q = parse_bracketed(a.question);
    std::vector<Constraint> cs;
    if (a.answer.empty()) {
      cs = extract_constraints(q, nullptr, ex);
    } else {
      const ParseTree ans = parse_bracketed(a.answer);
      cs = extract_constraints(q, &ans, ex);
    }
    std::cout << constraints_json(cs).dump(2) << "\n";
    return;
  }
  if (a.input.empty() || a.out.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "give --question, or both --input and --out");
  }
  std::vector<PQAInstance> insts = read_jsonl(a.input);
  for (PQAInstance& inst : insts) inst.constraints = gold_constraints(inst, ex);
  write_jsonl(a.out, insts);
  write_snapshot(opts, fs::path(a.out).string() + ".config.json");
  std::cout << "extracted constraints for " << insts.size() << " instances\n";
}

// ---- train

struct TrainArgs {
  std::string train;
  std::string out;
  std::string split = "train";
  uint64_t seed = 7;
  int dim = 64;
  int heads = 4;
  int encoder_layers = 2;
  int decoder_layers = 2;
  int ff_dim = 128;
  int max_length = 128;
  int epochs = 10;
  double lr = 3e-4;
  size_t batch_size = 16;
  std::string optimizer = "adam";
  double label_smoothing = 0.0;
  double clip_norm = 1.0;
  SatisfierArgs sat;
};

void cmd_train(const TrainArgs& a, const Options& opts) {
  const SatisfierConfig sc = a.sat.resolve();
  const std::vector<PQAInstance> corpus = select_split(read_jsonl(a.train), a.split);
  if (corpus.empty()) throw Error(ErrorCode::kEmptyInput, "no training instances in split " + a.split);

  const Vocabulary vocab = build_vocabulary(corpus);
  ModelConfig mc;
  mc.dim = a.dim;
  mc.heads = a.heads;
  mc.encoder_layers = a.encoder_layers;
  mc.decoder_layers = a.decoder_layers;
  mc.ff_dim = a.ff_dim;
  mc.max_length = a.max_length;
  mc.vocab_size = static_cast<int>(vocab.size());
  mc.use_flags = sc.mode != SatisfactionMode::kOff || sc.style_enabled;

  std::vector<TrainingExample> examples;
  examples.reserve(corpus.size());
  for (const PQAInstance& inst : corpus) {
    examples.push_back(make_training_example(inst, vocab, sc, mc.use_flags));
  }

  TrainingConfig tc;
  tc.learning_rate = a.lr;
  tc.batch_size = a.batch_size;
  tc.epochs = a.epochs;
  tc.seed = a.seed;
  tc.optimizer = parse_optimizer(a.optimizer);
  tc.label_smoothing = a.label_smoothing;
  tc.clip_norm = a.clip_norm;

  Seq2SeqModel model(mc, a.seed);
  const size_t steps_per_epoch = (examples.size() + tc.batch_size - 1) / tc.batch_size;
  double running = 0.0;
  const TrainingLog log = train(model, examples, tc, [&](const LossRecord& r) {
    running += r.loss;
    if (r.step % steps_per_epoch == 0) {
      std::cerr << "epoch " << r.epoch << " mean batch loss " << running / static_cast<double>(steps_per_epoch)
                << "\n";
      running = 0.0;
    }
  });

  const fs::path dir(a.out);
  fs::create_directories(dir);
  json meta;
  meta["satisfier"] = a.sat.to_json();
  meta["seed"] = a.seed;
  meta["epochs"] = a.epochs;
  meta["train_examples"] = examples.size();
  meta["epoch_losses"] = log.epoch_losses;
  save_checkpoint((dir / "model.ckpt").string(), model, vocab, meta.dump());
  write_file(dir / "loss.csv", loss_log_csv(log));
  write_snapshot(opts, dir / "config.json");
  std::cout << "trained " << examples.size() << " examples for " << a.epochs << " epochs; final loss "
            << (log.epoch_losses.empty() ? 0.0 : log.epoch_losses.back()) << "\n";
}

// ---- rewrite

struct RewriteArgs {
  std::string checkpoint;
  std::string input;
  std::string out;
  std::string split = "test";
  std::string decoder = "greedy";
  size_t beam = 4;
  size_t max_len = 48;
  double length_exponent = 0.7;
  std::string trace;
  SatisfierArgs sat;
};

void cmd_rewrite(RewriteArgs& a, const Options& opts) {
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const json meta = json::parse(ckpt.metadata_json, nullptr, false);
  a.sat.fill_from(meta.is_object() && meta.contains("satisfier") ? meta["satisfier"] : json::object());
  const SatisfierConfig sc = a.sat.resolve();
  const DecoderKind kind = parse_decoder(a.decoder);
  DecodeOptions dopt;
  dopt.beam = a.beam;
  dopt.max_len = a.max_len;
  dopt.length_exponent = a.length_exponent;

  const std::vector<PQAInstance> insts = select_split(read_jsonl(a.input), a.split);
  std::string lines;
  for (const PQAInstance& inst : insts) {
    const ModelInput in = prepare_input(inst);
    std::vector<std::vector<int>> cons;
    if (kind == DecoderKind::kCbs) {
      for (const auto& words : in.constraint_words()) {
        std::vector<int> ids;
        for (const std::string& w : words) ids.push_back(ckpt.vocab.id_strict(w));
        cons.push_back(std::move(ids));
      }
    }
    const ModelStepScorer scorer(ckpt.model, ckpt.vocab.encode(in.x_tokens));
    const DecodeResult r = run_decoder(kind, scorer, ckpt.vocab, make_tracker(in, sc), cons, dopt);

    std::string trace_path;
    const std::vector<std::string> tokens = ckpt.vocab.decode(r.best.tokens);
    if (!a.trace.empty()) {
      trace_path = (fs::path(a.trace) / (inst.id + ".tsv")).string();
      write_file(trace_path, trace_tsv(r.best.flags.matrix(), in.x_tokens, tokens));
    }
    json j = json::parse(decode_report_json(r, ckpt.vocab, in.constraint_words(), trace_path));
    json line;
    line["id"] = inst.id;
    line["output"] = detokenize(tokens);
    for (auto it = j.begin(); it != j.end(); ++it) line[it.key()] = it.value();
    line["mode"] = a.sat.mode;
    line["decoder"] = a.decoder;
    lines += line.dump() + "\n";
  }
  write_file(a.out, lines);
  write_snapshot(opts, a.out + ".config.json");
  std::cout << "rewrote " << insts.size() << " instances with " << a.decoder << " decoding ("
            << a.sat.mode << " flags)\n";
}

// ---- evaluate

struct EvalArgs {
  std::vector<std::string> outputs;
  std::vector<std::string> systems;
  std::string gold;
  std::string split = "test";
  std::string out;
  double threshold_a = 0.8;
  double threshold_b = 0.3;
};

void cmd_evaluate(const EvalArgs& a, const Options& opts) {
  if (!a.systems.empty() && a.systems.size() != a.outputs.size()) {
    throw Error(ErrorCode::kInvalidArgument, "give one --system name per --outputs file");
  }
  const std::vector<PQAInstance> gold = select_split(read_jsonl(a.gold), a.split);
  SatisfierConfig sc;
  sc.threshold_a = a.threshold_a;
  sc.threshold_b = a.threshold_b;
  sc.validate();

  const fs::path dir(a.out);
  fs::create_directories(dir);
  std::vector<EvalReport> reports;
  std::string text;
  for (size_t i = 0; i < a.outputs.size(); ++i) {
    const std::string name = a.systems.empty() ? fs::path(a.outputs[i]).stem().string() : a.systems[i];
    EvalReport r = evaluate(name, read_outputs(a.outputs[i]), gold, nullptr, sc);
    write_file(dir / ("report_" + name + ".json"), report_json(r) + "\n");
    text += "\n[" + name + "]\n" + category_table(r);
    reports.push_back(std::move(r));
  }
  const std::string table = report_table(reports) + text;
  write_file(dir / "report.txt", table);
  write_snapshot(opts, dir / "config.json");
  std::cout << table;
}

// ---- inspect-flags

struct InspectArgs {
  std::string input;
  std::string id;
  std::string x;
  std::vector<std::string> spans;
  std::string output;
  std::string sim_table;
  std::string format = "tsv";
  std::string out;
  SatisfierArgs sat;
};

void cmd_inspect(const InspectArgs& a, const Options& opts) {
  const SatisfierConfig sc = a.sat.resolve();
  std::shared_ptr<const SimilarityScorer> scorer;
  if (!a.sim_table.empty()) {
    scorer = std::make_shared<TableSimilarityScorer>(InjectedSimilarityTable::from_file(a.sim_table));
  }

  FlagTracker tracker;
  if (!a.input.empty()) {
    const std::vector<PQAInstance> insts = read_jsonl(a.input);
    const PQAInstance* found = nullptr;
    for (const auto& inst : insts) {
      if (inst.id == a.id || (a.id.empty() && found == nullptr)) found = &inst;
    }
    if (found == nullptr) throw Error(ErrorCode::kIdMismatch, "no instance with id " + a.id);
    tracker = make_tracker(prepare_input(*found), sc, scorer);
  } else {
    if (a.x.empty()) throw Error(ErrorCode::kInvalidArgument, "give --input or --x");
    std::vector<std::string> x = tokenize(a.x);
    std::vector<std::vector<std::string>> words;
    std::vector<std::vector<size_t>> rows;
    for (const std::string& s : a.spans) {
      const size_t colon = s.find(':');
      if (colon == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "span must be start:end");
      size_t start = 0, end = 0;
      try {
        start = std::stoul(s.substr(0, colon));
        end = std::stoul(s.substr(colon + 1));
      } catch (const std::exception&) {
        throw Error(ErrorCode::kInvalidArgument, "bad span " + s);
      }
      if (start >= end || end > x.size()) throw Error(ErrorCode::kOffsetOutOfRange, "span " + s);
      std::vector<size_t> row;
      for (size_t p = start; p < end; ++p) row.push_back(p);
      words.emplace_back(x.begin() + static_cast<std::ptrdiff_t>(start), x.begin() + static_cast<std::ptrdiff_t>(end));
      rows.push_back(std::move(row));
    }
    tracker = FlagTracker(std::move(x), std::move(words), rows, sc, scorer);
  }
  for (const std::string& t : tokenize(a.output)) tracker.advance(t);

  std::string text;
  if (a.format == "json") {
    text = trace_json(tracker) + "\n";
  } else if (a.format == "tsv") {
    text = trace_tsv(tracker.matrix(), tracker.x_tokens(), tracker.output_tokens());
  } else {
    throw Error(ErrorCode::kInvalidArgument, "--format must be tsv or json");
  }
  if (a.out.empty()) {
    std::cout << text;
  } else {
    write_file(a.out, text);
    write_snapshot(opts, a.out + ".config.json");
  }
}

int exit_code_for(const Error& e) { return is_validation_error(e.code()) ? 2 : 3; }

}  // namespace
}  // namespace smf

int main(int argc, char** argv) {
  using namespace smf;
  CLI::App app{"Rewrite product answers into standalone statements with soft mention flags.\n"
               "Every option can also be set through an environment variable SMF_<OPTION>,\n"
               "e.g. SMF_THRESHOLD_A=0.7."};
  app.require_subcommand(1);

  DatagenArgs dg;
  Options dg_opts(app.add_subcommand("datagen", "Generate the synthetic corpus"), "datagen");
  dg_opts.add("out", dg.out, "Output directory")->required();
  dg_opts.add("n", dg.n, "Number of instances");
  dg_opts.add("seed", dg.seed, "Root seed");
  dg_opts.add("mix", dg.mix, "Category proportions: explanation,complement,condition,alternative");
  dg_opts.add("first-person-rate", dg.first_person_rate, "Fraction of first-person answers");
  dg_opts.add("holdout-domain", dg.holdout_domain, "Put this domain in test and the rest in train");

  ExtractArgs ex;
  Options ex_opts(app.add_subcommand("extract-constraints", "Extract constraints from parses"),
                  "extract-constraints");
  ex_opts.add("input", ex.input, "Corpus JSONL with parses");
  ex_opts.add("out", ex.out, "Corpus JSONL with extracted constraints");
  ex_opts.add("question", ex.question, "Bracketed question parse (prints constraints)");
  ex_opts.add("answer", ex.answer, "Bracketed answer parse");
  ex_opts.flag("include-toplevel-np", ex.include_toplevel_np, "Also emit subject-level NPs");

  TrainArgs tr;
  Options tr_opts(app.add_subcommand("train", "Train a rewriting model"), "train");
  tr_opts.add("train", tr.train, "Corpus JSONL")->required();
  tr_opts.add("out", tr.out, "Output directory")->required();
  tr_opts.add("split", tr.split, "Split to train on (or all)");
  tr_opts.add("seed", tr.seed, "Seed for initialization and shuffling");
  tr_opts.add("dim", tr.dim, "Model width");
  tr_opts.add("heads", tr.heads, "Attention heads");
  tr_opts.add("encoder-layers", tr.encoder_layers, "Encoder layers");
  tr_opts.add("decoder-layers", tr.decoder_layers, "Decoder layers");
  tr_opts.add("ff-dim", tr.ff_dim, "Feed-forward width");
  tr_opts.add("max-length", tr.max_length, "Maximum sequence length");
  tr_opts.add("epochs", tr.epochs, "Training epochs");
  tr_opts.add("lr", tr.lr, "Learning rate");
  tr_opts.add("batch-size", tr.batch_size, "Examples per update");
  tr_opts.add("optimizer", tr.optimizer, "adam or sgd")->check(CLI::IsMember({"adam", "sgd"}));
  tr_opts.add("label-smoothing", tr.label_smoothing, "Label smoothing factor");
  tr_opts.add("clip-norm", tr.clip_norm, "Gradient clipping norm (0 disables)");
  tr.sat.add_to(tr_opts, false);

  RewriteArgs rw;
  Options rw_opts(app.add_subcommand("rewrite", "Rewrite instances with a trained model"), "rewrite");
  rw_opts.add("checkpoint", rw.checkpoint, "Model checkpoint")->required();
  rw_opts.add("input", rw.input, "Corpus JSONL")->required();
  rw_opts.add("out", rw.out, "Output JSONL")->required();
  rw_opts.add("split", rw.split, "Split to rewrite (or all)");
  rw_opts.add("decoder", rw.decoder, "greedy, beam or cbs")->check(CLI::IsMember({"greedy", "beam", "cbs"}));
  rw_opts.add("beam", rw.beam, "Beam width");
  rw_opts.add("max-len", rw.max_len, "Maximum output length");
  rw_opts.add("length-exponent", rw.length_exponent, "Length normalization exponent");
  rw_opts.add("trace", rw.trace, "Directory for per-instance flag traces");
  rw.sat.add_to(rw_opts, true);

  EvalArgs ev;
  Options ev_opts(app.add_subcommand("evaluate", "Score rewrite outputs"), "evaluate");
  ev_opts.add("outputs", ev.outputs, "Rewrite output JSONL (repeatable)")->required();
  ev_opts.add("system", ev.systems, "System name per outputs file");
  ev_opts.add("gold", ev.gold, "Gold corpus JSONL")->required();
  ev_opts.add("split", ev.split, "Gold split (or all)");
  ev_opts.add("out", ev.out, "Report directory")->required();
  ev_opts.add("threshold-a", ev.threshold_a, "Semantic coverage similarity floor");
  ev_opts.add("threshold-b", ev.threshold_b, "Semantic coverage step floor");

  InspectArgs in;
  Options in_opts(app.add_subcommand("inspect-flags", "Print the mention-flag matrix for an output"),
                  "inspect-flags");
  in_opts.add("input", in.input, "Corpus JSONL");
  in_opts.add("id", in.id, "Instance id (default: first)");
  in_opts.add("x", in.x, "Raw input text, used without --input");
  in_opts.add("span", in.spans, "Constraint span start:end over --x (repeatable)");
  in_opts.add("output", in.output, "Output text to replay");
  in_opts.add("sim-table", in.sim_table, "Injected similarity table JSON");
  in_opts.add("format", in.format, "tsv or json");
  in_opts.add("out", in.out, "Write the trace here instead of stdout");
  in.sat.add_to(in_opts, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (dg_opts.app()->parsed()) cmd_datagen(dg, dg_opts);
    if (ex_opts.app()->parsed()) cmd_extract(ex, ex_opts);
    if (tr_opts.app()->parsed()) cmd_train(tr, tr_opts);
    if (rw_opts.app()->parsed()) cmd_rewrite(rw, rw_opts);
    if (ev_opts.app()->parsed()) cmd_evaluate(ev, ev_opts);
    if (in_opts.app()->parsed()) cmd_inspect(in, in_opts);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
