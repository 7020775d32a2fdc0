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


// Acceptance runner: one PASS/FAIL line per criterion.
//   smf_acceptance --workdir DIR [--only 1,3,7]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <set>
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
#include "smf/rng.h"
#include "smf/similarity.h"
#include "smf/text.h"
#include "smf/train.h"
#include "smf/treebank.h"

namespace fs = std::filesystem;
namespace nn = smf::nn;
using json = nlohmann::json;
using Tokens = std::vector<std::string>;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fixture(const std::string& name) { return std::string(SMF_FIXTURE_DIR) + "/" + name; }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream ss;
  ss.precision(digits);
  ss << std::fixed << v;
  return ss.str();
}

std::string sci(double v) {
  std::ostringstream ss;
  ss.precision(2);
  ss << std::scientific << v;
  return ss.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<int> flag_row(const smf::MentionFlagMatrix& m, size_t pos) {
  std::vector<int> out;
  for (size_t t = 0; t < m.num_columns(); ++t) out.push_back(m.column(t)[pos]);
  return out;
}

// ---- shared corpus and model helpers

struct Corpus {
  std::vector<smf::PQAInstance> train, test;
};

const Corpus& corpus() {
  static const Corpus c = [] {
    Corpus out;
    for (auto& inst : smf::generate(smf::GeneratorConfig{})) {
      if (inst.split == "train") out.train.push_back(inst);
      if (inst.split == "test") out.test.push_back(inst);
    }
    return out;
  }();
  return c;
}

struct System {
  smf::Seq2SeqModel model;
  smf::Vocabulary vocab;
  smf::SatisfierConfig satisfier;
  smf::TrainingLog log;
};

smf::SatisfierConfig with_mode(smf::SatisfactionMode mode, double threshold_b = 0.3) {
  smf::SatisfierConfig sc;
  sc.mode = mode;
  sc.threshold_b = threshold_b;
  return sc;
}

System train_system(const std::vector<smf::PQAInstance>& train, const smf::SatisfierConfig& sc, int epochs,
                    double lr, uint64_t seed, const smf::ModelConfig& base = {}) {
  const smf::SatisfactionMode mode = sc.mode;
  smf::ModelConfig mc = base;
  const smf::Vocabulary vocab = smf::build_vocabulary(train);
  mc.vocab_size = static_cast<int>(vocab.size());
  mc.use_flags = mode != smf::SatisfactionMode::kOff;
  std::vector<smf::TrainingExample> examples;
  for (const auto& inst : train) examples.push_back(smf::make_training_example(inst, vocab, sc, mc.use_flags));
  smf::TrainingConfig tc;
  tc.learning_rate = lr;
  tc.epochs = epochs;
  tc.seed = seed;
  smf::Seq2SeqModel model(mc, seed);
  smf::TrainingLog log = smf::train(model, examples, tc);
  return {std::move(model), vocab, sc, std::move(log)};
}

struct Decoded {
  std::vector<smf::RewriteOutput> outputs;
  std::vector<smf::DecodeResult> results;
  std::vector<std::vector<Tokens>> constraints;
};

Decoded decode_all(const System& sys, const std::vector<smf::PQAInstance>& insts, smf::DecoderKind kind,
                   const smf::DecodeOptions& opt) {
  Decoded d;
  for (const auto& inst : insts) {
    const smf::ModelInput in = smf::prepare_input(inst);
    std::vector<std::vector<int>> cons;
    for (const auto& words : in.constraint_words()) {
      std::vector<int> ids;
      for (const auto& w : words) ids.push_back(sys.vocab.id_strict(w));
      cons.push_back(std::move(ids));
    }
    const smf::ModelStepScorer scorer(sys.model, sys.vocab.encode(in.x_tokens));
    smf::DecodeResult r =
        smf::run_decoder(kind, scorer, sys.vocab, smf::make_tracker(in, sys.satisfier), cons, opt);
    d.outputs.push_back({inst.id, sys.vocab.decode(r.best.tokens)});
    d.constraints.push_back(in.constraint_words());
    d.results.push_back(std::move(r));
  }
  return d;
}

std::string outputs_jsonl(const Decoded& d, const smf::Vocabulary& vocab) {
  std::string s;
  for (size_t i = 0; i < d.outputs.size(); ++i) {
    json line = json::parse(smf::decode_report_json(d.results[i], vocab, d.constraints[i]));
    line["id"] = d.outputs[i].id;
    line["output"] = smf::detokenize(d.outputs[i].tokens);
    s += line.dump() + "\n";
  }
  return s;
}

double lexical_coverage(const Decoded& d) {
  size_t hit = 0, total = 0;
  for (size_t i = 0; i < d.outputs.size(); ++i) {
    hit += smf::lexical_matches(d.outputs[i].tokens, d.constraints[i]);
    total += d.constraints[i].size();
  }
  return total ? static_cast<double>(hit) / static_cast<double>(total) : 0.0;
}

// ---- 1, 2: flag replays

Outcome touchscreen_replay(const fs::path&) {
  const auto t0 = std::chrono::steady_clock::now();
  const Tokens x{"The", "screen", "has", "full", "touchscreen", "function"};
  const Tokens y{"Dell", "Laptop", "comes", "with", "full", "touchscreen", "."};
  auto scorer = std::make_shared<smf::TableSimilarityScorer>(
      smf::InjectedSimilarityTable::from_file(fixture("touchscreen_sims.json")));
  smf::FlagTracker tr(x, {{"has", "full", "touchscreen", "function"}}, {{2, 3, 4, 5}}, smf::SatisfierConfig{},
                      scorer);
  for (const auto& tok : y) tr.advance(tok);
  const std::string expected =
      "<SEP>\tDell\tLaptop\tcomes\twith\tfull\ttouchscreen\t.\n"
      "The\t0\t0\t0\t0\t0\t0\t0\t0\n"
      "screen\t0\t0\t0\t0\t0\t0\t0\t0\n"
      "has\t1\t1\t1\t1\t1\t1\t2\t2\n"
      "full\t1\t1\t1\t1\t1\t1\t2\t2\n"
      "touchscreen\t1\t1\t1\t1\t1\t1\t2\t2\n"
      "function\t1\t1\t1\t1\t1\t1\t2\t2\n";
  const bool grid_ok = smf::trace_tsv(tr.matrix(), x, y, "<SEP>") == expected;
  // first column holding 2 must be the one after "touchscreen" (column 6)
  size_t first_flip = 0;
  for (size_t t = 0; t < tr.matrix().num_columns(); ++t) {
    if (tr.matrix().column(t)[2] == 2) {
      first_flip = t;
      break;
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = grid_ok && first_flip == 6 && y[first_flip - 1] == "touchscreen" && secs < 1.0;
  return {ok, std::string(grid_ok ? "6x8 grid matches" : "grid differs") + ", first flip after '" +
                  (first_flip ? y[first_flip - 1] : std::string("?")) + "', " + fmt(secs, 3) + " s"};
}

Outcome shipping_style_replay(const fs::path&) {
  const auto t0 = std::chrono::steady_clock::now();
  const Tokens x{"We", "can", "ship", "to", "Brazil"};
  const Tokens y{"Dell", "XPS", "can", "be", "shipped", "by", "us", "to", "Brazil", "."};
  smf::SatisfierConfig cfg;
  cfg.mode = smf::SatisfactionMode::kLexical;
  cfg.style_enabled = true;
  smf::FlagTracker tr(x, {}, {}, cfg);
  for (const auto& tok : y) tr.advance(tok);
  const std::vector<int> expected{2, 2, 2, 2, 2, 2, 2, 1, 1, 1, 1};
  const auto got = flag_row(tr.matrix(), 0);
  std::string row;
  for (int v : got) row += std::to_string(v);
  const double secs = seconds_since(t0);
  return {got == expected && secs < 1.0, "We row " + row + ", " + fmt(secs, 3) + " s"};
}

// ---- 3: flagged attention by hand

Outcome attention_fidelity(const fs::path&) {
  using M = nn::Matrix;
  auto m2 = [](double a, double b, double c, double d) {
    M m(2, 2);
    m << a, b, c, d;
    return m;
  };
  smf::ModelConfig c;
  c.dim = 2;
  c.heads = 1;
  c.encoder_layers = 1;
  c.decoder_layers = 1;
  c.ff_dim = 2;
  c.vocab_size = 5;
  c.max_length = 4;
  smf::Seq2SeqModel model(c, 1);
  const M wq = m2(1.0, 0.5, -0.5, 1.0), wk = m2(0.8, 0.0, 0.2, 1.0), wv = m2(1.0, -1.0, 0.5, 2.0);
  M ek(3, 2), ev(3, 2);
  ek << 0, 0, 0.5, -0.25, 0.0, 1.0;
  ev << 0, 0, 1.0, 1.0, -2.0, 0.5;
  model.param("dec.0.cross.wq").value = wq;
  model.param("dec.0.cross.wk").value = wk;
  model.param("dec.0.cross.wv").value = wv;
  model.param("flag.ek").value = ek;
  model.param("flag.ev").value = ev;
  nn::FlagGrid grid(2, 2);
  grid << 1, 2, 0, 2;
  const M hd = m2(1.0, 0.0, 0.3, -0.7), he = m2(1.0, 2.0, -1.0, 0.5);

  // scalar loops: k_ij = he_j Wk + Ek[f], v_ij = he_j Wv + Ev[f], softmax(q.k / sqrt d)
  double hand[2][2];
  for (int i = 0; i < 2; ++i) {
    double q[2] = {0, 0};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) q[b] += hd(i, a) * wq(a, b);
    double score[2], vals[2][2];
    for (int j = 0; j < 2; ++j) {
      const int f = grid(i, j);
      double k[2] = {ek(f, 0), ek(f, 1)};
      vals[j][0] = ev(f, 0);
      vals[j][1] = ev(f, 1);
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          k[b] += he(j, a) * wk(a, b);
          vals[j][b] += he(j, a) * wv(a, b);
        }
      }
      score[j] = (q[0] * k[0] + q[1] * k[1]) / std::sqrt(2.0);
    }
    const double mx = std::max(score[0], score[1]);
    const double e0 = std::exp(score[0] - mx), e1 = std::exp(score[1] - mx);
    for (int b = 0; b < 2; ++b) hand[i][b] = (e0 * vals[0][b] + e1 * vals[1][b]) / (e0 + e1);
  }
  nn::Tape tape(false);
  const M out =
      model.cross_attention_flagged(tape, tape.constant(hd), tape.constant(he), &grid, 0).value();
  const double frozen[2][2] = {{2.1741152256977685, 3.784551798008114},
                               {0.40151025507962257, 2.8317379215873286}};
  double worst = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int b = 0; b < 2; ++b) {
      worst = std::max(worst, std::abs(out(i, b) - hand[i][b]));
      worst = std::max(worst, std::abs(out(i, b) - frozen[i][b]));
    }
  }

  // zero flag tables: logits equal the vanilla model bit for bit
  smf::ModelConfig mc;
  mc.dim = 8;
  mc.heads = 2;
  mc.encoder_layers = 1;
  mc.decoder_layers = 2;
  mc.ff_dim = 16;
  mc.vocab_size = 12;
  mc.max_length = 16;
  smf::Seq2SeqModel flagged(mc, 21);
  flagged.param("flag.ek").value.setZero();
  flagged.param("flag.ev").value.setZero();
  smf::Seq2SeqModel vanilla = flagged;
  vanilla.set_use_flags(false);
  smf::Rng rng(8);
  bool identical = true;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> x, y{smf::Vocabulary::kSep};
    for (size_t k = 0, n = 2 + rng.below(8); k < n; ++k) x.push_back(4 + static_cast<int>(rng.below(8)));
    for (size_t k = 0, n = 1 + rng.below(6); k < n; ++k) y.push_back(4 + static_cast<int>(rng.below(8)));
    nn::FlagGrid g(static_cast<Eigen::Index>(y.size()), static_cast<Eigen::Index>(x.size()));
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = static_cast<uint8_t>(rng.below(3));
    const M a = flagged.logits(x, y, &g), b = vanilla.logits(x, y, nullptr);
    identical = identical && a.cwiseNotEqual(b).count() == 0;
  }
  return {worst < 1e-9 && identical,
          "max deviation " + sci(worst) + ", E=0 logits " + (identical ? "bit-identical" : "differ")};
}

// ---- 4: gradient probes

Outcome gradient_check(const fs::path&) {
  const auto t0 = std::chrono::steady_clock::now();
  smf::ModelConfig mc;
  mc.dim = 8;
  mc.heads = 2;
  mc.encoder_layers = 1;
  mc.decoder_layers = 2;
  mc.ff_dim = 16;
  mc.vocab_size = 12;
  mc.max_length = 16;
  smf::Seq2SeqModel model(mc, 31);
  smf::Rng rng(4);
  // larger flag tables so the flag path carries real signal
  for (const char* name : {"flag.ek", "flag.ev"}) {
    for (Eigen::Index i = 0; i < model.param(name).value.size(); ++i) {
      model.param(name).value.data()[i] = rng.normal(0.0, 0.5);
    }
  }
  const std::vector<int> x{4, 5, 6, 7, 8, 3};
  const std::vector<int> dec{2, 9, 10, 11, 4};
  const std::vector<int> targets{9, 10, 11, 4, 3};
  nn::FlagGrid grid(5, 6);
  for (Eigen::Index i = 0; i < grid.size(); ++i) grid.data()[i] = static_cast<uint8_t>(rng.below(3));

  auto& params = model.parameters();
  std::vector<nn::Matrix> grads;
  for (const auto& p : params) grads.push_back(nn::Matrix::Zero(p.value.rows(), p.value.cols()));
  {
    nn::Tape tape;
    tape.backward(model.loss(tape, x, dec, targets, &grid), grads);
  }
  auto loss_value = [&] {
    nn::Tape tape(false);
    return model.loss(tape, x, dec, targets, &grid).value()(0, 0);
  };

  std::vector<size_t> targets_idx;
  for (size_t p = 0; p < params.size(); ++p) {
    const std::string& n = params[p].name;
    const bool cross = n.find(".cross.w") != std::string::npos && n.back() != 'o';
    if (n == "flag.ek" || n == "flag.ev" || cross) targets_idx.push_back(p);
  }
  const double step = 1e-4;
  double worst = 0.0;
  std::map<std::string, int> per_group;
  for (int probe = 0; probe < 100; ++probe) {
    const size_t p = targets_idx[rng.below(targets_idx.size())];
    const Eigen::Index i = static_cast<Eigen::Index>(rng.below(static_cast<uint64_t>(params[p].value.size())));
    double& w = params[p].value.data()[i];
    const double saved = w;
    w = saved + step;
    const double plus = loss_value();
    w = saved - step;
    const double minus = loss_value();
    w = saved;
    const double numeric = (plus - minus) / (2.0 * step);
    const double analytic = grads[p].data()[i];
    worst = std::max(worst, std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), 1e-6));
    const std::string& n = params[p].name;
    per_group[n.substr(n.rfind('.') + 1)]++;
  }
  std::string groups;
  for (const auto& [g, k] : per_group) groups += (groups.empty() ? "" : " ") + g + ":" + std::to_string(k);
  const double secs = seconds_since(t0);
  return {worst < 1e-3 && per_group.size() == 5 && secs < 30.0,
          "100 probes (" + groups + "), worst relative error " + sci(worst) + ", " + fmt(secs, 2) + " s"};
}

// ---- 5: extraction oracle

Outcome extraction_oracle(const fs::path&) {
  const json cases = json::parse(slurp(fixture("extraction_oracle.json")));
  size_t ok = 0;
  std::string bad;
  for (const auto& c : cases) {
    const smf::ParseTree q = smf::parse_bracketed(c.at("question").get<std::string>());
    std::optional<smf::ParseTree> a;
    if (c.contains("answer")) a = smf::parse_bracketed(c.at("answer").get<std::string>());
    const auto got = smf::extract_constraints(q, a ? &*a : nullptr);
    const auto& expected = c.at("expected");
    bool same = got.size() == expected.size();
    for (size_t i = 0; same && i < got.size(); ++i) {
      same = got[i].text() == expected[i].at("text").get<std::string>() &&
             got[i].label == expected[i].at("label").get<std::string>() &&
             std::string(smf::side_name(got[i].source)) == expected[i].at("source").get<std::string>() &&
             got[i].span.start == expected[i].at("start").get<size_t>() &&
             got[i].span.end == expected[i].at("end").get<size_t>();
    }
    if (same) {
      ++ok;
    } else {
      bad += " " + c.at("name").get<std::string>();
    }
  }
  return {ok == cases.size() && cases.size() == 20,
          std::to_string(ok) + "/" + std::to_string(cases.size()) + " trees" + (bad.empty() ? "" : "; failing:" + bad)};
}

// ---- 6: constrained beam search

Outcome cbs_guarantee(const fs::path& dir) {
  const auto& c = corpus();
  const System sys = train_system(c.train, with_mode(smf::SatisfactionMode::kOff), 1, 1e-3, 7);
  const std::vector<smf::PQAInstance> insts(c.test.begin(), c.test.begin() + 50);
  smf::DecodeOptions opt;
  opt.beam = 4;
  const Decoded beam = decode_all(sys, insts, smf::DecoderKind::kBeam, opt);
  const Decoded cbs = decode_all(sys, insts, smf::DecoderKind::kCbs, opt);
  spit(dir / "c6" / "beam.jsonl", outputs_jsonl(beam, sys.vocab));
  spit(dir / "c6" / "cbs.jsonl", outputs_jsonl(cbs, sys.vocab));

  size_t finished = 0, complete = 0, instances_finished = 0, unsat = 0;
  for (size_t i = 0; i < insts.size(); ++i) {
    const auto& r = cbs.results[i];
    if (r.unsatisfiable) ++unsat;
    if (!r.finished.empty()) ++instances_finished;
    for (const auto& h : r.finished) {
      ++finished;
      if (smf::lexical_matches(sys.vocab.decode(h.tokens), cbs.constraints[i]) == cbs.constraints[i].size()) {
        ++complete;
      }
    }
  }
  const double beam_cov = lexical_coverage(beam), cbs_cov = lexical_coverage(cbs);
  const bool ok = finished > 0 && complete == finished && beam_cov < cbs_cov;
  return {ok, std::to_string(complete) + "/" + std::to_string(finished) +
                  " finished top-bank hypotheses hold every constraint (" + std::to_string(instances_finished) +
                  "/50 instances finished, " + std::to_string(unsat) + " unsatisfiable); lexical coverage beam " +
                  fmt(beam_cov) + " < cbs " + fmt(cbs_cov) + " (train loss " +
                  fmt(sys.log.epoch_losses.back(), 3) + ")"};
}

// ---- 7: end-to-end ordering

constexpr int kE2eEpochs = 12;
constexpr double kE2eLr = 1e-3;

Outcome end_to_end(const fs::path& dir) {
  const auto& c = corpus();
  struct Row {
    std::string name;
    smf::SatisfierConfig satisfier;
  };
  // smf uses b = 0 so verbatim copies always flip; smf_b03 keeps the default
  // gate and is reported alongside
  const std::vector<Row> rows{{"vanilla", with_mode(smf::SatisfactionMode::kOff)},
                              {"mf", with_mode(smf::SatisfactionMode::kLexical)},
                              {"smf", with_mode(smf::SatisfactionMode::kSemantic, 0.0)},
                              {"smf_b03", with_mode(smf::SatisfactionMode::kSemantic)}};
  smf::DecodeOptions opt;
  opt.beam = 4;
  std::vector<smf::EvalReport> reports;
  std::string losses;
  for (const auto& row : rows) {
    const System sys = train_system(c.train, row.satisfier, kE2eEpochs, kE2eLr, 7);
    const Decoded d = decode_all(sys, c.test, smf::DecoderKind::kBeam, opt);
    spit(dir / "c7" / (row.name + ".jsonl"), outputs_jsonl(d, sys.vocab));
    spit(dir / "c7" / (row.name + "_loss.csv"), smf::loss_log_csv(sys.log));
    // coverage is always scored with the default thresholds
    reports.push_back(smf::evaluate(row.name, d.outputs, c.test));
    losses += (losses.empty() ? "" : "/") + fmt(sys.log.epoch_losses.back(), 3);
  }
  spit(dir / "c7" / "report.txt", smf::report_table(reports));
  const auto& v = reports[0].overall;
  const auto& mf = reports[1].overall;
  const auto& smf_row = reports[2].overall;
  const auto& b03 = reports[3].overall;
  const bool ok = smf_row.coverage_semantic >= mf.coverage_semantic &&
                  mf.coverage_semantic >= v.coverage_semantic && smf_row.bleu >= v.bleu;
  return {ok, "semantic coverage smf " + fmt(smf_row.coverage_semantic) + " / mf " + fmt(mf.coverage_semantic) +
                  " / vanilla " + fmt(v.coverage_semantic) + "; BLEU smf " + fmt(smf_row.bleu, 2) + " / mf " +
                  fmt(mf.bleu, 2) + " / vanilla " + fmt(v.bleu, 2) + "; smf trained with b=0.3: coverage " +
                  fmt(b03.coverage_semantic) + ", BLEU " + fmt(b03.bleu, 2) + "; final losses " + losses};
}

// ---- 8: metric oracle

Outcome metric_oracle(const fs::path&) {
  const json doc = json::parse(slurp(fixture("metric_oracle.json")));
  std::vector<smf::TokenList> hyps, refs;
  double worst_f = 0.0;
  for (const auto& p : doc.at("pairs")) {
    hyps.push_back(smf::tokenize(p.at("hypothesis").get<std::string>()));
    refs.push_back(smf::tokenize(p.at("reference").get<std::string>()));
    worst_f = std::max(worst_f, std::abs(smf::rouge_l(hyps.back(), refs.back()) - p.at("rouge_l_f").get<double>()));
  }
  const double diff = std::abs(smf::bleu(hyps, refs, false) - doc.at("corpus_bleu_unsmoothed_sacrebleu").get<double>());
  return {hyps.size() == 25 && diff < 0.1 && worst_f < 1e-3,
          std::to_string(hyps.size()) + " pairs, BLEU diff " + sci(diff) + ", worst ROUGE-L F diff " +
              sci(worst_f)};
}

// ---- 9: determinism

Outcome determinism(const fs::path& dir) {
  auto run = [&](const std::string& tag) {
    const fs::path d = dir / "c9" / tag;
    smf::GeneratorConfig gc;
    gc.first_person_rate = 0.2;
    std::string corpus_text;
    std::vector<smf::PQAInstance> train;
    for (const auto& inst : smf::generate(gc)) {
      corpus_text += smf::to_jsonl_line(inst) + "\n";
      if (inst.split == "train" && train.size() < 200) train.push_back(inst);
    }
    // decode inputs drawn from the training slice keep the vocabulary closed
    const std::vector<smf::PQAInstance> test(train.begin(), train.begin() + 40);
    spit(d / "corpus.jsonl", corpus_text);
    smf::ModelConfig small;
    small.dim = 32;
    small.heads = 2;
    small.ff_dim = 64;
    small.encoder_layers = 1;
    small.decoder_layers = 1;
    const System sys = train_system(train, with_mode(smf::SatisfactionMode::kSemantic), 1, 1e-3, 11, small);
    spit(d / "loss.csv", smf::loss_log_csv(sys.log));
    smf::save_checkpoint((d / "model.ckpt").string(), sys.model, sys.vocab);
    spit(d / "beam.jsonl", outputs_jsonl(decode_all(sys, test, smf::DecoderKind::kBeam, {}), sys.vocab));
    spit(d / "cbs.jsonl", outputs_jsonl(decode_all(sys, test, smf::DecoderKind::kCbs, {}), sys.vocab));
    return d;
  };
  const fs::path a = run("a"), b = run("b");
  std::string differing;
  for (const char* f : {"corpus.jsonl", "loss.csv", "model.ckpt", "beam.jsonl", "cbs.jsonl"}) {
    if (slurp((a / f).string()) != slurp((b / f).string())) differing += std::string(" ") + f;
  }
  return {differing.empty(), differing.empty() ? "corpus, loss log, checkpoint and outputs byte-identical"
                                               : "differ:" + differing};
}

// ---- 10: invariant fuzzing

// Prefix-hashed noise, biased toward copying input tokens and pronouns.
struct CopyLM final : smf::StepScorer {
  uint64_t seed = 0;
  size_t vocab = 0;
  std::set<int> boosted;
  std::vector<double> next_log_probs(const std::vector<int>& prefix, const smf::MentionFlagMatrix&) const override {
    uint64_t h = seed;
    for (int t : prefix) h = smf::derive_seed(h, static_cast<uint64_t>(t));
    smf::Rng r(h);
    std::vector<double> l(vocab);
    for (size_t v = 0; v < vocab; ++v) l[v] = r.normal() * 1.5 + (boosted.contains(static_cast<int>(v)) ? 3.0 : 0.0);
    l[smf::Vocabulary::kPad] = l[smf::Vocabulary::kUnk] = l[smf::Vocabulary::kSep] = -1e9;
    l[smf::Vocabulary::kEos] = -3.0 + 0.5 * static_cast<double>(prefix.size());
    const double mx = *std::max_element(l.begin(), l.end());
    double z = 0.0;
    for (double x : l) z += std::exp(x - mx);
    for (double& x : l) x -= mx + std::log(z);
    return l;
  }
};

std::string check_invariants(const smf::FlagTracker& tr, size_t outputs) {
  const auto& m = tr.matrix();
  if (m.num_columns() != outputs + 1) return "column count";
  std::vector<bool> owned(m.input_length(), false);
  for (size_t c = 0; c < m.num_constraints(); ++c) {
    for (size_t p : m.owned_positions(c)) owned[p] = true;
  }
  for (size_t i = 0; i < m.input_length(); ++i) {
    const auto r = flag_row(m, i);
    for (int v : r) {
      if (v < 0 || v > 2) return "closure";
    }
    if (r[0] == 0 && std::any_of(r.begin(), r.end(), [](int v) { return v != 0; })) return "zero row";
    if (!owned[i] && !m.is_style_position(i) && r[0] != 0) return "unowned nonzero";
    for (size_t t = 1; t < r.size(); ++t) {
      if (m.is_style_position(i) && r[t] > r[t - 1]) return "style anti-monotonicity";
      if (owned[i] && r[t] < r[t - 1]) return "extraction monotonicity";
    }
  }
  return "";
}

Outcome flag_fuzz(const fs::path&) {
  const auto& c = corpus();
  std::vector<smf::PQAInstance> pool = c.test;
  for (const auto& inst : c.train) pool.push_back(smf::first_person_variants(inst, 0.5, 5));
  const smf::Vocabulary vocab = smf::build_vocabulary(pool);
  std::set<int> pronouns;
  for (const auto* lex : {&smf::first_person_lexicon(), &smf::second_person_lexicon()}) {
    for (const auto& w : *lex) {
      if (vocab.contains(w)) pronouns.insert(vocab.id(w));
    }
  }
  smf::Rng rng(2024);
  size_t traces = 0, violations = 0, flips = 0, style_drops = 0;
  std::map<std::string, size_t> kinds;
  std::string first_violation;
  for (int trial = 0; traces < 10000; ++trial) {
    const smf::PQAInstance& inst = pool[rng.below(pool.size())];
    const smf::ModelInput in = smf::prepare_input(inst);
    smf::SatisfierConfig sc;
    sc.mode = static_cast<smf::SatisfactionMode>(rng.below(3));
    sc.style_enabled = rng.below(2) == 1;
    sc.style_trigger = rng.below(4) == 0 ? smf::StyleTrigger::kSecondPerson : smf::StyleTrigger::kFirstPerson;
    sc.threshold_a = rng.uniform(0.5, 0.95);
    sc.threshold_b = rng.uniform(0.0, 0.4);
    CopyLM lm;
    lm.seed = rng.next_u64();
    lm.vocab = vocab.size();
    lm.boosted = pronouns;
    for (const auto& t : in.x_tokens) lm.boosted.insert(vocab.id(t));
    std::vector<std::vector<int>> cons;
    for (const auto& words : in.constraint_words()) cons.push_back(vocab.encode(words));
    smf::DecodeOptions opt;
    opt.max_len = 4 + rng.below(20);
    opt.beam = 1 + rng.below(3);
    const auto kind = static_cast<smf::DecoderKind>(rng.below(3));
    const smf::DecodeResult r = smf::run_decoder(kind, lm, vocab, smf::make_tracker(in, sc), cons, opt);
    std::vector<const smf::Hypothesis*> hyps{&r.best};
    for (const auto& h : r.finished) hyps.push_back(&h);
    for (const auto* h : hyps) {
      if (traces >= 10000) break;
      ++traces;
      std::string why = check_invariants(h->flags, h->tokens.size());
      if (why.empty()) {
        smf::FlagTracker replay = smf::make_tracker(in, sc);
        for (const auto& t : vocab.decode(h->tokens)) replay.advance(t);
        for (size_t t = 0; t < replay.matrix().num_columns() && why.empty(); ++t) {
          const auto a = replay.matrix().column(t), b = h->flags.matrix().column(t);
          if (!std::equal(a.begin(), a.end(), b.begin(), b.end())) why = "replay mismatch";
        }
      }
      if (!why.empty()) {
        ++violations;
        ++kinds[why];
        if (first_violation.empty()) first_violation = inst.id + " " + why;
      }
      const auto& m = h->flags.matrix();
      for (size_t i = 0; i < m.input_length(); ++i) {
        if (m.column(0)[i] == 1 && m.current()[i] == 2) ++flips;
        if (m.column(0)[i] == 2 && m.current()[i] == 1) ++style_drops;
      }
    }
  }
  return {violations == 0, std::to_string(traces) + " traces, " + std::to_string(violations) + " violations" +
                               (first_violation.empty() ? "" : " (first: " + first_violation + ")") + "; " +
                               std::to_string(flips) + " satisfied cells, " + std::to_string(style_drops) +
                               " style drops exercised"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria runner"};
  std::string workdir = "acceptance";
  std::vector<int> only;
  app.add_option("--workdir", workdir, "Directory for intermediate artifacts");
  app.add_option("--only", only, "Run only these criteria")->delimiter(',')->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome(const fs::path&)>>> criteria{
      {"touchscreen flag replay", touchscreen_replay},
      {"shipping style replay", shipping_style_replay},
      {"flagged attention fidelity", attention_fidelity},
      {"gradient check", gradient_check},
      {"extraction oracle", extraction_oracle},
      {"constrained beam search guarantee", cbs_guarantee},
      {"end-to-end ordering", end_to_end},
      {"metric oracles", metric_oracle},
      {"determinism", determinism},
      {"flag invariant fuzzing", flag_fuzz},
  };
  const fs::path dir(workdir);
  fs::create_directories(dir);
  json summary = json::object();
  int failures = 0;
  for (size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second(dir);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    if (!o.pass) ++failures;
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[k].first << " | "
              << o.detail << " [" << fmt(secs, 1) << " s]" << std::endl;
    summary[std::to_string(id)] = {{"name", criteria[k].first}, {"pass", o.pass}, {"detail", o.detail},
                                   {"seconds", secs}};
  }
  spit(dir / "summary.json", summary.dump(2) + "\n");
  return failures == 0 ? 0 : 1;
}
