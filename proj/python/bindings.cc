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


#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "smf/datagen.h"
#include "smf/decode.h"
#include "smf/error.h"
#include "smf/eval.h"
#include "smf/flags.h"
#include "smf/model.h"
#include "smf/pipeline.h"
#include "smf/similarity.h"
#include "smf/text.h"
#include "smf/treebank.h"

namespace py = pybind11;
using json = nlohmann::json;
using Tokens = std::vector<std::string>;

namespace {

// JSON text <-> Python objects through the stdlib json module.
py::object to_python(const std::string& text) { return py::module_::import("json").attr("loads")(text); }
std::string from_python(const py::object& obj) {
  return py::module_::import("json").attr("dumps")(obj).cast<std::string>();
}

smf::SatisfierConfig satisfier(const std::string& mode, double a, double b, bool style,
                               const std::string& trigger) {
  smf::SatisfierConfig c;
  c.mode = smf::parse_mode(mode);
  c.threshold_a = a;
  c.threshold_b = b;
  c.style_enabled = style;
  c.style_trigger = smf::parse_style_trigger(trigger);
  c.validate();
  return c;
}

std::vector<std::vector<int>> rows_of(const smf::MentionFlagMatrix& m) {
  std::vector<std::vector<int>> out(m.input_length());
  for (size_t t = 0; t < m.num_columns(); ++t) {
    const auto col = m.column(t);
    for (size_t i = 0; i < col.size(); ++i) out[i].push_back(col[i]);
  }
  return out;
}

class Rewriter {
 public:
  explicit Rewriter(const std::string& path) : ckpt_(smf::load_checkpoint(path)) {
    const json meta = json::parse(ckpt_.metadata_json, nullptr, false);
    const json s = meta.is_object() && meta.contains("satisfier") ? meta["satisfier"] : json::object();
    config_ = satisfier(s.value("mode", "semantic"), s.value("threshold_a", 0.8), s.value("threshold_b", 0.3),
                        s.value("style", "off") == "on", s.value("style_trigger", "first_person"));
  }

  py::object rewrite(const py::object& instance, const std::string& decoder, size_t beam, size_t max_len) const {
    const smf::PQAInstance inst = smf::from_jsonl_line(from_python(instance));
    const smf::DecoderKind kind = smf::parse_decoder(decoder);
    const smf::ModelInput in = smf::prepare_input(inst);
    std::vector<std::vector<int>> cons;
    for (const auto& words : in.constraint_words()) {
      std::vector<int> ids;
      for (const auto& w : words) ids.push_back(ckpt_.vocab.id_strict(w));
      cons.push_back(std::move(ids));
    }
    smf::DecodeOptions opt;
    opt.beam = beam;
    opt.max_len = max_len;
    const smf::ModelStepScorer scorer(ckpt_.model, ckpt_.vocab.encode(in.x_tokens));
    const smf::DecodeResult r =
        smf::run_decoder(kind, scorer, ckpt_.vocab, smf::make_tracker(in, config_), cons, opt);
    json out = json::parse(smf::decode_report_json(r, ckpt_.vocab, in.constraint_words()));
    out["id"] = inst.id;
    out["output"] = smf::detokenize(ckpt_.vocab.decode(r.best.tokens));
    out["flags"] = rows_of(r.best.flags.matrix());
    return to_python(out.dump());
  }

  std::string mode() const { return std::string(smf::mode_name(config_.mode)); }

 private:
  smf::Checkpoint ckpt_;
  smf::SatisfierConfig config_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Answer rewriting with soft mention flags";
  py::register_exception<smf::Error>(m, "SmfError", PyExc_RuntimeError);

  m.def("tokenize", &smf::tokenize, py::arg("text"));
  m.def("detokenize", &smf::detokenize, py::arg("tokens"));

  m.def(
      "extract_constraints",
      [](const std::string& question, const std::optional<std::string>& answer, bool include_toplevel_np) {
        const smf::ParseTree q = smf::parse_bracketed(question);
        std::optional<smf::ParseTree> a;
        if (answer) a = smf::parse_bracketed(*answer);
        smf::ExtractionOptions opt;
        opt.include_toplevel_np = include_toplevel_np;
        py::list out;
        for (const auto& c : smf::extract_constraints(q, a ? &*a : nullptr, opt)) {
          py::dict d;
          d["text"] = c.text();
          d["tokens"] = c.tokens;
          d["label"] = c.label;
          d["source"] = std::string(smf::side_name(c.source));
          d["start"] = c.span.start;
          d["end"] = c.span.end;
          out.append(d);
        }
        return out;
      },
      py::arg("question_parse"), py::arg("answer_parse") = py::none(), py::arg("include_toplevel_np") = false);

  m.def(
      "similarity",
      [](const Tokens& a, const Tokens& b) {
        const smf::HashedNgramEmbedder e;
        return smf::cosine(e.embed(a), e.embed(b));
      },
      py::arg("a"), py::arg("b"), "Cosine of hashed character-trigram embeddings");

  m.def(
      "flag_trace",
      [](const Tokens& x, const std::vector<Tokens>& constraints, const std::vector<std::vector<size_t>>& rows,
         const Tokens& output, const std::string& mode, double a, double b, bool style,
         const std::string& trigger) {
        smf::FlagTracker tr(x, constraints, rows, satisfier(mode, a, b, style, trigger));
        for (const auto& t : output) tr.advance(t);
        return rows_of(tr.matrix());
      },
      py::arg("x_tokens"), py::arg("constraints"), py::arg("rows"), py::arg("output_tokens"),
      py::arg("mode") = "semantic", py::arg("threshold_a") = 0.8, py::arg("threshold_b") = 0.3,
      py::arg("style") = false, py::arg("style_trigger") = "first_person",
      "Mention-flag matrix as one list per input position, one entry per decoding step");

  m.def(
      "generate",
      [](size_t n, uint64_t seed, double first_person_rate) {
        smf::GeneratorConfig c;
        c.n = n;
        c.seed = seed;
        c.first_person_rate = first_person_rate;
        py::list out;
        for (const auto& inst : smf::generate(c)) out.append(to_python(smf::to_jsonl_line(inst)));
        return out;
      },
      py::arg("n") = 1500, py::arg("seed") = 2023, py::arg("first_person_rate") = 0.2);

  m.def(
      "bleu", [](const std::vector<Tokens>& h, const std::vector<Tokens>& r, bool smooth) {
        return smf::bleu(h, r, smooth);
      },
      py::arg("hypotheses"), py::arg("references"), py::arg("smooth") = true);
  m.def(
      "rouge_l", [](const Tokens& h, const Tokens& r) { return smf::rouge_l(h, r); }, py::arg("hypothesis"),
      py::arg("reference"));

  py::class_<Rewriter>(m, "Rewriter")
      .def(py::init<const std::string&>(), py::arg("checkpoint"))
      .def("rewrite", &Rewriter::rewrite, py::arg("instance"), py::arg("decoder") = "greedy",
           py::arg("beam") = 4, py::arg("max_len") = 48)
      .def_property_readonly("mode", &Rewriter::mode);
}
