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

#include "smf/datagen.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "smf/error.h"
#include "smf/rng.h"
#include "smf/similarity.h"
#include "smf/text.h"

namespace smf {
namespace {

using Words = std::vector<std::string>;

struct Product {
  std::string brand;
  std::string model;
  std::string attributes;
  std::string noun;
};

struct Action {
  std::string verb;
  std::string prep;
  std::vector<std::string> objects;
  std::vector<std::string> nouns;  // products it applies to
};

struct Domain {
  std::string name;
  std::vector<Product> products;
  std::vector<std::string> features;     // "Does this X have ...?"
  std::vector<std::string> accessories;  // "Does it work with ...?"
  std::vector<Action> actions;           // "Can you V O in/on this X?"
  std::vector<std::string> variants;     // condition clauses
};

const std::vector<Domain>& grammar() {
  static const std::vector<Domain> domains = {
      {"electronics",
       {{"Dell", "S2721", "27-inch Full HD Widescreen", "monitor"},
        {"Samsung", "A20", "Galaxy 32GB Unlocked", "phone"},
        {"Lenovo", "T14", "14-inch ThinkPad Business", "laptop"},
        {"Sony", "X300", "Portable Bluetooth Wireless", "speaker"},
        {"Acer", "C720", "11-inch Chromebook Touch", "laptop"},
        {"Amazon", "K10", "8-inch HD Kids", "tablet"}},
       {"a camera", "a usb port", "built-in speakers", "a touchscreen", "a headphone jack",
        "a backlit keyboard", "a memory card slot", "a wide screen"},
       {"a game console", "a wireless mouse", "an hdmi cable", "a car charger", "a docking station",
        "a stylus pen"},
       {{"install", "on", {"snapchat", "twitter", "zoom", "netflix", "spotify"}, {"phone", "laptop", "tablet"}},
        {"play", "on", {"music", "games", "movies", "podcasts"}, {"phone", "laptop", "tablet", "speaker", "monitor"}}},
       {"the pro model", "the 2020 version", "the unlocked version", "the wireless edition"}},
      {"kitchenware",
       {{"Cuisinart", "DCC3200", "14-Cup Programmable", "coffee maker"},
        {"Instant", "Duo", "7-in-1 Electric", "pressure cooker"},
        {"Lodge", "L8SK3", "Cast Iron 10-inch", "skillet"},
        {"Ninja", "BL610", "Professional 72oz", "blender"},
        {"OXO", "Brew", "Adjustable Temperature", "kettle"},
        {"Zojirushi", "NS-TSC10", "5-Cup Micom", "rice cooker"}},
       {"a glass lid", "a timer", "a non-stick coating", "a keep-warm setting", "a removable base",
        "a water filter", "a digital display", "a pour spout"},
       {"an induction cooktop", "a gas stove", "ground coffee", "frozen fruit", "metal utensils",
        "a glass carafe"},
       {{"make", "in", {"soup", "rice", "yogurt", "smoothies", "oatmeal"}, {"blender", "pressure cooker", "rice cooker"}},
        {"cook", "in", {"pasta", "beans", "eggs", "chili"}, {"pressure cooker", "skillet", "rice cooker"}}},
       {"the deluxe model", "the large size", "the stainless version", "the 2021 edition"}},
      {"outdoor gear",
       {{"Coleman", "Sundome", "4-Person Dome", "tent"},
        {"Osprey", "Atmos", "65L Backpacking", "backpack"},
        {"Yeti", "Tundra", "45 Quart Hard", "cooler"},
        {"Garmin", "Etrex", "Handheld Trail", "gps unit"},
        {"Petzl", "Actik", "350 Lumen", "headlamp"},
        {"Helinox", "Zero", "Ultralight Camp", "chair"}},
       {"a rain fly", "a hip belt", "a drain plug", "a red light mode", "a carrying case",
        "a water bladder sleeve", "a cup holder", "a mesh pocket"},
       {"rechargeable batteries", "a hydration pack", "trekking poles", "a solar panel",
        "a phone mount", "a ground tarp"},
       {{"keep", "in", {"ice", "drinks", "snacks", "fish"}, {"cooler", "backpack"}},
        {"carry", "in", {"a sleeping bag", "a laptop", "water bottles", "firewood"}, {"backpack", "cooler"}}},
       {"the xl size", "the ultralight version", "the 2022 model", "the waterproof edition"}},
  };
  return domains;
}

const Domain& find_domain(std::string_view name) {
  for (const Domain& d : grammar()) {
    if (d.name == name) return d;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown domain " + std::string(name));
}

Words split_words(std::string_view text) {
  Words out;
  std::istringstream in{std::string(text)};
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

bool is_determiner(std::string_view w) {
  return w == "a" || w == "an" || w == "the" || w == "this";
}

// Simple NP: determiners, numbers and nouns.
std::string np(std::string_view text) {
  std::string out = "(NP";
  const Words words = split_words(text);
  for (size_t i = 0; i < words.size(); ++i) {
    const std::string& w = words[i];
    std::string tag = "NN";
    if (is_determiner(to_lower(w))) {
      tag = "DT";
    } else if (std::isdigit(static_cast<unsigned char>(w.front()))) {
      tag = "CD";
    } else if (i + 1 < words.size()) {
      tag = "JJ";
    }
    out += " (" + tag + " " + w + ")";
  }
  return out + ")";
}

std::string np_it() { return "(NP (PRP it))"; }

enum class Frame { kHave, kWorkWith, kCanYou };

struct Slot {
  Frame frame = Frame::kHave;
  std::string object;
  const Action* action = nullptr;
};

// Words for "<subject> [does not] V O" in statement form. `subject` is who
// or what the product is; for kCanYou it becomes the prepositional object.
Words clause_words(const Slot& s, const Words& subject, bool positive) {
  Words out;
  const Words obj = split_words(s.object);
  switch (s.frame) {
    case Frame::kHave:
      out = subject;
      if (positive) {
        out.push_back("has");
      } else {
        out.insert(out.end(), {"does", "not", "have"});
      }
      break;
    case Frame::kWorkWith:
      out = subject;
      if (positive) {
        out.insert(out.end(), {"works", "with"});
      } else {
        out.insert(out.end(), {"does", "not", "work", "with"});
      }
      break;
    case Frame::kCanYou:
      out = {"you", positive ? "can" : "cannot", s.action->verb};
      out.insert(out.end(), obj.begin(), obj.end());
      out.push_back(s.action->prep);
      out.insert(out.end(), subject.begin(), subject.end());
      return out;
  }
  out.insert(out.end(), obj.begin(), obj.end());
  return out;
}

// The same clause as an answer fragment about "it", with its parse.
std::string clause_parse(const Slot& s, bool positive) {
  const std::string obj = np(s.object);
  switch (s.frame) {
    case Frame::kHave:
      return positive ? np_it() + " (VP (VBZ has) " + obj + ")"
                      : np_it() + " (VP (VBZ does) (RB not) (VP (VB have) " + obj + "))";
    case Frame::kWorkWith:
      return positive
                 ? np_it() + " (VP (VBZ works) (PP (IN with) " + obj + "))"
                 : np_it() + " (VP (VBZ does) (RB not) (VP (VB work) (PP (IN with) " + obj + ")))";
    case Frame::kCanYou:
      return "(NP (PRP you)) (VP (MD " + std::string(positive ? "can" : "cannot") + ") (VP (VB " +
             s.action->verb + ") " + obj + " (PP (IN " + s.action->prep + ") " + np_it() + ")))";
  }
  return {};
}

std::string question_parse(const Slot& s, const Product& p) {
  const std::string this_np = np("this " + p.noun);
  switch (s.frame) {
    case Frame::kHave:
      return "(SQ (VBZ Does) " + this_np + " (VP (VB have) " + np(s.object) + ") (. ?))";
    case Frame::kWorkWith:
      return "(SQ (VBZ Does) " + np_it() + " (VP (VB work) (PP (IN with) " + np(s.object) +
             ")) (. ?))";
    case Frame::kCanYou:
      return "(SQ (MD Can) (NP (PRP you)) (VP (VB " + s.action->verb + ") " + np(s.object) +
             " (PP (IN " + s.action->prep + ") " + this_np + ")) (. ?))";
  }
  return {};
}

const std::vector<std::string>& frame_pool(const Domain& d, const Slot& s) {
  switch (s.frame) {
    case Frame::kHave:
      return d.features;
    case Frame::kWorkWith:
      return d.accessories;
    case Frame::kCanYou:
      return s.action->objects;
  }
  return d.features;
}

std::string pick_other(Rng& rng, const std::vector<std::string>& pool, const std::string& not_this) {
  std::vector<std::string> rest;
  for (const auto& x : pool) {
    if (x != not_this) rest.push_back(x);
  }
  return rng.pick(rest);
}

std::string text_of(const std::string& bracketed) {
  return detokenize(parse_bracketed(bracketed).leaves());
}

void append(Words& out, const Words& more) { out.insert(out.end(), more.begin(), more.end()); }

std::vector<size_t> category_quota(size_t n, const CategoryMix& mix) {
  std::vector<size_t> counts(mix.size());
  std::vector<std::pair<double, size_t>> remainders;
  size_t assigned = 0;
  for (size_t i = 0; i < mix.size(); ++i) {
    const double exact = mix[i] * static_cast<double>(n);
    counts[i] = static_cast<size_t>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (size_t k = 0; assigned < n; ++k, ++assigned) ++counts[remainders[k % mix.size()].second];
  return counts;
}

void validate_mix(const CategoryMix& mix) {
  double total = 0.0;
  for (double m : mix) {
    if (!(m >= 0.0) || !std::isfinite(m)) {
      throw Error(ErrorCode::kInvalidMix, "category proportions must be finite and non-negative");
    }
    total += m;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidMix, "category proportions sum to " + std::to_string(total));
  }
}

PQAInstance make_instance(Rng& rng, Category category, size_t index) {
  const Domain& d = grammar()[rng.below(grammar().size())];
  const Product& p = rng.pick(d.products);

  std::vector<const Action*> actions;
  for (const Action& a : d.actions) {
    if (std::find(a.nouns.begin(), a.nouns.end(), p.noun) != a.nouns.end()) actions.push_back(&a);
  }
  Slot slot;
  slot.frame = static_cast<Frame>(rng.below(actions.empty() ? 2 : 3));
  if (slot.frame == Frame::kCanYou) slot.action = rng.pick(actions);
  slot.object = rng.pick(frame_pool(d, slot));

  const Polarity polarity = category == Category::kAlternative
                                ? Polarity::kNo
                                : (rng.below(2) == 0 ? Polarity::kYes : Polarity::kNo);
  const bool yes = polarity == Polarity::kYes;
  const std::string particle = yes ? "Yes" : "No";

  const std::string phrase = "the " + p.brand + " " + p.model + " " + p.noun;
  const Words phrase_words = split_words(phrase);
  const Words it = {"it"};

  std::string answer;
  Words target = {particle, ","};
  append(target, clause_words(slot, phrase_words, yes));

  switch (category) {
    case Category::kExplanation:
      answer = "(S (INTJ (UH " + particle + ")) (, ,) " + clause_parse(slot, yes) + " (. .))";
      target.push_back(".");
      break;
    case Category::kComplement: {
      Slot second = slot;
      second.object = pick_other(rng, frame_pool(d, slot), slot.object);
      answer = "(S (S (INTJ (UH " + particle + ")) (, ,) " + clause_parse(slot, yes) +
               ") (. .) (S (ADVP (RB Also)) (, ,) " + clause_parse(second, yes) + ") (. .))";
      append(target, {".", "Also", ","});
      append(target, clause_words(second, it, yes));
      target.push_back(".");
      break;
    }
    case Category::kCondition: {
      const std::string variant = rng.pick(d.variants);
      const std::string sbar = "(SBAR (IN if) (S " + np_it() + " (VP (VBZ is) " + np(variant) + ")))";
      answer = yes ? "(S (INTJ (UH Yes)) (, ,) " + sbar + " (. .))"
                   : "(S (INTJ (UH No)) (, ,) (RB not) " + sbar + " (. .))";
      append(target, {"if", "it", "is"});
      append(target, split_words(variant));
      target.push_back(".");
      break;
    }
    case Category::kAlternative: {
      Slot alt = slot;
      alt.object = pick_other(rng, frame_pool(d, slot), slot.object);
      answer = "(S (S (INTJ (UH No))) (. .) (S (CC But) " + clause_parse(alt, true) + ") (. .))";
      append(target, {".", "But"});
      append(target, clause_words(alt, it, true));
      append(target, {"instead", "."});
      break;
    }
  }

  PQAInstance inst;
  char id[32];
  std::snprintf(id, sizeof(id), "pqa-%05zu", index + 1);
  inst.id = id;
  inst.question_parse = normalize_bracketed(question_parse(slot, p));
  inst.answer_parse = normalize_bracketed(answer);
  inst.question = text_of(inst.question_parse);
  inst.answer = text_of(inst.answer_parse);
  inst.context = p.brand + " " + p.model + " " + p.attributes + " " + p.noun;
  inst.context_phrase = phrase;
  inst.category = category;
  inst.polarity = polarity;
  inst.target = detokenize(target);
  inst.domain = d.name;
  inst.constraints = gold_constraints(inst);
  return inst;
}

nlohmann::json constraint_json(const Constraint& c) {
  return {{"text", c.text()},     {"start", c.span.start}, {"end", c.span.end},
          {"label", c.label},     {"source", side_name(c.source)}};
}

Constraint constraint_from_json(const nlohmann::json& j) {
  Constraint c;
  c.tokens = split_words(j.at("text").get<std::string>());
  c.span = {j.at("start").get<size_t>(), j.at("end").get<size_t>()};
  c.label = j.at("label").get<std::string>();
  c.source = parse_side(j.at("source").get<std::string>());
  c.priority = constraint_priority(c.label);
  return c;
}

}  // namespace

std::string_view category_name(Category c) {
  switch (c) {
    case Category::kExplanation:
      return "explanation";
    case Category::kComplement:
      return "complement";
    case Category::kCondition:
      return "condition";
    case Category::kAlternative:
      return "alternative";
  }
  return "explanation";
}

Category parse_category(std::string_view name) {
  for (Category c : kAllCategories) {
    if (category_name(c) == name) return c;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown category " + std::string(name));
}

std::string_view polarity_name(Polarity p) { return p == Polarity::kYes ? "yes" : "no"; }

Polarity parse_polarity(std::string_view name) {
  if (name == "yes") return Polarity::kYes;
  if (name == "no") return Polarity::kNo;
  throw Error(ErrorCode::kInvalidArgument, "unknown polarity " + std::string(name));
}

const std::vector<std::string>& synthetic_domains() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const Domain& d : grammar()) out.push_back(d.name);
    return out;
  }();
  return names;
}

const std::vector<std::string>& function_words() {
  static const std::vector<std::string> words = {
      "yes", "no", ",", ".", "the", "does", "not", "also", "but", "instead", "it",
      "you", "can", "cannot", "if", "is", "has", "works", "with", "use"};
  return words;
}

std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  for (const std::string& t : tokens) {
    const bool attach = t.size() == 1 && std::string_view(",.?!;:").find(t[0]) != std::string_view::npos;
    if (!out.empty() && !attach) out += ' ';
    out += t;
  }
  return out;
}

std::vector<PQAInstance> generate(const GeneratorConfig& config) {
  validate_mix(config.mix);
  if (config.n == 0) throw Error(ErrorCode::kInvalidMix, "n must be at least 1");
  if (config.first_person_rate < 0.0 || config.first_person_rate > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "first_person_rate must lie in [0, 1]");
  }

  std::vector<Category> categories;
  const std::vector<size_t> quota = category_quota(config.n, config.mix);
  for (size_t i = 0; i < quota.size(); ++i) categories.insert(categories.end(), quota[i], kAllCategories[i]);
  Rng order_rng(derive_seed(config.seed, 0));
  order_rng.shuffle(categories);

  const size_t total = config.train + config.dev + config.test;
  size_t n_train = config.n, n_dev = 0;
  if (total > 0) {
    n_train = config.n * config.train / total;
    n_dev = config.n * config.dev / total;
  }

  Rng rng(derive_seed(config.seed, 1));
  const uint64_t style_seed = derive_seed(config.seed, 2);
  std::vector<PQAInstance> out;
  out.reserve(config.n);
  for (size_t i = 0; i < config.n; ++i) {
    PQAInstance inst = make_instance(rng, categories[i], i);
    inst = first_person_variants(inst, config.first_person_rate, style_seed);
    inst.split = i < n_train ? "train" : (i < n_train + n_dev ? "dev" : "test");
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<Constraint> gold_constraints(const PQAInstance& instance,
                                         const ExtractionOptions& options) {
  if (instance.question_parse.empty()) {
    throw Error(ErrorCode::kMissingParse, "instance " + instance.id + " has no question parse");
  }
  const ParseTree q = parse_bracketed(instance.question_parse);
  if (instance.answer_parse.empty()) return extract_constraints(q, nullptr, options);
  const ParseTree a = parse_bracketed(instance.answer_parse);
  return extract_constraints(q, &a, options);
}

PQAInstance first_person_variants(const PQAInstance& instance, double rate, uint64_t seed) {
  if (rate < 0.0 || rate > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "rate must lie in [0, 1]");
  }
  Rng rng(derive_seed(seed, fnv1a64(instance.id)));
  if (rate == 0.0 || rng.uniform() >= rate) return instance;

  const Domain& d = find_domain(instance.domain);
  const std::string accessory = rng.pick(d.accessories);
  PQAInstance out = instance;
  const std::string usage = "(S (NP (PRP I've)) (VP (VBN been) (VP (VBG using) " + np_it() +
                            " (PP (IN with) " + np(accessory) + "))))";
  out.answer_parse = normalize_bracketed("(S " + instance.answer_parse + " " + usage + " (. .))");
  out.answer = text_of(out.answer_parse);

  Words tail = {"You", "can", "use", "it", "with"};
  append(tail, split_words(accessory));
  tail.push_back(".");
  out.target = instance.target + " " + detokenize(tail);
  out.constraints = gold_constraints(out);
  return out;
}

void leave_one_domain_out(std::vector<PQAInstance>& instances, std::string_view domain) {
  for (PQAInstance& inst : instances) inst.split = inst.domain == domain ? "test" : "train";
}

std::string to_jsonl_line(const PQAInstance& inst) {
  nlohmann::json constraints = nlohmann::json::array();
  for (const Constraint& c : inst.constraints) constraints.push_back(constraint_json(c));
  nlohmann::ordered_json j;
  j["id"] = inst.id;
  j["question"] = inst.question;
  j["answer"] = inst.answer;
  j["context"] = inst.context;
  j["context_phrase"] = inst.context_phrase;
  j["category"] = category_name(inst.category);
  j["polarity"] = polarity_name(inst.polarity);
  j["target"] = inst.target;
  j["question_parse"] = inst.question_parse;
  j["answer_parse"] = inst.answer_parse;
  j["constraints"] = constraints;
  j["domain"] = inst.domain;
  j["split"] = inst.split;
  return j.dump();
}

PQAInstance from_jsonl_line(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad corpus line: ") + e.what());
  }
  PQAInstance inst;
  try {
    inst.id = j.at("id").get<std::string>();
    inst.question = j.at("question").get<std::string>();
    inst.answer = j.value("answer", "");
    inst.context = j.value("context", "");
    inst.context_phrase = j.value("context_phrase", "");
    inst.category = parse_category(j.value("category", "explanation"));
    inst.polarity = parse_polarity(j.value("polarity", "yes"));
    inst.target = j.value("target", "");
    inst.question_parse = j.value("question_parse", "");
    inst.answer_parse = j.value("answer_parse", "");
    inst.domain = j.value("domain", "");
    inst.split = j.value("split", "");
    if (j.contains("constraints")) {
      for (const auto& c : j.at("constraints")) inst.constraints.push_back(constraint_from_json(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad corpus line: ") + e.what());
  }
  return inst;
}

void write_jsonl(const std::string& path, const std::vector<PQAInstance>& instances) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  for (const PQAInstance& inst : instances) out << to_jsonl_line(inst) << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path);
}

std::vector<PQAInstance> read_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path);
  std::vector<PQAInstance> out;
  for (std::string line; std::getline(in, line);) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(from_jsonl_line(line));
  }
  return out;
}

}  // namespace smf
