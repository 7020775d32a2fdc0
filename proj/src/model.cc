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

#include "smf/model.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "json.hpp"
#include "smf/error.h"
#include "smf/rng.h"

namespace smf {

using nn::Matrix;
using nn::Tape;
using nn::Var;

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  const std::vector<std::string> specials = {"<pad>", "<unk>", "<sep>", "<eos>"};
  if (tokens.size() < specials.size() ||
      !std::equal(specials.begin(), specials.end(), tokens.begin())) {
    tokens.insert(tokens.begin(), specials.begin(), specials.end());
  }
  tokens_ = std::move(tokens);
  for (size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate vocabulary token: " + tokens_[i]);
    }
  }
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& sentences) {
  std::set<std::string> distinct;
  for (const auto& s : sentences) distinct.insert(s.begin(), s.end());
  for (const char* special : {"<pad>", "<unk>", "<sep>", "<eos>"}) distinct.erase(special);
  return Vocabulary(std::vector<std::string>(distinct.begin(), distinct.end()));
}

int Vocabulary::id(const std::string& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

int Vocabulary::id_strict(const std::string& token) const {
  const auto it = index_.find(token);
  if (it == index_.end()) throw Error(ErrorCode::kTokenOutOfVocab, token);
  return it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<size_t>(id) >= tokens_.size()) {
    throw Error(ErrorCode::kTokenOutOfVocab, "id " + std::to_string(id));
  }
  return tokens_[id];
}

std::vector<int> Vocabulary::encode(std::span<const std::string> tokens, bool allow_unk) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const std::string& t : tokens) ids.push_back(allow_unk ? id(t) : id_strict(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(std::span<const int> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(token(i));
  return out;
}

nn::FlagGrid flag_grid(const MentionFlagMatrix& m, size_t decoder_length) {
  if (m.num_columns() < decoder_length) {
    throw Error(ErrorCode::kShapeMismatch, "flag matrix has " + std::to_string(m.num_columns()) +
                                               " columns for " + std::to_string(decoder_length) +
                                               " decoder positions");
  }
  nn::FlagGrid grid(static_cast<Eigen::Index>(decoder_length), static_cast<Eigen::Index>(m.input_length()));
  for (size_t j = 0; j < decoder_length; ++j) {
    const auto col = m.column(j);
    for (size_t i = 0; i < col.size(); ++i) grid(j, i) = col[i];
  }
  return grid;
}

namespace {

Matrix xavier(Rng& rng, int rows, int cols) {
  const double bound = std::sqrt(6.0 / (rows + cols));
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
  return m;
}

Matrix gaussian(Rng& rng, int rows, int cols, double stddev) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, stddev);
  return m;
}

void validate(const ModelConfig& c) {
  if (c.dim <= 0 || c.heads <= 0 || c.dim % c.heads != 0) {
    throw Error(ErrorCode::kInvalidArgument, "dim must be a positive multiple of heads");
  }
  if (c.encoder_layers < 0 || c.decoder_layers < 1 || c.ff_dim <= 0 || c.max_length <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "bad layer counts or widths");
  }
  if (c.vocab_size < 4) throw Error(ErrorCode::kInvalidArgument, "vocab_size must include the specials");
}

}  // namespace

Seq2SeqModel::Seq2SeqModel(ModelConfig config, uint64_t seed) : config_(config) {
  validate(config_);
  Rng rng(seed);
  const int d = config_.dim, f = config_.ff_dim, v = config_.vocab_size, len = config_.max_length;
  const double emb_std = 1.0 / std::sqrt(static_cast<double>(d));

  add_param("tok_emb", gaussian(rng, v, d, emb_std));
  add_param("enc.pos", gaussian(rng, len, d, 0.1 * emb_std));
  add_param("dec.pos", gaussian(rng, len, d, 0.1 * emb_std));

  auto add_norm = [&](const std::string& prefix) {
    add_param(prefix + ".g", Matrix::Ones(1, d));
    add_param(prefix + ".b", Matrix::Zero(1, d));
  };
  auto add_attn = [&](const std::string& prefix) {
    for (const char* name : {".wq", ".wk", ".wv", ".wo"}) add_param(prefix + name, xavier(rng, d, d));
  };
  auto add_ffn = [&](const std::string& prefix) {
    add_param(prefix + ".w1", xavier(rng, d, f));
    add_param(prefix + ".b1", Matrix::Zero(1, f));
    add_param(prefix + ".w2", xavier(rng, f, d));
    add_param(prefix + ".b2", Matrix::Zero(1, d));
  };

  for (int l = 0; l < config_.encoder_layers; ++l) {
    const std::string p = "enc." + std::to_string(l);
    add_norm(p + ".ln1");
    add_attn(p + ".self");
    add_norm(p + ".ln2");
    add_ffn(p + ".ffn");
  }
  add_norm("enc.final");
  for (int l = 0; l < config_.decoder_layers; ++l) {
    const std::string p = "dec." + std::to_string(l);
    add_norm(p + ".ln1");
    add_attn(p + ".self");
    add_norm(p + ".ln2");
    add_attn(p + ".cross");
    add_norm(p + ".ln3");
    add_ffn(p + ".ffn");
  }
  add_norm("dec.final");
  add_param("flag.ek", gaussian(rng, 3, d, 0.5));
  add_param("flag.ev", gaussian(rng, 3, d, 0.5));
  add_param("out.w", xavier(rng, d, v));
  add_param("out.b", Matrix::Zero(1, v));
  bind_layout();
}

int Seq2SeqModel::add_param(std::string name, Matrix value) {
  const int index = static_cast<int>(params_.size());
  index_[name] = index;
  params_.push_back({std::move(name), std::move(value)});
  return index;
}

int Seq2SeqModel::param_index(std::string_view name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw Error(ErrorCode::kInvalidArgument, "no parameter " + std::string(name));
  return it->second;
}

size_t Seq2SeqModel::parameter_count() const {
  size_t n = 0;
  for (const auto& p : params_) n += static_cast<size_t>(p.value.size());
  return n;
}

void Seq2SeqModel::bind_layout() {
  auto norm_of = [&](const std::string& p) { return Norm{param_index(p + ".g"), param_index(p + ".b")}; };
  auto attn_of = [&](const std::string& p) {
    return Attn{param_index(p + ".wq"), param_index(p + ".wk"), param_index(p + ".wv"), param_index(p + ".wo")};
  };
  auto ffn_of = [&](const std::string& p) {
    return Ffn{param_index(p + ".w1"), param_index(p + ".b1"), param_index(p + ".w2"), param_index(p + ".b2")};
  };
  tok_emb_ = param_index("tok_emb");
  enc_pos_ = param_index("enc.pos");
  dec_pos_ = param_index("dec.pos");
  enc_layers_.clear();
  for (int l = 0; l < config_.encoder_layers; ++l) {
    const std::string p = "enc." + std::to_string(l);
    enc_layers_.push_back({norm_of(p + ".ln1"), norm_of(p + ".ln2"), attn_of(p + ".self"), ffn_of(p + ".ffn")});
  }
  enc_final_ = norm_of("enc.final");
  dec_layers_.clear();
  for (int l = 0; l < config_.decoder_layers; ++l) {
    const std::string p = "dec." + std::to_string(l);
    dec_layers_.push_back({norm_of(p + ".ln1"), norm_of(p + ".ln2"), norm_of(p + ".ln3"),
                           attn_of(p + ".self"), attn_of(p + ".cross"), ffn_of(p + ".ffn")});
  }
  dec_final_ = norm_of("dec.final");
  flag_k_ = param_index("flag.ek");
  flag_v_ = param_index("flag.ev");
  out_w_ = param_index("out.w");
  out_b_ = param_index("out.b");
}

Var Seq2SeqModel::norm(Tape& tape, Var x, const Norm& n) const {
  return nn::layer_norm(x, w(tape, n.gain), w(tape, n.bias));
}

Var Seq2SeqModel::self_attention(Tape& tape, Var x, const Attn& a, bool causal) const {
  nn::AttentionOptions o;
  o.heads = config_.heads;
  o.causal = causal;
  const Var q = nn::matmul(x, w(tape, a.wq));
  const Var k = nn::matmul(x, w(tape, a.wk));
  const Var v = nn::matmul(x, w(tape, a.wv));
  return nn::matmul(nn::attention(q, k, v, o), w(tape, a.wo));
}

Var Seq2SeqModel::feed_forward(Tape& tape, Var x, const Ffn& f) const {
  const Var h = nn::relu(nn::linear(x, w(tape, f.w1), w(tape, f.b1)));
  return nn::linear(h, w(tape, f.w2), w(tape, f.b2));
}

Var Seq2SeqModel::encode(Tape& tape, const std::vector<int>& x_ids) const {
  const int n = static_cast<int>(x_ids.size());
  if (n == 0) throw Error(ErrorCode::kEmptyInput, "empty encoder input");
  if (n > config_.max_length) {
    throw Error(ErrorCode::kLengthOverflow, "input length " + std::to_string(n) + " > max_length " +
                                                std::to_string(config_.max_length));
  }
  Var h = nn::add(nn::embedding(w(tape, tok_emb_), x_ids), nn::slice_rows(w(tape, enc_pos_), 0, n));
  for (const EncoderLayer& layer : enc_layers_) {
    h = nn::add(h, self_attention(tape, norm(tape, h, layer.ln1), layer.self, false));
    h = nn::add(h, feed_forward(tape, norm(tape, h, layer.ln2), layer.ffn));
  }
  return norm(tape, h, enc_final_);
}

Seq2SeqModel::CrossMemory Seq2SeqModel::cross_memory(Tape& tape, Var encoded) const {
  CrossMemory memory;
  memory.length = static_cast<int>(encoded.value().rows());
  for (const DecoderLayer& layer : dec_layers_) {
    memory.keys.push_back(nn::matmul(encoded, w(tape, layer.cross.wk)));
    memory.values.push_back(nn::matmul(encoded, w(tape, layer.cross.wv)));
  }
  return memory;
}

Var Seq2SeqModel::decode(Tape& tape, const CrossMemory& memory, const std::vector<int>& decoder_ids,
                         const nn::FlagGrid* flags, bool last_only) const {
  const int n = static_cast<int>(decoder_ids.size());
  if (n == 0) throw Error(ErrorCode::kEmptyInput, "empty decoder input");
  if (n > config_.max_length) {
    throw Error(ErrorCode::kLengthOverflow, "decoder length " + std::to_string(n) + " > max_length " +
                                                std::to_string(config_.max_length));
  }
  nn::FlagGrid zeros;
  const nn::FlagGrid* grid = nullptr;
  if (config_.use_flags) {
    if (flags) {
      if (flags->rows() != n || flags->cols() != memory.length) {
        throw Error(ErrorCode::kShapeMismatch, "flag grid must be decoder_length x encoder_length");
      }
      grid = flags;
    } else {
      zeros = nn::FlagGrid::Zero(n, memory.length);
      grid = &zeros;
    }
  }

  Var g = nn::add(nn::embedding(w(tape, tok_emb_), decoder_ids), nn::slice_rows(w(tape, dec_pos_), 0, n));
  for (size_t l = 0; l < dec_layers_.size(); ++l) {
    const DecoderLayer& layer = dec_layers_[l];
    g = nn::add(g, self_attention(tape, norm(tape, g, layer.ln1), layer.self, true));
    nn::AttentionOptions o;
    o.heads = config_.heads;
    if (grid) {
      o.flags = grid;
      o.flag_keys = w(tape, flag_k_);
      o.flag_values = w(tape, flag_v_);
    }
    const Var q = nn::matmul(norm(tape, g, layer.ln2), w(tape, layer.cross.wq));
    const Var attended = nn::attention(q, memory.keys[l], memory.values[l], o);
    g = nn::add(g, nn::matmul(attended, w(tape, layer.cross.wo)));
    g = nn::add(g, feed_forward(tape, norm(tape, g, layer.ln3), layer.ffn));
  }
  if (last_only) g = nn::slice_rows(g, n - 1, 1);
  return nn::linear(norm(tape, g, dec_final_), w(tape, out_w_), w(tape, out_b_));
}

nn::Matrix Seq2SeqModel::decode_step(const std::vector<nn::Matrix>& cross_keys,
                                     const std::vector<nn::Matrix>& cross_values, DecoderCache& cache, int token,
                                     const nn::FlagGrid* flag_row) const {
  const int pos = cache.length;
  if (pos >= config_.max_length) {
    throw Error(ErrorCode::kLengthOverflow, "decoder length " + std::to_string(pos + 1) +
                                                " > max_length " + std::to_string(config_.max_length));
  }
  const size_t layers = dec_layers_.size();
  if (cross_keys.size() != layers || cross_values.size() != layers) {
    throw Error(ErrorCode::kShapeMismatch, "cross memory must have one entry per decoder layer");
  }
  const int enc_len = static_cast<int>(cross_keys[0].rows());
  if (cache.keys.size() != layers) {
    cache.keys.assign(layers, nn::Matrix(0, config_.dim));
    cache.values.assign(layers, nn::Matrix(0, config_.dim));
  }
  nn::FlagGrid zeros;
  const nn::FlagGrid* grid = nullptr;
  if (config_.use_flags) {
    if (flag_row) {
      if (flag_row->rows() != 1 || flag_row->cols() != enc_len) {
        throw Error(ErrorCode::kShapeMismatch, "flag row must be 1 x encoder_length");
      }
      grid = flag_row;
    } else {
      zeros = nn::FlagGrid::Zero(1, enc_len);
      grid = &zeros;
    }
  }

  Tape tape(false);
  Var g = nn::add(nn::embedding(w(tape, tok_emb_), {token}), nn::slice_rows(w(tape, dec_pos_), pos, 1));
  for (size_t l = 0; l < layers; ++l) {
    const DecoderLayer& layer = dec_layers_[l];
    const Var x = norm(tape, g, layer.ln1);
    const Var q = nn::matmul(x, w(tape, layer.self.wq));
    nn::Matrix& keys = cache.keys[l];
    nn::Matrix& values = cache.values[l];
    keys.conservativeResize(pos + 1, Eigen::NoChange);
    values.conservativeResize(pos + 1, Eigen::NoChange);
    keys.row(pos) = nn::matmul(x, w(tape, layer.self.wk)).value();
    values.row(pos) = nn::matmul(x, w(tape, layer.self.wv)).value();
    nn::AttentionOptions so;
    so.heads = config_.heads;
    const Var self = nn::attention(q, tape.constant(keys), tape.constant(values), so);
    g = nn::add(g, nn::matmul(self, w(tape, layer.self.wo)));

    nn::AttentionOptions o;
    o.heads = config_.heads;
    if (grid) {
      o.flags = grid;
      o.flag_keys = w(tape, flag_k_);
      o.flag_values = w(tape, flag_v_);
    }
    const Var cq = nn::matmul(norm(tape, g, layer.ln2), w(tape, layer.cross.wq));
    const Var attended = nn::attention(cq, tape.constant(cross_keys[l]), tape.constant(cross_values[l]), o);
    g = nn::add(g, nn::matmul(attended, w(tape, layer.cross.wo)));
    g = nn::add(g, feed_forward(tape, norm(tape, g, layer.ln3), layer.ffn));
  }
  cache.length = pos + 1;
  return nn::linear(norm(tape, g, dec_final_), w(tape, out_w_), w(tape, out_b_)).value();
}

Var Seq2SeqModel::loss(Tape& tape, const std::vector<int>& x_ids, const std::vector<int>& decoder_ids,
                       const std::vector<int>& targets, const nn::FlagGrid* flags,
                       double label_smoothing) const {
  const Var encoded = encode(tape, x_ids);
  const CrossMemory memory = cross_memory(tape, encoded);
  return nn::cross_entropy(decode(tape, memory, decoder_ids, flags), targets, label_smoothing);
}

Matrix Seq2SeqModel::encode_states(const std::vector<int>& x_ids) const {
  Tape tape(false);
  return encode(tape, x_ids).value();
}

Matrix Seq2SeqModel::logits(const std::vector<int>& x_ids, const std::vector<int>& decoder_ids,
                            const nn::FlagGrid* flags) const {
  Tape tape(false);
  const CrossMemory memory = cross_memory(tape, encode(tape, x_ids));
  return decode(tape, memory, decoder_ids, flags).value();
}

Matrix Seq2SeqModel::distributions(const std::vector<int>& x_ids, const std::vector<int>& decoder_ids,
                                   const nn::FlagGrid* flags) const {
  return nn::log_softmax_rows(logits(x_ids, decoder_ids, flags)).array().exp();
}

Var Seq2SeqModel::cross_attention_flagged(Tape& tape, Var decoder_states, Var encoder_states,
                                          const nn::FlagGrid* flags, int layer) const {
  const DecoderLayer& dl = dec_layers_.at(static_cast<size_t>(layer));
  nn::AttentionOptions o;
  o.heads = config_.heads;
  if (flags) {
    o.flags = flags;
    o.flag_keys = w(tape, flag_k_);
    o.flag_values = w(tape, flag_v_);
  }
  const Var q = nn::matmul(decoder_states, w(tape, dl.cross.wq));
  const Var k = nn::matmul(encoder_states, w(tape, dl.cross.wk));
  const Var v = nn::matmul(encoder_states, w(tape, dl.cross.wv));
  return nn::attention(q, k, v, o);
}

void load_parameters(Seq2SeqModel& model, ModelConfig config, std::vector<nn::Parameter> params) {
  Seq2SeqModel fresh(config, 0);
  if (params.size() != fresh.params_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "checkpoint tensor count does not match the config");
  }
  for (nn::Parameter& p : params) {
    nn::Parameter& slot = fresh.params_[fresh.param_index(p.name)];
    if (slot.value.rows() != p.value.rows() || slot.value.cols() != p.value.cols()) {
      throw Error(ErrorCode::kShapeMismatch, "tensor " + p.name + " has the wrong shape");
    }
    slot.value = std::move(p.value);
  }
  model = std::move(fresh);
}

namespace {

constexpr char kMagic[8] = {'S', 'M', 'F', 'C', 'K', 'P', 'T', '\0'};

void write_u64(std::ostream& out, uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

uint64_t read_u64(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  if (!in) throw Error(ErrorCode::kIoError, "truncated checkpoint");
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}

nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"dim", c.dim},           {"heads", c.heads},       {"encoder_layers", c.encoder_layers},
          {"decoder_layers", c.decoder_layers}, {"ff_dim", c.ff_dim}, {"vocab_size", c.vocab_size},
          {"max_length", c.max_length}, {"use_flags", c.use_flags}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.dim = j.at("dim");
  c.heads = j.at("heads");
  c.encoder_layers = j.at("encoder_layers");
  c.decoder_layers = j.at("decoder_layers");
  c.ff_dim = j.at("ff_dim");
  c.vocab_size = j.at("vocab_size");
  c.max_length = j.at("max_length");
  c.use_flags = j.at("use_flags");
  return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const Seq2SeqModel& model, const Vocabulary& vocab,
                     const std::string& metadata_json) {
  nlohmann::json header;
  header["format"] = "smf-checkpoint";
  header["version"] = kCheckpointVersion;
  header["config"] = config_to_json(model.config());
  header["vocab"] = vocab.tokens();
  header["metadata"] = nlohmann::json::parse(metadata_json);
  nlohmann::json tensors = nlohmann::json::array();
  for (const nn::Parameter& p : model.parameters()) {
    tensors.push_back({{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}});
  }
  header["tensors"] = tensors;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  write_u64(out, kCheckpointVersion);
  write_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const nn::Parameter& p : model.parameters()) {
    for (Eigen::Index i = 0; i < p.value.size(); ++i) write_u64(out, std::bit_cast<uint64_t>(p.value.data()[i]));
  }
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) throw Error(ErrorCode::kIoError, path + " is not a checkpoint");
  const uint64_t version = read_u64(in);
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kCheckpointVersionMismatch,
                "checkpoint version " + std::to_string(version) + ", expected " + std::to_string(kCheckpointVersion));
  }
  const uint64_t header_size = read_u64(in);
  std::string text(header_size, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_size));
  if (!in) throw Error(ErrorCode::kIoError, "truncated checkpoint header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kIoError, std::string("bad checkpoint header: ") + e.what());
  }

  Checkpoint ck;
  const ModelConfig config = config_from_json(header.at("config"));
  ck.vocab = Vocabulary(header.at("vocab").get<std::vector<std::string>>());
  ck.metadata_json = header.value("metadata", nlohmann::json::object()).dump();
  std::vector<nn::Parameter> params;
  for (const auto& t : header.at("tensors")) {
    nn::Parameter p;
    p.name = t.at("name");
    p.value.resize(t.at("rows").get<Eigen::Index>(), t.at("cols").get<Eigen::Index>());
    for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = std::bit_cast<double>(read_u64(in));
    params.push_back(std::move(p));
  }
  load_parameters(ck.model, config, std::move(params));
  return ck;
}

}  // namespace smf
