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

#ifndef SMF_MODEL_H_
#define SMF_MODEL_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "smf/autograd.h"
#include "smf/flags.h"

namespace smf {

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kSep = 2;  // separator in x and decoder start token
  static constexpr int kEos = 3;

  Vocabulary();
  explicit Vocabulary(std::vector<std::string> tokens);

  // Specials followed by the sorted set of distinct corpus tokens.
  static Vocabulary build(const std::vector<std::vector<std::string>>& sentences);

  int id(const std::string& token) const;
  // Throws kTokenOutOfVocab for unknown tokens.
  int id_strict(const std::string& token) const;
  bool contains(const std::string& token) const { return index_.contains(token); }
  const std::string& token(int id) const;
  std::vector<int> encode(std::span<const std::string> tokens, bool allow_unk = true) const;
  std::vector<std::string> decode(std::span<const int> ids) const;
  size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct ModelConfig {
  int dim = 64;
  int heads = 4;
  int encoder_layers = 2;
  int decoder_layers = 2;
  int ff_dim = 128;
  int vocab_size = 0;
  int max_length = 128;
  // false: the flag path is skipped entirely (vanilla seq2seq baseline).
  bool use_flags = true;
};

// Decoder-side flag grid: row j is the flag column M(., j) used by decoder
// position j. Uses columns 0 .. decoder_length - 1.
nn::FlagGrid flag_grid(const MentionFlagMatrix& m, size_t decoder_length);

// Encoder-decoder transformer (pre-LN, learned positions, ReLU FFN) whose
// decoder cross-attention adds mention-flag key/value embeddings in every
// layer. One E_k/E_v pair (3 x dim) is shared by all decoder layers.
class Seq2SeqModel {
 public:
  Seq2SeqModel() = default;
  Seq2SeqModel(ModelConfig config, uint64_t seed);

  const ModelConfig& config() const { return config_; }
  void set_use_flags(bool use_flags) { config_.use_flags = use_flags; }

  std::vector<nn::Parameter>& parameters() { return params_; }
  const std::vector<nn::Parameter>& parameters() const { return params_; }
  int param_index(std::string_view name) const;
  nn::Parameter& param(std::string_view name) { return params_[param_index(name)]; }
  const nn::Parameter& param(std::string_view name) const { return params_[param_index(name)]; }
  size_t parameter_count() const;

  // Per-decoder-layer cross-attention keys/values of the encoder states.
  struct CrossMemory {
    std::vector<nn::Var> keys;
    std::vector<nn::Var> values;
    int length = 0;
  };

  nn::Var encode(nn::Tape& tape, const std::vector<int>& x_ids) const;
  CrossMemory cross_memory(nn::Tape& tape, nn::Var encoded) const;
  // Logits for every decoder position (or only the last when last_only).
  nn::Var decode(nn::Tape& tape, const CrossMemory& memory, const std::vector<int>& decoder_ids,
                 const nn::FlagGrid* flags, bool last_only = false) const;
  // Self-attention keys/values of every decoder position seen so far.
  struct DecoderCache {
    std::vector<nn::Matrix> keys;
    std::vector<nn::Matrix> values;
    int length = 0;
  };
  // Incremental decoding: appends `token` at position cache.length and
  // returns its logits (1 x vocab). Cross keys/values are the values of a
  // CrossMemory; `flag_row` is 1 x encoder_length.
  nn::Matrix decode_step(const std::vector<nn::Matrix>& cross_keys,
                         const std::vector<nn::Matrix>& cross_values, DecoderCache& cache, int token,
                         const nn::FlagGrid* flag_row) const;
  // Teacher-forced mean token cross-entropy.
  nn::Var loss(nn::Tape& tape, const std::vector<int>& x_ids, const std::vector<int>& decoder_ids,
               const std::vector<int>& targets, const nn::FlagGrid* flags,
               double label_smoothing = 0.0) const;

  // Non-recording conveniences.
  nn::Matrix encode_states(const std::vector<int>& x_ids) const;
  nn::Matrix logits(const std::vector<int>& x_ids, const std::vector<int>& decoder_ids,
                    const nn::FlagGrid* flags) const;
  // Row-wise next-token probability distributions.
  nn::Matrix distributions(const std::vector<int>& x_ids, const std::vector<int>& decoder_ids,
                           const nn::FlagGrid* flags) const;

  // Flag-augmented cross-attention of decoder states against encoder states
  // with the weights of decoder layer `layer`, before the output projection.
  nn::Var cross_attention_flagged(nn::Tape& tape, nn::Var decoder_states, nn::Var encoder_states,
                                  const nn::FlagGrid* flags, int layer) const;

 private:
  struct Attn {
    int wq, wk, wv, wo;
  };
  struct Norm {
    int gain, bias;
  };
  struct Ffn {
    int w1, b1, w2, b2;
  };
  struct EncoderLayer {
    Norm ln1, ln2;
    Attn self;
    Ffn ffn;
  };
  struct DecoderLayer {
    Norm ln1, ln2, ln3;
    Attn self, cross;
    Ffn ffn;
  };

  int add_param(std::string name, nn::Matrix value);
  void bind_layout();
  nn::Var w(nn::Tape& tape, int index) const { return tape.weight(params_[index], index); }
  nn::Var self_attention(nn::Tape& tape, nn::Var x, const Attn& a, bool causal) const;
  nn::Var feed_forward(nn::Tape& tape, nn::Var x, const Ffn& f) const;
  nn::Var norm(nn::Tape& tape, nn::Var x, const Norm& n) const;

  ModelConfig config_;
  std::vector<nn::Parameter> params_;
  std::map<std::string, int, std::less<>> index_;

  int tok_emb_ = -1, enc_pos_ = -1, dec_pos_ = -1;
  int flag_k_ = -1, flag_v_ = -1;
  Norm enc_final_{}, dec_final_{};
  int out_w_ = -1, out_b_ = -1;
  std::vector<EncoderLayer> enc_layers_;
  std::vector<DecoderLayer> dec_layers_;

  friend void load_parameters(Seq2SeqModel&, ModelConfig, std::vector<nn::Parameter>);
};

// Replaces the model with the given config and tensors (names must match the
// layout the config implies).
void load_parameters(Seq2SeqModel& model, ModelConfig config, std::vector<nn::Parameter> params);

// Versioned binary checkpoint: magic, format version, a JSON header
// (hyperparameters, vocabulary, tensor names and shapes, free-form metadata)
// and little-endian float64 tensor data.
constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Seq2SeqModel model;
  Vocabulary vocab;
  std::string metadata_json = "{}";
};

void save_checkpoint(const std::string& path, const Seq2SeqModel& model, const Vocabulary& vocab,
                     const std::string& metadata_json = "{}");
// Throws kIoError or kCheckpointVersionMismatch.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace smf

#endif  // SMF_MODEL_H_
