#ifndef XADAPT_ADAPT_HPP
#define XADAPT_ADAPT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "xadapt/dataio.hpp"
#include "xadapt/nn.hpp"

namespace xadapt {

// Shared training knobs. Paper-default values: 100 epochs, batch 128,
// Adam at 1e-4, equal multi-task weights (lambda 1).
struct TrainConfig {
  int epochs = 100;
  int batch_size = 128;
  double learning_rate = 1e-4;
  uint64_t seed = 1;
  int hidden_width = 512;
  double lambda = 1.0;          // weight on the reversed domain loss (DAT)
  int discriminator_steps = 1;  // ADDA alternation ratio
  int mapping_steps = 1;

  void validate() const;
};

// Source-domain encoder plus speaker classifier, trained supervised.
struct SourceModel {
  MLPEncoder encoder;
  SpeakerClassifier classifier;
  std::vector<std::string> speakers;  // label vocabulary, index = class id
};

// Two-encoder adversarial model. The source half is a frozen copy; only
// target_encoder and discriminator move during adaptation.
struct AddaModel {
  SourceModel source;
  MLPEncoder target_encoder;
  DomainDiscriminator discriminator;
};

// Y-shaped network: shared encoder with a speaker head and a domain head
// behind gradient reversal.
struct DatModel {
  MLPEncoder shared_encoder;
  SpeakerClassifier speaker_head;
  DomainDiscriminator domain_head;
  double lambda = 1.0;
  std::vector<std::string> speakers;
};

struct TraceRow {
  int epoch = 0;
  std::string name;
  double value = 0.0;
};

struct LossTrace {
  std::vector<TraceRow> rows;
  void add(int epoch, const std::string &name, double value) {
    rows.push_back({epoch, name, value});
  }
  // `epoch<TAB>loss_name<TAB>value` lines.
  void write_tsv(const std::string &path) const;
  std::vector<double> series(const std::string &name) const;
};

struct SourceTrainResult {
  SourceModel model;
  LossTrace trace;              // per-epoch "source_ce"
  double final_accuracy = 0.0;  // training accuracy after the last epoch
};

// Supervised pretraining of encoder + classifier by minibatch Adam on the
// softmax cross entropy. Deterministic function of (data, config, seed).
SourceTrainResult train_source(const EmbeddingSet &src, const TrainConfig &cfg);

struct AddaResult {
  AddaModel model;
  LossTrace trace;  // per-epoch "adda_disc" and "adda_map"
};

// Two-step adversarial adaptation: the target encoder starts as a copy of
// the frozen source encoder, then alternates discriminator updates
// (both encoders fixed) with target-encoder updates (discriminator fixed)
// for cfg.epochs passes over the target set. Source parameters are never
// touched.
AddaResult adapt_adda(const SourceModel &source, const EmbeddingSet &tgt,
                      const EmbeddingSet &src, const TrainConfig &cfg);

struct DatResult {
  DatModel model;
  LossTrace trace;  // per-epoch "dat_speaker_ce", "dat_domain_bce", "dat_domain_acc"
  double final_source_accuracy = 0.0;
  double final_domain_accuracy = 0.0;
};

// Joint optimization of the multi-task objective: speaker cross entropy on
// source minus lambda times the domain loss over both domains, the domain
// gradient entering the shared encoder through the reversal layer. Each
// step sees one source and one target minibatch; an epoch is one pass over
// the larger set with the smaller one cycling.
DatResult train_dat(const EmbeddingSet &src, const EmbeddingSet &tgt,
                    const TrainConfig &cfg);

enum class EncodeMode { kReplace, kConcat };

// Runs the encoder over every vector. kReplace emits the encoder output,
// kConcat appends it to the input vector. Ids, labels and domain tags are
// preserved.
EmbeddingSet encode(const MLPEncoder &encoder, const EmbeddingSet &emb,
                    EncodeMode mode);
inline EmbeddingSet encode(const SourceModel &m, const EmbeddingSet &e, EncodeMode mode) {
  return encode(m.encoder, e, mode);
}
// The paper extracts adapted embeddings with the trained target encoder.
inline EmbeddingSet encode(const AddaModel &m, const EmbeddingSet &e, EncodeMode mode) {
  return encode(m.target_encoder, e, mode);
}
inline EmbeddingSet encode(const DatModel &m, const EmbeddingSet &e, EncodeMode mode) {
  return encode(m.shared_encoder, e, mode);
}

// Architecture helpers shared by the trainers and tests.
//   encoder:        in -> h -> h -> h, ReLU hidden, identity output (3 layers)
//   speaker head:   h -> h -> K, ReLU then logits (2 layers)
//   domain head:    h -> h -> 1 (2 layers, DAT)
//   discriminator:  h -> h -> h -> 1, 2 hidden ReLU layers (ADDA)
MLPEncoder make_encoder(int input_dim, int hidden, Rng &rng);
SpeakerClassifier make_speaker_head(int input_dim, int hidden, int n_speakers, Rng &rng);
DomainDiscriminator make_domain_head(int input_dim, int hidden, Rng &rng);
DomainDiscriminator make_adda_discriminator(int input_dim, int hidden, Rng &rng);

}  // namespace xadapt

#endif  // XADAPT_ADAPT_HPP
