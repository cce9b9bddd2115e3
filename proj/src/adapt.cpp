#include "xadapt/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include "xadapt/error.hpp"

namespace xadapt {

namespace {

// Rng stream ids. train_source and train_dat must agree on the streams for
// the encoder, the speaker head and the source shuffle so that a lambda=0
// DAT run reproduces the source-only trajectory bit for bit.
constexpr uint64_t kStreamEncoderInit = 10;
constexpr uint64_t kStreamSpeakerInit = 11;
constexpr uint64_t kStreamDomainInit = 12;
constexpr uint64_t kStreamSourceShuffle = 13;
constexpr uint64_t kStreamTargetShuffle = 14;

std::vector<std::vector<int>> make_batches(int n, int batch_size, Rng &rng) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::vector<std::vector<int>> batches;
  for (int start = 0; start < n; start += batch_size) {
    const int end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

Matrix gather_rows(const Matrix &m, const std::vector<int> &rows) {
  Matrix out(static_cast<int>(rows.size()), m.cols());
  for (size_t i = 0; i < rows.size(); ++i)
    std::copy(m.row(rows[i]), m.row(rows[i]) + m.cols(), out.row(static_cast<int>(i)));
  return out;
}

std::vector<double> column_as_vector(const Matrix &m) {
  std::vector<double> v(m.rows());
  for (int i = 0; i < m.rows(); ++i) v[i] = m(i, 0);
  return v;
}

Matrix vector_as_column(const std::vector<double> &v) {
  Matrix m(static_cast<int>(v.size()), 1);
  for (size_t i = 0; i < v.size(); ++i) m(static_cast<int>(i), 0) = v[i];
  return m;
}

void check_finite_loss(double loss, const char *what) {
  if (!std::isfinite(loss))
    throw DivergenceError(std::string(what) + ": non-finite loss");
}

// Speaker labels as class indices against the sorted vocabulary.
std::vector<int> class_labels(const EmbeddingSet &set,
                              const std::vector<std::string> &vocab) {
  std::map<std::string, int> index;
  for (size_t i = 0; i < vocab.size(); ++i) index[vocab[i]] = static_cast<int>(i);
  std::vector<int> labels(set.size());
  for (int r = 0; r < set.size(); ++r) {
    auto it = set.utt2spk.find(set.ids[r]);
    if (it == set.utt2spk.end())
      throw DegenerateInputError("unlabeled utterance '" + set.ids[r] +
                                 "' in a labeled training set");
    labels[r] = index.at(it->second);
  }
  return labels;
}

double classification_accuracy(const MLPEncoder &encoder,
                               const SpeakerClassifier &head,
                               const EmbeddingSet &set,
                               const std::vector<int> &labels) {
  const Matrix logits = head.net.forward(encoder.forward(set.vectors));
  int correct = 0;
  for (int i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (int j = 1; j < logits.cols(); ++j)
      if (logits(i, j) > logits(i, best)) best = j;
    if (best == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / logits.rows();
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
  if (batch_size < 1 || learning_rate <= 0.0 || hidden_width < 1 ||
      lambda < 0.0 || discriminator_steps < 1 || mapping_steps < 1)
    throw std::invalid_argument("TrainConfig: all knobs must be positive");
}

void LossTrace::write_tsv(const std::string &path) const {
  std::ofstream out(path);
  if (!out) throw DataFormatError("cannot write '" + path + "'");
  char buf[48];
  for (const TraceRow &row : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g", row.value);
    out << row.epoch << '\t' << row.name << '\t' << buf << '\n';
  }
}

std::vector<double> LossTrace::series(const std::string &name) const {
  std::vector<double> out;
  for (const TraceRow &row : rows)
    if (row.name == name) out.push_back(row.value);
  return out;
}

MLPEncoder make_encoder(int input_dim, int hidden, Rng &rng) {
  return MLPEncoder::make({input_dim, hidden, hidden, hidden},
                          {Activation::kRelu, Activation::kRelu, Activation::kIdentity},
                          rng);
}

SpeakerClassifier make_speaker_head(int input_dim, int hidden, int n_speakers,
                                    Rng &rng) {
  SpeakerClassifier head;
  head.net = MLPEncoder::make({input_dim, hidden, n_speakers},
                              {Activation::kRelu, Activation::kIdentity}, rng);
  return head;
}

DomainDiscriminator make_domain_head(int input_dim, int hidden, Rng &rng) {
  DomainDiscriminator d;
  d.net = MLPEncoder::make({input_dim, hidden, 1},
                           {Activation::kRelu, Activation::kIdentity}, rng);
  return d;
}

DomainDiscriminator make_adda_discriminator(int input_dim, int hidden, Rng &rng) {
  DomainDiscriminator d;
  d.net = MLPEncoder::make(
      {input_dim, hidden, hidden, 1},
      {Activation::kRelu, Activation::kRelu, Activation::kIdentity}, rng);
  return d;
}

SourceTrainResult train_source(const EmbeddingSet &src, const TrainConfig &cfg) {
  cfg.validate();
  src.validate();
  if (src.size() == 0) throw DegenerateInputError("train_source: empty source set");
  if (!src.labeled())
    throw DegenerateInputError("train_source: source set has no speaker labels");
  const std::vector<std::string> vocab = src.speakers();
  if (vocab.size() < 2)
    throw DegenerateInputError("train_source: need at least 2 speakers, got " +
                               std::to_string(vocab.size()));
  const std::vector<int> labels = class_labels(src, vocab);

  Rng root(cfg.seed);
  Rng enc_rng = root.derive(kStreamEncoderInit);
  Rng cls_rng = root.derive(kStreamSpeakerInit);
  Rng shuffle_rng = root.derive(kStreamSourceShuffle);

  SourceTrainResult result;
  result.model.encoder = make_encoder(src.dim, cfg.hidden_width, enc_rng);
  result.model.classifier = make_speaker_head(
      cfg.hidden_width, cfg.hidden_width, static_cast<int>(vocab.size()), cls_rng);
  result.model.speakers = vocab;

  AdamState enc_state(cfg.learning_rate), cls_state(cfg.learning_rate);
  MLPEncoder &enc = result.model.encoder;
  MLPEncoder &cls = result.model.classifier.net;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto batches = make_batches(src.size(), cfg.batch_size, shuffle_rng);
    double epoch_loss = 0.0;
    for (const std::vector<int> &batch : batches) {
      const Matrix x = gather_rows(src.vectors, batch);
      std::vector<int> y(batch.size());
      for (size_t i = 0; i < batch.size(); ++i) y[i] = labels[batch[i]];

      ForwardCache enc_cache, cls_cache;
      const Matrix feats = enc.forward(x, &enc_cache);
      const Matrix logits = cls.forward(feats, &cls_cache);
      const LossGrad ce = softmax_cross_entropy(logits, y);
      check_finite_loss(ce.loss, "train_source");
      epoch_loss += ce.loss * batch.size();

      Gradients cls_grads, enc_grads;
      const Matrix dfeats = cls.backward(cls_cache, ce.dlogits, &cls_grads);
      enc.backward(enc_cache, dfeats, &enc_grads);
      cls_state.step(cls.param_views(), cls_grads.views());
      enc_state.step(enc.param_views(), enc_grads.views());
    }
    result.trace.add(epoch, "source_ce", epoch_loss / src.size());
  }
  result.final_accuracy =
      classification_accuracy(enc, result.model.classifier, src, labels);
  return result;
}

AddaResult adapt_adda(const SourceModel &source, const EmbeddingSet &tgt,
                      const EmbeddingSet &src, const TrainConfig &cfg) {
  cfg.validate();
  tgt.validate();
  src.validate();
  if (tgt.size() == 0) throw DegenerateInputError("adapt_adda: empty target set");
  if (src.size() == 0) throw DegenerateInputError("adapt_adda: empty source set");
  if (tgt.dim != source.encoder.input_dim() || src.dim != source.encoder.input_dim())
    throw std::invalid_argument("adapt_adda: embedding dim does not match encoder");

  Rng root(cfg.seed);
  Rng disc_rng = root.derive(kStreamDomainInit);
  Rng src_shuffle = root.derive(kStreamSourceShuffle);
  Rng tgt_shuffle = root.derive(kStreamTargetShuffle);

  AddaResult result;
  result.model.source = source;
  // Pre-trained source encoder initializes the target encoder.
  result.model.target_encoder = source.encoder;
  result.model.discriminator = make_adda_discriminator(
      source.encoder.output_dim(), cfg.hidden_width, disc_rng);

  const MLPEncoder &ms = source.encoder;  // frozen
  MLPEncoder &mt = result.model.target_encoder;
  MLPEncoder &disc = result.model.discriminator.net;
  AdamState d_state(cfg.learning_rate), m_state(cfg.learning_rate);

  std::vector<std::vector<int>> src_batches;
  size_t src_pos = 0;
  auto next_src_batch = [&]() -> const std::vector<int> & {
    if (src_pos >= src_batches.size()) {
      src_batches = make_batches(src.size(), cfg.batch_size, src_shuffle);
      src_pos = 0;
    }
    return src_batches[src_pos++];
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto tgt_batches = make_batches(tgt.size(), cfg.batch_size, tgt_shuffle);
    double disc_loss_sum = 0.0, map_loss_sum = 0.0;
    int disc_count = 0, map_count = 0;
    for (const std::vector<int> &tgt_batch : tgt_batches) {
      const Matrix xt = gather_rows(tgt.vectors, tgt_batch);
      const Matrix xs = gather_rows(src.vectors, next_src_batch());

      // Discriminator update: both encoders fixed, source labeled 1.
      for (int k = 0; k < cfg.discriminator_steps; ++k) {
        const Matrix src_feats = ms.forward(xs);
        const Matrix tgt_feats = mt.forward(xt);
        ForwardCache ds_cache, dt_cache;
        const std::vector<double> s_logits =
            column_as_vector(disc.forward(src_feats, &ds_cache));
        const std::vector<double> t_logits =
            column_as_vector(disc.forward(tgt_feats, &dt_cache));
        const DiscriminatorLoss dl = discriminator_bce(s_logits, t_logits);
        check_finite_loss(dl.loss, "adapt_adda[disc]");
        disc_loss_sum += dl.loss;
        ++disc_count;

        Gradients gs, gt;
        disc.backward(ds_cache, vector_as_column(dl.dsrc), &gs);
        disc.backward(dt_cache, vector_as_column(dl.dtgt), &gt);
        gs.add(gt);
        d_state.step(disc.param_views(), gs.views());
      }

      // Target-encoder update: discriminator fixed, inverted labels.
      for (int k = 0; k < cfg.mapping_steps; ++k) {
        ForwardCache mt_cache, d_cache;
        const Matrix tgt_feats = mt.forward(xt, &mt_cache);
        const std::vector<double> t_logits =
            column_as_vector(disc.forward(tgt_feats, &d_cache));
        const MappingLoss ml = mapping_bce(t_logits);
        check_finite_loss(ml.loss, "adapt_adda[map]");
        map_loss_sum += ml.loss;
        ++map_count;

        Gradients d_unused, mt_grads;
        const Matrix dfeats =
            disc.backward(d_cache, vector_as_column(ml.dtgt), &d_unused);
        mt.backward(mt_cache, dfeats, &mt_grads);
        m_state.step(mt.param_views(), mt_grads.views());
      }
    }
    result.trace.add(epoch, "adda_disc", disc_loss_sum / disc_count);
    result.trace.add(epoch, "adda_map", map_loss_sum / map_count);
  }
  return result;
}

DatResult train_dat(const EmbeddingSet &src, const EmbeddingSet &tgt,
                    const TrainConfig &cfg) {
  cfg.validate();
  src.validate();
  tgt.validate();
  if (src.size() == 0 || tgt.size() == 0)
    throw DegenerateInputError("train_dat: empty training set");
  if (!src.labeled())
    throw DegenerateInputError("train_dat: source set has no speaker labels");
  if (src.dim != tgt.dim)
    throw std::invalid_argument("train_dat: source and target dims differ");
  const std::vector<std::string> vocab = src.speakers();
  if (vocab.size() < 2)
    throw DegenerateInputError("train_dat: need at least 2 speakers");
  const std::vector<int> labels = class_labels(src, vocab);

  Rng root(cfg.seed);
  Rng enc_rng = root.derive(kStreamEncoderInit);
  Rng cls_rng = root.derive(kStreamSpeakerInit);
  Rng dom_rng = root.derive(kStreamDomainInit);
  Rng src_shuffle = root.derive(kStreamSourceShuffle);
  Rng tgt_shuffle = root.derive(kStreamTargetShuffle);

  DatResult result;
  result.model.shared_encoder = make_encoder(src.dim, cfg.hidden_width, enc_rng);
  result.model.speaker_head = make_speaker_head(
      cfg.hidden_width, cfg.hidden_width, static_cast<int>(vocab.size()), cls_rng);
  result.model.domain_head = make_domain_head(cfg.hidden_width, cfg.hidden_width, dom_rng);
  result.model.lambda = cfg.lambda;
  result.model.speakers = vocab;

  MLPEncoder &enc = result.model.shared_encoder;
  MLPEncoder &spk = result.model.speaker_head.net;
  MLPEncoder &dom = result.model.domain_head.net;
  AdamState enc_state(cfg.learning_rate), spk_state(cfg.learning_rate),
      dom_state(cfg.learning_rate);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto src_batches = make_batches(src.size(), cfg.batch_size, src_shuffle);
    const auto tgt_batches = make_batches(tgt.size(), cfg.batch_size, tgt_shuffle);
    const size_t steps = std::max(src_batches.size(), tgt_batches.size());

    double ce_sum = 0.0, bce_sum = 0.0, acc_sum = 0.0;
    for (size_t step = 0; step < steps; ++step) {
      const std::vector<int> &sb = src_batches[step % src_batches.size()];
      const std::vector<int> &tb = tgt_batches[step % tgt_batches.size()];
      const Matrix xs = gather_rows(src.vectors, sb);
      const Matrix xt = gather_rows(tgt.vectors, tb);
      std::vector<int> ys(sb.size());
      for (size_t i = 0; i < sb.size(); ++i) ys[i] = labels[sb[i]];

      ForwardCache enc_s, enc_t, spk_cache, dom_s, dom_t;
      const Matrix fs = enc.forward(xs, &enc_s);
      const Matrix ft = enc.forward(xt, &enc_t);
      const Matrix logits = spk.forward(fs, &spk_cache);
      const LossGrad ce = softmax_cross_entropy(logits, ys);
      const std::vector<double> s_logits = column_as_vector(dom.forward(fs, &dom_s));
      const std::vector<double> t_logits = column_as_vector(dom.forward(ft, &dom_t));
      const DiscriminatorLoss dl = discriminator_bce(s_logits, t_logits);
      check_finite_loss(ce.loss + dl.loss, "train_dat");
      ce_sum += ce.loss;
      bce_sum += dl.loss;
      int correct = 0;
      for (double z : s_logits) correct += (z > 0.0);
      for (double z : t_logits) correct += (z <= 0.0);
      acc_sum += static_cast<double>(correct) / (s_logits.size() + t_logits.size());

      // Heads train at full strength; lambda scales only what the reversal
      // layer sends back into the shared encoder.
      Gradients spk_grads, dom_grads, dom_grads_t;
      Matrix dfs = spk.backward(spk_cache, ce.dlogits, &spk_grads);
      const Matrix dfs_dom = dom.backward(dom_s, vector_as_column(dl.dsrc), &dom_grads);
      const Matrix dft_dom = dom.backward(dom_t, vector_as_column(dl.dtgt), &dom_grads_t);
      dom_grads.add(dom_grads_t);

      Gradients enc_grads;
      if (cfg.lambda > 0.0) {
        const Matrix rev_s = gradient_reversal(dfs_dom, cfg.lambda);
        for (int i = 0; i < dfs.size(); ++i) dfs.data()[i] += rev_s.data()[i];
        enc.backward(enc_s, dfs, &enc_grads);
        Gradients enc_grads_t;
        enc.backward(enc_t, gradient_reversal(dft_dom, cfg.lambda), &enc_grads_t);
        enc_grads.add(enc_grads_t);
      } else {
        enc.backward(enc_s, dfs, &enc_grads);
      }

      spk_state.step(spk.param_views(), spk_grads.views());
      dom_state.step(dom.param_views(), dom_grads.views());
      enc_state.step(enc.param_views(), enc_grads.views());
    }
    result.trace.add(epoch, "dat_speaker_ce", ce_sum / steps);
    result.trace.add(epoch, "dat_domain_bce", bce_sum / steps);
    result.trace.add(epoch, "dat_domain_acc", acc_sum / steps);
  }

  result.final_source_accuracy = classification_accuracy(
      enc, result.model.speaker_head, src, labels);
  {
    const Matrix fs = enc.forward(src.vectors);
    const Matrix ft = enc.forward(tgt.vectors);
    const Matrix zs = dom.forward(fs), zt = dom.forward(ft);
    int correct = 0;
    for (int i = 0; i < zs.rows(); ++i) correct += (zs(i, 0) > 0.0);
    for (int i = 0; i < zt.rows(); ++i) correct += (zt(i, 0) <= 0.0);
    result.final_domain_accuracy =
        static_cast<double>(correct) / (zs.rows() + zt.rows());
  }
  return result;
}

EmbeddingSet encode(const MLPEncoder &encoder, const EmbeddingSet &emb,
                    EncodeMode mode) {
  emb.validate();
  if (emb.dim != encoder.input_dim())
    throw std::invalid_argument("encode: embedding dim " + std::to_string(emb.dim) +
                                " != encoder input dim " +
                                std::to_string(encoder.input_dim()));
  const Matrix out = encoder.forward(emb.vectors);
  EmbeddingSet encoded;
  encoded.ids = emb.ids;
  encoded.utt2spk = emb.utt2spk;
  encoded.domain = emb.domain;
  if (mode == EncodeMode::kReplace) {
    encoded.dim = out.cols();
    encoded.vectors = out;
  } else {
    encoded.dim = emb.dim + out.cols();
    encoded.vectors = Matrix(emb.size(), encoded.dim);
    for (int i = 0; i < emb.size(); ++i) {
      std::copy(emb.vectors.row(i), emb.vectors.row(i) + emb.dim,
                encoded.vectors.row(i));
      std::copy(out.row(i), out.row(i) + out.cols(),
                encoded.vectors.row(i) + emb.dim);
    }
  }
  return encoded;
}

}  // namespace xadapt
