#include "xadapt/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>

#include "xadapt/backend.hpp"
#include "xadapt/error.hpp"
#include "xadapt/evalkit.hpp"
#include "xadapt/model_io.hpp"

namespace xadapt {

namespace fs = std::filesystem;

ReproduceConfig ReproduceConfig::for_scale(const std::string &scale,
                                           uint64_t seed,
                                           const std::string &out_dir) {
  ReproduceConfig cfg;
  cfg.out_dir = out_dir;
  cfg.seed = seed;
  cfg.corpus.seed = seed;
  cfg.source_train.seed = seed;
  cfg.adapt_train.seed = seed;

  if (scale == "default") {
    // Corpus defaults live in SyntheticSpec. Training is sized so the whole
    // six-system experiment runs in well under a minute per seed.
    cfg.source_train.epochs = 40;
    cfg.source_train.batch_size = 128;
    cfg.source_train.learning_rate = 1e-3;
    cfg.source_train.hidden_width = 64;
    cfg.adapt_train = cfg.source_train;
    cfg.adapt_train.epochs = 40;
    cfg.adapt_train.learning_rate = 2e-4;
    cfg.lda_dim = 32;
  } else if (scale == "tiny") {
    cfg.corpus.n_speakers_src = 10;
    cfg.corpus.n_speakers_tgt = 10;
    cfg.corpus.n_speakers_eval = 6;
    cfg.corpus.utts_per_speaker = 10;
    cfg.corpus.eval_utts_per_speaker = 6;
    cfg.corpus.dim = 16;
    cfg.source_train.epochs = 8;
    cfg.source_train.batch_size = 32;
    cfg.source_train.learning_rate = 1e-3;
    cfg.source_train.hidden_width = 16;
    cfg.adapt_train = cfg.source_train;
    cfg.lda_dim = 8;
    cfg.plda_iters = 5;
    cfg.kmeans_restarts = 3;
  } else {
    throw std::invalid_argument("unknown scale '" + scale +
                                "' (expected default or tiny)");
  }
  return cfg;
}

const SystemResult &ReproduceReport::find(const std::string &name) const {
  for (const SystemResult &s : systems)
    if (s.name == name) return s;
  throw std::invalid_argument("no system named '" + name + "'");
}

namespace {

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

struct BackendInputs {
  EmbeddingSet fit;        // labeled source-domain embeddings
  EmbeddingSet eval;       // target-domain evaluation embeddings
  EmbeddingSet unlabeled;  // target-domain adaptation embeddings
};

struct SystemOutput {
  double eer = 0.0, min_dcf = 0.0, eer_adapted = 0.0, min_dcf_adapted = 0.0;
  EmbeddingSet eval_projected;  // after LDA + length norm, for clustering
};

// Shared back-end recipe: domain mean removal, LDA fit on the labeled
// source embeddings, length normalization, PLDA, trial scoring; then the
// same trials again after unsupervised PLDA adaptation.
SystemOutput run_backend(const ReproduceConfig &cfg, const BackendInputs &in,
                         const TrialList &trials, const std::string &name,
                         const fs::path &out) {
  const EmbeddingSet fit_norm = mean_normalize(in.fit, in.fit);
  const EmbeddingSet unl_norm = mean_normalize(in.unlabeled, in.unlabeled);
  const EmbeddingSet eval_norm = mean_normalize(in.eval, in.unlabeled);

  const int classes = static_cast<int>(fit_norm.speakers().size());
  const int p = std::min({cfg.lda_dim, fit_norm.dim, classes - 1});
  const LdaTransform lda = lda_fit(fit_norm, p);
  save_lda(lda, (out / "models" / ("lda_" + name + ".mdl")).string());

  const EmbeddingSet fit_proj = length_normalize(lda_apply(lda, fit_norm));
  const EmbeddingSet unl_proj = length_normalize(lda_apply(lda, unl_norm));
  const EmbeddingSet eval_proj = length_normalize(lda_apply(lda, eval_norm));

  const PldaFitResult plda = plda_fit(fit_proj, cfg.plda_iters);
  save_plda(plda.model, (out / "models" / ("plda_" + name + ".mdl")).string());

  SystemOutput result;
  result.eval_projected = eval_proj;

  const ScoreSet scores = score_trials(plda.model, eval_proj, trials);
  scores.write_tsv((out / "scores" / (name + ".tsv")).string());
  compute_det(scores).write_tsv((out / "det" / (name + ".det.tsv")).string(), true);
  result.eer = eer(scores);
  result.min_dcf = min_dcf(scores);

  const PLDAModel adapted = plda_adapt(plda.model, unl_proj,
                                       cfg.plda_within_scale,
                                       cfg.plda_between_scale);
  save_plda(adapted, (out / "models" / ("plda_" + name + "_adapted.mdl")).string());
  const ScoreSet scores_adapted = score_trials(adapted, eval_proj, trials);
  scores_adapted.write_tsv((out / "scores" / (name + "_plda_adapt.tsv")).string());
  compute_det(scores_adapted)
      .write_tsv((out / "det" / (name + "_plda_adapt.det.tsv")).string(), true);
  result.eer_adapted = eer(scores_adapted);
  result.min_dcf_adapted = min_dcf(scores_adapted);
  return result;
}

std::vector<int> speaker_labels_as_ints(const EmbeddingSet &set) {
  const std::vector<std::string> vocab = set.speakers();
  std::map<std::string, int> index;
  for (size_t i = 0; i < vocab.size(); ++i) index[vocab[i]] = static_cast<int>(i);
  std::vector<int> labels(set.size());
  for (int i = 0; i < set.size(); ++i) labels[i] = index.at(set.utt2spk.at(set.ids[i]));
  return labels;
}

}  // namespace

ReproduceReport run_reproduce(const ReproduceConfig &cfg) {
  if (cfg.out_dir.empty())
    throw std::invalid_argument("run_reproduce: output directory required");
  const fs::path out(cfg.out_dir);
  for (const char *sub : {"data", "models", "traces", "det", "scores"})
    fs::create_directories(out / sub);

  SyntheticSpec spec = cfg.corpus;
  spec.seed = cfg.seed;
  const SyntheticCorpus corpus = generate_synthetic(spec);
  write_embeddings(corpus.src_train, (out / "data" / "src_train.vec").string(),
                   (out / "data" / "src_train.utt2spk").string());
  write_embeddings(corpus.tgt_unlabeled, (out / "data" / "tgt_unlabeled.vec").string());
  write_embeddings(corpus.tgt_eval, (out / "data" / "tgt_eval.vec").string(),
                   (out / "data" / "tgt_eval.utt2spk").string());
  write_trials(corpus.trials, (out / "data" / "trials.txt").string());

  TrainConfig src_cfg = cfg.source_train;
  src_cfg.seed = cfg.seed;
  const SourceTrainResult source = train_source(corpus.src_train, src_cfg);
  save_source_model(source.model, (out / "models" / "source.mdl").string());
  source.trace.write_tsv((out / "traces" / "source.tsv").string());

  TrainConfig adapt_cfg = cfg.adapt_train;
  adapt_cfg.seed = cfg.seed;
  const AddaResult adda = adapt_adda(source.model, corpus.tgt_unlabeled,
                                     corpus.src_train, adapt_cfg);
  save_adda_model(adda.model, (out / "models" / "adda.mdl").string());
  adda.trace.write_tsv((out / "traces" / "adda.tsv").string());

  const DatResult dat = train_dat(corpus.src_train, corpus.tgt_unlabeled, adapt_cfg);
  save_dat_model(dat.model, (out / "models" / "dat.mdl").string());
  dat.trace.write_tsv((out / "traces" / "dat.tsv").string());

  // Three speaker representations, as in the paper's table: raw vectors,
  // raw + DAT encoding concatenated, and the ADDA embedding (source encoder
  // for the back-end, target encoder for evaluation data).
  BackendInputs baseline{corpus.src_train, corpus.tgt_eval, corpus.tgt_unlabeled};
  BackendInputs datsys{
      encode(dat.model, corpus.src_train, EncodeMode::kConcat),
      encode(dat.model, corpus.tgt_eval, EncodeMode::kConcat),
      encode(dat.model, corpus.tgt_unlabeled, EncodeMode::kConcat)};
  BackendInputs addasys{
      encode(source.model, corpus.src_train, EncodeMode::kReplace),
      encode(adda.model, corpus.tgt_eval, EncodeMode::kReplace),
      encode(adda.model, corpus.tgt_unlabeled, EncodeMode::kReplace)};

  const SystemOutput r_base = run_backend(cfg, baseline, corpus.trials, "baseline", out);
  const SystemOutput r_dat = run_backend(cfg, datsys, corpus.trials, "dat_concat", out);
  const SystemOutput r_adda = run_backend(cfg, addasys, corpus.trials, "adda", out);

  ReproduceReport report;
  report.systems[0] = {"baseline", r_base.eer, r_base.min_dcf};
  report.systems[1] = {"dat_concat", r_dat.eer, r_dat.min_dcf};
  report.systems[2] = {"adda", r_adda.eer, r_adda.min_dcf};
  report.systems[3] = {"baseline+plda_adapt", r_base.eer_adapted, r_base.min_dcf_adapted};
  report.systems[4] = {"dat_concat+plda_adapt", r_dat.eer_adapted, r_dat.min_dcf_adapted};
  report.systems[5] = {"adda+plda_adapt", r_adda.eer_adapted, r_adda.min_dcf_adapted};

  // Clustering comparison on the LDA-projected evaluation embeddings.
  const std::vector<int> truth = speaker_labels_as_ints(corpus.tgt_eval);
  const int k = static_cast<int>(corpus.tgt_eval.speakers().size());
  Rng km_rng_base = Rng(cfg.seed).derive(100);
  Rng km_rng_adda = Rng(cfg.seed).derive(101);
  const std::vector<int> assign_base =
      kmeans(r_base.eval_projected, k, cfg.kmeans_restarts, km_rng_base);
  const std::vector<int> assign_adda =
      kmeans(r_adda.eval_projected, k, cfg.kmeans_restarts, km_rng_adda);
  report.nmi_baseline = nmi(assign_base, truth);
  report.nmi_adda = nmi(assign_adda, truth);

  {
    std::ofstream rep(out / "report.tsv");
    if (!rep) throw DataFormatError("cannot write report.tsv");
    rep << "system\teer\tmin_dcf\n";
    for (const SystemResult &s : report.systems)
      rep << s.name << '\t' << fmt6(s.eer) << '\t' << fmt6(s.min_dcf) << '\n';
  }
  {
    std::ofstream nm(out / "nmi.tsv");
    if (!nm) throw DataFormatError("cannot write nmi.tsv");
    nm << "embedding\tnmi\n";
    nm << "baseline\t" << fmt6(report.nmi_baseline) << '\n';
    nm << "adda\t" << fmt6(report.nmi_adda) << '\n';
  }
  return report;
}

}  // namespace xadapt
