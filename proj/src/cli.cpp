#include "xadapt/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "xadapt/adapt.hpp"
#include "xadapt/backend.hpp"
#include "xadapt/dataio.hpp"
#include "xadapt/error.hpp"
#include "xadapt/evalkit.hpp"
#include "xadapt/model_io.hpp"
#include "xadapt/pipeline.hpp"

namespace xadapt {

namespace {

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void add_train_flags(CLI::App *cmd, TrainConfig *cfg) {
  cmd->add_option("--epochs", cfg->epochs, "Training epochs")
      ->capture_default_str();
  cmd->add_option("--batch-size", cfg->batch_size, "Minibatch size")
      ->capture_default_str();
  cmd->add_option("--lr", cfg->learning_rate, "Adam learning rate")
      ->capture_default_str();
  cmd->add_option("--hidden", cfg->hidden_width, "Hidden layer width")
      ->capture_default_str();
  cmd->add_option("--seed", cfg->seed, "Random seed")->capture_default_str();
}

// Metric lines go to stdout and, when requested, to a report file.
void emit_metrics(const std::vector<std::pair<std::string, double>> &metrics,
                  const std::string &report_path) {
  std::string text;
  for (const auto &kv : metrics) text += kv.first + "\t" + fmt6(kv.second) + "\n";
  std::cout << text;
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) throw DataFormatError("cannot write '" + report_path + "'");
    out << text;
  }
}

struct GenDataArgs {
  std::string out_dir;
  SyntheticSpec spec;
  std::string rotation = "random";
};

void setup_gen_data(CLI::App &app, GenDataArgs &args) {
  CLI::App *cmd = app.add_subcommand(
      "gen-data", "Generate a synthetic domain-shifted corpus");
  cmd->add_option("--out", args.out_dir, "Output directory")->required();
  cmd->add_option("--seed", args.spec.seed, "Random seed")->capture_default_str();
  cmd->add_option("--src-speakers", args.spec.n_speakers_src, "Source speakers")
      ->capture_default_str();
  cmd->add_option("--tgt-speakers", args.spec.n_speakers_tgt,
                  "Unlabeled target speakers")
      ->capture_default_str();
  cmd->add_option("--eval-speakers", args.spec.n_speakers_eval, "Evaluation speakers")
      ->capture_default_str();
  cmd->add_option("--utts", args.spec.utts_per_speaker, "Utterances per speaker")
      ->capture_default_str();
  cmd->add_option("--eval-utts", args.spec.eval_utts_per_speaker,
                  "Utterances per evaluation speaker")
      ->capture_default_str();
  cmd->add_option("--dim", args.spec.dim, "Embedding dimension")->capture_default_str();
  cmd->add_option("--between-std", args.spec.between_std, "Between-speaker std")
      ->capture_default_str();
  cmd->add_option("--within-std", args.spec.within_std, "Within-speaker std")
      ->capture_default_str();
  cmd->add_option("--rotation", args.rotation,
                  "Shift rotation: random, identity, or angles")
      ->capture_default_str()
      ->check(CLI::IsMember({"random", "identity", "angles"}));
  cmd->add_option("--rotation-angles", args.spec.rotation_angles,
                  "Angles (radians) for --rotation angles, one per axis pair");
  cmd->add_option("--translation", args.spec.translation_scale,
                  "Shift translation scale")
      ->capture_default_str();
  cmd->add_option("--noise", args.spec.noise_std, "Shift additive noise std")
      ->capture_default_str();

  cmd->callback([&args]() {
    if (args.rotation == "random")
      args.spec.rotation = RotationKind::kRandom;
    else if (args.rotation == "identity")
      args.spec.rotation = RotationKind::kIdentity;
    else
      args.spec.rotation = RotationKind::kAngles;
    std::filesystem::create_directories(args.out_dir);
    const SyntheticCorpus corpus = generate_synthetic(args.spec);
    const std::filesystem::path out(args.out_dir);
    write_embeddings(corpus.src_train, (out / "src_train.vec").string(),
                     (out / "src_train.utt2spk").string());
    write_embeddings(corpus.tgt_unlabeled, (out / "tgt_unlabeled.vec").string());
    write_embeddings(corpus.tgt_eval, (out / "tgt_eval.vec").string(),
                     (out / "tgt_eval.utt2spk").string());
    write_trials(corpus.trials, (out / "trials.txt").string());
  });
}

struct TrainSourceArgs {
  std::string vectors, utt2spk, model, trace;
  TrainConfig cfg;
};

void setup_train_source(CLI::App &app, TrainSourceArgs &args) {
  CLI::App *cmd = app.add_subcommand(
      "train-source", "Train the source encoder and speaker classifier");
  cmd->add_option("--vectors", args.vectors, "Source embeddings")->required();
  cmd->add_option("--utt2spk", args.utt2spk, "Source speaker labels")->required();
  cmd->add_option("--model", args.model, "Output model file")->required();
  cmd->add_option("--trace", args.trace, "Loss trace TSV");
  add_train_flags(cmd, &args.cfg);
  cmd->callback([&args]() {
    const EmbeddingSet src = read_embeddings(args.vectors, args.utt2spk);
    const SourceTrainResult result = train_source(src, args.cfg);
    save_source_model(result.model, args.model);
    if (!args.trace.empty()) result.trace.write_tsv(args.trace);
    emit_metrics({{"final_accuracy", result.final_accuracy}}, "");
  });
}

struct AdaptAddaArgs {
  std::string source_model, src_vectors, tgt_vectors, model, trace;
  TrainConfig cfg;
};

void setup_adapt_adda(CLI::App &app, AdaptAddaArgs &args) {
  CLI::App *cmd = app.add_subcommand(
      "adapt-adda", "Adversarially adapt a target encoder to the source");
  cmd->add_option("--source-model", args.source_model, "Trained source model")
      ->required();
  cmd->add_option("--src-vectors", args.src_vectors, "Source embeddings")->required();
  cmd->add_option("--tgt-vectors", args.tgt_vectors, "Unlabeled target embeddings")
      ->required();
  cmd->add_option("--model", args.model, "Output model file")->required();
  cmd->add_option("--trace", args.trace, "Loss trace TSV");
  add_train_flags(cmd, &args.cfg);
  cmd->add_option("--disc-steps", args.cfg.discriminator_steps,
                  "Discriminator updates per minibatch")
      ->capture_default_str();
  cmd->add_option("--map-steps", args.cfg.mapping_steps,
                  "Target-encoder updates per minibatch")
      ->capture_default_str();
  cmd->callback([&args]() {
    const SourceModel source = load_source_model(args.source_model);
    const EmbeddingSet src = read_embeddings(args.src_vectors);
    const EmbeddingSet tgt = read_embeddings(args.tgt_vectors);
    const AddaResult result = adapt_adda(source, tgt, src, args.cfg);
    save_adda_model(result.model, args.model);
    if (!args.trace.empty()) result.trace.write_tsv(args.trace);
  });
}

struct TrainDatArgs {
  std::string src_vectors, src_utt2spk, tgt_vectors, model, trace;
  TrainConfig cfg;
};

void setup_train_dat(CLI::App &app, TrainDatArgs &args) {
  CLI::App *cmd = app.add_subcommand(
      "train-dat", "Joint domain-adversarial training with gradient reversal");
  cmd->add_option("--src-vectors", args.src_vectors, "Source embeddings")->required();
  cmd->add_option("--src-utt2spk", args.src_utt2spk, "Source speaker labels")
      ->required();
  cmd->add_option("--tgt-vectors", args.tgt_vectors, "Unlabeled target embeddings")
      ->required();
  cmd->add_option("--model", args.model, "Output model file")->required();
  cmd->add_option("--trace", args.trace, "Loss trace TSV");
  add_train_flags(cmd, &args.cfg);
  cmd->add_option("--lambda", args.cfg.lambda, "Domain loss weight")
      ->capture_default_str();
  cmd->callback([&args]() {
    const EmbeddingSet src = read_embeddings(args.src_vectors, args.src_utt2spk);
    const EmbeddingSet tgt = read_embeddings(args.tgt_vectors);
    const DatResult result = train_dat(src, tgt, args.cfg);
    save_dat_model(result.model, args.model);
    if (!args.trace.empty()) result.trace.write_tsv(args.trace);
    emit_metrics({{"final_source_accuracy", result.final_source_accuracy},
                  {"final_domain_accuracy", result.final_domain_accuracy}},
                 "");
  });
}

struct EncodeArgs {
  std::string model, in, out, mode = "replace";
};

void setup_encode(CLI::App &app, EncodeArgs &args) {
  CLI::App *cmd = app.add_subcommand(
      "encode", "Run embeddings through a trained encoder");
  cmd->add_option("--model", args.model, "Model file (source, adda or dat)")
      ->required();
  cmd->add_option("--in", args.in, "Input embeddings")->required();
  cmd->add_option("--out", args.out, "Output embeddings")->required();
  cmd->add_option("--mode", args.mode, "replace or concat")
      ->capture_default_str()
      ->check(CLI::IsMember({"replace", "concat"}));
  cmd->callback([&args]() {
    const EmbeddingSet emb = read_embeddings(args.in);
    const EncodeMode mode =
        args.mode == "concat" ? EncodeMode::kConcat : EncodeMode::kReplace;
    const std::string role = peek_model_role(args.model);
    EmbeddingSet encoded;
    if (role == "source")
      encoded = encode(load_source_model(args.model), emb, mode);
    else if (role == "adda")
      encoded = encode(load_adda_model(args.model), emb, mode);
    else if (role == "dat")
      encoded = encode(load_dat_model(args.model), emb, mode);
    else
      throw DataFormatError(args.model + ": role '" + role + "' has no encoder");
    write_embeddings(encoded, args.out);
  });
}

struct BackendArgs {
  // normalize
  std::string norm_in, norm_out, mean_from;
  bool skip_mean = false, skip_length = false;
  // fit-lda
  std::string lda_in, lda_utt2spk, lda_out;
  int lda_dim = 256;
  // apply-lda
  std::string apply_lda, apply_in, apply_out;
  // fit-plda
  std::string plda_in, plda_utt2spk, plda_out;
  int plda_iters = 10;
  // adapt-plda
  std::string adapt_plda, adapt_unlabeled, adapt_out;
  double within_scale = 0.75, between_scale = 0.25;
};

void setup_backend(CLI::App &app, BackendArgs &args) {
  CLI::App *cmd = app.add_subcommand("backend", "Back-end fitting and transforms");
  cmd->require_subcommand(1);

  CLI::App *norm = cmd->add_subcommand("normalize", "Mean and length normalization");
  norm->add_option("--in", args.norm_in, "Input embeddings")->required();
  norm->add_option("--out", args.norm_out, "Output embeddings")->required();
  norm->add_option("--mean-from", args.mean_from,
                   "Embeddings supplying the mean (default: the input itself)");
  norm->add_flag("--skip-mean", args.skip_mean, "Skip mean subtraction");
  norm->add_flag("--skip-length", args.skip_length, "Skip length normalization");
  norm->callback([&args]() {
    EmbeddingSet emb = read_embeddings(args.norm_in);
    if (!args.skip_mean) {
      const EmbeddingSet mean_src =
          args.mean_from.empty() ? emb : read_embeddings(args.mean_from);
      emb = mean_normalize(emb, mean_src);
    }
    if (!args.skip_length) emb = length_normalize(emb);
    write_embeddings(emb, args.norm_out);
  });

  CLI::App *fit_lda_cmd = cmd->add_subcommand("fit-lda", "Fit an LDA projection");
  fit_lda_cmd->add_option("--in", args.lda_in, "Labeled embeddings")->required();
  fit_lda_cmd->add_option("--utt2spk", args.lda_utt2spk, "Speaker labels")->required();
  fit_lda_cmd->add_option("--dim", args.lda_dim, "Target dimension")
      ->capture_default_str();
  fit_lda_cmd->add_option("--out", args.lda_out, "Output transform file")->required();
  fit_lda_cmd->callback([&args]() {
    const EmbeddingSet emb = read_embeddings(args.lda_in, args.lda_utt2spk);
    save_lda(lda_fit(emb, args.lda_dim), args.lda_out);
  });

  CLI::App *apply_cmd = cmd->add_subcommand("apply-lda", "Project embeddings");
  apply_cmd->add_option("--lda", args.apply_lda, "LDA transform file")->required();
  apply_cmd->add_option("--in", args.apply_in, "Input embeddings")->required();
  apply_cmd->add_option("--out", args.apply_out, "Output embeddings")->required();
  apply_cmd->callback([&args]() {
    write_embeddings(lda_apply(load_lda(args.apply_lda), read_embeddings(args.apply_in)),
                     args.apply_out);
  });

  CLI::App *fit_plda_cmd = cmd->add_subcommand("fit-plda", "Fit a PLDA model by EM");
  fit_plda_cmd->add_option("--in", args.plda_in, "Labeled embeddings")->required();
  fit_plda_cmd->add_option("--utt2spk", args.plda_utt2spk, "Speaker labels")->required();
  fit_plda_cmd->add_option("--iters", args.plda_iters, "EM iterations")
      ->capture_default_str();
  fit_plda_cmd->add_option("--out", args.plda_out, "Output model file")->required();
  fit_plda_cmd->callback([&args]() {
    const EmbeddingSet emb = read_embeddings(args.plda_in, args.plda_utt2spk);
    const PldaFitResult result = plda_fit(emb, args.plda_iters);
    save_plda(result.model, args.plda_out);
  });

  CLI::App *adapt_cmd =
      cmd->add_subcommand("adapt-plda", "Unsupervised PLDA covariance adaptation");
  adapt_cmd->add_option("--plda", args.adapt_plda, "Input PLDA model")->required();
  adapt_cmd->add_option("--unlabeled", args.adapt_unlabeled, "Unlabeled embeddings")
      ->required();
  adapt_cmd->add_option("--within-scale", args.within_scale,
                        "Share of excess variance added to the within covariance")
      ->capture_default_str();
  adapt_cmd->add_option("--between-scale", args.between_scale,
                        "Share of excess variance added to the between covariance")
      ->capture_default_str();
  adapt_cmd->add_option("--out", args.adapt_out, "Output model file")->required();
  adapt_cmd->callback([&args]() {
    const PLDAModel model = load_plda(args.adapt_plda);
    const EmbeddingSet unlabeled = read_embeddings(args.adapt_unlabeled);
    save_plda(plda_adapt(model, unlabeled, args.within_scale, args.between_scale),
              args.adapt_out);
  });
}

struct EvaluateArgs {
  std::string scores, plda, vectors, trials, report, det, scores_out;
  bool probit = false;
  double p_target = 0.01, c_miss = 1.0, c_fa = 1.0;
};

void setup_evaluate(CLI::App &app, EvaluateArgs &args) {
  CLI::App *cmd = app.add_subcommand(
      "evaluate", "Score trials and compute EER, minDCF and the DET curve");
  cmd->add_option("--trials", args.trials, "Trial list")->required();
  cmd->add_option("--scores", args.scores, "Precomputed scores TSV");
  cmd->add_option("--plda", args.plda, "PLDA model (scores trials directly)");
  cmd->add_option("--vectors", args.vectors, "Embeddings for --plda scoring");
  cmd->add_option("--report", args.report, "Also write the metric lines here");
  cmd->add_option("--det", args.det, "Write the DET curve TSV here");
  cmd->add_flag("--probit", args.probit, "Add probit columns to the DET TSV");
  cmd->add_option("--scores-out", args.scores_out, "Write the scores TSV here");
  cmd->add_option("--p-target", args.p_target, "Target prior for minDCF")
      ->capture_default_str();
  cmd->add_option("--c-miss", args.c_miss, "Miss cost")->capture_default_str();
  cmd->add_option("--c-fa", args.c_fa, "False-alarm cost")->capture_default_str();
  cmd->callback([&args]() {
    const TrialList trials = read_trials(args.trials);
    ScoreSet set;
    if (!args.scores.empty()) {
      set = read_scores(args.scores, trials);
    } else if (!args.plda.empty() && !args.vectors.empty()) {
      set = score_trials(load_plda(args.plda), read_embeddings(args.vectors), trials);
    } else {
      throw std::invalid_argument(
          "evaluate: need --scores or both --plda and --vectors");
    }
    if (!args.scores_out.empty()) set.write_tsv(args.scores_out);
    if (!args.det.empty()) compute_det(set).write_tsv(args.det, args.probit);
    emit_metrics({{"eer", eer(set)},
                  {"min_dcf", min_dcf(set, args.p_target, args.c_miss, args.c_fa)}},
                 args.report);
  });
}

struct ClusterArgs {
  std::string in, utt2spk, out, nmi_norm = "arithmetic";
  int k = 0, restarts = 10;
  uint64_t seed = 1;
};

void setup_cluster(CLI::App &app, ClusterArgs &args) {
  CLI::App *cmd = app.add_subcommand(
      "cluster", "K-means clustering with NMI against speaker labels");
  cmd->add_option("--in", args.in, "Input embeddings")->required();
  cmd->add_option("--utt2spk", args.utt2spk, "Speaker labels (enables NMI)");
  cmd->add_option("--k", args.k, "Cluster count (default: speaker count)")
      ->capture_default_str();
  cmd->add_option("--restarts", args.restarts, "k-means++ restarts")
      ->capture_default_str();
  cmd->add_option("--seed", args.seed, "Random seed")->capture_default_str();
  cmd->add_option("--out", args.out, "Assignment file (utt_id cluster)")->required();
  cmd->add_option("--nmi-norm", args.nmi_norm, "NMI normalization")
      ->capture_default_str()
      ->check(CLI::IsMember({"arithmetic", "sqrt", "max"}));
  cmd->callback([&args]() {
    const EmbeddingSet emb = read_embeddings(args.in, args.utt2spk);
    int k = args.k;
    if (k == 0) {
      if (!emb.labeled())
        throw std::invalid_argument("cluster: --k required without --utt2spk");
      k = static_cast<int>(emb.speakers().size());
    }
    Rng rng(args.seed);
    const std::vector<int> assign = kmeans(emb, k, args.restarts, rng);
    std::ofstream out(args.out);
    if (!out) throw DataFormatError("cannot write '" + args.out + "'");
    for (int i = 0; i < emb.size(); ++i)
      out << emb.ids[i] << ' ' << assign[i] << '\n';
    if (emb.labeled()) {
      const std::vector<std::string> vocab = emb.speakers();
      std::map<std::string, int> index;
      for (size_t i = 0; i < vocab.size(); ++i) index[vocab[i]] = static_cast<int>(i);
      std::vector<int> truth(emb.size());
      for (int i = 0; i < emb.size(); ++i)
        truth[i] = index.at(emb.utt2spk.at(emb.ids[i]));
      NmiNorm norm = NmiNorm::kArithmetic;
      if (args.nmi_norm == "sqrt") norm = NmiNorm::kSqrt;
      if (args.nmi_norm == "max") norm = NmiNorm::kMax;
      emit_metrics({{"nmi", nmi(assign, truth, norm)}}, "");
    }
  });
}

struct ReproduceArgs {
  std::string out_dir, scale = "default";
  uint64_t seed = 1;
};

void setup_reproduce(CLI::App &app, ReproduceArgs &args) {
  CLI::App *cmd = app.add_subcommand(
      "reproduce", "Run the full experiment: corpus, training, adaptation, "
                   "back-end, evaluation and clustering");
  cmd->add_option("--out", args.out_dir, "Output directory")->required();
  cmd->add_option("--scale", args.scale, "default or tiny")
      ->capture_default_str()
      ->check(CLI::IsMember({"default", "tiny"}));
  cmd->add_option("--seed", args.seed, "Random seed")->capture_default_str();
  cmd->callback([&args]() {
    const ReproduceConfig cfg =
        ReproduceConfig::for_scale(args.scale, args.seed, args.out_dir);
    const ReproduceReport report = run_reproduce(cfg);
    std::cout << "system\teer\tmin_dcf\n";
    for (const SystemResult &s : report.systems)
      std::cout << s.name << '\t' << fmt6(s.eer) << '\t' << fmt6(s.min_dcf) << '\n';
    std::cout << "nmi_baseline\t" << fmt6(report.nmi_baseline) << '\n';
    std::cout << "nmi_adda\t" << fmt6(report.nmi_adda) << '\n';
  });
}

}  // namespace

int run_cli(int argc, const char *const *argv) {
  CLI::App app{"Cross-domain speaker embedding adaptation toolkit"};
  app.require_subcommand(1);

  GenDataArgs gen_args;
  TrainSourceArgs train_args;
  AdaptAddaArgs adda_args;
  TrainDatArgs dat_args;
  EncodeArgs encode_args;
  BackendArgs backend_args;
  EvaluateArgs eval_args;
  ClusterArgs cluster_args;
  ReproduceArgs repro_args;

  setup_gen_data(app, gen_args);
  setup_train_source(app, train_args);
  setup_adapt_adda(app, adda_args);
  setup_train_dat(app, dat_args);
  setup_encode(app, encode_args);
  setup_backend(app, backend_args);
  setup_evaluate(app, eval_args);
  setup_cluster(app, cluster_args);
  setup_reproduce(app, repro_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 2;
  } catch (const DataFormatError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const DivergenceError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const DegenerateInputError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 5;
  } catch (const std::invalid_argument &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace xadapt
