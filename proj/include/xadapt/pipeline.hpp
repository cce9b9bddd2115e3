#ifndef XADAPT_PIPELINE_HPP
#define XADAPT_PIPELINE_HPP

#include <array>
#include <string>

#include "xadapt/adapt.hpp"
#include "xadapt/dataio.hpp"

namespace xadapt {

// End-to-end experiment mirroring the paper's result table at desk scale:
// generate a synthetic domain-shifted corpus, train the source model, adapt
// with ADDA and DAT, fit the LDA/PLDA back-end per representation and
// evaluate the target trials, each system with and without unsupervised
// PLDA adaptation.
struct ReproduceConfig {
  std::string out_dir;
  uint64_t seed = 1;

  SyntheticSpec corpus;
  TrainConfig source_train;  // supervised pretraining
  TrainConfig adapt_train;   // ADDA and DAT
  int lda_dim = 32;          // capped at min(dim, speakers - 1)
  int plda_iters = 10;
  double plda_within_scale = 0.75;
  double plda_between_scale = 0.25;
  int kmeans_restarts = 10;

  // `default` runs the full desk-scale corpus; `tiny` is a smoke-sized
  // variant that finishes in seconds.
  static ReproduceConfig for_scale(const std::string &scale, uint64_t seed,
                                   const std::string &out_dir);
};

struct SystemResult {
  std::string name;
  double eer = 0.0;
  double min_dcf = 0.0;
};

struct ReproduceReport {
  // baseline, dat_concat, adda, then the same three with PLDA adaptation.
  std::array<SystemResult, 6> systems;
  double nmi_baseline = 0.0;
  double nmi_adda = 0.0;

  const SystemResult &find(const std::string &name) const;
};

ReproduceReport run_reproduce(const ReproduceConfig &cfg);

}  // namespace xadapt

#endif  // XADAPT_PIPELINE_HPP
