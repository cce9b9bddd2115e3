#ifndef XADAPT_EVALKIT_HPP
#define XADAPT_EVALKIT_HPP

#include <string>
#include <vector>

#include "xadapt/backend.hpp"
#include "xadapt/dataio.hpp"

namespace xadapt {

struct ScoreSet {
  TrialList trials;
  std::vector<double> scores;  // one finite score per trial

  void validate() const;
  // `enroll_id<TAB>test_id<TAB>score` lines.
  void write_tsv(const std::string &path) const;
};

ScoreSet read_scores(const std::string &path, const TrialList &trials);

struct DetPoint {
  double threshold = 0.0;
  double p_fa = 0.0;
  double p_miss = 0.0;
};

// Operating points at every distinct score plus -inf/+inf sentinels,
// ordered by ascending threshold. Scores equal to the threshold count as
// acceptances: P_miss(t) = frac(target < t), P_fa(t) = frac(nontarget >= t).
struct DetCurve {
  std::vector<DetPoint> points;
  // Optional probit columns reproduce conventional DET plot axes.
  void write_tsv(const std::string &path, bool probit = false) const;
};

// One PLDA score per trial; throws DataFormatError on ids missing from emb.
ScoreSet score_trials(const PLDAModel &m, const EmbeddingSet &emb,
                      const TrialList &trials);

DetCurve compute_det(const ScoreSet &s);

// Rate where P_miss = P_fa, linearly interpolated between adjacent DET
// points when no point hits the crossing exactly.
double eer(const ScoreSet &s);

// min over thresholds of (c_miss P_miss p_tgt + c_fa P_fa (1 - p_tgt)),
// normalized by min(c_miss p_tgt, c_fa (1 - p_tgt)).
double min_dcf(const ScoreSet &s, double p_target = 0.01, double c_miss = 1.0,
               double c_fa = 1.0);

// Lloyd's algorithm with k-means++ seeding, best of `restarts` runs by
// inertia. Deterministic per rng. When given, inertia_trace receives the
// per-iteration inertia of the last restart.
std::vector<int> kmeans(const EmbeddingSet &emb, int k, int restarts, Rng &rng,
                        std::vector<double> *inertia_trace = nullptr);

enum class NmiNorm { kArithmetic, kSqrt, kMax };

// Mutual information between two partitions over the chosen entropy
// normalization. Both entropies zero gives 1, exactly one zero gives 0.
double nmi(const std::vector<int> &labels_a, const std::vector<int> &labels_b,
           NmiNorm norm = NmiNorm::kArithmetic);

}  // namespace xadapt

#endif  // XADAPT_EVALKIT_HPP
