#ifndef XADAPT_DATAIO_HPP
#define XADAPT_DATAIO_HPP

#include <map>
#include <string>
#include <vector>

#include "xadapt/linalg.hpp"

namespace xadapt {

enum class Domain { kSource, kTarget, kUnspecified };

// Utterance-id-keyed collection of fixed-dimensional embedding vectors,
// optionally carrying speaker labels. Row i of `vectors` belongs to ids[i].
struct EmbeddingSet {
  int dim = 0;
  std::vector<std::string> ids;
  Matrix vectors;                          // n x dim
  std::map<std::string, std::string> utt2spk;  // empty when unlabeled
  Domain domain = Domain::kUnspecified;

  int size() const { return static_cast<int>(ids.size()); }
  bool labeled() const { return !utt2spk.empty(); }

  // Sorted unique speaker ids over the labeled utterances.
  std::vector<std::string> speakers() const;
  // Row indices grouped by speaker, speakers in sorted order. Throws
  // DegenerateInputError when unlabeled.
  std::vector<std::vector<int>> rows_by_speaker() const;

  // Enforces unique ids, uniform dimension and utt2spk keys being a subset
  // of the utterance ids; throws DataFormatError otherwise.
  void validate() const;
};

struct Trial {
  std::string enroll_id;
  std::string test_id;
  bool target = false;
};

using TrialList = std::vector<Trial>;

// Text format, one utterance per line: `utt_id v1 v2 ... vd`. Optional
// utt2spk file with `utt_id spk_id` lines. Errors carry line numbers.
EmbeddingSet read_embeddings(const std::string &vectors_path,
                             const std::string &utt2spk_path = "");

// Inverse of read_embeddings. Rows are written sorted by utt_id with 17
// significant digits, so write(read(f)) reproduces f byte for byte for
// files this toolkit wrote.
void write_embeddings(const EmbeddingSet &set, const std::string &vectors_path,
                      const std::string &utt2spk_path = "");

// `enroll_id test_id label` per line, label in {target, nontarget}.
// Order preserved; duplicate pairs rejected.
TrialList read_trials(const std::string &path);
void write_trials(const TrialList &trials, const std::string &path);

enum class RotationKind { kRandom, kIdentity, kAngles };

// Generator for the synthetic domain-shift corpus that stands in for real
// speech corpora at desk scale. Source utterances are speaker mean plus
// isotropic noise; target speakers are disjoint draws from the same family,
// then every target vector is pushed through a fixed rotation, a fixed
// translation and additive noise.
struct SyntheticSpec {
  int n_speakers_src = 50;
  int n_speakers_tgt = 50;   // unlabeled adaptation speakers
  int n_speakers_eval = 20;  // evaluation speakers, disjoint from the above
  int utts_per_speaker = 40;
  int eval_utts_per_speaker = 20;
  int dim = 64;
  double between_std = 1.0;
  double within_std = 0.3;
  RotationKind rotation = RotationKind::kRandom;
  std::vector<double> rotation_angles;  // used when rotation == kAngles,
                                        // applied to axis pairs (0,1),(2,3),...
  double translation_scale = 1.0;
  double noise_std = 0.1;
  uint64_t seed = 1;

  void validate() const;
};

struct SyntheticCorpus {
  EmbeddingSet src_train;      // labeled, domain source
  EmbeddingSet tgt_unlabeled;  // unlabeled, domain target
  EmbeddingSet tgt_eval;       // labeled, domain target
  TrialList trials;            // all enroll x test pairs over tgt_eval
  Matrix rotation;             // the shift rotation actually applied
  std::vector<double> translation;
};

SyntheticCorpus generate_synthetic(const SyntheticSpec &spec);

}  // namespace xadapt

#endif  // XADAPT_DATAIO_HPP
