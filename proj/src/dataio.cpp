#include "xadapt/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "xadapt/error.hpp"

namespace xadapt {

std::vector<std::string> EmbeddingSet::speakers() const {
  std::set<std::string> s;
  for (const auto &kv : utt2spk) s.insert(kv.second);
  return std::vector<std::string>(s.begin(), s.end());
}

std::vector<std::vector<int>> EmbeddingSet::rows_by_speaker() const {
  if (!labeled())
    throw DegenerateInputError("rows_by_speaker: embedding set has no speaker labels");
  const std::vector<std::string> spk = speakers();
  std::map<std::string, int> index;
  for (size_t i = 0; i < spk.size(); ++i) index[spk[i]] = static_cast<int>(i);
  std::vector<std::vector<int>> groups(spk.size());
  for (int r = 0; r < size(); ++r) {
    auto it = utt2spk.find(ids[r]);
    if (it != utt2spk.end()) groups[index[it->second]].push_back(r);
  }
  return groups;
}

void EmbeddingSet::validate() const {
  if (vectors.rows() != size() || vectors.cols() != dim)
    throw DataFormatError("EmbeddingSet: vector storage does not match ids/dim");
  std::set<std::string> seen;
  for (const auto &id : ids)
    if (!seen.insert(id).second)
      throw DataFormatError("EmbeddingSet: duplicate utterance id '" + id + "'");
  for (const auto &kv : utt2spk)
    if (!seen.count(kv.first))
      throw DataFormatError("EmbeddingSet: utt2spk references unknown utterance '" +
                            kv.first + "'");
}

namespace {

std::vector<std::string> split_ws(const std::string &line) {
  std::vector<std::string> out;
  std::istringstream iss(line);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

double parse_double(const std::string &tok, const std::string &path, int lineno) {
  char *end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size() || tok.empty())
    throw DataFormatError(path + ":" + std::to_string(lineno) +
                          ": unparseable float '" + tok + "'");
  return v;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

EmbeddingSet read_embeddings(const std::string &vectors_path,
                             const std::string &utt2spk_path) {
  std::ifstream in(vectors_path);
  if (!in) throw DataFormatError("cannot open '" + vectors_path + "'");

  std::vector<std::string> ids;
  std::vector<double> values;
  int dim = -1;
  std::string line;
  int lineno = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> toks = split_ws(line);
    if (toks.size() < 2)
      throw DataFormatError(vectors_path + ":" + std::to_string(lineno) +
                            ": expected `utt_id v1 ... vd`");
    const int row_dim = static_cast<int>(toks.size()) - 1;
    if (dim < 0) dim = row_dim;
    if (row_dim != dim)
      throw DataFormatError(vectors_path + ":" + std::to_string(lineno) +
                            ": ragged dimension (got " + std::to_string(row_dim) +
                            ", expected " + std::to_string(dim) + ")");
    if (!seen.insert(toks[0]).second)
      throw DataFormatError(vectors_path + ":" + std::to_string(lineno) +
                            ": duplicate utterance id '" + toks[0] + "'");
    ids.push_back(toks[0]);
    for (int j = 0; j < dim; ++j)
      values.push_back(parse_double(toks[j + 1], vectors_path, lineno));
  }
  if (ids.empty())
    throw DataFormatError(vectors_path + ": empty embedding file");

  EmbeddingSet set;
  set.dim = dim;
  set.ids = std::move(ids);
  set.vectors = Matrix(set.size(), dim, std::move(values));

  if (!utt2spk_path.empty()) {
    std::ifstream su(utt2spk_path);
    if (!su) throw DataFormatError("cannot open '" + utt2spk_path + "'");
    lineno = 0;
    while (std::getline(su, line)) {
      ++lineno;
      if (line.empty()) continue;
      const std::vector<std::string> toks = split_ws(line);
      if (toks.size() != 2)
        throw DataFormatError(utt2spk_path + ":" + std::to_string(lineno) +
                              ": expected `utt_id spk_id`");
      if (set.utt2spk.count(toks[0]))
        throw DataFormatError(utt2spk_path + ":" + std::to_string(lineno) +
                              ": duplicate utterance id '" + toks[0] + "'");
      set.utt2spk[toks[0]] = toks[1];
    }
  }
  set.validate();
  return set;
}

void write_embeddings(const EmbeddingSet &set, const std::string &vectors_path,
                      const std::string &utt2spk_path) {
  set.validate();
  std::vector<int> order(set.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return set.ids[a] < set.ids[b]; });

  std::ofstream out(vectors_path);
  if (!out) throw DataFormatError("cannot write '" + vectors_path + "'");
  for (int r : order) {
    out << set.ids[r];
    for (int j = 0; j < set.dim; ++j)
      out << ' ' << format_double(set.vectors(r, j));
    out << '\n';
  }
  if (!out) throw DataFormatError("write failed for '" + vectors_path + "'");

  if (!utt2spk_path.empty() && set.labeled()) {
    std::ofstream su(utt2spk_path);
    if (!su) throw DataFormatError("cannot write '" + utt2spk_path + "'");
    for (int r : order) {
      auto it = set.utt2spk.find(set.ids[r]);
      if (it != set.utt2spk.end()) su << it->first << ' ' << it->second << '\n';
    }
    if (!su) throw DataFormatError("write failed for '" + utt2spk_path + "'");
  }
}

TrialList read_trials(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw DataFormatError("cannot open '" + path + "'");
  TrialList trials;
  std::set<std::pair<std::string, std::string>> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> toks = split_ws(line);
    if (toks.size() != 3)
      throw DataFormatError(path + ":" + std::to_string(lineno) +
                            ": expected `enroll_id test_id label`");
    Trial t;
    t.enroll_id = toks[0];
    t.test_id = toks[1];
    if (toks[2] == "target")
      t.target = true;
    else if (toks[2] == "nontarget")
      t.target = false;
    else
      throw DataFormatError(path + ":" + std::to_string(lineno) +
                            ": bad label '" + toks[2] +
                            "' (expected target or nontarget)");
    if (!seen.insert({t.enroll_id, t.test_id}).second)
      throw DataFormatError(path + ":" + std::to_string(lineno) +
                            ": duplicate trial pair (" + t.enroll_id + ", " +
                            t.test_id + ")");
    trials.push_back(std::move(t));
  }
  return trials;
}

void write_trials(const TrialList &trials, const std::string &path) {
  std::ofstream out(path);
  if (!out) throw DataFormatError("cannot write '" + path + "'");
  for (const Trial &t : trials)
    out << t.enroll_id << ' ' << t.test_id << ' '
        << (t.target ? "target" : "nontarget") << '\n';
  if (!out) throw DataFormatError("write failed for '" + path + "'");
}

void SyntheticSpec::validate() const {
  if (n_speakers_src < 1 || n_speakers_tgt < 1 || n_speakers_eval < 1 ||
      utts_per_speaker < 1 || dim < 1)
    throw std::invalid_argument("SyntheticSpec: counts and dim must be >= 1");
  if (eval_utts_per_speaker < 2)
    throw std::invalid_argument(
        "SyntheticSpec: eval speakers need >= 2 utterances (enroll + test)");
  if (between_std < 0.0 || within_std < 0.0 || noise_std < 0.0 ||
      translation_scale < 0.0)
    throw std::invalid_argument("SyntheticSpec: scales must be >= 0");
  if (rotation == RotationKind::kAngles &&
      rotation_angles.size() > static_cast<size_t>(dim / 2))
    throw std::invalid_argument("SyntheticSpec: more rotation angles than axis pairs");
}

namespace {

std::string pad_id(const std::string &prefix, int k, int width = 4) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*d", prefix.c_str(), width, k);
  return buf;
}

// Speakers drawn as mean ~ N(0, between^2 I), utterances mean + N(0, within^2 I).
void draw_cluster_set(EmbeddingSet *set, const std::string &spk_prefix,
                      int n_speakers, int utts_per_speaker, int dim,
                      double between_std, double within_std, bool labeled,
                      Rng &mean_rng, Rng &utt_rng) {
  const int n = n_speakers * utts_per_speaker;
  set->dim = dim;
  set->vectors = Matrix(n, dim);
  set->ids.reserve(n);
  int row = 0;
  for (int s = 0; s < n_speakers; ++s) {
    const std::string spk = pad_id(spk_prefix, s + 1);
    std::vector<double> mean(dim);
    for (int j = 0; j < dim; ++j) mean[j] = between_std * mean_rng.gaussian();
    for (int u = 0; u < utts_per_speaker; ++u, ++row) {
      const std::string utt = spk + "_U" + pad_id("", u + 1);
      set->ids.push_back(utt);
      if (labeled) set->utt2spk[utt] = spk;
      for (int j = 0; j < dim; ++j)
        set->vectors(row, j) = mean[j] + within_std * utt_rng.gaussian();
    }
  }
}

Matrix build_rotation(const SyntheticSpec &spec, Rng &rng) {
  switch (spec.rotation) {
    case RotationKind::kIdentity:
      return Matrix::identity(spec.dim);
    case RotationKind::kRandom:
      return random_orthogonal(rng, spec.dim);
    case RotationKind::kAngles: {
      Matrix r = Matrix::identity(spec.dim);
      for (size_t p = 0; p < spec.rotation_angles.size(); ++p) {
        const int i = static_cast<int>(2 * p), j = i + 1;
        const double c = std::cos(spec.rotation_angles[p]);
        const double s = std::sin(spec.rotation_angles[p]);
        r(i, i) = c;
        r(i, j) = -s;
        r(j, i) = s;
        r(j, j) = c;
      }
      return r;
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticSpec &spec) {
  spec.validate();
  Rng root(spec.seed);
  Rng src_means = root.derive(0), src_utts = root.derive(1);
  Rng tgt_means = root.derive(2), tgt_utts = root.derive(3);
  Rng eval_means = root.derive(4), eval_utts = root.derive(5);
  Rng rot_rng = root.derive(6), trans_rng = root.derive(7);
  Rng shift_noise = root.derive(8);

  SyntheticCorpus corpus;
  draw_cluster_set(&corpus.src_train, "SRC", spec.n_speakers_src,
                   spec.utts_per_speaker, spec.dim, spec.between_std,
                   spec.within_std, true, src_means, src_utts);
  corpus.src_train.domain = Domain::kSource;

  draw_cluster_set(&corpus.tgt_unlabeled, "TGT", spec.n_speakers_tgt,
                   spec.utts_per_speaker, spec.dim, spec.between_std,
                   spec.within_std, false, tgt_means, tgt_utts);
  corpus.tgt_unlabeled.domain = Domain::kTarget;

  draw_cluster_set(&corpus.tgt_eval, "EVA", spec.n_speakers_eval,
                   spec.eval_utts_per_speaker, spec.dim, spec.between_std,
                   spec.within_std, true, eval_means, eval_utts);
  corpus.tgt_eval.domain = Domain::kTarget;

  corpus.rotation = build_rotation(spec, rot_rng);
  corpus.translation.resize(spec.dim);
  for (int j = 0; j < spec.dim; ++j)
    corpus.translation[j] = spec.translation_scale * trans_rng.gaussian();

  // The domain shift: v -> R v + tau + noise, applied to every target vector.
  auto apply_shift = [&](EmbeddingSet *set) {
    Matrix shifted = matmul(set->vectors, transpose(corpus.rotation));
    for (int i = 0; i < shifted.rows(); ++i)
      for (int j = 0; j < spec.dim; ++j)
        shifted(i, j) += corpus.translation[j] + spec.noise_std * shift_noise.gaussian();
    set->vectors = std::move(shifted);
  };
  apply_shift(&corpus.tgt_unlabeled);
  apply_shift(&corpus.tgt_eval);

  // Trials: each eval speaker enrolls with its first utterance; every other
  // eval utterance is a test segment. All cross pairs, labeled by speaker.
  std::vector<std::string> enroll_utts;
  std::vector<std::string> test_utts;
  for (int s = 0; s < spec.n_speakers_eval; ++s) {
    const std::string spk = pad_id("EVA", s + 1);
    enroll_utts.push_back(spk + "_U" + pad_id("", 1));
    for (int u = 1; u < spec.eval_utts_per_speaker; ++u)
      test_utts.push_back(spk + "_U" + pad_id("", u + 1));
  }
  for (const std::string &e : enroll_utts)
    for (const std::string &t : test_utts) {
      Trial trial;
      trial.enroll_id = e;
      trial.test_id = t;
      trial.target = corpus.tgt_eval.utt2spk.at(e) == corpus.tgt_eval.utt2spk.at(t);
      corpus.trials.push_back(std::move(trial));
    }

  corpus.src_train.validate();
  corpus.tgt_unlabeled.validate();
  corpus.tgt_eval.validate();
  return corpus;
}

}  // namespace xadapt
