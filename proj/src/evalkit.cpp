#include "xadapt/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "xadapt/error.hpp"

namespace xadapt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Inverse standard-normal CDF (Acklam's rational approximation), used only
// for the optional probit DET columns.
double probit(double p) {
  if (p <= 0.0) return -kInf;
  if (p >= 1.0) return kInf;
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double q, r;
  if (p < plow) {
    q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  }
  if (p > phigh) {
    q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  }
  q = p - 0.5;
  r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

void split_scores(const ScoreSet &s, std::vector<double> *targets,
                  std::vector<double> *nontargets) {
  s.validate();
  for (size_t i = 0; i < s.trials.size(); ++i) {
    if (s.trials[i].target)
      targets->push_back(s.scores[i]);
    else
      nontargets->push_back(s.scores[i]);
  }
  if (targets->empty() || nontargets->empty())
    throw DegenerateInputError(
        "metrics need at least one target and one nontarget trial");
}

// Shared crossing rule: walk the DET points in threshold order and
// interpolate P_miss = P_fa linearly on the segment where the sign of
// (P_miss - P_fa) flips.
double eer_from_points(const std::vector<DetPoint> &points) {
  for (size_t i = 0; i < points.size(); ++i) {
    const double diff = points[i].p_miss - points[i].p_fa;
    if (diff == 0.0) return points[i].p_miss;
    if (diff > 0.0) {
      // First point past the crossing; interpolate against the previous one.
      const DetPoint &hi = points[i];
      const DetPoint &lo = points[i - 1];  // exists: first point has diff <= 0
      const double denom = (hi.p_miss - lo.p_miss) - (hi.p_fa - lo.p_fa);
      const double alpha = (lo.p_fa - lo.p_miss) / denom;
      return lo.p_miss + alpha * (hi.p_miss - lo.p_miss);
    }
  }
  return points.back().p_miss;  // unreachable for valid curves
}

}  // namespace

void ScoreSet::validate() const {
  if (scores.size() != trials.size())
    throw std::invalid_argument("ScoreSet: score count does not match trial count");
  for (double v : scores)
    if (!std::isfinite(v))
      throw std::invalid_argument("ScoreSet: non-finite score");
}

void ScoreSet::write_tsv(const std::string &path) const {
  validate();
  std::ofstream out(path);
  if (!out) throw DataFormatError("cannot write '" + path + "'");
  for (size_t i = 0; i < trials.size(); ++i)
    out << trials[i].enroll_id << '\t' << trials[i].test_id << '\t'
        << format_double(scores[i]) << '\n';
  if (!out) throw DataFormatError("write failed for '" + path + "'");
}

ScoreSet read_scores(const std::string &path, const TrialList &trials) {
  std::ifstream in(path);
  if (!in) throw DataFormatError("cannot open '" + path + "'");
  std::map<std::pair<std::string, std::string>, double> by_pair;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream iss(line);
    std::string e, t, v;
    if (!(iss >> e >> t >> v))
      throw DataFormatError(path + ":" + std::to_string(lineno) +
                            ": expected `enroll_id test_id score`");
    char *end = nullptr;
    const double score = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size())
      throw DataFormatError(path + ":" + std::to_string(lineno) +
                            ": unparseable score '" + v + "'");
    by_pair[{e, t}] = score;
  }
  ScoreSet s;
  s.trials = trials;
  for (const Trial &t : trials) {
    auto it = by_pair.find({t.enroll_id, t.test_id});
    if (it == by_pair.end())
      throw DataFormatError(path + ": no score for trial (" + t.enroll_id +
                            ", " + t.test_id + ")");
    s.scores.push_back(it->second);
  }
  return s;
}

ScoreSet score_trials(const PLDAModel &m, const EmbeddingSet &emb,
                      const TrialList &trials) {
  emb.validate();
  std::map<std::string, int> row;
  for (int i = 0; i < emb.size(); ++i) row[emb.ids[i]] = i;
  ScoreSet s;
  s.trials = trials;
  s.scores.reserve(trials.size());
  for (const Trial &t : trials) {
    auto e = row.find(t.enroll_id);
    auto u = row.find(t.test_id);
    if (e == row.end())
      throw DataFormatError("score_trials: enroll id '" + t.enroll_id +
                            "' missing from embeddings");
    if (u == row.end())
      throw DataFormatError("score_trials: test id '" + t.test_id +
                            "' missing from embeddings");
    s.scores.push_back(m.score(emb.vectors.row(e->second), emb.vectors.row(u->second)));
  }
  return s;
}

DetCurve compute_det(const ScoreSet &s) {
  std::vector<double> targets, nontargets;
  split_scores(s, &targets, &nontargets);
  std::sort(targets.begin(), targets.end());
  std::sort(nontargets.begin(), nontargets.end());

  std::set<double> distinct(targets.begin(), targets.end());
  distinct.insert(nontargets.begin(), nontargets.end());
  std::vector<double> thresholds;
  thresholds.push_back(-kInf);
  thresholds.insert(thresholds.end(), distinct.begin(), distinct.end());
  thresholds.push_back(kInf);

  const double nt = static_cast<double>(targets.size());
  const double nn = static_cast<double>(nontargets.size());
  DetCurve curve;
  for (double t : thresholds) {
    DetPoint p;
    p.threshold = t;
    // count(target < t) and count(nontarget >= t)
    const auto below =
        std::lower_bound(targets.begin(), targets.end(), t) - targets.begin();
    const auto at_or_above =
        nontargets.end() - std::lower_bound(nontargets.begin(), nontargets.end(), t);
    p.p_miss = static_cast<double>(below) / nt;
    p.p_fa = static_cast<double>(at_or_above) / nn;
    curve.points.push_back(p);
  }
  return curve;
}

void DetCurve::write_tsv(const std::string &path, bool with_probit) const {
  std::ofstream out(path);
  if (!out) throw DataFormatError("cannot write '" + path + "'");
  out << "threshold\tp_fa\tp_miss";
  if (with_probit) out << "\tprobit_fa\tprobit_miss";
  out << '\n';
  for (const DetPoint &p : points) {
    out << format_double(p.threshold) << '\t' << format_double(p.p_fa) << '\t'
        << format_double(p.p_miss);
    if (with_probit)
      out << '\t' << format_double(probit(p.p_fa)) << '\t'
          << format_double(probit(p.p_miss));
    out << '\n';
  }
  if (!out) throw DataFormatError("write failed for '" + path + "'");
}

double eer(const ScoreSet &s) {
  return eer_from_points(compute_det(s).points);
}

double min_dcf(const ScoreSet &s, double p_target, double c_miss, double c_fa) {
  if (p_target <= 0.0 || p_target >= 1.0)
    throw std::invalid_argument("min_dcf: prior must lie in (0, 1)");
  if (c_miss <= 0.0 || c_fa <= 0.0)
    throw std::invalid_argument("min_dcf: costs must be positive");
  const DetCurve curve = compute_det(s);
  const double norm = std::min(c_miss * p_target, c_fa * (1.0 - p_target));
  double best = kInf;
  for (const DetPoint &p : curve.points) {
    const double cost = c_miss * p.p_miss * p_target + c_fa * p.p_fa * (1.0 - p_target);
    best = std::min(best, cost / norm);
  }
  return best;
}

std::vector<int> kmeans(const EmbeddingSet &emb, int k, int restarts, Rng &rng,
                        std::vector<double> *inertia_trace) {
  emb.validate();
  const int n = emb.size(), d = emb.dim;
  if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
  if (k > n)
    throw std::invalid_argument("kmeans: k = " + std::to_string(k) +
                                " exceeds " + std::to_string(n) + " points");
  if (restarts < 1) throw std::invalid_argument("kmeans: restarts must be >= 1");

  auto sq_dist = [&](int row, const std::vector<double> &center) {
    double s = 0.0;
    const double *x = emb.vectors.row(row);
    for (int j = 0; j < d; ++j) {
      const double diff = x[j] - center[j];
      s += diff * diff;
    }
    return s;
  };

  std::vector<int> best_assign(n, 0);
  double best_inertia = kInf;

  for (int restart = 0; restart < restarts; ++restart) {
    // k-means++ seeding: first center uniform, then proportional to the
    // squared distance to the nearest chosen center. If every remaining
    // distance is zero (duplicate points), take the first unchosen point.
    std::vector<std::vector<double>> centers;
    std::vector<bool> chosen(n, false);
    std::vector<double> dist2(n, kInf);
    {
      const int first = rng.uniform_int(n);
      chosen[first] = true;
      centers.emplace_back(emb.vectors.row(first), emb.vectors.row(first) + d);
    }
    while (static_cast<int>(centers.size()) < k) {
      double total = 0.0;
      for (int i = 0; i < n; ++i) {
        dist2[i] = std::min(dist2[i], sq_dist(i, centers.back()));
        total += dist2[i];
      }
      int next = -1;
      if (total > 0.0) {
        const double u = rng.uniform01() * total;
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
          acc += dist2[i];
          if (acc >= u && !chosen[i] && dist2[i] > 0.0) {
            next = i;
            break;
          }
        }
      }
      if (next < 0) {
        for (int i = 0; i < n && next < 0; ++i)
          if (!chosen[i]) next = i;
      }
      chosen[next] = true;
      centers.emplace_back(emb.vectors.row(next), emb.vectors.row(next) + d);
    }

    std::vector<int> assign(n, -1);
    double inertia = kInf;
    if (inertia_trace) inertia_trace->clear();
    for (int iter = 0; iter < 100; ++iter) {
      bool changed = false;
      inertia = 0.0;
      for (int i = 0; i < n; ++i) {
        int best_c = 0;
        double best_d = sq_dist(i, centers[0]);
        for (int c = 1; c < k; ++c) {
          const double dc = sq_dist(i, centers[c]);
          if (dc < best_d) {
            best_d = dc;
            best_c = c;
          }
        }
        if (assign[i] != best_c) {
          assign[i] = best_c;
          changed = true;
        }
        inertia += best_d;
      }
      if (inertia_trace) inertia_trace->push_back(inertia);
      if (!changed) break;

      std::vector<int> counts(k, 0);
      for (auto &c : centers) std::fill(c.begin(), c.end(), 0.0);
      for (int i = 0; i < n; ++i) {
        ++counts[assign[i]];
        const double *x = emb.vectors.row(i);
        for (int j = 0; j < d; ++j) centers[assign[i]][j] += x[j];
      }
      for (int c = 0; c < k; ++c) {
        if (counts[c] == 0) {
          // Re-seed an empty cluster at the point farthest from its center.
          int far_i = 0;
          double far_d = -1.0;
          for (int i = 0; i < n; ++i) {
            const double dc = sq_dist(i, centers[assign[i]]);
            if (dc > far_d) {
              far_d = dc;
              far_i = i;
            }
          }
          std::copy(emb.vectors.row(far_i), emb.vectors.row(far_i) + d,
                    centers[c].begin());
        } else {
          for (int j = 0; j < d; ++j) centers[c][j] /= counts[c];
        }
      }
    }
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best_assign = assign;
    }
  }
  return best_assign;
}

double nmi(const std::vector<int> &labels_a, const std::vector<int> &labels_b,
           NmiNorm norm) {
  if (labels_a.size() != labels_b.size())
    throw std::invalid_argument("nmi: length mismatch");
  if (labels_a.empty()) throw std::invalid_argument("nmi: empty assignments");
  const double n = static_cast<double>(labels_a.size());

  std::map<int, double> count_a, count_b;
  std::map<std::pair<int, int>, double> joint;
  for (size_t i = 0; i < labels_a.size(); ++i) {
    count_a[labels_a[i]] += 1.0;
    count_b[labels_b[i]] += 1.0;
    joint[{labels_a[i], labels_b[i]}] += 1.0;
  }

  double h_a = 0.0, h_b = 0.0, mi = 0.0;
  for (const auto &kv : count_a) h_a -= kv.second / n * std::log(kv.second / n);
  for (const auto &kv : count_b) h_b -= kv.second / n * std::log(kv.second / n);
  for (const auto &kv : joint) {
    const double pij = kv.second / n;
    const double pa = count_a[kv.first.first] / n;
    const double pb = count_b[kv.first.second] / n;
    mi += pij * std::log(pij / (pa * pb));
  }

  if (h_a == 0.0 && h_b == 0.0) return 1.0;
  if (h_a == 0.0 || h_b == 0.0) return 0.0;
  double denom = 0.0;
  switch (norm) {
    case NmiNorm::kArithmetic: denom = 0.5 * (h_a + h_b); break;
    case NmiNorm::kSqrt: denom = std::sqrt(h_a * h_b); break;
    case NmiNorm::kMax: denom = std::max(h_a, h_b); break;
  }
  return std::clamp(mi / denom, 0.0, 1.0);
}

}  // namespace xadapt
