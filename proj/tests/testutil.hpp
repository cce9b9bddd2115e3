#ifndef XADAPT_TESTS_TESTUTIL_HPP
#define XADAPT_TESTS_TESTUTIL_HPP

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "xadapt/dataio.hpp"
#include "xadapt/linalg.hpp"

namespace testutil {

// Central finite difference of a scalar function with respect to one
// parameter slot. Independent oracle for every gradient in the test suite.
inline double fd_gradient(const std::function<double()> &f, double *param,
                          double h = 1e-5) {
  const double saved = *param;
  *param = saved + h;
  const double up = f();
  *param = saved - h;
  const double down = f();
  *param = saved;
  return (up - down) / (2.0 * h);
}

inline double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max({1e-8, std::fabs(a), std::fabs(b)});
}

// Random symmetric positive definite matrix A = B B^T + n I.
inline xadapt::Matrix random_spd(xadapt::Rng &rng, int n) {
  xadapt::Matrix b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = rng.gaussian();
  xadapt::Matrix a = xadapt::matmul(b, xadapt::transpose(b));
  for (int i = 0; i < n; ++i) a(i, i) += n;
  return a;
}

// Small labeled embedding set: `speakers` clusters of `utts` points each.
inline xadapt::EmbeddingSet make_clustered_set(xadapt::Rng &rng, int speakers,
                                               int utts, int dim,
                                               double between = 2.0,
                                               double within = 0.3) {
  xadapt::EmbeddingSet set;
  set.dim = dim;
  set.vectors = xadapt::Matrix(speakers * utts, dim);
  int row = 0;
  for (int s = 0; s < speakers; ++s) {
    std::vector<double> mean(dim);
    for (int j = 0; j < dim; ++j) mean[j] = between * rng.gaussian();
    char spk[16];
    std::snprintf(spk, sizeof(spk), "spk%03d", s);
    for (int u = 0; u < utts; ++u, ++row) {
      char utt[24];
      std::snprintf(utt, sizeof(utt), "spk%03d-u%03d", s, u);
      set.ids.push_back(utt);
      set.utt2spk[utt] = spk;
      for (int j = 0; j < dim; ++j)
        set.vectors(row, j) = mean[j] + within * rng.gaussian();
    }
  }
  return set;
}

inline std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Fresh per-test scratch directory under the system temp dir.
class TempDir {
 public:
  explicit TempDir(const std::string &tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("xadapt_test_" + tag + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::string file(const std::string &name) const { return (path_ / name).string(); }
  const std::filesystem::path &path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil

#endif  // XADAPT_TESTS_TESTUTIL_HPP
