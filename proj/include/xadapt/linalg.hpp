#ifndef XADAPT_LINALG_HPP
#define XADAPT_LINALG_HPP

#include <cstdint>
#include <random>
#include <vector>

namespace xadapt {

// Dense row-major matrix of 64-bit floats. Everything in this toolkit is
// double precision; the gradient checks depend on it.
class Matrix {
 public:
  Matrix() : rows_(0), cols_(0) {}
  Matrix(int rows, int cols);  // zero-filled
  Matrix(int rows, int cols, std::vector<double> data);

  static Matrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int size() const { return rows_ * cols_; }

  double &operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

  double *data() { return data_.data(); }
  const double *data() const { return data_.data(); }
  double *row(int r) { return data_.data() + static_cast<size_t>(r) * cols_; }
  const double *row(int r) const { return data_.data() + static_cast<size_t>(r) * cols_; }

  bool all_finite() const;

 private:
  int rows_, cols_;
  std::vector<double> data_;
};

// Matrix product. The accumulation order is part of the contract: each
// output entry is the sum over k = 0 .. a.cols-1, taken in ascending k,
// so results are reproducible run to run.
Matrix matmul(const Matrix &a, const Matrix &b);

Matrix transpose(const Matrix &a);

// Lower-triangular L with L L^T = a. Throws DegenerateInputError when a
// pivot falls at or below 1e-12 (input not positive definite).
Matrix cholesky(const Matrix &a);

struct SymEig {
  std::vector<double> values;  // descending
  Matrix vectors;              // column i pairs with values[i]
};

// Symmetric eigendecomposition by cyclic Jacobi sweeps (limit 100,
// off-diagonal convergence threshold 1e-12 * ||a||_F). Throws on
// asymmetric input (max |a_ij - a_ji| > 1e-9).
SymEig sym_eig(const Matrix &a);

// Solves a x = b for symmetric positive definite a via Cholesky.
Matrix solve_spd(const Matrix &a, const Matrix &b);

double frobenius_norm(const Matrix &a);

// Deterministic pseudo-random source. The stream is pinned down exactly so
// synthetic corpora and trained models reproduce byte for byte:
//   - the generator is std::mt19937_64 seeded directly with `seed`
//     (its output sequence is defined by the C++ standard);
//   - uniform01 takes the top 53 bits of one draw: (u >> 11) * 2^-53;
//   - gaussian uses the Marsaglia polar method, consuming uniform01 pairs
//     and caching the second deviate;
//   - uniform_int uses bitmask rejection on the low bits;
//   - derive(stream) seeds a fresh generator with
//     splitmix64(seed + (stream + 1) * 0x9E3779B97F4A7C15).
// Single-owner; not shareable across threads.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64() { return gen_(); }
  double uniform01();
  double gaussian();
  // Uniform draw from [0, bound); bound >= 1.
  int uniform_int(int bound);
  // Independent substream keyed by `stream`; derivation uses the original
  // seed, not the current state.
  Rng derive(uint64_t stream) const;

  template <typename T>
  void shuffle(std::vector<T> &v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      int j = uniform_int(i + 1);
      std::swap(v[i], v[j]);
    }
  }

 private:
  uint64_t seed_;
  std::mt19937_64 gen_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

// n standard-normal draws. Deterministic per rng state.
std::vector<double> gaussian_sample(Rng &rng, int n);

// Random orthogonal matrix: modified Gram-Schmidt on a gaussian matrix,
// diagonal signs made positive. ||R^T R - I|| stays below 1e-10 for the
// dimensions used here.
Matrix random_orthogonal(Rng &rng, int dim);

}  // namespace xadapt

#endif  // XADAPT_LINALG_HPP
