#include "xadapt/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "xadapt/error.hpp"

namespace xadapt {

Matrix::Matrix(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0)
    throw std::invalid_argument("Matrix: negative dimension");
  data_.assign(static_cast<size_t>(rows) * cols, 0.0);
}

Matrix::Matrix(int rows, int cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != static_cast<size_t>(rows) * cols)
    throw std::invalid_argument("Matrix: data length does not match rows*cols");
}

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

Matrix matmul(const Matrix &a, const Matrix &b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument(
        "matmul: dimension mismatch (" + std::to_string(a.rows()) + "x" +
        std::to_string(a.cols()) + ") * (" + std::to_string(b.rows()) + "x" +
        std::to_string(b.cols()) + ")");
  Matrix c(a.rows(), b.cols());
  const int n = a.rows(), k = a.cols(), m = b.cols();
  for (int i = 0; i < n; ++i) {
    double *ci = c.row(i);
    const double *ai = a.row(i);
    for (int p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double *bp = b.row(p);
      for (int j = 0; j < m; ++j) ci[j] += aip * bp[j];
    }
  }
  return c;
}

Matrix transpose(const Matrix &a) {
  Matrix t(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix cholesky(const Matrix &a) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("cholesky: matrix not square");
  const int n = a.rows();
  Matrix l(n, n);
  for (int j = 0; j < n; ++j) {
    double d = a(j, j);
    for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (d <= 1e-12)
      throw DegenerateInputError("cholesky: input not positive definite (pivot " +
                                 std::to_string(d) + " at row " +
                                 std::to_string(j) + ")");
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (int i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

double frobenius_norm(const Matrix &a) {
  double s = 0.0;
  const double *p = a.data();
  for (int i = 0; i < a.size(); ++i) s += p[i] * p[i];
  return std::sqrt(s);
}

SymEig sym_eig(const Matrix &a) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("sym_eig: matrix not square");
  const int n = a.rows();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::fabs(a(i, j) - a(j, i)) > 1e-9)
        throw std::invalid_argument("sym_eig: input not symmetric at (" +
                                    std::to_string(i) + "," + std::to_string(j) +
                                    ")");

  Matrix d = a;           // rotated in place
  Matrix v = Matrix::identity(n);
  const double norm = frobenius_norm(a);
  const double threshold = 1e-12 * norm;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += 2.0 * d(i, j) * d(i, j);
    if (std::sqrt(off) <= threshold) break;

    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = d(p, q);
        if (std::fabs(apq) <= threshold / (n * n + 1.0)) continue;
        // Jacobi rotation that zeroes d(p,q).
        const double theta = (d(q, q) - d(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double dkp = d(k, p), dkq = d(k, q);
          d(k, p) = c * dkp - s * dkq;
          d(k, q) = s * dkp + c * dkq;
        }
        for (int k = 0; k < n; ++k) {
          const double dpk = d(p, k), dqk = d(q, k);
          d(p, k) = c * dpk - s * dqk;
          d(q, k) = s * dpk + c * dqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> diag(n);
  for (int i = 0; i < n; ++i) diag[i] = d(i, i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return diag[x] > diag[y]; });

  SymEig out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (int j = 0; j < n; ++j) {
    out.values[j] = diag[order[j]];
    for (int i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
  }
  return out;
}

Matrix solve_spd(const Matrix &a, const Matrix &b) {
  if (a.rows() != b.rows())
    throw std::invalid_argument("solve_spd: dimension mismatch");
  const Matrix l = cholesky(a);
  const int n = a.rows(), m = b.cols();
  // Forward substitution L y = b, then back substitution L^T x = y.
  Matrix x = b;
  for (int col = 0; col < m; ++col) {
    for (int i = 0; i < n; ++i) {
      double s = x(i, col);
      for (int k = 0; k < i; ++k) s -= l(i, k) * x(k, col);
      x(i, col) = s / l(i, i);
    }
    for (int i = n - 1; i >= 0; --i) {
      double s = x(i, col);
      for (int k = i + 1; k < n; ++k) s -= l(k, i) * x(k, col);
      x(i, col) = s / l(i, i);
    }
  }
  return x;
}

namespace {
uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}
}  // namespace

Rng::Rng(uint64_t seed) : seed_(seed), gen_(seed) {}

double Rng::uniform01() {
  return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double Rng::gaussian() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform01() - 1.0;
    v = 2.0 * uniform01() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  cached_ = v * f;
  has_cached_ = true;
  return u * f;
}

int Rng::uniform_int(int bound) {
  if (bound < 1) throw std::invalid_argument("uniform_int: bound must be >= 1");
  uint64_t mask = 1;
  while (mask < static_cast<uint64_t>(bound)) mask <<= 1;
  --mask;
  uint64_t v;
  do {
    v = gen_() & mask;
  } while (v >= static_cast<uint64_t>(bound));
  return static_cast<int>(v);
}

Rng Rng::derive(uint64_t stream) const {
  return Rng(splitmix64(seed_ + (stream + 1) * 0x9E3779B97F4A7C15ULL));
}

std::vector<double> gaussian_sample(Rng &rng, int n) {
  if (n < 1) throw std::invalid_argument("gaussian_sample: n must be >= 1");
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = rng.gaussian();
  return out;
}

Matrix random_orthogonal(Rng &rng, int dim) {
  Matrix m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = rng.gaussian();
  // Modified Gram-Schmidt on columns, two passes for orthogonality at the
  // 1e-10 level.
  for (int pass = 0; pass < 2; ++pass) {
    for (int j = 0; j < dim; ++j) {
      for (int k = 0; k < j; ++k) {
        double dot = 0.0;
        for (int i = 0; i < dim; ++i) dot += m(i, k) * m(i, j);
        for (int i = 0; i < dim; ++i) m(i, j) -= dot * m(i, k);
      }
      double nrm = 0.0;
      for (int i = 0; i < dim; ++i) nrm += m(i, j) * m(i, j);
      nrm = std::sqrt(nrm);
      if (nrm < 1e-12)
        throw DegenerateInputError("random_orthogonal: rank collapse");
      for (int i = 0; i < dim; ++i) m(i, j) /= nrm;
    }
  }
  for (int j = 0; j < dim; ++j) {
    if (m(j, j) < 0.0)
      for (int i = 0; i < dim; ++i) m(i, j) = -m(i, j);
  }
  return m;
}

}  // namespace xadapt
