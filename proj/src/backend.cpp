#include "xadapt/backend.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "xadapt/error.hpp"

namespace xadapt {

namespace {

constexpr double kTwoPiLog = 1.8378770664093453;  // log(2*pi)

std::vector<double> column_mean(const Matrix &m) {
  std::vector<double> mean(m.cols(), 0.0);
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) mean[j] += m(i, j);
  for (double &v : mean) v /= m.rows();
  return mean;
}

// X = L^{-1} for lower-triangular L, by forward substitution.
Matrix lower_triangular_inverse(const Matrix &l) {
  const int n = l.rows();
  Matrix x(n, n);
  for (int col = 0; col < n; ++col) {
    x(col, col) = 1.0 / l(col, col);
    for (int i = col + 1; i < n; ++i) {
      double s = 0.0;
      for (int k = col; k < i; ++k) s -= l(i, k) * x(k, col);
      x(i, col) = s / l(i, i);
    }
  }
  return x;
}

Matrix symmetrize(Matrix m) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = i + 1; j < m.cols(); ++j) {
      const double v = 0.5 * (m(i, j) + m(j, i));
      m(i, j) = v;
      m(j, i) = v;
    }
  return m;
}

void add_outer(Matrix *acc, const std::vector<double> &v, double weight) {
  const int d = static_cast<int>(v.size());
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) (*acc)(i, j) += weight * v[i] * v[j];
}

double logdet_spd(const Matrix &a) {
  const Matrix l = cholesky(a);
  double s = 0.0;
  for (int i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

}  // namespace

EmbeddingSet mean_normalize(const EmbeddingSet &emb, const EmbeddingSet &mean_source) {
  emb.validate();
  if (mean_source.size() == 0)
    throw DegenerateInputError("mean_normalize: empty mean source");
  if (mean_source.dim != emb.dim)
    throw std::invalid_argument("mean_normalize: dimension mismatch");
  const std::vector<double> mean = column_mean(mean_source.vectors);
  EmbeddingSet out = emb;
  for (int i = 0; i < out.size(); ++i)
    for (int j = 0; j < out.dim; ++j) out.vectors(i, j) -= mean[j];
  return out;
}

EmbeddingSet length_normalize(const EmbeddingSet &emb) {
  emb.validate();
  EmbeddingSet out = emb;
  for (int i = 0; i < out.size(); ++i) {
    double nrm = 0.0;
    for (int j = 0; j < out.dim; ++j) nrm += out.vectors(i, j) * out.vectors(i, j);
    nrm = std::sqrt(nrm);
    if (nrm < 1e-12)
      throw DegenerateInputError("length_normalize: zero-norm vector '" +
                                 out.ids[i] + "'");
    for (int j = 0; j < out.dim; ++j) out.vectors(i, j) /= nrm;
  }
  return out;
}

LdaTransform lda_fit(const EmbeddingSet &emb, int target_dim) {
  emb.validate();
  if (!emb.labeled())
    throw DegenerateInputError("lda_fit: embedding set has no speaker labels");
  const auto groups = emb.rows_by_speaker();
  if (groups.size() < 2)
    throw DegenerateInputError("lda_fit: need at least 2 classes, got " +
                               std::to_string(groups.size()));
  const int d = emb.dim;
  if (target_dim < 1 || target_dim > d)
    throw std::invalid_argument("lda_fit: target dim must be in [1, d]");

  const std::vector<double> global_mean = column_mean(emb.vectors);

  Matrix s_w(d, d), s_b(d, d);
  std::vector<double> diff(d);
  for (const std::vector<int> &rows : groups) {
    std::vector<double> class_mean(d, 0.0);
    for (int r : rows)
      for (int j = 0; j < d; ++j) class_mean[j] += emb.vectors(r, j);
    for (double &v : class_mean) v /= rows.size();
    for (int r : rows) {
      for (int j = 0; j < d; ++j) diff[j] = emb.vectors(r, j) - class_mean[j];
      add_outer(&s_w, diff, 1.0);
    }
    for (int j = 0; j < d; ++j) diff[j] = class_mean[j] - global_mean[j];
    add_outer(&s_b, diff, static_cast<double>(rows.size()));
  }

  // Keep S_w invertible with few samples.
  double trace = 0.0;
  for (int i = 0; i < d; ++i) trace += s_w(i, i);
  const double ridge = 1e-6 * trace / d;
  for (int i = 0; i < d; ++i) s_w(i, i) += std::max(ridge, 1e-10);

  // Whiten S_w, then diagonalize the whitened S_b: the generalized
  // eigenvectors of S_b v = lambda S_w v are L^{-T} times the eigenvectors
  // of L^{-1} S_b L^{-T}.
  const Matrix l = cholesky(s_w);
  const Matrix linv = lower_triangular_inverse(l);
  const Matrix whitened = symmetrize(matmul(matmul(linv, s_b), transpose(linv)));
  const SymEig eig = sym_eig(whitened);

  LdaTransform t;
  t.mean = global_mean;
  t.projection = Matrix(target_dim, d);
  for (int p = 0; p < target_dim; ++p)
    for (int j = 0; j < d; ++j) {
      double s = 0.0;
      for (int i = 0; i < d; ++i) s += eig.vectors(i, p) * linv(i, j);
      t.projection(p, j) = s;
    }
  return t;
}

EmbeddingSet lda_apply(const LdaTransform &t, const EmbeddingSet &emb) {
  emb.validate();
  if (emb.dim != t.projection.cols())
    throw std::invalid_argument("lda_apply: dimension mismatch");
  const int p = t.projection.rows();
  EmbeddingSet out;
  out.dim = p;
  out.ids = emb.ids;
  out.utt2spk = emb.utt2spk;
  out.domain = emb.domain;
  out.vectors = Matrix(emb.size(), p);
  std::vector<double> centered(emb.dim);
  for (int i = 0; i < emb.size(); ++i) {
    for (int j = 0; j < emb.dim; ++j) centered[j] = emb.vectors(i, j) - t.mean[j];
    for (int r = 0; r < p; ++r) {
      double s = 0.0;
      for (int j = 0; j < emb.dim; ++j) s += t.projection(r, j) * centered[j];
      out.vectors(i, r) = s;
    }
  }
  return out;
}

PLDAModel::PLDAModel(std::vector<double> mu, Matrix phi_b, Matrix phi_w)
    : mu_(std::move(mu)), phi_b_(std::move(phi_b)), phi_w_(std::move(phi_w)) {
  const int d = dim();
  if (d < 1) throw std::invalid_argument("PLDAModel: empty mean");
  if (phi_b_.rows() != d || phi_b_.cols() != d || phi_w_.rows() != d ||
      phi_w_.cols() != d)
    throw std::invalid_argument("PLDAModel: covariance shapes do not match mean");
  compute_derived();
}

void PLDAModel::compute_derived() {
  const int d = dim();
  const Matrix l = cholesky(phi_w_);  // throws if phi_w not PD
  const Matrix linv = lower_triangular_inverse(l);
  const Matrix whitened_b = symmetrize(matmul(matmul(linv, phi_b_), transpose(linv)));
  const SymEig eig = sym_eig(whitened_b);

  psi_ = eig.values;
  for (double &p : psi_) {
    if (p < 0.0) {
      if (p < -1e-8)
        throw DegenerateInputError("PLDAModel: between covariance not PSD");
      p = 0.0;
    }
  }
  transform_ = matmul(transpose(eig.vectors), linv);

  quad_.resize(d);
  cross_.resize(d);
  offset_ = 0.0;
  for (int i = 0; i < d; ++i) {
    const double p = psi_[i];
    quad_[i] = -p * p / ((1.0 + p) * (1.0 + 2.0 * p));
    cross_[i] = p / (1.0 + 2.0 * p);
    offset_ += std::log1p(p) - 0.5 * std::log1p(2.0 * p);
  }
}

double PLDAModel::score(const double *enroll, const double *test) const {
  const int d = dim();
  double llr = offset_;
  for (int i = 0; i < d; ++i) {
    double e = 0.0, t = 0.0;
    const double *ti = transform_.row(i);
    for (int j = 0; j < d; ++j) {
      e += ti[j] * (enroll[j] - mu_[j]);
      t += ti[j] * (test[j] - mu_[j]);
    }
    llr += 0.5 * quad_[i] * (e * e + t * t) + cross_[i] * e * t;
  }
  return llr;
}

double plda_score(const PLDAModel &m, const std::vector<double> &enroll,
                  const std::vector<double> &test) {
  if (static_cast<int>(enroll.size()) != m.dim() ||
      static_cast<int>(test.size()) != m.dim())
    throw std::invalid_argument("plda_score: dimension mismatch");
  return m.score(enroll.data(), test.data());
}

PldaFitResult plda_fit(const EmbeddingSet &emb, int iters) {
  emb.validate();
  if (iters < 1) throw std::invalid_argument("plda_fit: iters must be >= 1");
  if (!emb.labeled())
    throw DegenerateInputError("plda_fit: embedding set has no speaker labels");
  const auto groups = emb.rows_by_speaker();
  const int num_classes = static_cast<int>(groups.size());
  if (num_classes < 2)
    throw DegenerateInputError("plda_fit: need at least 2 speakers");
  const int d = emb.dim;
  const int n_total = emb.size();

  bool any_multi = false;
  for (const auto &g : groups) any_multi |= g.size() >= 2;
  if (!any_multi)
    throw DegenerateInputError(
        "plda_fit: every speaker has a single utterance; the within-speaker "
        "covariance is unidentifiable");

  // Class means; global mean is the mean of class means.
  std::vector<std::vector<double>> class_means(num_classes,
                                               std::vector<double>(d, 0.0));
  std::vector<double> mu(d, 0.0);
  for (int c = 0; c < num_classes; ++c) {
    for (int r : groups[c])
      for (int j = 0; j < d; ++j) class_means[c][j] += emb.vectors(r, j);
    for (int j = 0; j < d; ++j) {
      class_means[c][j] /= groups[c].size();
      mu[j] += class_means[c][j];
    }
  }
  for (int j = 0; j < d; ++j) mu[j] /= num_classes;

  // Scatter of utterances around their class means.
  Matrix offset_scatter(d, d);
  std::vector<double> diff(d);
  for (int c = 0; c < num_classes; ++c)
    for (int r : groups[c]) {
      for (int j = 0; j < d; ++j) diff[j] = emb.vectors(r, j) - class_means[c][j];
      add_outer(&offset_scatter, diff, 1.0);
    }

  double total_scatter = 0.0;
  for (int i = 0; i < d; ++i) total_scatter += offset_scatter(i, i);
  for (int c = 0; c < num_classes; ++c)
    for (int j = 0; j < d; ++j) {
      const double v = class_means[c][j] - mu[j];
      total_scatter += groups[c].size() * v * v;
    }
  if (total_scatter < 1e-12)
    throw DegenerateInputError("plda_fit: all vectors identical");

  Matrix phi_w = Matrix::identity(d);
  Matrix phi_b = Matrix::identity(d);
  const double within_count = static_cast<double>(n_total);

  PldaFitResult result;
  const Matrix eye = Matrix::identity(d);
  for (int iter = 0; iter < iters; ++iter) {
    Matrix within_stats = offset_scatter;
    Matrix between_stats(d, d);

    /*
      E step per class with n utterances and centered mean m:
      m = y + e with y ~ N(0, phi_b), e ~ N(0, phi_w / n). Writing
      M = phi_b + phi_w / n, the posterior of y is Gaussian with
        w = phi_b M^{-1} m,   cov = phi_b M^{-1} phi_w / n,
      a form that never inverts phi_b. Between stats take cov + w w^T,
      within stats take n (cov + (m - w)(m - w)^T).
    */
    for (int c = 0; c < num_classes; ++c) {
      const double n = static_cast<double>(groups[c].size());
      Matrix m_mat = phi_b;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m_mat(i, j) += phi_w(i, j) / n;
      const Matrix m_inv = solve_spd(symmetrize(m_mat), eye);
      const Matrix cov =
          symmetrize(matmul(matmul(phi_b, m_inv), phi_w));  // times 1/n below

      std::vector<double> m_c(d), w(d);
      for (int j = 0; j < d; ++j) m_c[j] = class_means[c][j] - mu[j];
      for (int i = 0; i < d; ++i) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) {
          double bmk = 0.0;
          for (int j = 0; j < d; ++j) bmk += phi_b(i, j) * m_inv(j, k);
          s += bmk * m_c[k];
        }
        w[i] = s;
      }

      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          const double cv = cov(i, j) / n;
          between_stats(i, j) += cv + w[i] * w[j];
          within_stats(i, j) += n * (cv + (m_c[i] - w[i]) * (m_c[j] - w[j]));
        }
    }

    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        phi_w(i, j) = within_stats(i, j) / within_count;
        phi_b(i, j) = between_stats(i, j) / num_classes;
      }
    phi_w = symmetrize(phi_w);
    phi_b = symmetrize(phi_b);

    // Log likelihood of the data under the new parameters: utterances
    // around class means under phi_w, class means under phi_b + phi_w / n.
    double obj = 0.0;
    {
      const Matrix phi_w_inv = solve_spd(phi_w, eye);
      double tr = 0.0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) tr += phi_w_inv(i, j) * offset_scatter(j, i);
      obj += -0.5 * ((n_total - num_classes) * (logdet_spd(phi_w) + d * kTwoPiLog) + tr);
      for (int c = 0; c < num_classes; ++c) {
        const double n = static_cast<double>(groups[c].size());
        Matrix m_mat = phi_b;
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) m_mat(i, j) += phi_w(i, j) / n;
        m_mat = symmetrize(m_mat);
        std::vector<double> m_c(d);
        for (int j = 0; j < d; ++j) m_c[j] = class_means[c][j] - mu[j];
        Matrix rhs(d, 1);
        for (int j = 0; j < d; ++j) rhs(j, 0) = m_c[j];
        const Matrix sol = solve_spd(m_mat, rhs);
        double quad = 0.0;
        for (int j = 0; j < d; ++j) quad += m_c[j] * sol(j, 0);
        obj += -0.5 * (logdet_spd(m_mat) + d * kTwoPiLog + quad);
      }
    }
    result.loglik.push_back(obj);
  }

  result.model = PLDAModel(mu, phi_b, phi_w);
  return result;
}

PLDAModel plda_adapt(const PLDAModel &m, const EmbeddingSet &unlabeled,
                     double within_scale, double between_scale) {
  unlabeled.validate();
  if (unlabeled.size() < 2)
    throw DegenerateInputError("plda_adapt: need at least 2 unlabeled vectors");
  if (unlabeled.dim != m.dim())
    throw std::invalid_argument("plda_adapt: dimension mismatch");
  if (within_scale < 0.0 || within_scale > 1.0 || between_scale < 0.0 ||
      between_scale > 1.0)
    throw std::invalid_argument("plda_adapt: scales must lie in [0, 1]");

  const int d = m.dim();
  // Population covariance of the unlabeled set about its own mean.
  const std::vector<double> mean = column_mean(unlabeled.vectors);
  Matrix cov(d, d);
  std::vector<double> diff(d);
  for (int i = 0; i < unlabeled.size(); ++i) {
    for (int j = 0; j < d; ++j) diff[j] = unlabeled.vectors(i, j) - mean[j];
    add_outer(&cov, diff, 1.0);
  }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) cov(i, j) /= unlabeled.size();

  // Basis that makes phi_w unit and phi_b diagonal; the model total
  // covariance there is diag(1 + psi).
  const Matrix l = cholesky(m.phi_w());
  const Matrix linv = lower_triangular_inverse(l);
  const Matrix whitened_b =
      symmetrize(matmul(matmul(linv, m.phi_b()), transpose(linv)));
  const SymEig eig = sym_eig(whitened_b);
  const Matrix t = matmul(transpose(eig.vectors), linv);
  const Matrix t_inv = matmul(l, eig.vectors);  // inverse of t

  const Matrix cov_proj = symmetrize(matmul(matmul(t, cov), transpose(t)));

  std::vector<double> within_diag(d), between_diag(d);
  for (int i = 0; i < d; ++i) {
    const double psi = std::max(eig.values[i], 0.0);
    const double excess = std::max(0.0, cov_proj(i, i) - (1.0 + psi));
    within_diag[i] = 1.0 + within_scale * excess;
    between_diag[i] = psi + between_scale * excess;
  }

  Matrix phi_w_new(d, d), phi_b_new(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      double w = 0.0, b = 0.0;
      for (int k = 0; k < d; ++k) {
        w += t_inv(i, k) * within_diag[k] * t_inv(j, k);
        b += t_inv(i, k) * between_diag[k] * t_inv(j, k);
      }
      phi_w_new(i, j) = w;
      phi_b_new(i, j) = b;
    }

  return PLDAModel(m.mu(), symmetrize(phi_b_new), symmetrize(phi_w_new));
}

}  // namespace xadapt
