#ifndef XADAPT_BACKEND_HPP
#define XADAPT_BACKEND_HPP

#include <vector>

#include "xadapt/dataio.hpp"
#include "xadapt/linalg.hpp"

namespace xadapt {

// Subtracts the mean of mean_source from every vector of emb.
EmbeddingSet mean_normalize(const EmbeddingSet &emb, const EmbeddingSet &mean_source);

// Scales every vector to unit Euclidean norm. Idempotent; rejects vectors
// with norm below 1e-12.
EmbeddingSet length_normalize(const EmbeddingSet &emb);

struct LdaTransform {
  Matrix projection;         // p x d, rows ordered by descending discriminability
  std::vector<double> mean;  // training global mean, length d
};

// Fisher LDA via whitening: S_w is regularized with 1e-6 * trace/d on the
// diagonal, Cholesky-whitened, and the whitened between-class scatter is
// eigendecomposed. Keeps the top target_dim directions.
LdaTransform lda_fit(const EmbeddingSet &emb, int target_dim);

// y = P (x - mean)
EmbeddingSet lda_apply(const LdaTransform &t, const EmbeddingSet &emb);

/*
  Two-covariance PLDA: x = mu + y + eps with y ~ N(0, phi_b) shared by a
  speaker's utterances and eps ~ N(0, phi_w) per utterance.

  Scoring uses the simultaneously-diagonalizing basis: a transform T with
  T phi_w T^T = I and T phi_b T^T = diag(psi). For u = T (x - mu) the
  same/different-speaker log likelihood ratio decomposes per dimension:

    llr = sum_i [ 0.5 * a_i (e_i^2 + t_i^2) + g_i e_i t_i + k_i ]
      a_i = -psi_i^2 / ((1 + psi_i)(1 + 2 psi_i))
      g_i =  psi_i / (1 + 2 psi_i)
      k_i =  log(1 + psi_i) - 0.5 log(1 + 2 psi_i)

  which follows from the joint Gaussian over (e, t): covariance
  [[1+psi, psi], [psi, 1+psi]] per dimension under the same-speaker
  hypothesis against two independent N(0, 1+psi) otherwise. The linear
  change of basis cancels between the two hypotheses.
*/
class PLDAModel {
 public:
  PLDAModel() = default;
  PLDAModel(std::vector<double> mu, Matrix phi_b, Matrix phi_w);

  int dim() const { return static_cast<int>(mu_.size()); }
  const std::vector<double> &mu() const { return mu_; }
  const Matrix &phi_b() const { return phi_b_; }
  const Matrix &phi_w() const { return phi_w_; }
  const Matrix &transform() const { return transform_; }
  const std::vector<double> &psi() const { return psi_; }

  // llr for one (enroll, test) pair; symmetric in its arguments.
  double score(const double *enroll, const double *test) const;

 private:
  void compute_derived();

  std::vector<double> mu_;
  Matrix phi_b_, phi_w_;
  // Derived, cached scoring terms.
  Matrix transform_;  // T, dim x dim
  std::vector<double> psi_, quad_, cross_;
  double offset_ = 0.0;
};

struct PldaFitResult {
  PLDAModel model;
  std::vector<double> loglik;  // per-iteration objective, non-decreasing
};

// EM estimation of (mu, phi_b, phi_w) from a labeled set; defaults to 10
// iterations. Needs >= 2 speakers and at least one speaker with >= 2
// utterances, and non-degenerate scatter.
PldaFitResult plda_fit(const EmbeddingSet &emb, int iters = 10);

double plda_score(const PLDAModel &m, const std::vector<double> &enroll,
                  const std::vector<double> &test);

// Unsupervised covariance interpolation. In the model's simultaneously
// diagonalizing basis the unlabeled total covariance is compared per
// direction against the model total 1 + psi_i; positive excess is added
// back to phi_w and phi_b scaled by within_scale / between_scale.
// Directions with no excess, and the model mean, are left untouched.
PLDAModel plda_adapt(const PLDAModel &m, const EmbeddingSet &unlabeled,
                     double within_scale = 0.75, double between_scale = 0.25);

}  // namespace xadapt

#endif  // XADAPT_BACKEND_HPP
