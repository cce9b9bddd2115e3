#ifndef XADAPT_NN_HPP
#define XADAPT_NN_HPP

#include <cstdint>
#include <vector>

#include "xadapt/linalg.hpp"

namespace xadapt {

enum class Activation { kRelu, kIdentity };

struct Layer {
  Matrix weight;             // out x in
  std::vector<double> bias;  // out
  Activation activation = Activation::kIdentity;
};

struct ForwardCache;
struct Gradients;

// Stack of affine layers with elementwise activations. Adjacent layer
// dimensions chain; backward produces exact analytic gradients.
class MLPEncoder {
 public:
  MLPEncoder() = default;

  // dims = {in, h1, ..., out}; acts has dims.size()-1 entries. Weights are
  // drawn U(-a, a) with a = sqrt(6 / (fan_in + fan_out)), biases zero,
  // layer by layer in order from `rng`.
  static MLPEncoder make(const std::vector<int> &dims,
                         const std::vector<Activation> &acts, Rng &rng);

  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }
  int num_layers() const { return static_cast<int>(layers_.size()); }
  const std::vector<Layer> &layers() const { return layers_; }
  std::vector<Layer> &layers() { return layers_; }

  // batch is n x input_dim; returns n x output_dim. Throws DivergenceError
  // when the output is non-finite.
  Matrix forward(const Matrix &batch) const;
  Matrix forward(const Matrix &batch, ForwardCache *cache) const;

  // grad_output is dLoss/dOutput for the cached batch; fills `grads`
  // (resized to match) and returns dLoss/dInput.
  Matrix backward(const ForwardCache &cache, const Matrix &grad_output,
                  Gradients *grads) const;

  // Raw parameter arrays in a fixed order (weight then bias per layer);
  // pairs up with Gradients::views() for the optimizer.
  std::vector<std::pair<double *, int>> param_views();

  bool same_shape(const MLPEncoder &other) const;
  bool params_equal(const MLPEncoder &other) const;

 private:
  std::vector<Layer> layers_;
  int input_dim_ = 0, output_dim_ = 0;
};

struct ForwardCache {
  Matrix input;
  std::vector<Matrix> preact;  // per layer, before activation
  std::vector<Matrix> act;     // per layer, after activation
};

struct Gradients {
  std::vector<Matrix> dweight;
  std::vector<std::vector<double>> dbias;

  void resize_like(const MLPEncoder &enc);
  void add(const Gradients &other, double scale = 1.0);
  std::vector<std::pair<const double *, int>> views() const;
};

// MLP head ending in K speaker logits; softmax lives in the loss.
struct SpeakerClassifier {
  MLPEncoder net;
  int num_speakers() const { return net.output_dim(); }
};

// MLP head ending in a single domain logit; sigmoid lives in the loss.
struct DomainDiscriminator {
  MLPEncoder net;
};

struct LossGrad {
  double loss = 0.0;
  Matrix dlogits;  // same shape as the logits
};

// Mean over the batch of -log softmax(logits)[label]; gradient is
// (softmax - onehot) / n. Computed through log-sum-exp, no clipping.
LossGrad softmax_cross_entropy(const Matrix &logits,
                               const std::vector<int> &labels);

struct DiscriminatorLoss {
  double loss = 0.0;
  std::vector<double> dsrc;  // dLoss/dlogit per source sample
  std::vector<double> dtgt;
};

// Domain discriminator objective: source labeled 1, target labeled 0,
//   loss = mean_src softplus(-z_s) + mean_tgt softplus(z_t),
// each side averaged separately, sides summed. Sigmoid and log are fused
// (softplus) for stability.
DiscriminatorLoss discriminator_bce(const std::vector<double> &src_logits,
                                    const std::vector<double> &tgt_logits);

struct MappingLoss {
  double loss = 0.0;
  std::vector<double> dtgt;
};

// Inverted-label objective for the target mapping: the target encoder tries
// to make the discriminator output 1, loss = mean_tgt softplus(-z_t).
MappingLoss mapping_bce(const std::vector<double> &tgt_logits);

// Backward half of the gradient reversal layer: forward is the identity,
// backward returns -lambda * grad exactly.
Matrix gradient_reversal(const Matrix &grad_in, double lambda);

// Bias-corrected Adam over a fixed list of parameter tensors. Moment arrays
// mirror the parameter shapes; `t` counts completed steps.
class AdamState {
 public:
  AdamState(double lr = 1e-4, double beta1 = 0.9, double beta2 = 0.999,
            double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // params and grads must align element for element. Throws
  // DivergenceError on non-finite gradients.
  void step(const std::vector<std::pair<double *, int>> &params,
            const std::vector<std::pair<const double *, int>> &grads);

  int64_t steps_taken() const { return t_; }
  double learning_rate() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace xadapt

#endif  // XADAPT_NN_HPP
