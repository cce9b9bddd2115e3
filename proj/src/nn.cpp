#include "xadapt/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "xadapt/error.hpp"

namespace xadapt {

namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

MLPEncoder MLPEncoder::make(const std::vector<int> &dims,
                            const std::vector<Activation> &acts, Rng &rng) {
  if (dims.size() < 2 || acts.size() != dims.size() - 1)
    throw std::invalid_argument("MLPEncoder::make: need >=1 layer and one activation per layer");
  MLPEncoder enc;
  enc.input_dim_ = dims.front();
  enc.output_dim_ = dims.back();
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l], out = dims[l + 1];
    if (in < 1 || out < 1)
      throw std::invalid_argument("MLPEncoder::make: dims must be positive");
    Layer layer;
    layer.weight = Matrix(out, in);
    const double a = std::sqrt(6.0 / (in + out));
    for (int i = 0; i < out; ++i)
      for (int j = 0; j < in; ++j)
        layer.weight(i, j) = a * (2.0 * rng.uniform01() - 1.0);
    layer.bias.assign(out, 0.0);
    layer.activation = acts[l];
    enc.layers_.push_back(std::move(layer));
  }
  return enc;
}

Matrix MLPEncoder::forward(const Matrix &batch) const {
  ForwardCache cache;
  return forward(batch, &cache);
}

Matrix MLPEncoder::forward(const Matrix &batch, ForwardCache *cache) const {
  if (batch.cols() != input_dim_)
    throw std::invalid_argument("MLPEncoder::forward: batch dim " +
                                std::to_string(batch.cols()) + " != input dim " +
                                std::to_string(input_dim_));
  cache->input = batch;
  cache->preact.clear();
  cache->act.clear();
  const Matrix *cur = &batch;
  for (const Layer &layer : layers_) {
    Matrix z = matmul(*cur, transpose(layer.weight));
    for (int i = 0; i < z.rows(); ++i)
      for (int j = 0; j < z.cols(); ++j) z(i, j) += layer.bias[j];
    cache->preact.push_back(z);
    if (layer.activation == Activation::kRelu) {
      for (int i = 0; i < z.rows(); ++i)
        for (int j = 0; j < z.cols(); ++j)
          if (z(i, j) < 0.0) z(i, j) = 0.0;
    }
    cache->act.push_back(std::move(z));
    cur = &cache->act.back();
  }
  if (!cur->all_finite())
    throw DivergenceError("MLPEncoder::forward: non-finite output");
  return *cur;
}

Matrix MLPEncoder::backward(const ForwardCache &cache, const Matrix &grad_output,
                            Gradients *grads) const {
  if (cache.act.size() != layers_.size())
    throw std::invalid_argument("MLPEncoder::backward: cache does not match encoder");
  grads->resize_like(*this);
  Matrix delta = grad_output;  // dLoss/d(activation of layer l)
  for (int l = num_layers() - 1; l >= 0; --l) {
    const Layer &layer = layers_[l];
    if (layer.activation == Activation::kRelu) {
      const Matrix &z = cache.preact[l];
      for (int i = 0; i < delta.rows(); ++i)
        for (int j = 0; j < delta.cols(); ++j)
          if (z(i, j) <= 0.0) delta(i, j) = 0.0;
    }
    const Matrix &input = (l == 0) ? cache.input : cache.act[l - 1];
    grads->dweight[l] = matmul(transpose(delta), input);
    std::vector<double> &db = grads->dbias[l];
    for (int i = 0; i < delta.rows(); ++i)
      for (int j = 0; j < delta.cols(); ++j) db[j] += delta(i, j);
    if (l > 0) delta = matmul(delta, layer.weight);
  }
  return matmul(delta, layers_[0].weight);
}

std::vector<std::pair<double *, int>> MLPEncoder::param_views() {
  std::vector<std::pair<double *, int>> views;
  for (Layer &layer : layers_) {
    views.emplace_back(layer.weight.data(), layer.weight.size());
    views.emplace_back(layer.bias.data(), static_cast<int>(layer.bias.size()));
  }
  return views;
}

bool MLPEncoder::same_shape(const MLPEncoder &other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].weight.rows() != other.layers_[l].weight.rows() ||
        layers_[l].weight.cols() != other.layers_[l].weight.cols() ||
        layers_[l].activation != other.layers_[l].activation)
      return false;
  }
  return true;
}

bool MLPEncoder::params_equal(const MLPEncoder &other) const {
  if (!same_shape(other)) return false;
  for (size_t l = 0; l < layers_.size(); ++l) {
    const Layer &a = layers_[l], &b = other.layers_[l];
    for (int i = 0; i < a.weight.size(); ++i)
      if (a.weight.data()[i] != b.weight.data()[i]) return false;
    if (a.bias != b.bias) return false;
  }
  return true;
}

void Gradients::resize_like(const MLPEncoder &enc) {
  dweight.clear();
  dbias.clear();
  for (const Layer &layer : enc.layers()) {
    dweight.emplace_back(layer.weight.rows(), layer.weight.cols());
    dbias.emplace_back(layer.bias.size(), 0.0);
  }
}

void Gradients::add(const Gradients &other, double scale) {
  for (size_t l = 0; l < dweight.size(); ++l) {
    for (int i = 0; i < dweight[l].size(); ++i)
      dweight[l].data()[i] += scale * other.dweight[l].data()[i];
    for (size_t j = 0; j < dbias[l].size(); ++j)
      dbias[l][j] += scale * other.dbias[l][j];
  }
}

std::vector<std::pair<const double *, int>> Gradients::views() const {
  std::vector<std::pair<const double *, int>> views;
  for (size_t l = 0; l < dweight.size(); ++l) {
    views.emplace_back(dweight[l].data(), dweight[l].size());
    views.emplace_back(dbias[l].data(), static_cast<int>(dbias[l].size()));
  }
  return views;
}

LossGrad softmax_cross_entropy(const Matrix &logits,
                               const std::vector<int> &labels) {
  const int n = logits.rows(), k = logits.cols();
  if (static_cast<int>(labels.size()) != n)
    throw std::invalid_argument("softmax_cross_entropy: label count mismatch");
  LossGrad out;
  out.dlogits = Matrix(n, k);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= k)
      throw std::invalid_argument("softmax_cross_entropy: label out of range");
    const double *zi = logits.row(i);
    double zmax = zi[0];
    for (int j = 1; j < k; ++j) zmax = std::max(zmax, zi[j]);
    double sum = 0.0;
    for (int j = 0; j < k; ++j) sum += std::exp(zi[j] - zmax);
    const double logz = zmax + std::log(sum);
    total += logz - zi[labels[i]];
    for (int j = 0; j < k; ++j)
      out.dlogits(i, j) = std::exp(zi[j] - logz) / n;
    out.dlogits(i, labels[i]) -= 1.0 / n;
  }
  out.loss = total / n;
  return out;
}

DiscriminatorLoss discriminator_bce(const std::vector<double> &src_logits,
                                    const std::vector<double> &tgt_logits) {
  if (src_logits.empty() || tgt_logits.empty())
    throw std::invalid_argument("discriminator_bce: need samples on both sides");
  DiscriminatorLoss out;
  const double ns = static_cast<double>(src_logits.size());
  const double nt = static_cast<double>(tgt_logits.size());
  out.dsrc.resize(src_logits.size());
  out.dtgt.resize(tgt_logits.size());
  double src_loss = 0.0, tgt_loss = 0.0;
  for (size_t i = 0; i < src_logits.size(); ++i) {
    src_loss += softplus(-src_logits[i]);      // -log sigmoid(z)
    out.dsrc[i] = (sigmoid(src_logits[i]) - 1.0) / ns;
  }
  for (size_t i = 0; i < tgt_logits.size(); ++i) {
    tgt_loss += softplus(tgt_logits[i]);       // -log(1 - sigmoid(z))
    out.dtgt[i] = sigmoid(tgt_logits[i]) / nt;
  }
  out.loss = src_loss / ns + tgt_loss / nt;
  return out;
}

MappingLoss mapping_bce(const std::vector<double> &tgt_logits) {
  if (tgt_logits.empty())
    throw std::invalid_argument("mapping_bce: need at least one target sample");
  MappingLoss out;
  const double nt = static_cast<double>(tgt_logits.size());
  out.dtgt.resize(tgt_logits.size());
  double loss = 0.0;
  for (size_t i = 0; i < tgt_logits.size(); ++i) {
    loss += softplus(-tgt_logits[i]);          // -log sigmoid(z)
    out.dtgt[i] = (sigmoid(tgt_logits[i]) - 1.0) / nt;
  }
  out.loss = loss / nt;
  return out;
}

Matrix gradient_reversal(const Matrix &grad_in, double lambda) {
  if (lambda < 0.0)
    throw std::invalid_argument("gradient_reversal: lambda must be >= 0");
  Matrix out(grad_in.rows(), grad_in.cols());
  for (int i = 0; i < grad_in.size(); ++i)
    out.data()[i] = -lambda * grad_in.data()[i];
  return out;
}

void AdamState::step(const std::vector<std::pair<double *, int>> &params,
                     const std::vector<std::pair<const double *, int>> &grads) {
  if (params.size() != grads.size())
    throw std::invalid_argument("AdamState::step: tensor count mismatch");
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      m_[i].assign(params[i].second, 0.0);
      v_[i].assign(params[i].second, 0.0);
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    double *p = params[i].first;
    const double *g = grads[i].first;
    const int n = params[i].second;
    if (n != grads[i].second || static_cast<size_t>(n) != m_[i].size())
      throw std::invalid_argument("AdamState::step: tensor shape mismatch");
    for (int j = 0; j < n; ++j) {
      if (!std::isfinite(g[j]))
        throw DivergenceError("AdamState::step: non-finite gradient");
      m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g[j];
      v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g[j] * g[j];
      const double mhat = m_[i][j] / bc1;
      const double vhat = v_[i][j] / bc2;
      p[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

}  // namespace xadapt
