#include "inertia/mlp.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace inertia {

namespace {

using Eigen::Map;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

MatrixXd softmax_columns(const MatrixXd& logits) {
  MatrixXd p = logits;
  for (long j = 0; j < p.cols(); ++j) {
    VectorXd col = p.col(j);
    const double m = col.maxCoeff();
    col = (col.array() - m).exp();
    p.col(j) = col / col.sum();
  }
  return p;
}

}  // namespace

Mlp::Mlp(const MlpConfig& config) : config_(config) {
  if (config_.layer_sizes.size() < 2) {
    throw std::invalid_argument("Mlp: need at least input and output layers");
  }
  long offset = 0;
  for (std::size_t l = 0; l + 1 < config_.layer_sizes.size(); ++l) {
    const int in = config_.layer_sizes[l];
    const int out = config_.layer_sizes[l + 1];
    if (in < 1 || out < 1) throw std::invalid_argument("Mlp: bad layer size");
    Slab slab{offset, offset + static_cast<long>(in) * out, in, out};
    slabs_.push_back(slab);
    offset = slab.b_offset + out;
  }
  params_ = VectorXd::Zero(offset);

  std::mt19937_64 rng(config_.seed);
  for (const auto& slab : slabs_) {
    const double bound = std::sqrt(6.0 / (slab.in + slab.out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (long i = 0; i < static_cast<long>(slab.in) * slab.out; ++i) {
      params_[slab.w_offset + i] = dist(rng);
    }
    // biases stay zero
  }
}

MatrixXd Mlp::logits(const MatrixXd& X) const {
  MatrixXd a = X;
  for (std::size_t l = 0; l < slabs_.size(); ++l) {
    const Slab& s = slabs_[l];
    Map<const MatrixXd> W(params_.data() + s.w_offset, s.out, s.in);
    Map<const VectorXd> b(params_.data() + s.b_offset, s.out);
    MatrixXd z = (W * a).colwise() + b;
    if (l + 1 < slabs_.size()) {
      if (config_.activation == Activation::Relu) {
        a = z.cwiseMax(0.0);
      } else {
        a = z.array().tanh().matrix();
      }
    } else {
      a = std::move(z);
    }
  }
  return a;
}

double Mlp::loss(const MatrixXd& X, const VectorXi& y) const {
  const MatrixXd z = logits(X);
  double total = 0.0;
  for (long j = 0; j < z.cols(); ++j) {
    VectorXd col = z.col(j);
    const double m = col.maxCoeff();
    const double lse = m + std::log((col.array() - m).exp().sum());
    total += lse - col[y[j]];
  }
  return total / static_cast<double>(z.cols());
}

double Mlp::loss_and_gradient(const MatrixXd& X, const VectorXi& y,
                              VectorXd& grad) const {
  const long batch = X.cols();
  if (batch == 0 || y.size() != batch) {
    throw std::invalid_argument("loss_and_gradient: bad batch");
  }

  // Forward pass keeping activations for the backward sweep.
  std::vector<MatrixXd> acts;  // acts[l] feeds layer l
  acts.reserve(slabs_.size() + 1);
  acts.push_back(X);
  std::vector<MatrixXd> zs;
  zs.reserve(slabs_.size());
  for (std::size_t l = 0; l < slabs_.size(); ++l) {
    const Slab& s = slabs_[l];
    Map<const MatrixXd> W(params_.data() + s.w_offset, s.out, s.in);
    Map<const VectorXd> b(params_.data() + s.b_offset, s.out);
    zs.push_back((W * acts.back()).colwise() + b);
    if (l + 1 < slabs_.size()) {
      if (config_.activation == Activation::Relu) {
        acts.push_back(zs.back().cwiseMax(0.0));
      } else {
        acts.push_back(zs.back().array().tanh().matrix());
      }
    }
  }

  const MatrixXd& out = zs.back();
  double total = 0.0;
  MatrixXd delta = softmax_columns(out);
  for (long j = 0; j < batch; ++j) {
    VectorXd col = out.col(j);
    const double m = col.maxCoeff();
    const double lse = m + std::log((col.array() - m).exp().sum());
    total += lse - col[y[j]];
    delta(y[j], j) -= 1.0;
  }
  delta /= static_cast<double>(batch);

  grad.setZero(params_.size());
  for (long l = static_cast<long>(slabs_.size()) - 1; l >= 0; --l) {
    const Slab& s = slabs_[l];
    Map<MatrixXd> dW(grad.data() + s.w_offset, s.out, s.in);
    Map<VectorXd> db(grad.data() + s.b_offset, s.out);
    dW = delta * acts[l].transpose();
    db = delta.rowwise().sum();
    if (l > 0) {
      Map<const MatrixXd> W(params_.data() + s.w_offset, s.out, s.in);
      MatrixXd da = W.transpose() * delta;
      if (config_.activation == Activation::Relu) {
        delta = (zs[l - 1].array() > 0.0).cast<double>() * da.array();
      } else {
        delta = (1.0 - zs[l - 1].array().tanh().square()) * da.array();
      }
    }
  }
  return total / static_cast<double>(batch);
}

}  // namespace inertia
