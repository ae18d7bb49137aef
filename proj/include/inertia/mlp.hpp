#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace inertia {

enum class Activation { Relu, Tanh };

struct MlpConfig {
  std::vector<int> layer_sizes;  // input, hidden..., output
  Activation activation = Activation::Relu;
  std::uint64_t seed = 0;
};

/// Dense classifier with a flat parameter vector and hand-written
/// backpropagation. Samples are columns; the final layer feeds a softmax
/// cross-entropy loss.
class Mlp {
 public:
  explicit Mlp(const MlpConfig& config);

  long param_count() const { return params_.size(); }
  const Eigen::VectorXd& params() const { return params_; }
  Eigen::VectorXd& params() { return params_; }
  const MlpConfig& config() const { return config_; }

  /// Mean softmax cross-entropy over the batch.
  double loss(const Eigen::MatrixXd& X, const Eigen::VectorXi& y) const;

  /// Loss plus the flat parameter gradient (batch mean).
  double loss_and_gradient(const Eigen::MatrixXd& X, const Eigen::VectorXi& y,
                           Eigen::VectorXd& grad) const;

  /// Class logits, one column per sample.
  Eigen::MatrixXd logits(const Eigen::MatrixXd& X) const;

 private:
  struct Slab {
    long w_offset;
    long b_offset;
    int in;
    int out;
  };

  MlpConfig config_;
  std::vector<Slab> slabs_;
  Eigen::VectorXd params_;
};

}  // namespace inertia
