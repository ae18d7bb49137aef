#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace inertia {

struct TaskConfig {
  int n_classes = 10;
  int input_dim = 16;
  double cluster_std = 1.0;
  double mean_scale = 3.0;     // norm of each class mean
  double noise_fraction = 0.0;
  std::vector<int> class_subset;  // empty = all classes
  std::uint64_t seed = 0;
  int n_train = 512;
  int n_eval = 256;
};

struct Dataset {
  Eigen::MatrixXd X;  // input_dim x n, one sample per column
  Eigen::VectorXi y;        // labels after any configured noise
  Eigen::VectorXi y_clean;  // pre-noise labels
};

/// Gaussian-cluster classification task. Cluster means depend only on the
/// seed, so class-subset variants of the same seed share geometry. Training
/// labels carry the configured noise; evaluation labels are always clean.
class SyntheticTask {
 public:
  explicit SyntheticTask(const TaskConfig& config);

  const TaskConfig& config() const { return config_; }
  const Dataset& train() const { return train_; }
  const Dataset& eval() const { return eval_; }
  const Eigen::MatrixXd& cluster_means() const { return means_; }

 private:
  TaskConfig config_;
  Eigen::MatrixXd means_;  // input_dim x n_classes
  Dataset train_;
  Dataset eval_;
};

/// Concatenate datasets column-wise (e.g. old-task plus new-task eval sets).
Dataset concat(const Dataset& a, const Dataset& b);

}  // namespace inertia
