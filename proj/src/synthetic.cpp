#include "inertia/synthetic.hpp"

#include <random>
#include <stdexcept>

#include "inertia/micro_sim.hpp"  // mix_seed

namespace inertia {

namespace {

Dataset sample_dataset(const TaskConfig& cfg, const Eigen::MatrixXd& means,
                       const std::vector<int>& classes, int n,
                       double noise_fraction, std::uint64_t seed) {
  Dataset ds;
  ds.X.resize(cfg.input_dim, n);
  ds.y.resize(n);
  ds.y_clean.resize(n);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0,
                                          static_cast<int>(classes.size()) - 1);
  std::uniform_int_distribution<int> any_label(0, cfg.n_classes - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    const int c = classes[pick(rng)];
    for (int d = 0; d < cfg.input_dim; ++d) {
      ds.X(d, i) = means(d, c) + cfg.cluster_std * gauss(rng);
    }
    // Noise draws are consumed unconditionally so the same seed yields the
    // same samples at every noise level, with flipped-label sets nested as
    // the fraction grows.
    const double flip = coin(rng);
    const int resampled = any_label(rng);
    ds.y_clean[i] = c;
    ds.y[i] = flip < noise_fraction ? resampled : c;
  }
  return ds;
}

}  // namespace

SyntheticTask::SyntheticTask(const TaskConfig& config) : config_(config) {
  if (config_.n_classes < 2 || config_.input_dim < 1) {
    throw std::invalid_argument("SyntheticTask: bad dimensions");
  }
  if (config_.noise_fraction < 0.0 || config_.noise_fraction > 1.0) {
    throw std::invalid_argument("SyntheticTask: noise_fraction outside [0,1]");
  }
  std::vector<int> classes = config_.class_subset;
  if (classes.empty()) {
    for (int c = 0; c < config_.n_classes; ++c) classes.push_back(c);
  }
  for (int c : classes) {
    if (c < 0 || c >= config_.n_classes) {
      throw std::invalid_argument("SyntheticTask: class id out of range");
    }
  }

  // Means depend on the seed alone so subset tasks share geometry.
  std::mt19937_64 mean_rng(mix_seed(config_.seed, 0xA11CE));
  std::normal_distribution<double> gauss(0.0, 1.0);
  means_.resize(config_.input_dim, config_.n_classes);
  for (int c = 0; c < config_.n_classes; ++c) {
    Eigen::VectorXd dir(config_.input_dim);
    for (int d = 0; d < config_.input_dim; ++d) dir[d] = gauss(mean_rng);
    means_.col(c) = config_.mean_scale * dir / dir.norm();
  }

  train_ = sample_dataset(config_, means_, classes, config_.n_train,
                          config_.noise_fraction, mix_seed(config_.seed, 1));
  eval_ = sample_dataset(config_, means_, classes, config_.n_eval, 0.0,
                         mix_seed(config_.seed, 2));
}

Dataset concat(const Dataset& a, const Dataset& b) {
  Dataset out;
  out.X.resize(a.X.rows(), a.X.cols() + b.X.cols());
  out.X << a.X, b.X;
  out.y.resize(a.y.size() + b.y.size());
  out.y << a.y, b.y;
  return out;
}

}  // namespace inertia
