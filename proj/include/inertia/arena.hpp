#pragma once

#include <string>
#include <vector>

#include "inertia/core_dynamics.hpp"

namespace inertia {

/// One (velocity, cost) observation from a sweep run. Censored samples hit
/// the training cap before converging and are excluded from fits unless
/// explicitly included.
struct CostSample {
  double velocity = 0.0;
  double cost = 0.0;
  double weight = 1.0;
  bool censored = false;
};

enum class CostModel { Classical, ClassicalShifted, Hybrid, Relativistic };
enum class Frame { Absolute, Shifted };

std::string to_string(CostModel model);
std::string to_string(Frame frame);

struct FitResult {
  CostModel model = CostModel::Classical;
  Frame frame = Frame::Absolute;
  double k = 0.0;
  double b = 0.0;
  double v0 = 0.0;  // shift/addition origin; 0 when the frame pins it
  bool has_v0 = false;
  double rmse = 0.0;
  int n_samples = 0;
  bool converged = false;
};

/// Predicted cost at velocity v. The shift origin v0 enters per model:
/// Galilean subtraction for the shifted quadratic, relativistic velocity
/// addition for the hybrid and relativistic forms. Throws std::domain_error
/// when the transformed velocity leaves [0, 1).
double model_predict(CostModel model, double k, double b, double v0, double v);

struct FitOptions {
  int grid_points = 256;
  double refine_tolerance = 1e-10;
  bool include_censored = false;
};

/// Weighted least squares: closed-form (k, b) per candidate origin, with the
/// origin located by a dense grid over [0, min velocity] refined by
/// golden-section search. The Absolute frame pins v0 = 0.
FitResult fit(CostModel model, const std::vector<CostSample>& samples,
              Frame frame, const FitOptions& options = {});

struct Verdict {
  std::vector<FitResult> table;  // sorted by rmse ascending
  double covariance_gap = 0.0;   // |rmse_rel,abs - rmse_rel,shifted|
  std::string best_model;
  std::string best_frame;
};

/// Fit every model in both frames and rank by fit error. Per-cell failures
/// are tolerated; the table simply omits those rows.
Verdict adjudicate(const std::vector<CostSample>& samples,
                   const FitOptions& options = {});

}  // namespace inertia
