#include "inertia/arena.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace inertia {

std::string to_string(CostModel model) {
  switch (model) {
    case CostModel::Classical: return "classical";
    case CostModel::ClassicalShifted: return "classical_shifted";
    case CostModel::Hybrid: return "hybrid";
    case CostModel::Relativistic: return "relativistic";
  }
  return "?";
}

std::string to_string(Frame frame) {
  return frame == Frame::Absolute ? "absolute" : "shifted";
}

namespace {

// Velocity as the model sees it after the origin shift.
double transformed_velocity(CostModel model, double v0, double v) {
  switch (model) {
    case CostModel::Classical:
      return v;
    case CostModel::ClassicalShifted:
      return v - v0;
    case CostModel::Hybrid:
    case CostModel::Relativistic:
      return (v - v0) / (1.0 - v * v0);
  }
  return v;
}

// Basis function multiplying k for each model.
double basis(CostModel model, double u) {
  if (model == CostModel::Relativistic) {
    return 1.0 / std::sqrt((1.0 - u) * (1.0 + u)) - 1.0;
  }
  return u * u;
}

struct LinearFit {
  double k = 0.0;
  double b = 0.0;
  double rss = std::numeric_limits<double>::infinity();
  bool ok = false;
};

LinearFit solve_kb(CostModel model, double v0,
                   const std::vector<CostSample>& kept) {
  // Weighted normal equations for cost = k * basis(u) + b.
  double sw = 0.0, sx = 0.0, sxx = 0.0, sy = 0.0, sxy = 0.0;
  for (const auto& s : kept) {
    const double u = transformed_velocity(model, v0, s.velocity);
    if (u < 0.0 || u >= 1.0) return {};
    const double x = basis(model, u);
    sw += s.weight;
    sx += s.weight * x;
    sxx += s.weight * x * x;
    sy += s.weight * s.cost;
    sxy += s.weight * x * s.cost;
  }
  const double det = sw * sxx - sx * sx;
  if (std::abs(det) < 1e-14 * std::max(1.0, sw * sxx)) return {};
  LinearFit out;
  out.k = (sw * sxy - sx * sy) / det;
  out.b = (sxx * sy - sx * sxy) / det;
  out.rss = 0.0;
  for (const auto& s : kept) {
    const double u = transformed_velocity(model, v0, s.velocity);
    const double r = s.cost - (out.k * basis(model, u) + out.b);
    out.rss += s.weight * r * r;
  }
  out.ok = true;
  return out;
}

}  // namespace

double model_predict(CostModel model, double k, double b, double v0,
                     double v) {
  const double u = transformed_velocity(model, v0, v);
  if (u < 0.0 || u >= 1.0) {
    throw std::domain_error("model_predict: transformed velocity " +
                            std::to_string(u) + " outside [0, 1)");
  }
  return k * basis(model, u) + b;
}

FitResult fit(CostModel model, const std::vector<CostSample>& samples,
              Frame frame, const FitOptions& options) {
  std::vector<CostSample> kept;
  for (const auto& s : samples) {
    if (s.censored && !options.include_censored) continue;
    kept.push_back(s);
  }
  if (kept.size() < 4) {
    throw std::invalid_argument("fit: need at least 4 usable samples");
  }
  double v_min = 1.0, v_max = 0.0;
  for (const auto& s : kept) {
    v_min = std::min(v_min, s.velocity);
    v_max = std::max(v_max, s.velocity);
  }
  if (v_max - v_min < 1e-12) {
    throw std::invalid_argument("fit: degenerate design, all velocities equal");
  }

  double sw = 0.0;
  for (const auto& s : kept) sw += s.weight;

  FitResult result;
  result.model = model;
  result.frame = frame;
  result.n_samples = static_cast<int>(kept.size());

  const bool uses_origin =
      frame == Frame::Shifted && model != CostModel::Classical;
  result.has_v0 = uses_origin;

  if (!uses_origin) {
    LinearFit lin = solve_kb(model, 0.0, kept);
    result.converged = lin.ok;
    if (lin.ok) {
      result.k = lin.k;
      result.b = lin.b;
      result.rmse = std::sqrt(std::max(0.0, lin.rss) / sw);
    }
    return result;
  }

  // Dense grid over the admissible origins, then golden-section refinement
  // around the best cell.
  auto rss_at = [&](double v0) {
    LinearFit lin = solve_kb(model, v0, kept);
    return lin.ok ? lin.rss : std::numeric_limits<double>::infinity();
  };

  const int n = std::max(8, options.grid_points);
  double best_v0 = 0.0;
  double best_rss = rss_at(0.0);
  for (int i = 1; i <= n; ++i) {
    const double v0 = v_min * static_cast<double>(i) / n;
    const double rss = rss_at(v0);
    if (rss < best_rss) {
      best_rss = rss;
      best_v0 = v0;
    }
  }

  double lo = std::max(0.0, best_v0 - v_min / n);
  double hi = std::min(v_min, best_v0 + v_min / n);
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - invphi * (hi - lo);
  double x2 = lo + invphi * (hi - lo);
  double f1 = rss_at(x1);
  double f2 = rss_at(x2);
  int iters = 0;
  while (hi - lo > options.refine_tolerance && iters < 200) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - invphi * (hi - lo);
      f1 = rss_at(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + invphi * (hi - lo);
      f2 = rss_at(x2);
    }
    ++iters;
  }
  const double v0 = 0.5 * (lo + hi);
  LinearFit lin = solve_kb(model, v0, kept);
  if (!lin.ok || lin.rss > best_rss + 1e-12 * (1.0 + best_rss)) {
    // Grid minimum was better than the refined point; fall back.
    lin = solve_kb(model, best_v0, kept);
    result.v0 = best_v0;
  } else {
    result.v0 = v0;
  }
  result.converged = lin.ok && (hi - lo) <= options.refine_tolerance;
  if (lin.ok) {
    result.k = lin.k;
    result.b = lin.b;
    result.rmse = std::sqrt(std::max(0.0, lin.rss) / sw);
  }
  return result;
}

Verdict adjudicate(const std::vector<CostSample>& samples,
                   const FitOptions& options) {
  Verdict verdict;
  double rel_abs = -1.0, rel_shift = -1.0;
  for (CostModel model :
       {CostModel::Classical, CostModel::ClassicalShifted, CostModel::Hybrid,
        CostModel::Relativistic}) {
    for (Frame frame : {Frame::Absolute, Frame::Shifted}) {
      try {
        FitResult r = fit(model, samples, frame, options);
        if (model == CostModel::Relativistic) {
          (frame == Frame::Absolute ? rel_abs : rel_shift) = r.rmse;
        }
        verdict.table.push_back(r);
      } catch (const std::exception&) {
        // Partial tables are fine; skip the failing cell.
      }
    }
  }
  std::stable_sort(verdict.table.begin(), verdict.table.end(),
                   [](const FitResult& a, const FitResult& b) {
                     return a.rmse < b.rmse;
                   });
  if (rel_abs >= 0.0 && rel_shift >= 0.0) {
    verdict.covariance_gap = std::abs(rel_abs - rel_shift);
  }
  if (!verdict.table.empty()) {
    verdict.best_model = to_string(verdict.table.front().model);
    verdict.best_frame = to_string(verdict.table.front().frame);
  }
  return verdict;
}

}  // namespace inertia
