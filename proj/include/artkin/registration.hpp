#pragma once

#include <cstdint>
#include <vector>

#include "artkin/geometry.hpp"

namespace artkin {

struct RegistrationConfig {
  int ransac_iters = 200;
  double inlier_threshold = 0.02;  // meters
  int irls_iters = 10;
  std::uint64_t seed = 0;
};

/// Weighted least-squares rigid fit (Kabsch) minimizing sum w_i |y_i - T x_i|^2.
/// Throws NumericError when the weighted source points are collinear or fewer
/// than 3 carry weight.
RigidTransform fit_rigid(const std::vector<Vec3>& x, const std::vector<Vec3>& y,
                         const std::vector<double>* weights = nullptr);

/// Tukey objective of a registration, sum rho(|y - Tx|) with saturation at
/// 3 * inlier_threshold.
double registration_objective(const std::vector<Vec3>& x, const std::vector<Vec3>& y,
                              const RigidTransform& t, const RegistrationConfig& cfg);

/// RANSAC over 3-point minimal samples followed by iteratively-reweighted
/// least squares under Tukey weights. Never increases the Tukey objective
/// relative to the best iterate seen.
RigidTransform robust_register(const std::vector<Vec3>& x, const std::vector<Vec3>& y,
                               const RegistrationConfig& cfg);

struct EmResult {
  RigidTransform t0, t1;
  std::vector<int> labels;
  std::vector<double> objective_trace;  // total Tukey objective after each round
  bool class_emptied = false;
  int rounds_run = 0;
};

/// Alternates label assignment by smaller squared residual with per-class
/// robust re-registration. The total robust objective is non-increasing
/// across rounds; if a class empties its previous transform is kept and the
/// refinement stops.
EmResult em_refine(const std::vector<Vec3>& x, const std::vector<Vec3>& y,
                   const RigidTransform& t0, const RigidTransform& t1,
                   std::vector<int> labels, const RegistrationConfig& cfg, int rounds);

}  // namespace artkin
