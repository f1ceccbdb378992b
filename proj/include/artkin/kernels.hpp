#pragma once

#include <vector>

#include "artkin/geometry.hpp"
#include "artkin/joint_model.hpp"

// Hot inner loops of the solver, the refiner, and the Chamfer metric.
// Every kernel comes in a serial flavor and an OpenMP flavor selected by the
// `parallel` flag. Parallel variants write per-element slots and reduce in a
// fixed sequential order, so results are bitwise identical to the serial
// path for any thread count.

namespace artkin {

// ---------------------------------------------------------------------------
// Window-pair loss (segmentation)
// ---------------------------------------------------------------------------

struct PairLossConfig {
  double lambda_main = 200.0;
  double lambda_smooth = 10.0;
  double lambda_entropy = 0.01;
  double lambda_init = 5.0;
  double epsilon = 1e-6;      // residual normalizer floor, meters
  double huber_delta = 1.0;   // rho scale for the normalized residual
};

struct PairLossBreakdown {
  double main = 0, ent = 0, smooth = 0, init = 0;  // unweighted term sums
  double total = 0;                                // lambda-weighted
};

/// CSR view of the feature-space neighbor graph.
struct GraphView {
  const int* offsets = nullptr;    // point_count + 1
  const int* neighbors = nullptr;
  const double* alpha = nullptr;
};

/// Loss and (optionally) gradients for one anchored frame pair.
/// `valid_pair[p]` gates the main term; regularizers run over all points.
/// Gradients are with respect to the weight logits and the two transform
/// tangents (rotation xyz then translation xyz), of the lambda-weighted total.
/// Pass null gradient pointers for a value-only evaluation.
PairLossBreakdown pair_loss(const Vec3* x0, const Vec3* xt, const unsigned char* valid_pair,
                            int point_count, const RigidTransform& t0, const RigidTransform& t1,
                            const double* logits, const double* w_init, GraphView graph,
                            const PairLossConfig& cfg, double* grad_logits, double* grad_t0,
                            double* grad_t1, bool parallel);

// ---------------------------------------------------------------------------
// Refinement objective
// ---------------------------------------------------------------------------

struct RefineProblemView {
  const Vec3* canonical = nullptr;      // frame-0 positions of participating points
  const double* w_ref = nullptr;        // probability of belonging to the reference part
  int point_count = 0;
  const Vec3* obs = nullptr;            // frame-major observations [frame][point]
  const unsigned char* obs_valid = nullptr;
  int frame_count = 0;
  const RigidTransform* ref_poses = nullptr;  // calibrated reference-part poses
  const unsigned char* frame_valid = nullptr;
  RobustLoss loss = RobustLoss::huber(0.01);
};

struct RefineGradients {
  double objective = 0;
  Vec3 g_axis = Vec3::Zero();
  Vec3 g_pivot = Vec3::Zero();
  std::vector<double> g_states;
  std::vector<Eigen::Matrix<double, 6, 1>> g_poses;  // filled when requested
};

double refine_objective(const RefineProblemView& view, const JointModel& model, bool parallel);

RefineGradients refine_objective_grad(const RefineProblemView& view, const JointModel& model,
                                      bool with_pose_grads, bool parallel);

// ---------------------------------------------------------------------------
// Chamfer nearest-neighbor
// ---------------------------------------------------------------------------

/// Mean over a of min_b |a - b|. Quadratic scan; the testing reference.
double chamfer_forward_bruteforce(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

/// Uniform-grid accelerated variant. Exact: returns the same value as the
/// brute-force scan (the true nearest neighbor is always among the scanned
/// candidates and distances use the same expression).
double chamfer_forward(const std::vector<Vec3>& a, const std::vector<Vec3>& b, bool parallel);

// ---------------------------------------------------------------------------
// Axis direction scan
// ---------------------------------------------------------------------------

/// Minimizes u^T A u over `count` Fibonacci-sphere directions; ties resolve
/// to the lowest index. Returns the best direction.
Vec3 axis_grid_scan(const Mat3& a, int count, bool parallel);

}  // namespace artkin
