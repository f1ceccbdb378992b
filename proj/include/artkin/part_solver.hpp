#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "artkin/kernels.hpp"
#include "artkin/registration.hpp"
#include "artkin/trajectory.hpp"

namespace artkin {

struct SolverConfig {
  int window_size = 8;
  int iters_per_pair = 100;
  double lr_transform = 1e-4;
  double lr_weights = 1e-2;
  double lambda_main = 200.0;
  double lambda_smooth = 10.0;
  double lambda_entropy = 0.01;
  double lambda_init = 5.0;
  double epsilon = 1e-6;  // meters
  int neighbor_k = 16;
  double neighbor_radius = 0.3;  // cosine distance
  int ransac_iters = 200;
  double ransac_inlier_threshold = 0.02;  // meters
  int em_rounds = 5;
  double huber_delta = 1.0;
  std::uint64_t seed = 0;
  bool parallel = true;

  RegistrationConfig registration(std::uint64_t sub) const {
    return RegistrationConfig{ransac_iters, ransac_inlier_threshold, 10, sub};
  }
  PairLossConfig loss() const {
    return PairLossConfig{lambda_main, lambda_smooth, lambda_entropy,
                          lambda_init, epsilon, huber_delta};
  }
};

/// Feature-space neighbor graph in CSR form; symmetric with alpha_pq = alpha_qp.
struct NeighborGraph {
  std::vector<int> offsets;  // point_count + 1
  std::vector<int> neighbors;
  std::vector<double> alpha;

  GraphView view() const { return {offsets.data(), neighbors.data(), alpha.data()}; }
  bool symmetric() const;
};

struct InitWeights {
  std::vector<double> w0;            // per point, 0.05 / 0.95 (or 0.5 when degenerate)
  bool degenerate_features = false;  // all features identical
};

/// Two-cluster split of the per-point features (2-means on L2-normalized
/// features, farthest-point seeding from the seed). The cluster containing
/// the first point becomes part 1 (w0 = 0.95).
InitWeights init_weights_from_features(const TrackSet& tracks, std::uint64_t seed);

NeighborGraph build_neighbor_graph(const TrackSet& tracks, const SolverConfig& cfg);

/// Robust per-class registration between two frames given a binary labeling.
std::pair<RigidTransform, RigidTransform> init_pair_transforms(
    const std::vector<Vec3>& x0, const std::vector<Vec3>& xt, const std::vector<int>& labels,
    const RegistrationConfig& cfg);

struct WindowLossBreakdown {
  double main = 0, ent = 0, smooth = 0, init = 0, total = 0;
};

/// Loss of one anchored pair (frame 0 of the window vs frame t), evaluated on
/// explicit data. Wrapper over the kernel for tests and diagnostics.
WindowLossBreakdown window_loss(const std::vector<Vec3>& x0, const std::vector<Vec3>& xt,
                                const std::vector<char>& valid_pair, const RigidTransform& t0,
                                const RigidTransform& t1, const std::vector<double>& w_t,
                                const std::vector<double>& w_init, const NeighborGraph& graph,
                                const SolverConfig& cfg);

struct WindowResult {
  int start = 0;   // first global frame of the window
  int length = 0;  // number of frames
  std::vector<RigidTransform> t0, t1;           // per pair (0, i), i in [1, length)
  std::vector<std::vector<double>> weights;     // [length][P] sigmoid values
  std::vector<std::vector<double>> loss_trace;  // per pair; front() >= back()
  bool single_part = false;
};

/// Optimizes the anchored pairs of one window: robust transform
/// initialization (RANSAC + Tukey + EM), then adaptive-moment gradient
/// descent on the pair loss with transforms re-projected to SE(3) each step.
/// Returns the best iterate, so the final total never exceeds the initial.
WindowResult solve_window(const TrackSet& tracks, int start, int length,
                          const std::vector<double>& w0, const NeighborGraph& graph,
                          const SolverConfig& cfg);

/// Flips `candidate` (w -> 1-w) when the flipped version agrees better with
/// `reference` on the shared points. Returns true when a flip was applied.
bool align_part_identity(const std::vector<double>& reference, std::vector<double>& candidate,
                         const std::vector<int>& shared);

/// Seed weights for the window starting at the boundary frame of `prev`:
/// points observed in the previous window carry their boundary weight,
/// unseen points are filled by a feature-similarity weighted average.
std::vector<double> propagate_weights(const WindowResult& prev, const TrackSet& tracks,
                                      int next_start, int next_length);

struct SegmentationResult {
  std::vector<std::vector<double>> weights;  // [N][P]
  std::vector<std::vector<char>> masks;      // [N][P], w >= 0.5 -> part 1
  std::vector<int> point_ids;
  bool degenerate_features = false;
  std::vector<int> single_part_windows;  // window start frames
};

/// Full sliding-window segmentation with stride window_size - 1 and weight
/// propagation across the shared boundary frames.
SegmentationResult segment(const TrackSet& tracks, const SolverConfig& cfg);

}  // namespace artkin
