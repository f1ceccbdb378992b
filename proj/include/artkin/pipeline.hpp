#pragma once

#include <functional>
#include <optional>
#include <string>

#include "artkin/dataset.hpp"
#include "artkin/joint_estimator.hpp"
#include "artkin/metrics.hpp"
#include "artkin/part_solver.hpp"
#include "artkin/refinement.hpp"

namespace artkin {

/// One configuration for every stage; the global seed feeds the sub-configs.
struct PipelineConfig {
  FilterConfig filter;
  SolverConfig solver;
  JointEstimatorConfig joint;
  RefineConfig refine;
  std::uint64_t seed = 0;
};

/// Strict JSON parse: unknown keys anywhere are rejected by name.
PipelineConfig config_from_json_text(const std::string& text);
PipelineConfig config_from_file(const std::string& path);

struct PipelineResult {
  TrackSet filtered;
  SegmentationResult segmentation;
  JointEstimate estimate;
  RefineResult refined;
  std::optional<MetricsReport> report;
};

/// Callbacks fired as each stage completes, so artifacts written before a
/// failure stay intact.
struct StageSink {
  std::function<void(const TrackSet&, const SegmentationResult&)> on_segmentation;
  std::function<void(const JointEstimate&)> on_estimate;
  std::function<void(const JointEstimate&, const RefineResult&)> on_refine;
  std::function<void(const MetricsReport&)> on_report;
};

/// filter -> segment -> estimate joint -> refine -> (evaluate when ground
/// truth is present). Stage failures surface with the stage name attached.
/// `external_poses` bypasses the internal part-pose estimation.
PipelineResult run_pipeline(const SceneDataset& scene, const PipelineConfig& cfg,
                            const std::string& scene_id,
                            const std::optional<std::pair<PoseSequence, PoseSequence>>&
                                external_poses = std::nullopt,
                            const StageSink* sink = nullptr);

// --- stage artifact files -------------------------------------------------

void write_segmentation(const SegmentationResult& seg, int frame_count, const std::string& path);
SegmentationResult read_segmentation(const std::string& path);

/// Joint file: kind/axis/pivot/states plus reference part, inlier mask and
/// the classifier features; refinement reports append under "refinement".
void write_joint(const JointEstimate& est, const std::string& path,
                 const RefineReport* refinement = nullptr, const JointModel* refined = nullptr);

/// Calibrated part pose sequences (N x 2 row-major 3x4 records; null marks
/// an invalid frame).
void write_poses(const Calibration& cal, const std::string& path);
std::pair<PoseSequence, PoseSequence> read_poses(const std::string& path);

/// Rebuilds the pieces of a JointEstimate needed for refinement and
/// evaluation from the stage artifact files.
JointEstimate read_joint_estimate(const std::string& joint_path, const std::string& poses_path);

void write_report(const MetricsReport& report, const std::string& json_path,
                  const std::string& csv_path);

}  // namespace artkin
