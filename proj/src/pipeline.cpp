#include "artkin/pipeline.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <set>

#include "artkin/rng.hpp"
#include "artkin/serialize.hpp"

namespace artkin {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::string& section,
                    const std::set<std::string>& known) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key()))
      throw DataError("config: unknown key '" + section + it.key() + "'");
  }
}

template <typename T>
void opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

PipelineConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  PipelineConfig cfg;
  reject_unknown(j, "", {"seed", "filter", "solver", "joint", "refine"});
  opt(j, "seed", cfg.seed);

  if (j.contains("filter")) {
    const auto& f = j.at("filter");
    reject_unknown(f, "filter.", {"tau_c", "tau_v"});
    opt(f, "tau_c", cfg.filter.tau_c);
    opt(f, "tau_v", cfg.filter.tau_v);
  }
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    reject_unknown(s, "solver.",
                   {"window_size", "iters_per_pair", "lr_transform", "lr_weights", "lambda_main",
                    "lambda_smooth", "lambda_entropy", "lambda_init", "epsilon", "neighbor_k",
                    "neighbor_radius", "ransac_iters", "ransac_inlier_threshold", "em_rounds",
                    "huber_delta"});
    opt(s, "window_size", cfg.solver.window_size);
    opt(s, "iters_per_pair", cfg.solver.iters_per_pair);
    opt(s, "lr_transform", cfg.solver.lr_transform);
    opt(s, "lr_weights", cfg.solver.lr_weights);
    opt(s, "lambda_main", cfg.solver.lambda_main);
    opt(s, "lambda_smooth", cfg.solver.lambda_smooth);
    opt(s, "lambda_entropy", cfg.solver.lambda_entropy);
    opt(s, "lambda_init", cfg.solver.lambda_init);
    opt(s, "epsilon", cfg.solver.epsilon);
    opt(s, "neighbor_k", cfg.solver.neighbor_k);
    opt(s, "neighbor_radius", cfg.solver.neighbor_radius);
    opt(s, "ransac_iters", cfg.solver.ransac_iters);
    opt(s, "ransac_inlier_threshold", cfg.solver.ransac_inlier_threshold);
    opt(s, "em_rounds", cfg.solver.em_rounds);
    opt(s, "huber_delta", cfg.solver.huber_delta);
  }
  if (j.contains("joint")) {
    const auto& jj = j.at("joint");
    reject_unknown(jj, "joint.", {"theta_th_deg", "rho_th"});
    opt(jj, "theta_th_deg", cfg.joint.theta_th_deg);
    opt(jj, "rho_th", cfg.joint.rho_th);
  }
  if (j.contains("refine")) {
    const auto& r = j.at("refine");
    reject_unknown(r, "refine.", {"iters", "lr", "huber_delta", "refine_reference_poses"});
    opt(r, "iters", cfg.refine.iters);
    opt(r, "lr", cfg.refine.lr);
    double delta = cfg.refine.loss.scale;
    opt(r, "huber_delta", delta);
    cfg.refine.loss = RobustLoss::huber(delta);
    opt(r, "refine_reference_poses", cfg.refine.refine_reference_poses);
  }

  if (cfg.solver.window_size < 2) throw DataError("config: solver.window_size must be >= 2");
  if (cfg.solver.iters_per_pair < 1) throw DataError("config: solver.iters_per_pair must be >= 1");
  if (!(cfg.solver.lr_transform > 0) || !(cfg.solver.lr_weights > 0) || !(cfg.refine.lr > 0))
    throw DataError("config: learning rates must be > 0");
  for (double l : {cfg.solver.lambda_main, cfg.solver.lambda_smooth, cfg.solver.lambda_entropy,
                   cfg.solver.lambda_init})
    if (l < 0) throw DataError("config: loss weights must be >= 0");
  if (cfg.filter.tau_c < 0 || cfg.filter.tau_c > 1)
    throw DataError("config: filter.tau_c must lie in [0,1]");
  if (!(cfg.filter.tau_v > 0)) throw DataError("config: filter.tau_v must be > 0");
  if (cfg.refine.iters < 1) throw DataError("config: refine.iters must be >= 1");

  cfg.solver.seed = cfg.seed;
  cfg.joint.seed = sub_seed(cfg.seed, 0x4a45u);
  cfg.joint.ransac_iters = cfg.solver.ransac_iters;
  cfg.joint.ransac_inlier_threshold = cfg.solver.ransac_inlier_threshold;
  return cfg;
}

PipelineConfig config_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return config_from_json_text(text);
}

namespace {

template <typename F>
auto staged(const char* stage, F&& fn) {
  try {
    return fn();
  } catch (const DataError& e) {
    throw DataError(std::string("[") + stage + "] " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(std::string("[") + stage + "] " + e.what());
  }
}

}  // namespace

PipelineResult run_pipeline(const SceneDataset& scene, const PipelineConfig& cfg,
                            const std::string& scene_id,
                            const std::optional<std::pair<PoseSequence, PoseSequence>>&
                                external_poses,
                            const StageSink* sink) {
  PipelineResult r;
  r.filtered = staged("filter", [&] { return filter_tracks(scene.tracks, cfg.filter); });

  SolverConfig solver = cfg.solver;
  solver.seed = cfg.seed;
  r.segmentation = staged("segment", [&] { return segment(r.filtered, solver); });
  if (sink && sink->on_segmentation) sink->on_segmentation(r.filtered, r.segmentation);

  JointEstimatorConfig jcfg = cfg.joint;
  r.estimate = staged("estimate-joint", [&] {
    if (external_poses)
      return estimate_joint_from_poses(external_poses->first, external_poses->second, jcfg);
    return estimate_joint(r.filtered, r.segmentation.masks, jcfg);
  });
  if (sink && sink->on_estimate) sink->on_estimate(r.estimate);

  r.refined = staged("refine", [&] {
    const int n_pts = r.filtered.point_count();
    std::vector<double> w_ref(n_pts);
    const int ref_label = r.estimate.calibration.reference_part;
    for (int p = 0; p < n_pts; ++p) {
      const double w1 = r.segmentation.weights[0][p];
      w_ref[p] = ref_label == 1 ? w1 : 1.0 - w1;
    }
    return refine(r.estimate.model, r.estimate.calibration.ref.poses,
                  r.estimate.calibration.ref.valid, r.filtered, w_ref, cfg.refine);
  });
  if (sink && sink->on_refine) sink->on_refine(r.estimate, r.refined);

  if (scene.ground_truth) {
    r.report = staged("eval", [&] {
      JointEstimate refined_est = r.estimate;
      refined_est.model = r.refined.model;
      refined_est.calibration.ref.poses = r.refined.ref_poses;
      return evaluate_scene(scene_id, scene, r.segmentation.masks, refined_est,
                            cfg.solver.parallel);
    });
    if (sink && sink->on_report) sink->on_report(*r.report);
  }
  return r;
}

// ---------------------------------------------------------------------------
// stage artifacts
// ---------------------------------------------------------------------------

namespace {

json load_json(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw DataError(std::string(what) + ": cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError(std::string(what) + ": " + path + ": " + e.what());
  }
  return j;
}

void dump_json(const json& j, const std::string& path, const char* what) {
  std::ofstream out(path);
  if (!out) throw DataError(std::string(what) + ": cannot write " + path);
  out << j.dump(1, '\t') << "\n";
}

}  // namespace

void write_segmentation(const SegmentationResult& seg, int frame_count, const std::string& path) {
  json j;
  j["frames"] = frame_count;
  json w = json::array(), m = json::array();
  for (const auto& frame : seg.weights) w.push_back(frame);
  for (const auto& frame : seg.masks) {
    json row = json::array();
    for (char b : frame) row.push_back(static_cast<bool>(b));
    m.push_back(std::move(row));
  }
  j["weights"] = std::move(w);
  j["masks"] = std::move(m);
  j["point_ids"] = seg.point_ids;
  dump_json(j, path, "segmentation");
}

SegmentationResult read_segmentation(const std::string& path) {
  const json j = load_json(path, "segmentation");
  SegmentationResult seg;
  const int n = j.at("frames").get<int>();
  const auto& w = j.at("weights");
  const auto& m = j.at("masks");
  if (static_cast<int>(w.size()) != n || static_cast<int>(m.size()) != n)
    throw DataError("segmentation: weights/masks must hold 'frames' rows");
  for (const auto& row : w) seg.weights.push_back(row.get<std::vector<double>>());
  for (const auto& row : m) {
    std::vector<char> out;
    for (const auto& b : row) out.push_back(b.get<bool>() ? 1 : 0);
    seg.masks.push_back(std::move(out));
  }
  seg.point_ids = j.at("point_ids").get<std::vector<int>>();
  return seg;
}

void write_joint(const JointEstimate& est, const std::string& path,
                 const RefineReport* refinement, const JointModel* refined) {
  const JointModel& model = refined ? *refined : est.model;
  json j = joint_to_json(model);
  j["reference_part"] = est.calibration.ref.part_index;
  json inl = json::array();
  for (char b : est.relative.inlier) inl.push_back(static_cast<bool>(b));
  j["inlier_mask"] = std::move(inl);
  j["features"] = {{"delta_theta_deg", est.features.delta_theta_deg},
                   {"rho", est.features.rho}};
  if (refinement) {
    j["refinement"] = {{"initial_objective", refinement->initial_objective},
                       {"final_objective", refinement->final_objective},
                       {"iterations", refinement->trace.size()}};
  }
  dump_json(j, path, "joint");
}

void write_poses(const Calibration& cal, const std::string& path) {
  const int n = static_cast<int>(cal.ref.poses.size());
  const PoseSequence* by_part[2];
  by_part[cal.ref.part_index] = &cal.ref;
  by_part[cal.rel.part_index] = &cal.rel;
  json j = json::array();
  for (int i = 0; i < n; ++i) {
    json rec = json::array();
    for (int k = 0; k < 2; ++k) {
      if (by_part[k]->valid[i])
        rec.push_back(pose_to_json(by_part[k]->poses[i]));
      else
        rec.push_back(nullptr);
    }
    j.push_back(std::move(rec));
  }
  dump_json(j, path, "poses");
}

std::pair<PoseSequence, PoseSequence> read_poses(const std::string& path) {
  const json j = load_json(path, "poses");
  if (!j.is_array() || j.empty()) throw DataError("poses: expected a non-empty array");
  std::pair<PoseSequence, PoseSequence> out;
  out.first.part_index = 0;
  out.second.part_index = 1;
  for (const auto& rec : j) {
    if (!rec.is_array() || rec.size() != 2)
      throw DataError("poses: records must hold 2 parts");
    PoseSequence* seqs[2] = {&out.first, &out.second};
    for (int k = 0; k < 2; ++k) {
      if (rec[k].is_null()) {
        seqs[k]->poses.push_back(RigidTransform::identity());
        seqs[k]->valid.push_back(0);
      } else {
        seqs[k]->poses.push_back(pose_from_json(rec[k], "poses"));
        seqs[k]->valid.push_back(1);
      }
    }
  }
  return out;
}

JointEstimate read_joint_estimate(const std::string& joint_path, const std::string& poses_path) {
  const json j = load_json(joint_path, "joint");
  JointEstimate est;
  est.model = joint_from_json(j);
  const int ref_part = j.at("reference_part").get<int>();
  if (ref_part != 0 && ref_part != 1) throw DataError("joint: reference_part must be 0 or 1");
  auto [p0, p1] = read_poses(poses_path);
  est.calibration.reference_part = ref_part;
  est.calibration.ref = ref_part == 0 ? p0 : p1;
  est.calibration.rel = ref_part == 0 ? p1 : p0;
  est.calibration.ref.part_index = ref_part;
  est.calibration.rel.part_index = 1 - ref_part;
  est.relative.t.assign(est.model.states.size(), RigidTransform::identity());
  est.relative.inlier.assign(est.model.states.size(), 1);
  if (j.contains("inlier_mask")) {
    const auto mask = j.at("inlier_mask").get<std::vector<bool>>();
    if (mask.size() != est.model.states.size())
      throw DataError("joint: inlier_mask length must match states");
    for (std::size_t i = 0; i < mask.size(); ++i) est.relative.inlier[i] = mask[i] ? 1 : 0;
  }
  if (j.contains("features")) {
    est.features.delta_theta_deg = j.at("features").at("delta_theta_deg").get<double>();
    est.features.rho = j.at("features").at("rho").get<double>();
  }
  return est;
}

void write_report(const MetricsReport& r, const std::string& json_path,
                  const std::string& csv_path) {
  auto opt_or_null = [](const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
  };
  json j;
  j["scene_id"] = r.scene_id;
  j["kind"] = r.kind;
  j["kind_match"] = r.kind_match;
  j["axis_deg"] = r.axis_deg;
  j["position_cm"] = opt_or_null(r.position_cm);
  j["state_mae"] = opt_or_null(r.state_mae);
  j["state_unit"] = r.state_unit;
  j["cd_w"] = opt_or_null(r.cd_w);
  j["cd_m"] = opt_or_null(r.cd_m);
  j["cd_s"] = opt_or_null(r.cd_s);
  j["miou"] = opt_or_null(r.miou);
  j["per_frame_state_error"] = r.per_frame_state_error;
  if (!json_path.empty()) dump_json(j, json_path, "report");
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw DataError("report: cannot write " + csv_path);
    out << metrics_csv_header() << "\n" << metrics_csv_row(r) << "\n";
  }
}

}  // namespace artkin
