// artkin: recover the rigid-part split and kinematic joint of a free-moving
// two-part articulated object from dense 3D point trajectories.

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "artkin/pipeline.hpp"
#include "artkin/synth.hpp"

namespace fs = std::filesystem;
using namespace artkin;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

PipelineConfig load_config(const std::string& path) {
  if (!path.empty()) return config_from_file(path);
  if (const char* env = std::getenv("ARTKIN_CONFIG")) {
    if (env[0] != '\0') return config_from_file(env);
  }
  return PipelineConfig{};
}

TrackSet filtered_tracks(const SceneDataset& scene, const PipelineConfig& cfg) {
  return filter_tracks(scene.tracks, cfg.filter);
}

std::vector<double> reference_weights(const SegmentationResult& seg, int reference_part) {
  std::vector<double> w(seg.weights.at(0).size());
  for (std::size_t p = 0; p < w.size(); ++p) {
    const double w1 = seg.weights[0][p];
    w[p] = reference_part == 1 ? w1 : 1.0 - w1;
  }
  return w;
}

struct BatchRow {
  std::string scene;
  std::optional<MetricsReport> report;
  std::string error;
};

void append_aggregate(std::ostream& out, const std::vector<BatchRow>& rows) {
  // mean and sample std per numeric column, over rows that carry a value
  const int n_cols = 7;
  std::vector<std::vector<double>> cols(n_cols);
  for (const auto& row : rows) {
    if (!row.report) continue;
    const MetricsReport& r = *row.report;
    const std::optional<double> vals[n_cols] = {r.axis_deg, r.position_cm, r.state_mae,
                                                r.cd_w,     r.cd_m,        r.cd_s,
                                                r.miou};
    for (int c = 0; c < n_cols; ++c)
      if (vals[c]) cols[c].push_back(*vals[c]);
  }
  auto stat_row = [&](const char* name, bool want_std) {
    out << name << ",";
    for (int c = 0; c < n_cols; ++c) {
      out << ",";
      if (cols[c].empty()) continue;
      double mean = 0;
      for (double v : cols[c]) mean += v;
      mean /= static_cast<double>(cols[c].size());
      if (!want_std) {
        out << mean;
      } else if (cols[c].size() >= 2) {
        double ss = 0;
        for (double v : cols[c]) ss += (v - mean) * (v - mean);
        out << std::sqrt(ss / (static_cast<double>(cols[c].size()) - 1.0));
      } else {
        out << 0.0;
      }
    }
    out << "\n";
  };
  stat_row("mean", false);
  stat_row("std", true);
}

int run_batch_eval(const std::string& dir, int jobs, const std::string& csv_path) {
  std::vector<std::string> scenes;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && fs::exists(entry.path() / "scene.json"))
      scenes.push_back(entry.path().filename().string());
  }
  std::sort(scenes.begin(), scenes.end());
  if (scenes.empty()) throw DataError("eval: no scene directories under " + dir);

  std::vector<BatchRow> rows(scenes.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= scenes.size()) return;
      BatchRow& row = rows[i];
      row.scene = scenes[i];
      const fs::path base = fs::path(dir) / scenes[i];
      try {
        const SceneDataset scene = load_bundle((base / "scene.json").string());
        const SegmentationResult seg = read_segmentation((base / "segmentation.json").string());
        const fs::path joint = fs::exists(base / "joint_refined.json")
                                   ? base / "joint_refined.json"
                                   : base / "joint.json";
        const JointEstimate est =
            read_joint_estimate(joint.string(), (base / "poses.json").string());
        row.report = evaluate_scene(scenes[i], scene, seg.masks, est, false);
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  const int n_jobs = std::max(1, jobs);
  for (int t = 0; t < n_jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!csv_path.empty()) {
    file.open(csv_path);
    if (!file) throw DataError("eval: cannot write " + csv_path);
    out = &file;
  }
  *out << metrics_csv_header() << "\n";
  bool any_error = false;
  for (const auto& row : rows) {
    if (row.report) {
      *out << metrics_csv_row(*row.report) << "\n";
    } else {
      std::cerr << "eval: " << row.scene << ": " << row.error << "\n";
      any_error = true;
    }
  }
  append_aggregate(*out, rows);
  return any_error ? kExitData : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"artkin: articulated two-part joint recovery from point trajectories"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic trajectory bundle");
  std::string synth_preset, synth_spec, synth_out;
  std::uint64_t synth_seed = 0;
  bool synth_seed_set = false;
  synth->add_option("--preset", synth_preset, "scene template (see --help-presets)");
  synth->add_option("--spec", synth_spec, "scene spec JSON file");
  synth->add_option("--seed", synth_seed, "scene seed")->each([&](const std::string&) {
    synth_seed_set = true;
  });
  synth->add_option("-o,--out", synth_out, "output bundle path")->required();

  // segment
  auto* seg_cmd = app.add_subcommand("segment", "two-part soft segmentation of a bundle");
  std::string seg_bundle, seg_config, seg_out;
  seg_cmd->add_option("--bundle", seg_bundle)->required();
  seg_cmd->add_option("--config", seg_config, "pipeline config JSON");
  seg_cmd->add_option("-o,--out", seg_out)->required();

  // estimate-joint
  auto* est_cmd = app.add_subcommand("estimate-joint", "joint type/axis/state estimation");
  std::string est_bundle, est_seg, est_config, est_out, est_poses_in, est_poses_out;
  bool est_no_filter = false;
  est_cmd->add_option("--bundle", est_bundle)->required();
  est_cmd->add_option("--segmentation", est_seg)->required();
  est_cmd->add_option("--poses", est_poses_in, "external part poses (skips internal estimation)");
  est_cmd->add_option("--config", est_config);
  est_cmd->add_option("-o,--out", est_out)->required();
  est_cmd->add_option("--poses-out", est_poses_out, "calibrated pose output (default: poses.json next to --out)");
  est_cmd->add_flag("--no-noise-filter", est_no_filter, "skip the 2-sigma outlier filter");

  // refine
  auto* ref_cmd = app.add_subcommand("refine", "end-to-end refinement of a joint estimate");
  std::string ref_bundle, ref_seg, ref_joint, ref_poses, ref_config, ref_out;
  ref_cmd->add_option("--bundle", ref_bundle)->required();
  ref_cmd->add_option("--segmentation", ref_seg)->required();
  ref_cmd->add_option("--joint", ref_joint)->required();
  ref_cmd->add_option("--poses", ref_poses)->required();
  ref_cmd->add_option("--config", ref_config);
  ref_cmd->add_option("-o,--out", ref_out)->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "metrics against ground truth");
  std::string ev_bundle, ev_joint, ev_seg, ev_poses, ev_report, ev_csv, ev_batch;
  int ev_jobs = 1;
  eval_cmd->add_option("--bundle", ev_bundle);
  eval_cmd->add_option("--joint", ev_joint);
  eval_cmd->add_option("--segmentation", ev_seg);
  eval_cmd->add_option("--poses", ev_poses);
  eval_cmd->add_option("-o,--report", ev_report, "report JSON path");
  eval_cmd->add_option("--csv", ev_csv, "CSV output path");
  eval_cmd->add_option("--batch", ev_batch, "directory of scene subdirectories");
  eval_cmd->add_option("--jobs", ev_jobs, "parallel scenes in batch mode");

  // pipeline
  auto* pipe_cmd = app.add_subcommand("pipeline", "run every stage end to end");
  std::string p_bundle, p_config, p_outdir, p_poses;
  pipe_cmd->add_option("--bundle", p_bundle)->required();
  pipe_cmd->add_option("--config", p_config);
  pipe_cmd->add_option("--out-dir", p_outdir)->required();
  pipe_cmd->add_option("--poses", p_poses, "external part poses");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*synth) {
      if (synth_preset.empty() == synth_spec.empty())
        throw DataError("synth: exactly one of --preset or --spec is required");
      SceneSpec spec;
      try {
        spec = synth_preset.empty() ? scene_spec_from_json_file(synth_spec)
                                    : preset(synth_preset);
      } catch (const DataError& e) {
        if (!synth_preset.empty()) {
          std::cerr << e.what() << "\n";
          return kExitUsage;  // unknown preset is a usage problem
        }
        throw;
      }
      if (synth_seed_set) spec.seed = synth_seed;
      save_bundle(generate_scene(spec), synth_out);
      return 0;
    }

    if (*seg_cmd) {
      const PipelineConfig cfg = load_config(seg_config);
      const SceneDataset scene = load_bundle(seg_bundle);
      const TrackSet tracks = filtered_tracks(scene, cfg);
      SolverConfig solver = cfg.solver;
      solver.seed = cfg.seed;
      const SegmentationResult seg = segment(tracks, solver);
      write_segmentation(seg, tracks.frame_count, seg_out);
      return 0;
    }

    if (*est_cmd) {
      PipelineConfig cfg = load_config(est_config);
      cfg.joint.apply_outlier_filter = !est_no_filter;
      const SceneDataset scene = load_bundle(est_bundle);
      const TrackSet tracks = filtered_tracks(scene, cfg);
      const SegmentationResult seg = read_segmentation(est_seg);
      JointEstimate est;
      if (!est_poses_in.empty()) {
        auto [p0, p1] = read_poses(est_poses_in);
        est = estimate_joint_from_poses(p0, p1, cfg.joint);
      } else {
        est = estimate_joint(tracks, seg.masks, cfg.joint);
      }
      write_joint(est, est_out);
      const std::string poses_out =
          est_poses_out.empty() ? (fs::path(est_out).parent_path() / "poses.json").string()
                                : est_poses_out;
      write_poses(est.calibration, poses_out);
      return 0;
    }

    if (*ref_cmd) {
      const PipelineConfig cfg = load_config(ref_config);
      const SceneDataset scene = load_bundle(ref_bundle);
      const TrackSet tracks = filtered_tracks(scene, cfg);
      const SegmentationResult seg = read_segmentation(ref_seg);
      const JointEstimate est = read_joint_estimate(ref_joint, ref_poses);
      const auto w_ref = reference_weights(seg, est.calibration.reference_part);
      std::vector<char> frame_valid(est.calibration.ref.valid.begin(),
                                    est.calibration.ref.valid.end());
      const RefineResult result = refine(est.model, est.calibration.ref.poses, frame_valid,
                                         tracks, w_ref, cfg.refine);
      write_joint(est, ref_out, &result.report, &result.model);
      return 0;
    }

    if (*eval_cmd) {
      if (!ev_batch.empty()) return run_batch_eval(ev_batch, ev_jobs, ev_csv);
      if (ev_bundle.empty() || ev_joint.empty() || ev_seg.empty() || ev_poses.empty())
        throw DataError("eval: --bundle, --joint, --segmentation and --poses are required");
      const SceneDataset scene = load_bundle(ev_bundle);
      const SegmentationResult seg = read_segmentation(ev_seg);
      const JointEstimate est = read_joint_estimate(ev_joint, ev_poses);
      const MetricsReport report =
          evaluate_scene(fs::path(ev_bundle).stem().string(), scene, seg.masks, est, true);
      write_report(report, ev_report, ev_csv);
      if (ev_report.empty() && ev_csv.empty())
        std::cout << metrics_csv_header() << "\n" << metrics_csv_row(report) << "\n";
      return 0;
    }

    if (*pipe_cmd) {
      const PipelineConfig cfg = load_config(p_config);
      const SceneDataset scene = load_bundle(p_bundle);
      fs::create_directories(p_outdir);
      const fs::path out(p_outdir);

      std::optional<std::pair<PoseSequence, PoseSequence>> external;
      if (!p_poses.empty()) external = read_poses(p_poses);

      StageSink sink;
      sink.on_segmentation = [&](const TrackSet& tracks, const SegmentationResult& seg) {
        write_segmentation(seg, tracks.frame_count, (out / "segmentation.json").string());
      };
      sink.on_estimate = [&](const JointEstimate& est) {
        write_joint(est, (out / "joint.json").string());
        write_poses(est.calibration, (out / "poses.json").string());
      };
      sink.on_refine = [&](const JointEstimate& est, const RefineResult& refined) {
        write_joint(est, (out / "joint_refined.json").string(), &refined.report,
                    &refined.model);
      };
      sink.on_report = [&](const MetricsReport& report) {
        write_report(report, (out / "report.json").string(), (out / "report.csv").string());
      };
      run_pipeline(scene, cfg, fs::path(p_bundle).stem().string(), external, &sink);
      return 0;
    }
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
