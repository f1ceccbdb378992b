#include "artkin/kernels.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>

#include "artkin/errors.hpp"

namespace artkin {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

constexpr double kBceClamp = 1e-7;

}  // namespace

PairLossBreakdown pair_loss(const Vec3* x0, const Vec3* xt, const unsigned char* valid_pair,
                            int point_count, const RigidTransform& t0, const RigidTransform& t1,
                            const double* logits, const double* w_init, GraphView graph,
                            const PairLossConfig& cfg, double* grad_logits, double* grad_t0,
                            double* grad_t1, bool parallel) {
  const int n = point_count;
  const bool with_grads = grad_logits != nullptr;
  const RobustLoss rho = RobustLoss::huber(cfg.huber_delta);

  std::vector<double> w(n);
  for (int p = 0; p < n; ++p) w[p] = sigmoid(logits[p]);

  std::vector<double> main_t(n, 0.0), ent_t(n, 0.0), smooth_t(n, 0.0), init_t(n, 0.0);
  std::vector<double> gt(with_grads ? 12 * n : 0, 0.0);

#pragma omp parallel for schedule(static) if (parallel)
  for (int p = 0; p < n; ++p) {
    const double wp = w[p];
    const double sig_d = wp * (1.0 - wp);
    double gl = 0.0;

    if (valid_pair[p]) {
      const Vec3 v0 = t0.rotation * x0[p];
      const Vec3 v1 = t1.rotation * x0[p];
      const Vec3 e0 = v0 + t0.translation - xt[p];
      const Vec3 e1 = v1 + t1.translation - xt[p];
      const double denom = (x0[p] - xt[p]).norm() + cfg.epsilon;
      const double r0 = e0.norm() / denom;
      const double r1 = e1.norm() / denom;
      const double l0 = robust_loss(r0, rho);
      const double l1 = robust_loss(r1, rho);
      main_t[p] = (1.0 - wp) * l0 + wp * l1;
      if (with_grads) {
        gl += cfg.lambda_main * (l1 - l0) * sig_d;
        const double c0 = r0 <= cfg.huber_delta
                              ? cfg.lambda_main * (1.0 - wp) / (denom * denom)
                              : cfg.lambda_main * (1.0 - wp) * cfg.huber_delta / (denom * e0.norm());
        const double c1 = r1 <= cfg.huber_delta
                              ? cfg.lambda_main * wp / (denom * denom)
                              : cfg.lambda_main * wp * cfg.huber_delta / (denom * e1.norm());
        const Vec3 gw0 = c0 * v0.cross(e0);
        const Vec3 gw1 = c1 * v1.cross(e1);
        double* slot = &gt[12 * p];
        slot[0] = gw0.x(); slot[1] = gw0.y(); slot[2] = gw0.z();
        slot[3] = c0 * e0.x(); slot[4] = c0 * e0.y(); slot[5] = c0 * e0.z();
        slot[6] = gw1.x(); slot[7] = gw1.y(); slot[8] = gw1.z();
        slot[9] = c1 * e1.x(); slot[10] = c1 * e1.y(); slot[11] = c1 * e1.z();
      }
    }

    ent_t[p] = -(xlogx(wp) + xlogx(1.0 - wp));
    if (with_grads) gl += cfg.lambda_entropy * (-logits[p] * sig_d);

    double sm = 0.0, sm_sign = 0.0;
    for (int k = graph.offsets[p]; k < graph.offsets[p + 1]; ++k) {
      const double diff = wp - w[graph.neighbors[k]];
      sm += graph.alpha[k] * std::abs(diff);
      if (diff > 0)
        sm_sign += graph.alpha[k];
      else if (diff < 0)
        sm_sign -= graph.alpha[k];
    }
    smooth_t[p] = sm;
    if (with_grads) gl += cfg.lambda_smooth * 2.0 * sm_sign * sig_d;

    const double wc = std::min(1.0 - kBceClamp, std::max(kBceClamp, wp));
    init_t[p] = -(w_init[p] * std::log(wc) + (1.0 - w_init[p]) * std::log(1.0 - wc));
    if (with_grads && wp > kBceClamp && wp < 1.0 - kBceClamp)
      gl += cfg.lambda_init * (wp - w_init[p]);

    if (with_grads) grad_logits[p] = gl;
  }

  PairLossBreakdown out;
  for (int p = 0; p < n; ++p) {
    out.main += main_t[p];
    out.ent += ent_t[p];
    out.smooth += smooth_t[p];
    out.init += init_t[p];
  }
  if (with_grads) {
    for (int j = 0; j < 6; ++j) grad_t0[j] = grad_t1[j] = 0.0;
    for (int p = 0; p < n; ++p) {
      const double* slot = &gt[12 * p];
      for (int j = 0; j < 6; ++j) {
        grad_t0[j] += slot[j];
        grad_t1[j] += slot[6 + j];
      }
    }
  }
  out.total = cfg.lambda_main * out.main + cfg.lambda_smooth * out.smooth +
              cfg.lambda_entropy * out.ent + cfg.lambda_init * out.init;

  if (std::isnan(out.main)) throw NumericError("window_loss: NaN in main term");
  if (std::isnan(out.ent)) throw NumericError("window_loss: NaN in entropy term");
  if (std::isnan(out.smooth)) throw NumericError("window_loss: NaN in smoothness term");
  if (std::isnan(out.init)) throw NumericError("window_loss: NaN in init term");
  return out;
}

// ---------------------------------------------------------------------------
// refinement objective
// ---------------------------------------------------------------------------

namespace {

struct FrameSlot {
  double obj = 0;
  Vec3 gu = Vec3::Zero();
  Vec3 go = Vec3::Zero();
  double gs = 0;
  Eigen::Matrix<double, 6, 1> gpose = Eigen::Matrix<double, 6, 1>::Zero();
};

// d(huber)/de as a vector: e for |e| <= delta, delta * e/|e| beyond.
inline Vec3 huber_grad_vec(const Vec3& e, double delta) {
  const double r = e.norm();
  if (r <= delta) return e;
  return (delta / r) * e;
}

void refine_frame(const RefineProblemView& view, const JointModel& model, int i,
                  bool with_grads, bool with_pose_grads, FrameSlot& slot) {
  if (!view.frame_valid[i]) return;
  const RigidTransform& ep = view.ref_poses[i];
  const double s = model.states[i];
  const Vec3 u = model.axis.direction;
  const bool revolute = model.kind == JointKind::kRevolute;
  const double delta = view.loss.scale;

  Mat3 r_joint = Mat3::Identity();
  Mat3 dr_du[3];
  if (revolute) {
    r_joint = axis_angle_rotation(model.axis, s);
    if (with_grads) {
      const Mat3 k = skew(u);
      const double sn = std::sin(s), omc = 1.0 - std::cos(s);
      for (int j = 0; j < 3; ++j) {
        const Mat3 sj = skew(Vec3::Unit(j));
        dr_du[j] = sn * sj + omc * (sj * k + k * sj);
      }
    }
  }

  for (int p = 0; p < view.point_count; ++p) {
    if (!view.obs_valid[i * view.point_count + p]) continue;
    const Vec3& y = view.canonical[p];
    const Vec3& x = view.obs[i * view.point_count + p];
    const double wr = view.w_ref[p];

    const Vec3 e0 = ep.apply(y) - x;
    Vec3 jy;  // joint-moved canonical point
    if (revolute)
      jy = r_joint * (y - model.pivot) + model.pivot;
    else
      jy = y + s * u;
    const Vec3 e1 = ep.apply(jy) - x;

    slot.obj += wr * robust_loss(e0.norm(), view.loss) +
                (1.0 - wr) * robust_loss(e1.norm(), view.loss);
    if (!with_grads) continue;

    const Vec3 g0 = wr * huber_grad_vec(e0, delta);
    const Vec3 g1 = (1.0 - wr) * huber_grad_vec(e1, delta);
    const Vec3 h = ep.rotation.transpose() * g1;

    if (revolute) {
      const Vec3 yo = y - model.pivot;
      for (int j = 0; j < 3; ++j) slot.gu(j) += (dr_du[j] * yo).dot(h);
      slot.go += (Mat3::Identity() - r_joint).transpose() * h;
      slot.gs += (u.cross(r_joint * yo)).dot(h);
    } else {
      slot.gu += s * h;
      slot.gs += u.dot(h);
    }

    if (with_pose_grads) {
      const Vec3 gsum = g0 + g1;
      const Vec3 gw = (ep.rotation * y).cross(g0) + (ep.rotation * jy).cross(g1);
      for (int j = 0; j < 3; ++j) {
        slot.gpose(j) += gw(j);
        slot.gpose(3 + j) += gsum(j);
      }
    }
  }
}

}  // namespace

double refine_objective(const RefineProblemView& view, const JointModel& model, bool parallel) {
  std::vector<double> obj(view.frame_count, 0.0);
#pragma omp parallel for schedule(static) if (parallel)
  for (int i = 0; i < view.frame_count; ++i) {
    FrameSlot slot;
    refine_frame(view, model, i, false, false, slot);
    obj[i] = slot.obj;
  }
  double total = 0;
  for (int i = 0; i < view.frame_count; ++i) total += obj[i];
  if (std::isnan(total)) throw NumericError("refine: NaN objective");
  return total;
}

RefineGradients refine_objective_grad(const RefineProblemView& view, const JointModel& model,
                                      bool with_pose_grads, bool parallel) {
  std::vector<FrameSlot> slots(view.frame_count);
#pragma omp parallel for schedule(static) if (parallel)
  for (int i = 0; i < view.frame_count; ++i)
    refine_frame(view, model, i, true, with_pose_grads, slots[i]);

  RefineGradients out;
  out.g_states.assign(view.frame_count, 0.0);
  if (with_pose_grads)
    out.g_poses.assign(view.frame_count, Eigen::Matrix<double, 6, 1>::Zero());
  for (int i = 0; i < view.frame_count; ++i) {
    out.objective += slots[i].obj;
    out.g_axis += slots[i].gu;
    out.g_pivot += slots[i].go;
    out.g_states[i] = slots[i].gs;
    if (with_pose_grads) out.g_poses[i] = slots[i].gpose;
  }
  if (std::isnan(out.objective)) throw NumericError("refine: NaN objective");
  return out;
}

// ---------------------------------------------------------------------------
// chamfer
// ---------------------------------------------------------------------------

namespace {

inline double sq_dist(const Vec3& a, const Vec3& b) {
  const double dx = a.x() - b.x(), dy = a.y() - b.y(), dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

struct CellGrid {
  double cell = 1.0;
  Vec3 origin = Vec3::Zero();
  int lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};  // occupied cell coordinate range
  std::unordered_map<std::uint64_t, std::vector<int>> buckets;

  static std::uint64_t key(int ix, int iy, int iz) {
    const std::uint64_t off = 1u << 20;
    return ((static_cast<std::uint64_t>(ix) + off) << 42) |
           ((static_cast<std::uint64_t>(iy) + off) << 21) |
           (static_cast<std::uint64_t>(iz) + off);
  }

  void build(const std::vector<Vec3>& b) {
    Vec3 bmin = b[0], bmax = b[0];
    for (const auto& p : b) {
      bmin = bmin.cwiseMin(p);
      bmax = bmax.cwiseMax(p);
    }
    origin = bmin;
    const double diag = (bmax - bmin).norm();
    cell = std::max(diag / std::cbrt(static_cast<double>(b.size())), 1e-12);
    for (int d = 0; d < 3; ++d) {
      lo[d] = 0;
      hi[d] = static_cast<int>(std::floor((bmax(d) - origin(d)) / cell));
    }
    for (int i = 0; i < static_cast<int>(b.size()); ++i) {
      int c[3];
      coords(b[i], c);
      buckets[key(c[0], c[1], c[2])].push_back(i);
    }
  }

  void coords(const Vec3& p, int c[3]) const {
    for (int d = 0; d < 3; ++d) c[d] = static_cast<int>(std::floor((p(d) - origin(d)) / cell));
  }
};

double nearest_sq(const CellGrid& grid, const std::vector<Vec3>& b, const Vec3& a) {
  int ca[3];
  grid.coords(a, ca);
  double best = std::numeric_limits<double>::infinity();
  int max_shell = 1;
  for (int d = 0; d < 3; ++d)
    max_shell = std::max(max_shell,
                         std::max(std::abs(ca[d] - grid.lo[d]), std::abs(grid.hi[d] - ca[d])) + 1);
  for (int r = 0; r <= max_shell; ++r) {
    for (int dx = -r; dx <= r; ++dx) {
      for (int dy = -r; dy <= r; ++dy) {
        for (int dz = -r; dz <= r; ++dz) {
          if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != r) continue;
          const auto it = grid.buckets.find(CellGrid::key(ca[0] + dx, ca[1] + dy, ca[2] + dz));
          if (it == grid.buckets.end()) continue;
          for (int i : it->second) best = std::min(best, sq_dist(a, b[i]));
        }
      }
    }
    // Cells in shells beyond r are at least r * cell away from a point in
    // its own cell, so the current best cannot be beaten.
    const double bound = grid.cell * r;
    if (best <= bound * bound) break;
  }
  return best;
}

}  // namespace

double chamfer_forward_bruteforce(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.empty() || b.empty()) throw DataError("chamfer: empty point set");
  double sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : b) best = std::min(best, sq_dist(a[i], q));
    sum += std::sqrt(best);
  }
  return sum / static_cast<double>(a.size());
}

double chamfer_forward(const std::vector<Vec3>& a, const std::vector<Vec3>& b, bool parallel) {
  if (a.empty() || b.empty()) throw DataError("chamfer: empty point set");
  CellGrid grid;
  grid.build(b);
  const int n = static_cast<int>(a.size());
  std::vector<double> dist(n);
#pragma omp parallel for schedule(static) if (parallel)
  for (int i = 0; i < n; ++i) dist[i] = std::sqrt(nearest_sq(grid, b, a[i]));
  double sum = 0;
  for (int i = 0; i < n; ++i) sum += dist[i];
  return sum / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// axis scan
// ---------------------------------------------------------------------------

Vec3 axis_grid_scan(const Mat3& a, int count, bool parallel) {
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  std::vector<double> value(count);
  std::vector<Vec3> dir(count);
#pragma omp parallel for schedule(static) if (parallel)
  for (int k = 0; k < count; ++k) {
    const double z = 1.0 - 2.0 * (k + 0.5) / count;
    const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * k;
    const Vec3 u(rad * std::cos(phi), rad * std::sin(phi), z);
    dir[k] = u;
    value[k] = u.dot(a * u);
  }
  int best = 0;
  for (int k = 1; k < count; ++k)
    if (value[k] < value[best]) best = k;
  return dir[best];
}

}  // namespace artkin
