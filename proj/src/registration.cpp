#include "artkin/registration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "artkin/rng.hpp"

namespace artkin {

namespace {

double tukey_c(const RegistrationConfig& cfg) { return 3.0 * cfg.inlier_threshold; }

bool collinear(const std::vector<Vec3>& x, const std::vector<double>* w) {
  Vec3 mean = Vec3::Zero();
  double wsum = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double wi = w ? (*w)[i] : 1.0;
    mean += wi * x[i];
    wsum += wi;
  }
  if (wsum <= 0) return true;
  mean /= wsum;
  Mat3 cov = Mat3::Zero();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double wi = w ? (*w)[i] : 1.0;
    const Vec3 d = x[i] - mean;
    cov += wi * d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov / wsum);
  const Vec3 ev = eig.eigenvalues();  // ascending
  return ev(1) <= 1e-16 * std::max(1.0, ev(2));
}

RigidTransform kabsch(const std::vector<Vec3>& x, const std::vector<Vec3>& y,
                      const std::vector<double>* w) {
  Vec3 cx = Vec3::Zero(), cy = Vec3::Zero();
  double wsum = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double wi = w ? (*w)[i] : 1.0;
    cx += wi * x[i];
    cy += wi * y[i];
    wsum += wi;
  }
  cx /= wsum;
  cy /= wsum;
  Mat3 h = Mat3::Zero();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double wi = w ? (*w)[i] : 1.0;
    h += wi * (x[i] - cx) * (y[i] - cy).transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU(), v = svd.matrixV();
  Vec3 d(1.0, 1.0, (v * u.transpose()).determinant() < 0 ? -1.0 : 1.0);
  const Mat3 r = v * d.asDiagonal() * u.transpose();
  return {r, cy - r * cx};
}

}  // namespace

RigidTransform fit_rigid(const std::vector<Vec3>& x, const std::vector<Vec3>& y,
                         const std::vector<double>* weights) {
  if (x.size() != y.size()) throw DataError("fit_rigid: size mismatch");
  std::size_t effective = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!weights || (*weights)[i] > 0) ++effective;
  if (effective < 3) throw NumericError("fit_rigid: degenerate class (< 3 points)");
  if (collinear(x, weights)) throw NumericError("fit_rigid: degenerate class (collinear)");
  return kabsch(x, y, weights);
}

double registration_objective(const std::vector<Vec3>& x, const std::vector<Vec3>& y,
                              const RigidTransform& t, const RegistrationConfig& cfg) {
  const RobustLoss loss = RobustLoss::tukey(tukey_c(cfg));
  double obj = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    obj += robust_loss((y[i] - t.apply(x[i])).norm(), loss);
  return obj;
}

RigidTransform robust_register(const std::vector<Vec3>& x, const std::vector<Vec3>& y,
                               const RegistrationConfig& cfg) {
  if (x.size() != y.size()) throw DataError("robust_register: size mismatch");
  const std::size_t n = x.size();
  if (n < 3) throw NumericError("robust_register: degenerate class (< 3 points)");
  if (collinear(x, nullptr)) throw NumericError("robust_register: degenerate class (collinear)");

  Rng rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  int best_count = -1;
  double best_rss = std::numeric_limits<double>::infinity();
  RigidTransform best = kabsch(x, y, nullptr);
  const double thr = cfg.inlier_threshold;

  std::vector<Vec3> sx(3), sy(3);
  for (int it = 0; it < cfg.ransac_iters; ++it) {
    std::size_t a = pick(rng), b = pick(rng), c = pick(rng);
    if (a == b || a == c || b == c) continue;
    sx[0] = x[a]; sx[1] = x[b]; sx[2] = x[c];
    sy[0] = y[a]; sy[1] = y[b]; sy[2] = y[c];
    if ((sx[1] - sx[0]).cross(sx[2] - sx[0]).norm() < 1e-14) continue;
    const RigidTransform t = kabsch(sx, sy, nullptr);
    int count = 0;
    double rss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r2 = (y[i] - t.apply(x[i])).squaredNorm();
      if (r2 <= thr * thr) {
        ++count;
        rss += r2;
      }
    }
    if (count > best_count || (count == best_count && rss < best_rss)) {
      best_count = count;
      best_rss = rss;
      best = t;
    }
  }

  // Refit on the consensus set when one exists.
  if (best_count >= 3) {
    std::vector<double> w(n, 0.0);
    int kept = 0;
    std::vector<Vec3> cx, cy;
    for (std::size_t i = 0; i < n; ++i) {
      if ((y[i] - best.apply(x[i])).squaredNorm() <= thr * thr) {
        w[i] = 1.0;
        ++kept;
      }
    }
    if (kept >= 3 && !collinear(x, &w)) best = kabsch(x, y, &w);
  }

  // Tukey IRLS; keep the best objective seen so the result never regresses.
  const double c = tukey_c(cfg);
  double best_obj = registration_objective(x, y, best, cfg);
  RigidTransform current = best;
  std::vector<double> w(n);
  for (int it = 0; it < cfg.irls_iters; ++it) {
    double wsum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = (y[i] - current.apply(x[i])).norm();
      const double q = r < c ? 1.0 - (r / c) * (r / c) : 0.0;
      w[i] = q * q;
      wsum += w[i];
    }
    if (wsum < 1e-12 || collinear(x, &w)) break;
    current = kabsch(x, y, &w);
    const double obj = registration_objective(x, y, current, cfg);
    if (obj < best_obj) {
      best_obj = obj;
      best = current;
    }
  }
  return best;
}

EmResult em_refine(const std::vector<Vec3>& x, const std::vector<Vec3>& y,
                   const RigidTransform& t0, const RigidTransform& t1,
                   std::vector<int> labels, const RegistrationConfig& cfg, int rounds) {
  if (x.size() != y.size() || x.size() != labels.size())
    throw DataError("em_refine: size mismatch");
  EmResult res;
  res.t0 = t0;
  res.t1 = t1;
  res.labels = std::move(labels);
  const std::size_t n = x.size();

  auto total_objective = [&]() {
    double obj = 0;
    const RobustLoss loss = RobustLoss::tukey(tukey_c(cfg));
    for (std::size_t i = 0; i < n; ++i) {
      const RigidTransform& t = res.labels[i] == 0 ? res.t0 : res.t1;
      obj += robust_loss((y[i] - t.apply(x[i])).norm(), loss);
    }
    return obj;
  };

  for (int round = 0; round < rounds; ++round) {
    // E-step: assign to the transform with the smaller squared residual.
    int changes = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r0 = (y[i] - res.t0.apply(x[i])).squaredNorm();
      const double r1 = (y[i] - res.t1.apply(x[i])).squaredNorm();
      const int want = r0 == r1 ? res.labels[i] : (r0 < r1 ? 0 : 1);
      if (want != res.labels[i]) {
        res.labels[i] = want;
        ++changes;
      }
    }

    // M-step per class, keeping the previous transform if it scores better.
    for (int k = 0; k < 2; ++k) {
      std::vector<Vec3> cx, cy;
      for (std::size_t i = 0; i < n; ++i) {
        if (res.labels[i] == k) {
          cx.push_back(x[i]);
          cy.push_back(y[i]);
        }
      }
      if (cx.empty()) {
        res.class_emptied = true;
        res.objective_trace.push_back(total_objective());
        res.rounds_run = round + 1;
        return res;
      }
      if (cx.size() < 3) continue;  // too small to refit; keep previous
      RegistrationConfig sub = cfg;
      sub.seed = sub_seed(cfg.seed, static_cast<std::uint64_t>(round),
                          static_cast<std::uint64_t>(k) + 101);
      RigidTransform prev = k == 0 ? res.t0 : res.t1;
      RigidTransform cand;
      try {
        cand = robust_register(cx, cy, sub);
      } catch (const NumericError&) {
        continue;  // degenerate class this round; keep previous
      }
      const double before = registration_objective(cx, cy, prev, cfg);
      const double after = registration_objective(cx, cy, cand, cfg);
      if (after < before) (k == 0 ? res.t0 : res.t1) = cand;
    }

    res.objective_trace.push_back(total_objective());
    res.rounds_run = round + 1;
    if (changes == 0) break;
  }
  return res;
}

}  // namespace artkin
