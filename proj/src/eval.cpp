#include "udgs/eval.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

namespace udgs {

namespace {

// Timestamp association between two trajectories, greedy nearest pairs.
std::vector<std::pair<size_t, size_t>> associate_records(
    const std::vector<TrajectoryRecord>& a,
    const std::vector<TrajectoryRecord>& b, double max_dt) {
  struct Cand {
    double dt;
    size_t i, j;
  };
  std::vector<Cand> cands;
  size_t lo = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    while (lo < b.size() && b[lo].timestamp < a[i].timestamp - max_dt) ++lo;
    for (size_t j = lo; j < b.size() && b[j].timestamp <= a[i].timestamp + max_dt;
         ++j)
      cands.push_back({std::abs(a[i].timestamp - b[j].timestamp), i, j});
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    if (x.dt != y.dt) return x.dt < y.dt;
    if (x.i != y.i) return x.i < y.i;
    return x.j < y.j;
  });
  std::vector<uint8_t> used_a(a.size(), 0), used_b(b.size(), 0);
  std::vector<std::pair<size_t, size_t>> pairs;
  for (const Cand& c : cands) {
    if (used_a[c.i] || used_b[c.j]) continue;
    used_a[c.i] = used_b[c.j] = 1;
    pairs.emplace_back(c.i, c.j);
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

}  // namespace

AlignmentResult align_umeyama(const Trajectory& est, const Trajectory& gt,
                              bool with_scale, double max_dt) {
  const auto pairs = associate_records(est.records, gt.records, max_dt);
  if (pairs.size() < 3)
    throw Error(ErrorCode::Data,
                "TooFewPoses: alignment needs >= 3 matched poses, got " +
                    std::to_string(pairs.size()));

  const size_t n = pairs.size();
  Vec3 mean_est = Vec3::Zero(), mean_gt = Vec3::Zero();
  for (const auto& [i, j] : pairs) {
    mean_est += est.records[i].translation;
    mean_gt += gt.records[j].translation;
  }
  mean_est /= static_cast<double>(n);
  mean_gt /= static_cast<double>(n);

  Mat3 cross = Mat3::Zero();
  double var_est = 0.0;
  for (const auto& [i, j] : pairs) {
    const Vec3 de = est.records[i].translation - mean_est;
    const Vec3 dg = gt.records[j].translation - mean_gt;
    cross += dg * de.transpose();
    var_est += de.squaredNorm();
  }
  cross /= static_cast<double>(n);
  var_est /= static_cast<double>(n);

  AlignmentResult out;
  out.matched = n;

  Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  // Two vanishing singular values mean the points are collinear and the
  // rotation about that axis is unobservable.
  if (sv[1] < 1e-12 * std::max(sv[0], 1.0)) {
    out.degenerate = true;
    out.rotation = Mat3::Identity();
    out.scale = 1.0;
    out.translation = mean_gt - mean_est;
  } else {
    Mat3 s_fix = Mat3::Identity();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0)
      s_fix(2, 2) = -1.0;
    out.rotation = svd.matrixU() * s_fix * svd.matrixV().transpose();
    out.scale = 1.0;
    if (with_scale && var_est > 0.0)
      out.scale = (sv.asDiagonal() * s_fix).trace() / var_est;
    out.translation = mean_gt - out.scale * out.rotation * mean_est;
  }

  out.residuals.reserve(n);
  for (const auto& [i, j] : pairs)
    out.residuals.push_back(gt.records[j].translation -
                            (out.scale * out.rotation * est.records[i].translation +
                             out.translation));
  out.rmse = rmse_of_residuals(out.residuals);
  return out;
}

double rmse_of_residuals(const std::vector<Vec3>& residuals) {
  if (residuals.empty()) return 0.0;
  double sum = 0.0;
  for (const Vec3& r : residuals) sum += r.squaredNorm();
  return std::sqrt(sum / static_cast<double>(residuals.size()));
}

double ate_rmse(const Trajectory& est, const Trajectory& gt, bool with_scale,
                double max_dt) {
  return align_umeyama(est, gt, with_scale, max_dt).rmse;
}

double psnr(const Image& a, const Image& b) {
  if (!a.same_shape(b))
    throw Error(ErrorCode::InvalidArgument, "ShapeMismatch: psnr inputs differ");
  double mse = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

namespace {

std::vector<double> gaussian_window_11() {
  constexpr int kHalf = 5;
  constexpr double kSigma = 1.5;
  std::vector<double> w(11);
  double sum = 0.0;
  for (int i = -kHalf; i <= kHalf; ++i) {
    w[static_cast<size_t>(i + kHalf)] = std::exp(-(i * i) / (2.0 * kSigma * kSigma));
    sum += w[static_cast<size_t>(i + kHalf)];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Separable valid-mode Gaussian filter of one channel.
Image filter_channel(const Image& img, int ch, const std::vector<double>& w) {
  const int h = img.height(), width = img.width();
  const int half = static_cast<int>(w.size()) / 2;
  Image tmp(h, width - 2 * half, 1);
  for (int y = 0; y < h; ++y)
    for (int x = half; x < width - half; ++x) {
      double s = 0.0;
      for (int k = -half; k <= half; ++k)
        s += w[static_cast<size_t>(k + half)] * img.at(y, x + k, ch);
      tmp.at(y, x - half) = s;
    }
  Image out(h - 2 * half, width - 2 * half, 1);
  for (int y = half; y < h - half; ++y)
    for (int x = 0; x < tmp.width(); ++x) {
      double s = 0.0;
      for (int k = -half; k <= half; ++k)
        s += w[static_cast<size_t>(k + half)] * tmp.at(y + k, x);
      out.at(y - half, x) = s;
    }
  return out;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
  if (!a.same_shape(b))
    throw Error(ErrorCode::InvalidArgument, "ShapeMismatch: ssim inputs differ");
  if (a.height() < 11 || a.width() < 11)
    throw Error(ErrorCode::InvalidArgument, "TooSmall: ssim needs min side >= 11");

  constexpr double kC1 = 0.01 * 0.01;
  constexpr double kC2 = 0.03 * 0.03;
  const std::vector<double> w = gaussian_window_11();

  double total = 0.0;
  for (int ch = 0; ch < a.channels(); ++ch) {
    const Image mu_a = filter_channel(a, ch, w);
    const Image mu_b = filter_channel(b, ch, w);

    Image a2(a.height(), a.width(), 1), b2(a.height(), a.width(), 1),
        ab(a.height(), a.width(), 1);
    for (int y = 0; y < a.height(); ++y)
      for (int x = 0; x < a.width(); ++x) {
        const double va = a.at(y, x, ch), vb = b.at(y, x, ch);
        a2.at(y, x) = va * va;
        b2.at(y, x) = vb * vb;
        ab.at(y, x) = va * vb;
      }
    const Image m_a2 = filter_channel(a2, 0, w);
    const Image m_b2 = filter_channel(b2, 0, w);
    const Image m_ab = filter_channel(ab, 0, w);

    double acc = 0.0;
    for (int y = 0; y < mu_a.height(); ++y)
      for (int x = 0; x < mu_a.width(); ++x) {
        const double ma = mu_a.at(y, x), mb = mu_b.at(y, x);
        const double va = m_a2.at(y, x) - ma * ma;
        const double vb = m_b2.at(y, x) - mb * mb;
        const double cov = m_ab.at(y, x) - ma * mb;
        acc += ((2.0 * ma * mb + kC1) * (2.0 * cov + kC2)) /
               ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
      }
    total += acc / (static_cast<double>(mu_a.height()) * mu_a.width());
  }
  return total / a.channels();
}

}  // namespace udgs
