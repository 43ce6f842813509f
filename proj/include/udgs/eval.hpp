#pragma once

#include <vector>

#include "udgs/dataio.hpp"
#include "udgs/geometry.hpp"
#include "udgs/image.hpp"

namespace udgs {

struct AlignmentResult {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  double scale = 1.0;
  std::vector<Vec3> residuals;  // gt_i - (s R est_i + t), per matched pose
  double rmse = 0.0;
  bool degenerate = false;      // collinear input, fell back to translation-only
  size_t matched = 0;
};

// Least-squares similarity (rigid when with_scale = false) aligning the
// estimated trajectory onto ground truth, after timestamp association.
AlignmentResult align_umeyama(const Trajectory& est, const Trajectory& gt,
                              bool with_scale, double max_dt = 0.02);

// RMSE of per-pose translation residual norms.
double rmse_of_residuals(const std::vector<Vec3>& residuals);

double ate_rmse(const Trajectory& est, const Trajectory& gt, bool with_scale,
                double max_dt = 0.02);

// 10*log10(1/MSE) for images in [0,1]; +infinity when identical.
double psnr(const Image& a, const Image& b);

// Mean local SSIM, 11x11 Gaussian window sigma=1.5, C1=0.01^2, C2=0.03^2,
// per channel then averaged (reference parameterization).
double ssim(const Image& a, const Image& b);

}  // namespace udgs
