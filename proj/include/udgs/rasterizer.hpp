#pragma once

#include <optional>
#include <vector>

#include "udgs/geometry.hpp"
#include "udgs/image.hpp"
#include "udgs/map.hpp"

namespace udgs {

struct RenderConfig {
  double z_min = kDefaultZMin;
  double cov_floor = 0.3;      // px^2, added to every image-space covariance
  double alpha_max = 0.999;    // per-splat blending weight clamp
  double t_stop = 1e-4;        // stop accumulating when transmittance drops below
  double cutoff_sigma = 3.0;   // Gaussian support radius, in sigmas
  int tile_size = 16;
  double visibility_eps = 0.05;
  int threads = 0;             // 0: UDGS_THREADS env var, else hardware
};

struct Splat2D {
  Vec2 mu_i = Vec2::Zero();    // pixel center
  Mat2 cov_i = Mat2::Identity();
  double depth_c = 0.0;        // camera-frame z, meters
  Vec3 color = Vec3::Zero();
  double opacity = 0.0;
  std::int64_t source_id = -1;
};

// Projects one splat into image space (Eq.-4 style). Nullopt when behind the
// near plane or more than 3 sigma outside the image.
std::optional<Splat2D> splat_project(const GaussianSplat& g, const SE3Pose& pose,
                                     const CameraIntrinsics& K,
                                     const RenderConfig& cfg);

struct RenderOutput {
  Image color_image;            // H x W x 3 in [0,1]
  Image depth_image;            // H x W, raw alpha-blended depth sum
  Image alpha_image;            // H x W accumulated opacity
  std::vector<double> visibility;  // per-splat max blending weight
  std::uint64_t map_generation = 0;
};

// Front-to-back alpha blending of the whole map, tiled.
RenderOutput render(const GaussianMap& map, const SE3Pose& pose,
                    const CameraIntrinsics& K, const RenderConfig& cfg);

struct GradientBundle {
  VecX d_mu_w;
  VecX d_log_scale;
  VecX d_rot_q;
  VecX d_color;
  VecX d_logit_opacity;
  Tangent6 d_pose;

  static GradientBundle zeros(size_t n_splats);
  bool all_finite() const;
};

// Exact gradients of sum_p [grad_color(p) . C(p) + grad_depth(p) * D(p)]
// w.r.t. every parameter group and the pose tangent at identity perturbation.
GradientBundle render_backward(const GaussianMap& map, const SE3Pose& pose,
                               const CameraIntrinsics& K,
                               const Image& grad_color, const Image& grad_depth,
                               const RenderConfig& cfg);

// Intersection-over-union of the splat sets visible from two poses; 1 when
// both sets are empty.
double covisibility(const GaussianMap& map, const SE3Pose& pose_a,
                    const SE3Pose& pose_b, const CameraIntrinsics& K,
                    const RenderConfig& cfg);

}  // namespace udgs
