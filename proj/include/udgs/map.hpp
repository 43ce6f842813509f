#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "udgs/depth_filter.hpp"
#include "udgs/geometry.hpp"
#include "udgs/image.hpp"

namespace udgs {

// One scene primitive. Covariance is parameterized as log-scales plus a unit
// quaternion so every optimizer iterate reconstructs an SPD matrix; opacity
// lives behind a sigmoid for the same reason.
struct GaussianSplat {
  Vec3 mu_w = Vec3::Zero();          // world position, meters
  Vec3 log_scale = Vec3::Zero();     // log of covariance axis lengths
  Vec4 rot_q = Vec4(1, 0, 0, 0);     // unit quaternion (w,x,y,z)
  Vec3 color = Vec3::Zero();         // RGB in [0,1], view independent
  double logit_opacity = 0.0;        // opacity = sigmoid(logit_opacity)

  std::int64_t id = -1;
  int birth_frame = 0;
  int last_observed_frame = -1;
  int observation_count = 0;         // frames after birth with weight > eps
  bool observed_in_first3 = false;   // any observation within 3 frames of birth

  double opacity() const { return 1.0 / (1.0 + std::exp(-logit_opacity)); }
  Mat3 rotation() const { return quat_to_rotation(rot_q.normalized()); }
  Mat3 covariance() const {
    const Mat3 r = rotation();
    return r * (2.0 * log_scale).array().exp().matrix().asDiagonal() * r.transpose();
  }
};

// Opacity-weighted normalized 3D density (diagnostic; rendering uses the
// unnormalized 2D form).
double eval_gaussian3d(const GaussianSplat& g, const Vec3& x);

enum class ParamGroup { MuW, LogScale, RotQ, Color, LogitOpacity };
inline constexpr int kNumParamGroups = 5;
int group_dim(ParamGroup group);  // components per splat

struct InsertConfig {
  int stride = 4;                   // uniform sampling grid, pixels
  double gradient_percentile = 0.9; // Sobel-magnitude boost threshold
  bool gradient_boost = true;
  double z_min = kDefaultZMin;
};

struct PruneConfig {
  double min_opacity = 0.005;
  int unobserved_frames = 3;
};

struct CoveredConfig {
  double alpha_threshold = 0.9;
  double depth_rel_tolerance = 0.1;
};

class GaussianMap {
 public:
  size_t size() const { return splats_.size(); }
  bool empty() const { return splats_.empty(); }
  const GaussianSplat& splat(size_t i) const { return splats_[i]; }
  GaussianSplat& splat(size_t i) { return splats_[i]; }
  const std::vector<GaussianSplat>& splats() const { return splats_; }

  std::uint64_t generation() const { return generation_; }
  void bump_generation() { ++generation_; }

  std::int64_t add(GaussianSplat g);

  // Flattened per-group parameter access for the optimizer.
  size_t group_length(ParamGroup group) const;
  VecX group_values(ParamGroup group) const;
  // Throws Error(InvalidArgument, "LengthMismatch...") on bad sizes.
  // RotQ values are renormalized to unit length on write.
  void set_group_values(ParamGroup group, const VecX& values);

  // Marks observations from a render's per-splat visibility weights.
  void update_observations(const std::vector<double>& visibility,
                           int frame_index, double visibility_eps);

  // Removes splats unobserved in the 3 frames after birth and splats whose
  // opacity fell under the floor. Returns the keep-mask so external
  // per-splat state (optimizer moments) can compact identically.
  std::vector<uint8_t> prune(int current_frame_index, const PruneConfig& cfg,
                             size_t* removed_count = nullptr);

  // Little-endian snapshot stream, magic "UDGSMAP1".
  void save(const std::string& path) const;
  static GaussianMap load(const std::string& path);

 private:
  std::vector<GaussianSplat> splats_;
  std::int64_t next_id_ = 0;
  std::uint64_t generation_ = 0;
};

// "Already covered" test for insertion: rendered alpha above threshold or
// rendered depth within a relative tolerance of the filtered depth.
std::vector<uint8_t> covered_mask(const Image& alpha_image,
                                  const Image& rendered_depth,
                                  const DepthMap& filtered_depth,
                                  const CoveredConfig& cfg);

// Back-projects a structured subsample of valid, uncovered pixels into new
// splats. Returns the number inserted.
int insert_from_depth(GaussianMap& map, const Image& frame_rgb,
                      const DepthMap& depth, const SE3Pose& pose,
                      const CameraIntrinsics& K,
                      const std::vector<uint8_t>& mask_already_covered,
                      const InsertConfig& cfg, int frame_index);

}  // namespace udgs
