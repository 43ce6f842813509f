#pragma once

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "udgs/config.hpp"
#include "udgs/dataio.hpp"
#include "udgs/depth_filter.hpp"
#include "udgs/map.hpp"
#include "udgs/rasterizer.hpp"

namespace udgs {

struct Keyframe {
  int frame_index = 0;
  double timestamp = 0.0;
  SE3Pose pose;          // T_CW, optimizable
  Image rgb;
  DepthMap depth;        // post-iqr_filter
  double median_depth = 0.0;
};

// W = W_r (random past anchors, poses fixed) union W_k (current window).
struct OptimizationWindow {
  std::deque<size_t> current;      // keyframe store indices, oldest first
  std::vector<size_t> random_past;
};

struct LossResult {
  double total = 0.0;
  double e_pho = 0.0;
  double e_geo = 0.0;
  Image grad_color;        // d total / d rendered color
  Image grad_depth;        // d total / d rendered depth
  size_t geo_pixel_count = 0;
  bool geo_mask_empty = false;  // NoValidPixels: e_geo contributed 0
  RenderOutput render;
};

// Renders the keyframe's view and evaluates the weighted photometric +
// geometric L1 loss with its upstream gradient images.
LossResult compute_loss(const GaussianMap& map, const Keyframe& kf,
                        double lambda, const CameraIntrinsics& K,
                        const RenderConfig& rcfg);

RenderConfig render_config_from(const SlamConfig& cfg);

struct TrackStats {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int iterations = 0;
};

// Pose-only optimization of the current frame against the frozen map.
// Throws Error(TrackingDiverged) when the optimized loss exceeds
// divergence_factor times the initial loss.
SE3Pose track_frame(const GaussianMap& map, const SE3Pose& init_pose,
                    const Image& rgb, const DepthMap& depth_filtered,
                    const CameraIntrinsics& K, const SlamConfig& cfg,
                    TrackStats* stats = nullptr);

// Covisibility/baseline keyframe test against the last keyframe.
bool should_insert_keyframe(const GaussianMap& map, const SE3Pose& candidate,
                            const Keyframe& last_kf, const CameraIntrinsics& K,
                            const SlamConfig& cfg);

struct RefineStats {
  double first_loss = 0.0;
  double last_loss = 0.0;
  int lr_halvings = 0;  // non-finite gradient events
};

// Windowed joint optimization over all splat groups and the W_k poses
// (gauge keyframe and W_r poses held fixed). active/anchor pointers must
// stay valid for the call.
RefineStats map_refine(GaussianMap& map, std::vector<Keyframe*> active,
                       const std::vector<Keyframe*>& anchors,
                       int gauge_frame_index, const CameraIntrinsics& K,
                       const SlamConfig& cfg, int iters, double scene_scale);

// First-frame bootstrap: identity pose (or the supplied one), map seeded from
// the filtered depth, map-only optimization.
struct InitResult {
  GaussianMap map;
  Keyframe keyframe;
  double scene_scale = 1.0;
};
InitResult initialize(const Image& rgb, const DepthMap& depth_filtered,
                      const CameraIntrinsics& K,
                      const std::optional<SE3Pose>& initial_pose,
                      const SlamConfig& cfg);

struct FrameDiagnostics {
  int frame_index = 0;
  double timestamp = 0.0;
  double loss = 0.0;
  double e_pho = 0.0;
  double e_geo = 0.0;
  size_t n_splats = 0;
  bool is_keyframe = false;
};

struct SlamResult {
  std::vector<double> timestamps;
  std::vector<SE3Pose> trajectory;      // T_CW per processed frame
  std::vector<Keyframe> keyframes;
  GaussianMap map;
  std::vector<FrameDiagnostics> diagnostics;
  std::optional<int> diverged_at;       // frame index if tracking halted
  size_t geo_mask_warnings = 0;
};

// In-memory frame feed so synthetic harnesses can bypass the filesystem.
struct FrameInput {
  double timestamp = 0.0;
  Image rgb;
  DepthMap depth_raw;
};

// Full pipeline over in-memory frames: filter, track, keyframe, refine.
SlamResult run_slam(const std::vector<FrameInput>& frames,
                    const CameraIntrinsics& K, const SlamConfig& cfg);

// Disk-to-disk pipeline: loads a TUM-layout sequence, runs SLAM, writes
// trajectory.txt, keyframes.txt, manifest.json, diagnostics.csv, metrics.csv
// (and renders/ when configured). Returns the result; when tracking
// diverges, partial outputs are still written and diverged_at is set.
SlamResult run_sequence_to_dir(const std::string& seq_dir,
                               const SlamConfig& cfg,
                               const std::string& out_dir);

Trajectory trajectory_from_result(const SlamResult& result,
                                  bool keyframes_only = false);

}  // namespace udgs
