#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace udgs {

// Full pipeline configuration. Every field has a default; the text config
// loader rejects unknown keys and out-of-range values, and the run manifest
// serializes the complete struct for reproducibility.
struct SlamConfig {
  // Loss (Eq.-10-style weighting)
  double lambda = 0.9;  // in [0,1]

  // Keyframing
  int window_size = 8;
  double covisibility_threshold = 0.9;
  double baseline_ratio_threshold = 0.08;

  // Optimization budgets
  int tracking_iters = 60;
  int mapping_iters = 100;
  int init_iters = 300;
  double divergence_factor = 2.0;

  // Per-group learning rates (mu_w additionally scaled by scene scale)
  double lr_mu_w = 1e-4;
  double lr_log_scale = 5e-3;
  double lr_rot_q = 1e-3;
  double lr_color = 2.5e-3;
  double lr_logit_opacity = 5e-2;
  double lr_pose_rot = 1e-3;
  double lr_pose_trans = 3e-4;

  // Depth filtering
  int iqr_window = 16;
  double iqr_k = 1.5;
  std::string iqr_mode = "patch";  // "patch" | "global"
  int iqr_min_samples = 16;

  // Insertion
  int insert_stride = 4;
  double gradient_percentile = 0.9;
  bool gradient_boost = true;
  double covered_alpha = 0.9;
  double covered_depth_rel = 0.1;

  // Pruning
  double min_opacity = 0.005;
  int prune_every = 1;

  // Rasterizer
  double z_min = 0.01;
  double cov_floor = 0.3;
  double alpha_max = 0.999;
  double t_stop = 1e-4;
  double cutoff_sigma = 3.0;
  int tile_size = 16;
  double visibility_eps = 0.05;

  // Dataset association
  double max_dt = 0.02;
  double depth_units_scale = 1.0 / 5000.0;  // TUM 16-bit convention

  std::uint64_t rng_seed = 0;
  bool save_renders = false;

  // Sets one field from its text form; throws Error(Data, "UnknownKey...")
  // or Error(Data, "TypeError...").
  void apply(const std::string& key, const std::string& value);
  void validate() const;

  // Stable (key, value) listing of every field, for the manifest.
  std::vector<std::pair<std::string, std::string>> items() const;
};

}  // namespace udgs
