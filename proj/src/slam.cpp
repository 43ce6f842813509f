#include "udgs/slam.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "udgs/eval.hpp"

namespace udgs {

RenderConfig render_config_from(const SlamConfig& cfg) {
  RenderConfig r;
  r.z_min = cfg.z_min;
  r.cov_floor = cfg.cov_floor;
  r.alpha_max = cfg.alpha_max;
  r.t_stop = cfg.t_stop;
  r.cutoff_sigma = cfg.cutoff_sigma;
  r.tile_size = cfg.tile_size;
  r.visibility_eps = cfg.visibility_eps;
  return r;
}

LossResult compute_loss(const GaussianMap& map, const Keyframe& kf,
                        double lambda, const CameraIntrinsics& K,
                        const RenderConfig& rcfg) {
  LossResult out;
  out.render = render(map, kf.pose, K, rcfg);
  const int h = K.height, w = K.width;
  out.grad_color = Image(h, w, 3);
  out.grad_depth = Image(h, w, 1);

  const double pho_norm = 1.0 / (3.0 * h * w);
  double e_pho = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        const double diff = out.render.color_image.at(y, x, c) - kf.rgb.at(y, x, c);
        e_pho += std::abs(diff);
        const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        out.grad_color.at(y, x, c) = lambda * sign * pho_norm;
      }
  e_pho *= pho_norm;

  // Geometric term over pixels that are depth-valid and confidently covered.
  size_t n_geo = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (kf.depth.is_valid(y, x) && out.render.alpha_image.at(y, x) > 0.5)
        ++n_geo;
  double e_geo = 0.0;
  if (n_geo > 0) {
    const double geo_norm = 1.0 / static_cast<double>(n_geo);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (!(kf.depth.is_valid(y, x) && out.render.alpha_image.at(y, x) > 0.5))
          continue;
        const double diff = out.render.depth_image.at(y, x) - kf.depth.at(y, x);
        e_geo += std::abs(diff);
        const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        out.grad_depth.at(y, x) = (1.0 - lambda) * sign * geo_norm;
      }
    e_geo *= geo_norm;
  } else {
    out.geo_mask_empty = true;
  }

  out.e_pho = e_pho;
  out.e_geo = e_geo;
  out.geo_pixel_count = n_geo;
  out.total = lambda * e_pho + (1.0 - lambda) * e_geo;
  return out;
}

namespace {

// Adam with a fixed element count; step() returns the update to add.
class AdamState {
 public:
  explicit AdamState(Eigen::Index n)
      : m_(VecX::Zero(n)), v_(VecX::Zero(n)) {}

  VecX step(const VecX& grad) {
    ++t_;
    m_ = kBeta1 * m_ + (1.0 - kBeta1) * grad;
    v_ = kBeta2 * v_.array().matrix() +
         (1.0 - kBeta2) * grad.array().square().matrix();
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    return -((m_ / c1).array() / ((v_ / c2).array().sqrt() + kEps)).matrix();
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  VecX m_, v_;
  int t_ = 0;
};

struct GroupLearningRates {
  double mu_w, log_scale, rot_q, color, logit_opacity;
};

GroupLearningRates group_lrs(const SlamConfig& cfg, double scene_scale) {
  return {cfg.lr_mu_w * scene_scale, cfg.lr_log_scale, cfg.lr_rot_q,
          cfg.lr_color, cfg.lr_logit_opacity};
}

// Per-group Adam over the whole map.
class MapAdam {
 public:
  explicit MapAdam(const GaussianMap& map)
      : mu_w_(static_cast<Eigen::Index>(map.group_length(ParamGroup::MuW))),
        log_scale_(static_cast<Eigen::Index>(map.group_length(ParamGroup::LogScale))),
        rot_q_(static_cast<Eigen::Index>(map.group_length(ParamGroup::RotQ))),
        color_(static_cast<Eigen::Index>(map.group_length(ParamGroup::Color))),
        logit_(static_cast<Eigen::Index>(map.group_length(ParamGroup::LogitOpacity))) {}

  void apply(GaussianMap& map, const GradientBundle& grads,
             const GroupLearningRates& lr, double mult) {
    step_group(map, ParamGroup::MuW, mu_w_, grads.d_mu_w, lr.mu_w * mult);
    step_group(map, ParamGroup::LogScale, log_scale_, grads.d_log_scale,
               lr.log_scale * mult);
    step_group(map, ParamGroup::RotQ, rot_q_, grads.d_rot_q, lr.rot_q * mult);
    step_group(map, ParamGroup::Color, color_, grads.d_color, lr.color * mult);
    step_group(map, ParamGroup::LogitOpacity, logit_, grads.d_logit_opacity,
               lr.logit_opacity * mult);
  }

 private:
  static void step_group(GaussianMap& map, ParamGroup group, AdamState& state,
                         const VecX& grad, double lr) {
    if (grad.size() == 0) return;
    map.set_group_values(group, map.group_values(group) + lr * state.step(grad));
  }

  AdamState mu_w_, log_scale_, rot_q_, color_, logit_;
};

VecX pose_step_scale(const SlamConfig& cfg) {
  VecX s(6);
  s << cfg.lr_pose_trans, cfg.lr_pose_trans, cfg.lr_pose_trans,
      cfg.lr_pose_rot, cfg.lr_pose_rot, cfg.lr_pose_rot;
  return s;
}

}  // namespace

SE3Pose track_frame(const GaussianMap& map, const SE3Pose& init_pose,
                    const Image& rgb, const DepthMap& depth_filtered,
                    const CameraIntrinsics& K, const SlamConfig& cfg,
                    TrackStats* stats) {
  const RenderConfig rcfg = render_config_from(cfg);
  Keyframe frame;
  frame.pose = init_pose;
  frame.rgb = rgb;
  frame.depth = depth_filtered;

  AdamState adam(6);
  const VecX lr = pose_step_scale(cfg);

  LossResult first = compute_loss(map, frame, cfg.lambda, K, rcfg);
  const double initial_loss = first.total;
  double best_loss = initial_loss;
  SE3Pose best_pose = frame.pose;

  for (int it = 0; it < cfg.tracking_iters; ++it) {
    const LossResult loss =
        it == 0 ? std::move(first) : compute_loss(map, frame, cfg.lambda, K, rcfg);
    if (loss.total < best_loss) {
      best_loss = loss.total;
      best_pose = frame.pose;
    }
    const GradientBundle grads = render_backward(
        map, frame.pose, K, loss.grad_color, loss.grad_depth, rcfg);
    const Vec6 g = grads.d_pose.vec();
    if (!g.allFinite()) break;
    const VecX delta = adam.step(g).cwiseProduct(lr);
    frame.pose = se3_retract(frame.pose, Tangent6::from_vec(delta));
  }

  // Final candidate.
  const LossResult last = compute_loss(map, frame, cfg.lambda, K, rcfg);
  if (last.total < best_loss) {
    best_loss = last.total;
    best_pose = frame.pose;
  }

  if (stats) {
    stats->initial_loss = initial_loss;
    stats->final_loss = best_loss;
    stats->iterations = cfg.tracking_iters;
  }
  if (!(best_loss <= cfg.divergence_factor * initial_loss) ||
      !std::isfinite(best_loss))
    throw Error(ErrorCode::TrackingDiverged,
                "TrackingDiverged: loss " + std::to_string(best_loss) +
                    " vs initial " + std::to_string(initial_loss));
  return best_pose;
}

bool should_insert_keyframe(const GaussianMap& map, const SE3Pose& candidate,
                            const Keyframe& last_kf, const CameraIntrinsics& K,
                            const SlamConfig& cfg) {
  const RenderConfig rcfg = render_config_from(cfg);
  const double covis = covisibility(map, candidate, last_kf.pose, K, rcfg);
  if (covis < cfg.covisibility_threshold) return true;
  // Camera centers in the world frame.
  const Vec3 c_cand = candidate.inverse().translation;
  const Vec3 c_last = last_kf.pose.inverse().translation;
  const double baseline = (c_cand - c_last).norm();
  return last_kf.median_depth > 0.0 &&
         baseline / last_kf.median_depth > cfg.baseline_ratio_threshold;
}

RefineStats map_refine(GaussianMap& map, std::vector<Keyframe*> active,
                       const std::vector<Keyframe*>& anchors,
                       int gauge_frame_index, const CameraIntrinsics& K,
                       const SlamConfig& cfg, int iters, double scene_scale) {
  const RenderConfig rcfg = render_config_from(cfg);
  RefineStats stats;
  if (map.empty() || (active.empty() && anchors.empty())) return stats;

  std::vector<Keyframe*> window = active;
  window.insert(window.end(), anchors.begin(), anchors.end());

  MapAdam map_adam(map);
  std::vector<AdamState> pose_adam;
  pose_adam.reserve(active.size());
  for (size_t k = 0; k < active.size(); ++k) pose_adam.emplace_back(6);
  const VecX pose_lr = pose_step_scale(cfg);
  const GroupLearningRates lrs = group_lrs(cfg, scene_scale);
  double mult = 1.0;

  for (int it = 0; it < iters; ++it) {
    GradientBundle total = GradientBundle::zeros(map.size());
    std::vector<Vec6> pose_grads(active.size(), Vec6::Zero());
    double loss_sum = 0.0;
    for (size_t k = 0; k < window.size(); ++k) {
      Keyframe* kf = window[k];
      const LossResult loss = compute_loss(map, *kf, cfg.lambda, K, rcfg);
      loss_sum += loss.total;
      const GradientBundle g = render_backward(map, kf->pose, K, loss.grad_color,
                                               loss.grad_depth, rcfg);
      total.d_mu_w += g.d_mu_w;
      total.d_log_scale += g.d_log_scale;
      total.d_rot_q += g.d_rot_q;
      total.d_color += g.d_color;
      total.d_logit_opacity += g.d_logit_opacity;
      if (k < active.size() && kf->frame_index != gauge_frame_index)
        pose_grads[k] = g.d_pose.vec();
    }
    if (it == 0) stats.first_loss = loss_sum;
    stats.last_loss = loss_sum;

    bool finite = total.all_finite();
    for (const Vec6& g : pose_grads) finite = finite && g.allFinite();
    if (!finite) {
      // Abort the step and halve the learning rate.
      mult *= 0.5;
      ++stats.lr_halvings;
      continue;
    }

    map_adam.apply(map, total, lrs, mult);
    for (size_t k = 0; k < active.size(); ++k) {
      if (active[k]->frame_index == gauge_frame_index) continue;
      const VecX delta =
          pose_adam[k].step(pose_grads[k]).cwiseProduct(pose_lr) * mult;
      active[k]->pose = se3_retract(active[k]->pose, Tangent6::from_vec(delta));
    }
  }
  return stats;
}

InitResult initialize(const Image& rgb, const DepthMap& depth_filtered,
                      const CameraIntrinsics& K,
                      const std::optional<SE3Pose>& initial_pose,
                      const SlamConfig& cfg) {
  if (depth_filtered.count_valid() == 0)
    throw Error(ErrorCode::Data, "EmptyDepth: first frame has no valid depth");

  InitResult out;
  out.keyframe.frame_index = 0;
  out.keyframe.pose = initial_pose.value_or(SE3Pose::identity());
  out.keyframe.rgb = rgb;
  out.keyframe.depth = depth_filtered;

  std::vector<double> depths;
  for (size_t i = 0; i < depth_filtered.values.size(); ++i)
    if (depth_filtered.valid[i]) depths.push_back(depth_filtered.values[i]);
  out.keyframe.median_depth = linear_quantile(std::move(depths), 0.5);
  out.scene_scale = std::max(out.keyframe.median_depth, 1e-6);

  InsertConfig icfg;
  icfg.stride = cfg.insert_stride;
  icfg.gradient_percentile = cfg.gradient_percentile;
  icfg.gradient_boost = cfg.gradient_boost;
  icfg.z_min = cfg.z_min;
  insert_from_depth(out.map, rgb, depth_filtered, out.keyframe.pose, K, {}, icfg,
                    /*frame_index=*/0);

  // Map-only bootstrap: the single keyframe is the gauge, so its pose stays
  // fixed and only the splat parameters move.
  std::vector<Keyframe*> active{&out.keyframe};
  map_refine(out.map, active, {}, /*gauge_frame_index=*/0, K, cfg,
             cfg.init_iters, out.scene_scale);
  return out;
}

namespace {

IqrConfig iqr_config_from(const SlamConfig& cfg) {
  IqrConfig f;
  f.window = cfg.iqr_window;
  f.k = cfg.iqr_k;
  f.mode = cfg.iqr_mode == "global" ? IqrMode::Global : IqrMode::Patch;
  f.min_samples = cfg.iqr_min_samples;
  return f;
}

SE3Pose constant_velocity_prediction(const std::vector<SE3Pose>& trajectory) {
  const size_t n = trajectory.size();
  if (n < 2) return trajectory.back();
  const SE3Pose& prev = trajectory[n - 1];
  const SE3Pose& prev2 = trajectory[n - 2];
  SE3Pose delta = prev * prev2.inverse();
  SE3Pose pred = delta * prev;
  pred.orthonormalize();
  return pred;
}

}  // namespace

SlamResult run_slam(const std::vector<FrameInput>& frames,
                    const CameraIntrinsics& K, const SlamConfig& cfg) {
  cfg.validate();
  if (frames.empty())
    throw Error(ErrorCode::Data, "EmptyAssociation: no frames to process");

  const RenderConfig rcfg = render_config_from(cfg);
  const IqrConfig iqr_cfg = iqr_config_from(cfg);
  std::mt19937_64 rng(cfg.rng_seed);

  SlamResult res;
  double scene_scale = 1.0;
  OptimizationWindow window;
  int keyframes_since_prune = 0;

  for (size_t fi = 0; fi < frames.size(); ++fi) {
    const FrameInput& input = frames[fi];
    const DepthMap filtered = iqr_filter(input.depth_raw, iqr_cfg);
    const int frame_index = static_cast<int>(fi);

    if (fi == 0) {
      InitResult init = initialize(input.rgb, filtered, K, std::nullopt, cfg);
      init.keyframe.timestamp = input.timestamp;
      res.map = std::move(init.map);
      res.keyframes.push_back(std::move(init.keyframe));
      window.current.push_back(0);
      scene_scale = init.scene_scale;
      res.trajectory.push_back(res.keyframes[0].pose);
      res.timestamps.push_back(input.timestamp);

      Keyframe& kf0 = res.keyframes[0];
      const LossResult loss = compute_loss(res.map, kf0, cfg.lambda, K, rcfg);
      res.map.update_observations(loss.render.visibility, frame_index,
                                  cfg.visibility_eps);
      res.diagnostics.push_back({frame_index, input.timestamp, loss.total,
                                 loss.e_pho, loss.e_geo, res.map.size(), true});
      continue;
    }

    const SE3Pose prediction = constant_velocity_prediction(res.trajectory);
    SE3Pose pose;
    TrackStats track_stats;
    try {
      pose = track_frame(res.map, prediction, input.rgb, filtered, K, cfg,
                         &track_stats);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::TrackingDiverged) {
        res.diverged_at = frame_index;
        break;
      }
      throw;
    }
    res.trajectory.push_back(pose);
    res.timestamps.push_back(input.timestamp);

    Keyframe candidate;
    candidate.frame_index = frame_index;
    candidate.timestamp = input.timestamp;
    candidate.pose = pose;
    candidate.rgb = input.rgb;
    candidate.depth = filtered;

    // Observation bookkeeping from this frame's view of the map.
    LossResult frame_loss = compute_loss(res.map, candidate, cfg.lambda, K, rcfg);
    res.map.update_observations(frame_loss.render.visibility, frame_index,
                                cfg.visibility_eps);
    if (frame_loss.geo_mask_empty) ++res.geo_mask_warnings;

    const Keyframe& last_kf = res.keyframes[window.current.back()];
    const bool insert =
        should_insert_keyframe(res.map, pose, last_kf, K, cfg);

    if (insert) {
      std::vector<double> depths;
      for (size_t i = 0; i < filtered.values.size(); ++i)
        if (filtered.valid[i]) depths.push_back(filtered.values[i]);
      candidate.median_depth =
          depths.empty() ? last_kf.median_depth
                         : linear_quantile(std::move(depths), 0.5);

      res.keyframes.push_back(std::move(candidate));
      const size_t kf_index = res.keyframes.size() - 1;
      window.current.push_back(kf_index);
      if (window.current.size() > static_cast<size_t>(cfg.window_size))
        window.current.pop_front();

      // New splats for newly observed regions.
      Keyframe& newest = res.keyframes[kf_index];
      const CoveredConfig ccfg{cfg.covered_alpha, cfg.covered_depth_rel};
      const auto covered =
          covered_mask(frame_loss.render.alpha_image,
                       frame_loss.render.depth_image, newest.depth, ccfg);
      InsertConfig icfg;
      icfg.stride = cfg.insert_stride;
      icfg.gradient_percentile = cfg.gradient_percentile;
      icfg.gradient_boost = cfg.gradient_boost;
      icfg.z_min = cfg.z_min;
      insert_from_depth(res.map, newest.rgb, newest.depth, newest.pose, K,
                        covered, icfg, frame_index);

      // W_r: two random past keyframes outside W_k.
      window.random_past.clear();
      std::vector<size_t> past;
      for (size_t i = 0; i < res.keyframes.size(); ++i)
        if (std::find(window.current.begin(), window.current.end(), i) ==
            window.current.end())
          past.push_back(i);
      std::shuffle(past.begin(), past.end(), rng);
      for (size_t i = 0; i < past.size() && i < 2; ++i)
        window.random_past.push_back(past[i]);

      std::vector<Keyframe*> active;
      for (size_t i : window.current) active.push_back(&res.keyframes[i]);
      std::vector<Keyframe*> anchors;
      for (size_t i : window.random_past) anchors.push_back(&res.keyframes[i]);

      map_refine(res.map, active, anchors,
                 /*gauge_frame_index=*/res.keyframes.front().frame_index, K,
                 cfg, cfg.mapping_iters, scene_scale);

      if (++keyframes_since_prune >= cfg.prune_every) {
        PruneConfig pcfg;
        pcfg.min_opacity = cfg.min_opacity;
        res.map.prune(frame_index, pcfg);
        keyframes_since_prune = 0;
      }

      // Poses inside the window may have moved; keep the trajectory in sync.
      for (size_t i : window.current) {
        const Keyframe& kf = res.keyframes[i];
        if (kf.frame_index < static_cast<int>(res.trajectory.size()))
          res.trajectory[static_cast<size_t>(kf.frame_index)] = kf.pose;
      }
    }

    res.diagnostics.push_back({frame_index, input.timestamp, frame_loss.total,
                               frame_loss.e_pho, frame_loss.e_geo,
                               res.map.size(), insert});
  }
  return res;
}

Trajectory trajectory_from_result(const SlamResult& result,
                                  bool keyframes_only) {
  Trajectory traj;
  if (keyframes_only) {
    for (const Keyframe& kf : result.keyframes)
      traj.records.push_back(
          trajectory_record_from_tcw(kf.timestamp, kf.pose));
  } else {
    for (size_t i = 0; i < result.trajectory.size(); ++i)
      traj.records.push_back(trajectory_record_from_tcw(result.timestamps[i],
                                                        result.trajectory[i]));
  }
  return traj;
}

SlamResult run_sequence_to_dir(const std::string& seq_dir,
                               const SlamConfig& cfg,
                               const std::string& out_dir) {
  namespace fs = std::filesystem;
  cfg.validate();
  const SequenceSource seq = load_tum_sequence(seq_dir, cfg.max_dt);

  std::vector<FrameInput> frames;
  frames.reserve(seq.frames.size());
  for (const FramePair& f : seq.frames) {
    FrameInput input;
    input.timestamp = f.t_rgb;
    input.rgb = load_image_rgb(f.rgb_path);
    input.depth_raw = load_depth_auto(f.depth_path, cfg.depth_units_scale);
    frames.push_back(std::move(input));
  }

  SlamResult res = run_slam(frames, seq.intrinsics, cfg);

  fs::create_directories(out_dir);
  write_trajectory_tum(trajectory_from_result(res, false),
                       (fs::path(out_dir) / "trajectory.txt").string());
  write_trajectory_tum(trajectory_from_result(res, true),
                       (fs::path(out_dir) / "keyframes.txt").string());
  res.map.save((fs::path(out_dir) / "map.bin").string());

  // Manifest: everything needed to reproduce the run bit for bit.
  nlohmann::json manifest;
  manifest["version"] = "udgs 0.1.0";
  nlohmann::json jcfg;
  for (const auto& [k, v] : cfg.items()) jcfg[k] = v;
  manifest["config"] = jcfg;
  manifest["rng_seed"] = cfg.rng_seed;
  nlohmann::json inputs;
  inputs["sequence"] = seq_dir;
  inputs["rgb_txt"] = file_hash_hex((fs::path(seq_dir) / "rgb.txt").string());
  inputs["depth_txt"] = file_hash_hex((fs::path(seq_dir) / "depth.txt").string());
  inputs["intrinsics_txt"] =
      file_hash_hex((fs::path(seq_dir) / "intrinsics.txt").string());
  if (fs::exists(fs::path(seq_dir) / "groundtruth.txt"))
    inputs["groundtruth_txt"] =
        file_hash_hex((fs::path(seq_dir) / "groundtruth.txt").string());
  inputs["frames"] = seq.frames.size();
  manifest["inputs"] = inputs;
  if (const char* t = std::getenv("UDGS_THREADS")) manifest["udgs_threads"] = t;
  write_text_file((fs::path(out_dir) / "manifest.json").string(),
                  manifest.dump(2) + "\n");

  std::ostringstream diag;
  diag << "frame,timestamp,loss,e_pho,e_geo,n_splats,is_keyframe\n";
  for (const FrameDiagnostics& d : res.diagnostics)
    diag << d.frame_index << "," << d.timestamp << "," << d.loss << ","
         << d.e_pho << "," << d.e_geo << "," << d.n_splats << ","
         << (d.is_keyframe ? 1 : 0) << "\n";
  write_text_file((fs::path(out_dir) / "diagnostics.csv").string(), diag.str());

  // Rendering metrics over keyframes, trajectory metrics against ground
  // truth when available. LPIPS is not computed (needs a learned network);
  // it is reported as n/a in the log only.
  const RenderConfig rcfg = render_config_from(cfg);
  double psnr_sum = 0.0, ssim_sum = 0.0;
  size_t metric_count = 0;
  if (cfg.save_renders) fs::create_directories(fs::path(out_dir) / "renders");
  for (size_t i = 0; i < res.keyframes.size(); ++i) {
    const Keyframe& kf = res.keyframes[i];
    const RenderOutput r = render(res.map, kf.pose, seq.intrinsics, rcfg);
    const double p = psnr(r.color_image, kf.rgb);
    psnr_sum += std::isfinite(p) ? p : 100.0;
    ssim_sum += ssim(r.color_image, kf.rgb);
    ++metric_count;
    if (cfg.save_renders) {
      char name[64];
      std::snprintf(name, sizeof(name), "renders/kf%05d.png", kf.frame_index);
      write_image_png(r.color_image, (fs::path(out_dir) / name).string());
    }
  }

  std::ostringstream metrics;
  metrics << "sequence,ate_rmse_m,psnr_db,ssim,frames,keyframes,aligned_scale\n";
  const std::string seq_name = fs::path(seq_dir).filename().string();
  std::string ate_str = "n/a";
  std::string scale_str = "1.0";
  if (!seq.groundtruth.empty() && res.trajectory.size() >= 3) {
    Trajectory gt;
    for (const GroundTruthRecord& g : seq.groundtruth)
      gt.records.push_back({g.timestamp, g.translation, g.quaternion});
    try {
      const AlignmentResult a =
          align_umeyama(trajectory_from_result(res, false), gt, false, cfg.max_dt);
      ate_str = std::to_string(a.rmse);
      scale_str = std::to_string(a.scale);
    } catch (const Error&) {
      ate_str = "n/a";
    }
  }
  metrics << seq_name << "," << ate_str << ","
          << (metric_count ? psnr_sum / metric_count : 0.0) << ","
          << (metric_count ? ssim_sum / metric_count : 0.0) << ","
          << res.trajectory.size() << "," << res.keyframes.size() << ","
          << scale_str << "\n";
  write_text_file((fs::path(out_dir) / "metrics.csv").string(), metrics.str());
  return res;
}

}  // namespace udgs
