#include "udgs/config.hpp"

#include <cmath>
#include <sstream>

#include "udgs/errors.hpp"

namespace udgs {

namespace {

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size() || !std::isfinite(v)) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Data,
                "TypeError: key '" + key + "' expects a number, got '" + value + "'");
  }
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(key);
    return static_cast<int>(v);
  } catch (const std::exception&) {
    throw Error(ErrorCode::Data,
                "TypeError: key '" + key + "' expects an integer, got '" + value + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Data,
                "TypeError: key '" + key + "' expects an unsigned integer, got '" +
                    value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw Error(ErrorCode::Data,
              "TypeError: key '" + key + "' expects true/false, got '" + value + "'");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void SlamConfig::apply(const std::string& key, const std::string& value) {
  if (key == "lambda") lambda = parse_double(key, value);
  else if (key == "window_size") window_size = parse_int(key, value);
  else if (key == "covisibility_threshold") covisibility_threshold = parse_double(key, value);
  else if (key == "baseline_ratio_threshold") baseline_ratio_threshold = parse_double(key, value);
  else if (key == "tracking_iters") tracking_iters = parse_int(key, value);
  else if (key == "mapping_iters") mapping_iters = parse_int(key, value);
  else if (key == "init_iters") init_iters = parse_int(key, value);
  else if (key == "divergence_factor") divergence_factor = parse_double(key, value);
  else if (key == "lr_mu_w") lr_mu_w = parse_double(key, value);
  else if (key == "lr_log_scale") lr_log_scale = parse_double(key, value);
  else if (key == "lr_rot_q") lr_rot_q = parse_double(key, value);
  else if (key == "lr_color") lr_color = parse_double(key, value);
  else if (key == "lr_logit_opacity") lr_logit_opacity = parse_double(key, value);
  else if (key == "lr_pose_rot") lr_pose_rot = parse_double(key, value);
  else if (key == "lr_pose_trans") lr_pose_trans = parse_double(key, value);
  else if (key == "iqr_window") iqr_window = parse_int(key, value);
  else if (key == "iqr_k") iqr_k = parse_double(key, value);
  else if (key == "iqr_mode") {
    if (value != "patch" && value != "global")
      throw Error(ErrorCode::Data,
                  "TypeError: key 'iqr_mode' expects patch|global, got '" + value + "'");
    iqr_mode = value;
  }
  else if (key == "iqr_min_samples") iqr_min_samples = parse_int(key, value);
  else if (key == "insert_stride") insert_stride = parse_int(key, value);
  else if (key == "gradient_percentile") gradient_percentile = parse_double(key, value);
  else if (key == "gradient_boost") gradient_boost = parse_bool(key, value);
  else if (key == "covered_alpha") covered_alpha = parse_double(key, value);
  else if (key == "covered_depth_rel") covered_depth_rel = parse_double(key, value);
  else if (key == "min_opacity") min_opacity = parse_double(key, value);
  else if (key == "prune_every") prune_every = parse_int(key, value);
  else if (key == "z_min") z_min = parse_double(key, value);
  else if (key == "cov_floor") cov_floor = parse_double(key, value);
  else if (key == "alpha_max") alpha_max = parse_double(key, value);
  else if (key == "t_stop") t_stop = parse_double(key, value);
  else if (key == "cutoff_sigma") cutoff_sigma = parse_double(key, value);
  else if (key == "tile_size") tile_size = parse_int(key, value);
  else if (key == "visibility_eps") visibility_eps = parse_double(key, value);
  else if (key == "max_dt") max_dt = parse_double(key, value);
  else if (key == "depth_units_scale") depth_units_scale = parse_double(key, value);
  else if (key == "rng_seed") rng_seed = parse_u64(key, value);
  else if (key == "save_renders") save_renders = parse_bool(key, value);
  else
    throw Error(ErrorCode::Data, "UnknownKey: '" + key + "'");
}

void SlamConfig::validate() const {
  auto range = [](const std::string& key, bool ok) {
    if (!ok)
      throw Error(ErrorCode::Data, "TypeError: key '" + key + "' out of range");
  };
  range("lambda", lambda >= 0.0 && lambda <= 1.0);
  range("window_size", window_size >= 1);
  range("covisibility_threshold", covisibility_threshold >= 0.0 && covisibility_threshold <= 1.0);
  range("baseline_ratio_threshold", baseline_ratio_threshold > 0.0);
  range("tracking_iters", tracking_iters >= 0);
  range("mapping_iters", mapping_iters >= 0);
  range("init_iters", init_iters >= 0);
  range("divergence_factor", divergence_factor > 0.0);
  range("iqr_window", iqr_window >= 1);
  range("iqr_k", iqr_k >= 0.0);
  range("iqr_min_samples", iqr_min_samples >= 1);
  range("insert_stride", insert_stride >= 1);
  range("gradient_percentile", gradient_percentile >= 0.0 && gradient_percentile <= 1.0);
  range("covered_alpha", covered_alpha >= 0.0 && covered_alpha <= 1.0);
  range("covered_depth_rel", covered_depth_rel >= 0.0);
  range("min_opacity", min_opacity >= 0.0 && min_opacity < 1.0);
  range("prune_every", prune_every >= 1);
  range("z_min", z_min > 0.0);
  range("cov_floor", cov_floor >= 0.0);
  range("alpha_max", alpha_max > 0.0 && alpha_max < 1.0);
  range("t_stop", t_stop >= 0.0 && t_stop < 1.0);
  range("cutoff_sigma", cutoff_sigma > 0.0);
  range("tile_size", tile_size >= 1);
  range("visibility_eps", visibility_eps >= 0.0);
  range("max_dt", max_dt > 0.0);
  range("depth_units_scale", depth_units_scale > 0.0);
}

std::vector<std::pair<std::string, std::string>> SlamConfig::items() const {
  return {
      {"lambda", fmt(lambda)},
      {"window_size", std::to_string(window_size)},
      {"covisibility_threshold", fmt(covisibility_threshold)},
      {"baseline_ratio_threshold", fmt(baseline_ratio_threshold)},
      {"tracking_iters", std::to_string(tracking_iters)},
      {"mapping_iters", std::to_string(mapping_iters)},
      {"init_iters", std::to_string(init_iters)},
      {"divergence_factor", fmt(divergence_factor)},
      {"lr_mu_w", fmt(lr_mu_w)},
      {"lr_log_scale", fmt(lr_log_scale)},
      {"lr_rot_q", fmt(lr_rot_q)},
      {"lr_color", fmt(lr_color)},
      {"lr_logit_opacity", fmt(lr_logit_opacity)},
      {"lr_pose_rot", fmt(lr_pose_rot)},
      {"lr_pose_trans", fmt(lr_pose_trans)},
      {"iqr_window", std::to_string(iqr_window)},
      {"iqr_k", fmt(iqr_k)},
      {"iqr_mode", iqr_mode},
      {"iqr_min_samples", std::to_string(iqr_min_samples)},
      {"insert_stride", std::to_string(insert_stride)},
      {"gradient_percentile", fmt(gradient_percentile)},
      {"gradient_boost", gradient_boost ? "true" : "false"},
      {"covered_alpha", fmt(covered_alpha)},
      {"covered_depth_rel", fmt(covered_depth_rel)},
      {"min_opacity", fmt(min_opacity)},
      {"prune_every", std::to_string(prune_every)},
      {"z_min", fmt(z_min)},
      {"cov_floor", fmt(cov_floor)},
      {"alpha_max", fmt(alpha_max)},
      {"t_stop", fmt(t_stop)},
      {"cutoff_sigma", fmt(cutoff_sigma)},
      {"tile_size", std::to_string(tile_size)},
      {"visibility_eps", fmt(visibility_eps)},
      {"max_dt", fmt(max_dt)},
      {"depth_units_scale", fmt(depth_units_scale)},
      {"rng_seed", std::to_string(rng_seed)},
      {"save_renders", save_renders ? "true" : "false"},
  };
}

}  // namespace udgs
