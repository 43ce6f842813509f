#include "udgs/map.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

namespace udgs {

double eval_gaussian3d(const GaussianSplat& g, const Vec3& x) {
  const Mat3 cov = g.covariance();
  const Vec3 d = x - g.mu_w;
  const double det = cov.determinant();
  const double quad = d.dot(cov.llt().solve(d));
  const double norm =
      std::pow(2.0 * std::numbers::pi, 1.5) * std::sqrt(det);
  return g.opacity() * std::exp(-0.5 * quad) / norm;
}

int group_dim(ParamGroup group) {
  switch (group) {
    case ParamGroup::MuW: return 3;
    case ParamGroup::LogScale: return 3;
    case ParamGroup::RotQ: return 4;
    case ParamGroup::Color: return 3;
    case ParamGroup::LogitOpacity: return 1;
  }
  return 0;
}

std::int64_t GaussianMap::add(GaussianSplat g) {
  g.id = next_id_++;
  splats_.push_back(std::move(g));
  ++generation_;
  return splats_.back().id;
}

size_t GaussianMap::group_length(ParamGroup group) const {
  return splats_.size() * static_cast<size_t>(group_dim(group));
}

VecX GaussianMap::group_values(ParamGroup group) const {
  const int dim = group_dim(group);
  VecX out(static_cast<Eigen::Index>(splats_.size()) * dim);
  for (size_t i = 0; i < splats_.size(); ++i) {
    const GaussianSplat& g = splats_[i];
    auto block = out.segment(static_cast<Eigen::Index>(i) * dim, dim);
    switch (group) {
      case ParamGroup::MuW: block = g.mu_w; break;
      case ParamGroup::LogScale: block = g.log_scale; break;
      case ParamGroup::RotQ: block = g.rot_q; break;
      case ParamGroup::Color: block = g.color; break;
      case ParamGroup::LogitOpacity: block[0] = g.logit_opacity; break;
    }
  }
  return out;
}

void GaussianMap::set_group_values(ParamGroup group, const VecX& values) {
  const int dim = group_dim(group);
  if (values.size() != static_cast<Eigen::Index>(splats_.size()) * dim)
    throw Error(ErrorCode::InvalidArgument,
                "LengthMismatch: parameter group expects " +
                    std::to_string(splats_.size() * dim) + " values, got " +
                    std::to_string(values.size()));
  for (size_t i = 0; i < splats_.size(); ++i) {
    GaussianSplat& g = splats_[i];
    const auto block = values.segment(static_cast<Eigen::Index>(i) * dim, dim);
    switch (group) {
      case ParamGroup::MuW: g.mu_w = block; break;
      case ParamGroup::LogScale: g.log_scale = block; break;
      case ParamGroup::RotQ: {
        Vec4 q = block;
        const double n = q.norm();
        g.rot_q = n > 0.0 ? Vec4(q / n) : Vec4(1, 0, 0, 0);
        break;
      }
      case ParamGroup::Color: g.color = block; break;
      case ParamGroup::LogitOpacity: g.logit_opacity = block[0]; break;
    }
  }
  ++generation_;
}

void GaussianMap::update_observations(const std::vector<double>& visibility,
                                      int frame_index, double visibility_eps) {
  if (visibility.size() != splats_.size())
    throw Error(ErrorCode::InvalidArgument,
                "LengthMismatch: visibility record size does not match map");
  for (size_t i = 0; i < splats_.size(); ++i) {
    if (visibility[i] <= visibility_eps) continue;
    GaussianSplat& g = splats_[i];
    if (frame_index <= g.birth_frame) continue;  // only subsequent frames count
    g.last_observed_frame = frame_index;
    ++g.observation_count;
    if (frame_index <= g.birth_frame + 3) g.observed_in_first3 = true;
  }
}

std::vector<uint8_t> GaussianMap::prune(int current_frame_index,
                                        const PruneConfig& cfg,
                                        size_t* removed_count) {
  std::vector<uint8_t> keep(splats_.size(), 1);
  for (size_t i = 0; i < splats_.size(); ++i) {
    const GaussianSplat& g = splats_[i];
    const bool stale =
        current_frame_index >= g.birth_frame + cfg.unobserved_frames &&
        !g.observed_in_first3;
    const bool transparent = g.opacity() < cfg.min_opacity;
    if (stale || transparent) keep[i] = 0;
  }
  size_t w = 0;
  for (size_t i = 0; i < splats_.size(); ++i)
    if (keep[i]) splats_[w++] = splats_[i];
  const size_t removed = splats_.size() - w;
  splats_.resize(w);
  if (removed > 0) ++generation_;
  if (removed_count) *removed_count = removed;
  return keep;
}

namespace {

constexpr char kMapMagic[8] = {'U', 'D', 'G', 'S', 'M', 'A', 'P', '1'};

template <typename T>
void write_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void GaussianMap::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::Io, "UnreadableFile: cannot open " + path);
  os.write(kMapMagic, sizeof(kMapMagic));
  write_raw<std::uint64_t>(os, splats_.size());
  for (const GaussianSplat& g : splats_) {
    for (int i = 0; i < 3; ++i) write_raw<double>(os, g.mu_w[i]);
    for (int i = 0; i < 3; ++i) write_raw<double>(os, g.log_scale[i]);
    for (int i = 0; i < 4; ++i) write_raw<double>(os, g.rot_q[i]);
    for (int i = 0; i < 3; ++i) write_raw<double>(os, g.color[i]);
    write_raw<double>(os, g.logit_opacity);
    write_raw<std::int32_t>(os, g.birth_frame);
    write_raw<std::int32_t>(os, g.last_observed_frame);
    write_raw<std::int32_t>(os, g.observation_count);
  }
  if (!os) throw Error(ErrorCode::Io, "IoFailure: short write to " + path);
}

GaussianMap GaussianMap::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::Io, "UnreadableFile: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMapMagic, sizeof(magic)) != 0)
    throw Error(ErrorCode::Data, "BadMagic: not a UDGSMAP1 file: " + path);
  const auto count = read_raw<std::uint64_t>(is);
  GaussianMap map;
  map.splats_.reserve(count);
  for (std::uint64_t n = 0; n < count; ++n) {
    GaussianSplat g;
    for (int i = 0; i < 3; ++i) g.mu_w[i] = read_raw<double>(is);
    for (int i = 0; i < 3; ++i) g.log_scale[i] = read_raw<double>(is);
    for (int i = 0; i < 4; ++i) g.rot_q[i] = read_raw<double>(is);
    for (int i = 0; i < 3; ++i) g.color[i] = read_raw<double>(is);
    g.logit_opacity = read_raw<double>(is);
    g.birth_frame = read_raw<std::int32_t>(is);
    g.last_observed_frame = read_raw<std::int32_t>(is);
    g.observation_count = read_raw<std::int32_t>(is);
    g.id = static_cast<std::int64_t>(n);
    map.splats_.push_back(g);
  }
  if (!is)
    throw Error(ErrorCode::Data, "SizeMismatch: truncated UDGSMAP1 file: " + path);
  map.next_id_ = static_cast<std::int64_t>(count);
  return map;
}

std::vector<uint8_t> covered_mask(const Image& alpha_image,
                                  const Image& rendered_depth,
                                  const DepthMap& filtered_depth,
                                  const CoveredConfig& cfg) {
  const int h = filtered_depth.height;
  const int w = filtered_depth.width;
  std::vector<uint8_t> mask(static_cast<size_t>(h) * w, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const bool alpha_hit = alpha_image.at(y, x) > cfg.alpha_threshold;
      bool depth_hit = false;
      if (filtered_depth.is_valid(y, x)) {
        const double d = filtered_depth.at(y, x);
        depth_hit =
            std::abs(rendered_depth.at(y, x) - d) <= cfg.depth_rel_tolerance * d;
      }
      if (alpha_hit || depth_hit) mask[filtered_depth.index(y, x)] = 1;
    }
  return mask;
}

namespace {

// Sobel magnitude of the luma channel.
Image sobel_magnitude(const Image& rgb) {
  const int h = rgb.height();
  const int w = rgb.width();
  Image gray(h, w, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      gray.at(y, x) = rgb.channels() == 3
                          ? 0.299 * rgb.at(y, x, 0) + 0.587 * rgb.at(y, x, 1) +
                                0.114 * rgb.at(y, x, 2)
                          : rgb.at(y, x);
  Image mag(h, w, 1);
  auto px = [&](int y, int x) {
    return gray.at(std::clamp(y, 0, h - 1), std::clamp(x, 0, w - 1));
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double gx = -px(y - 1, x - 1) - 2 * px(y, x - 1) - px(y + 1, x - 1) +
                        px(y - 1, x + 1) + 2 * px(y, x + 1) + px(y + 1, x + 1);
      const double gy = -px(y - 1, x - 1) - 2 * px(y - 1, x) - px(y - 1, x + 1) +
                        px(y + 1, x - 1) + 2 * px(y + 1, x) + px(y + 1, x + 1);
      mag.at(y, x) = std::sqrt(gx * gx + gy * gy);
    }
  return mag;
}

}  // namespace

int insert_from_depth(GaussianMap& map, const Image& frame_rgb,
                      const DepthMap& depth, const SE3Pose& pose,
                      const CameraIntrinsics& K,
                      const std::vector<uint8_t>& mask_already_covered,
                      const InsertConfig& cfg, int frame_index) {
  if (cfg.stride <= 0)
    throw Error(ErrorCode::InvalidArgument, "insert_from_depth: stride must be > 0");
  const int h = depth.height;
  const int w = depth.width;
  if (!mask_already_covered.empty() &&
      mask_already_covered.size() != static_cast<size_t>(h) * w)
    throw Error(ErrorCode::InvalidArgument,
                "LengthMismatch: covered mask does not match depth map");

  std::vector<uint8_t> pick(static_cast<size_t>(h) * w, 0);
  for (int y = 0; y < h; y += cfg.stride)
    for (int x = 0; x < w; x += cfg.stride) pick[depth.index(y, x)] = 1;

  if (cfg.gradient_boost) {
    const Image mag = sobel_magnitude(frame_rgb);
    std::vector<double> all(mag.data(), mag.data() + mag.size());
    const double thresh = linear_quantile(std::move(all), cfg.gradient_percentile);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (mag.at(y, x) > thresh) pick[depth.index(y, x)] = 1;
  }

  const SE3Pose world_from_cam = pose.inverse();
  int inserted = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const size_t idx = depth.index(y, x);
      if (!pick[idx] || !depth.is_valid(y, x)) continue;
      if (!mask_already_covered.empty() && mask_already_covered[idx]) continue;
      const double d = depth.at(y, x);
      if (!(d > cfg.z_min)) continue;

      GaussianSplat g;
      g.mu_w = world_from_cam * unproject(Vec2(x, y), d, K);
      // Projected 1-sigma radius of stride/2 pixels at the insertion depth.
      const double scale = 0.5 * cfg.stride * d / K.fx;
      g.log_scale = Vec3::Constant(std::log(std::max(scale, 1e-12)));
      for (int c = 0; c < 3; ++c)
        g.color[c] = frame_rgb.channels() == 3 ? frame_rgb.at(y, x, c)
                                               : frame_rgb.at(y, x);
      g.logit_opacity = 0.0;  // opacity 0.5
      g.birth_frame = frame_index;
      map.add(std::move(g));
      ++inserted;
    }
  return inserted;
}

}  // namespace udgs
