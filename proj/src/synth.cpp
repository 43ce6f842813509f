#include "udgs/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <sstream>

#include "udgs/dataio.hpp"

namespace udgs {

GaussianMap make_scene(const SceneSpec& spec) {
  if (spec.n_splats < 1)
    throw Error(ErrorCode::InvalidArgument, "make_scene: n_splats must be >= 1");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  GaussianMap map;
  const double half = 0.5 * spec.extent;
  for (int i = 0; i < spec.n_splats; ++i) {
    GaussianSplat g;
    g.mu_w = Vec3(unit(rng) * 2.0 - 1.0, unit(rng) * 2.0 - 1.0,
                  unit(rng) * 2.0 - 1.0) * half;
    const double scale = spec.extent * (0.02 + 0.04 * unit(rng));
    for (int k = 0; k < 3; ++k)
      g.log_scale[k] = std::log(scale * (0.7 + 0.6 * unit(rng)));
    Vec4 q(unit(rng) * 2 - 1, unit(rng) * 2 - 1, unit(rng) * 2 - 1,
           unit(rng) * 2 - 1);
    if (q.norm() < 1e-6) q = Vec4(1, 0, 0, 0);
    g.rot_q = q.normalized();
    g.color = Vec3(0.1 + 0.9 * unit(rng), 0.1 + 0.9 * unit(rng),
                   0.1 + 0.9 * unit(rng));
    const double opacity = 0.3 + 0.65 * unit(rng);
    g.logit_opacity = std::log(opacity / (1.0 - opacity));
    map.add(std::move(g));
  }
  return map;
}

std::vector<SE3Pose> make_orbit(double radius, int n_frames, const Vec3& look_at,
                                double height) {
  if (!(radius > 0.0) || n_frames < 1)
    throw Error(ErrorCode::InvalidArgument, "make_orbit: bad radius or frame count");
  std::vector<SE3Pose> poses;
  poses.reserve(static_cast<size_t>(n_frames));
  const Vec3 up(0.0, 0.0, 1.0);
  for (int i = 0; i < n_frames; ++i) {
    const double theta = 2.0 * std::numbers::pi * i / n_frames;
    const Vec3 center = look_at + Vec3(radius * std::cos(theta),
                                       radius * std::sin(theta), height);
    const Vec3 forward = (look_at - center).normalized();
    Vec3 right = up.cross(forward);
    if (right.norm() < 1e-9)
      right = Vec3(1, 0, 0);  // looking straight along the up axis
    right.normalize();
    const Vec3 down = forward.cross(right);

    Mat3 r_wc;  // camera axes (x right, y down, z forward) in world coords
    r_wc.col(0) = right;
    r_wc.col(1) = down;
    r_wc.col(2) = forward;

    SE3Pose t_cw;
    t_cw.rotation = r_wc.transpose();
    t_cw.translation = -(r_wc.transpose() * center);
    poses.push_back(t_cw);
  }
  return poses;
}

CorruptResult corrupt_depth(const DepthMap& depth, double tail_fraction,
                            double tail_scale, std::uint64_t seed) {
  if (tail_fraction < 0.0 || tail_fraction > 1.0)
    throw Error(ErrorCode::InvalidArgument, "corrupt_depth: tail_fraction in [0,1]");
  CorruptResult out;
  out.depth = depth;
  out.corrupted.assign(depth.values.size(), 0);
  if (tail_fraction == 0.0) return out;

  std::vector<size_t> valid_idx;
  for (size_t i = 0; i < depth.values.size(); ++i)
    if (depth.valid[i]) valid_idx.push_back(i);

  const size_t n_corrupt = static_cast<size_t>(
      std::llround(tail_fraction * static_cast<double>(valid_idx.size())));
  std::mt19937_64 rng(seed);
  std::shuffle(valid_idx.begin(), valid_idx.end(), rng);
  std::uniform_real_distribution<double> factor(2.0, std::max(tail_scale, 2.0));
  for (size_t k = 0; k < n_corrupt && k < valid_idx.size(); ++k) {
    const size_t i = valid_idx[k];
    out.depth.values[i] = static_cast<float>(out.depth.values[i] * factor(rng));
    out.corrupted[i] = 1;
    ++out.count;
  }
  return out;
}

SynthSequence make_synth_sequence(const SynthSequenceSpec& spec) {
  SynthSequence seq;
  seq.scene = make_scene({spec.n_splats, spec.extent, spec.seed});

  CameraIntrinsics k;
  k.width = spec.width;
  k.height = spec.height;
  const double f =
      0.5 * spec.width / std::tan(0.5 * spec.fov_deg * std::numbers::pi / 180.0);
  k.fx = k.fy = f;
  k.cx = 0.5 * (spec.width - 1);
  k.cy = 0.5 * (spec.height - 1);
  seq.intrinsics = k;

  RenderConfig rcfg;
  const auto poses = make_orbit(spec.radius, spec.n_frames, Vec3::Zero(), 0.0);
  for (int i = 0; i < spec.n_frames; ++i) {
    SynthFrame frame;
    frame.pose = poses[static_cast<size_t>(i)];
    frame.timestamp = 0.1 * i;
    const RenderOutput r = render(seq.scene, frame.pose, k, rcfg);
    frame.rgb = r.color_image;
    // Alpha-normalized depth where coverage is solid; thin pixels invalid.
    frame.depth = DepthMap(spec.height, spec.width);
    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x) {
        const double alpha = r.alpha_image.at(y, x);
        if (alpha > 0.5) {
          frame.depth.set(y, x,
                          static_cast<float>(r.depth_image.at(y, x) / alpha),
                          true);
        }
      }
    if (spec.tail_fraction > 0.0) {
      frame.depth = corrupt_depth(frame.depth, spec.tail_fraction,
                                  spec.tail_scale, spec.seed + 1000 + i)
                        .depth;
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

void write_synth_sequence(const std::string& out_dir,
                          const SynthSequenceSpec& spec) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "rgb");
  fs::create_directories(fs::path(out_dir) / "depth");

  const SynthSequence seq = make_synth_sequence(spec);

  std::ostringstream rgb_idx, depth_idx;
  rgb_idx << "# timestamp filename\n";
  depth_idx << "# timestamp filename\n";
  Trajectory gt;
  char name[64];
  for (size_t i = 0; i < seq.frames.size(); ++i) {
    const SynthFrame& f = seq.frames[i];
    std::snprintf(name, sizeof(name), "rgb/%06zu.png", i);
    write_image_png(f.rgb, (fs::path(out_dir) / name).string());
    rgb_idx << f.timestamp << " " << name << "\n";
    std::snprintf(name, sizeof(name), "depth/%06zu.raw", i);
    write_depth_rawf32(f.depth, (fs::path(out_dir) / name).string());
    depth_idx << f.timestamp << " " << name << "\n";
    gt.records.push_back(trajectory_record_from_tcw(f.timestamp, f.pose));
  }
  write_text_file((fs::path(out_dir) / "rgb.txt").string(), rgb_idx.str());
  write_text_file((fs::path(out_dir) / "depth.txt").string(), depth_idx.str());
  write_trajectory_tum(gt, (fs::path(out_dir) / "groundtruth.txt").string());

  std::ostringstream intr;
  intr << "# fx fy cx cy width height\n"
       << seq.intrinsics.fx << " " << seq.intrinsics.fy << " "
       << seq.intrinsics.cx << " " << seq.intrinsics.cy << " "
       << seq.intrinsics.width << " " << seq.intrinsics.height << "\n";
  write_text_file((fs::path(out_dir) / "intrinsics.txt").string(), intr.str());

  seq.scene.save((fs::path(out_dir) / "scene.bin").string());
}

}  // namespace udgs
