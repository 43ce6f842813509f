#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "udgs/depth_filter.hpp"
#include "udgs/geometry.hpp"
#include "udgs/map.hpp"
#include "udgs/rasterizer.hpp"

namespace udgs {

struct SceneSpec {
  int n_splats = 100;
  double extent = 2.0;  // splat centers inside a cube of this side, meters
  std::uint64_t seed = 0;
};

// Deterministic seeded ground-truth scene; opacities in [0.3, 0.95].
GaussianMap make_scene(const SceneSpec& spec);

// Equally spaced circular camera path whose optical axis passes through
// look_at. Returns world-to-camera poses.
std::vector<SE3Pose> make_orbit(double radius, int n_frames, const Vec3& look_at,
                                double height = 0.0);

struct CorruptResult {
  DepthMap depth;
  std::vector<uint8_t> corrupted;  // ground-truth corruption mask
  size_t count = 0;
};

// Multiplies a seeded random fraction of valid pixels by factors in
// [2, tail_scale], the heavy-right-tail regime the filter targets.
CorruptResult corrupt_depth(const DepthMap& depth, double tail_fraction,
                            double tail_scale, std::uint64_t seed);

struct SynthSequenceSpec {
  int n_splats = 200;
  int n_frames = 50;
  double radius = 2.5;
  double extent = 1.5;
  int width = 64;
  int height = 64;
  double fov_deg = 60.0;
  std::uint64_t seed = 0;
  double tail_fraction = 0.0;  // optional depth corruption
  double tail_scale = 5.0;
};

// Renders a ground-truth scene along an orbit and writes a ready-to-run
// sequence directory (rgb.txt, depth.txt, groundtruth.txt, intrinsics.txt,
// PNG frames, rawf32 depth). Depth is the alpha-normalized rendered depth,
// masked where coverage is thin.
void write_synth_sequence(const std::string& out_dir,
                          const SynthSequenceSpec& spec);

// The ground-truth renders and poses behind write_synth_sequence, for
// in-process harnesses.
struct SynthFrame {
  SE3Pose pose;  // T_CW
  Image rgb;
  DepthMap depth;
  double timestamp = 0.0;
};
struct SynthSequence {
  GaussianMap scene;
  CameraIntrinsics intrinsics;
  std::vector<SynthFrame> frames;
};
SynthSequence make_synth_sequence(const SynthSequenceSpec& spec);

}  // namespace udgs
