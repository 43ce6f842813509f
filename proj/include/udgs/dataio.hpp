#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "udgs/config.hpp"
#include "udgs/depth_filter.hpp"
#include "udgs/geometry.hpp"
#include "udgs/image.hpp"

namespace udgs {

struct GroundTruthRecord {
  double timestamp = 0.0;
  Vec3 translation = Vec3::Zero();   // camera-to-world, TUM convention
  Vec4 quaternion = Vec4(0, 0, 0, 1);  // (qx, qy, qz, qw)
};

struct FramePair {
  double t_rgb = 0.0;
  std::string rgb_path;
  double t_depth = 0.0;
  std::string depth_path;
};

struct SequenceSource {
  std::vector<FramePair> frames;
  std::vector<GroundTruthRecord> groundtruth;
  CameraIntrinsics intrinsics;
  std::string root;
  size_t dropped_rgb = 0;   // rgb entries without a depth match
};

// TUM-style directory: rgb.txt / depth.txt index files ("timestamp path",
// '#' comments), optional groundtruth.txt, plus intrinsics.txt holding
// "fx fy cx cy width height".
SequenceSource load_tum_sequence(const std::string& root_dir, double max_dt);

enum class DepthFormat { Png16, RawF32 };

// Raw values <= 0 or NaN are masked invalid.
DepthMap load_depth(const std::string& path, DepthFormat format,
                    double units_scale);
// Dispatches on extension: .png -> Png16, anything else -> RawF32.
DepthMap load_depth_auto(const std::string& path, double units_scale);
void write_depth_rawf32(const DepthMap& depth, const std::string& path);

// 8-bit PNG (RGB, RGBA, or gray) decoded to an H x W x 3 image in [0,1].
Image load_image_rgb(const std::string& path);
void write_image_png(const Image& image, const std::string& path);

struct TrajectoryRecord {
  double timestamp = 0.0;
  Vec3 translation = Vec3::Zero();
  Vec4 quaternion = Vec4(0, 0, 0, 1);  // (qx, qy, qz, qw), unit norm
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;

  void validate() const;  // strictly increasing timestamps, unit quaternions
};

// TUM trajectory text format: "timestamp tx ty tz qx qy qz qw", six decimal
// places, one pose per line.
void write_trajectory_tum(const Trajectory& traj, const std::string& path);
Trajectory load_trajectory_tum(const std::string& path);

// Converts an internal world-to-camera pose into a TUM camera-to-world
// record. This is the single place the convention flips.
TrajectoryRecord trajectory_record_from_tcw(double timestamp,
                                            const SE3Pose& t_cw);
SE3Pose tcw_from_trajectory_record(const TrajectoryRecord& rec);

// Key-value text config; empty file yields all defaults.
SlamConfig load_config(const std::string& path);

// FNV-1a 64-bit over a file's bytes, as a hex string; for run manifests.
std::string file_hash_hex(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace udgs
