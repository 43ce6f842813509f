#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "udgs/errors.hpp"

namespace udgs {

// Per-pixel metric depth with a validity mask. Values are stored as float32
// so disk round-trips through the rawf32 container are bit-exact; all
// statistics run in double.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<float> values;
  std::vector<uint8_t> valid;
  float units_scale = 1.0f;

  DepthMap() = default;
  DepthMap(int h, int w)
      : width(w), height(h),
        values(static_cast<size_t>(h) * w, 0.0f),
        valid(static_cast<size_t>(h) * w, 0) {}

  size_t index(int y, int x) const { return static_cast<size_t>(y) * width + x; }
  float at(int y, int x) const { return values[index(y, x)]; }
  bool is_valid(int y, int x) const { return valid[index(y, x)] != 0; }
  void set(int y, int x, float v, bool ok) {
    values[index(y, x)] = v;
    valid[index(y, x)] = ok ? 1 : 0;
  }
  size_t count_valid() const;
};

enum class IqrMode { Patch, Global };

struct IqrConfig {
  int window = 16;        // patch side in pixels, stride = window
  double k = 1.5;         // Tukey fence multiplier
  IqrMode mode = IqrMode::Patch;
  int min_samples = 16;   // regions with fewer valid pixels pass through
};

// Marks pixels outside [Q1 - k*IQR, Q3 + k*IQR] invalid, per patch or
// globally. Values are never modified, previously invalid pixels stay
// invalid.
DepthMap iqr_filter(const DepthMap& depth, const IqrConfig& cfg);

// Linear-interpolation quantile over an unsorted sample (copied internally).
double linear_quantile(std::vector<double> sample, double q);

struct DepthStats {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double skewness = 0.0;
  double valid_fraction = 0.0;
};

// Summary statistics over valid pixels. Throws Error(Data, "EmptyDepth...")
// below 2 valid pixels.
DepthStats depth_stats(const DepthMap& depth);

// Plain-text CSV histogram (bin_lo, bin_hi, count) over valid pixels.
std::string histogram_report(const DepthMap& depth, int bins = 32);

}  // namespace udgs
