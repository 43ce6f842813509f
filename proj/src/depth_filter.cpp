#include "udgs/depth_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace udgs {

size_t DepthMap::count_valid() const {
  size_t n = 0;
  for (uint8_t v : valid) n += (v != 0);
  return n;
}

double linear_quantile(std::vector<double> sample, double q) {
  if (sample.empty())
    throw Error(ErrorCode::Data, "linear_quantile: empty sample");
  std::sort(sample.begin(), sample.end());
  const double pos = q * static_cast<double>(sample.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = static_cast<size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return sample[lo] + frac * (sample[hi] - sample[lo]);
}

namespace {

// Applies the Tukey fence to one rectangular region of the map.
void filter_region(const DepthMap& in, DepthMap& out, int y0, int x0, int y1,
                   int x1, const IqrConfig& cfg) {
  std::vector<double> vals;
  vals.reserve(static_cast<size_t>(y1 - y0) * (x1 - x0));
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x)
      if (in.is_valid(y, x)) vals.push_back(in.at(y, x));

  if (vals.size() < static_cast<size_t>(cfg.min_samples)) return;

  const double q1 = linear_quantile(vals, 0.25);
  const double q3 = linear_quantile(vals, 0.75);
  const double iqr = q3 - q1;
  const double lo = q1 - cfg.k * iqr;
  const double hi = q3 + cfg.k * iqr;

  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) {
      if (!in.is_valid(y, x)) continue;
      const double v = in.at(y, x);
      if (v < lo || v > hi) out.valid[out.index(y, x)] = 0;
    }
}

}  // namespace

DepthMap iqr_filter(const DepthMap& depth, const IqrConfig& cfg) {
  if (cfg.window <= 0)
    throw Error(ErrorCode::InvalidArgument, "iqr_filter: window must be > 0");
  if (cfg.k < 0.0)
    throw Error(ErrorCode::InvalidArgument, "iqr_filter: k must be >= 0");

  DepthMap out = depth;
  if (cfg.mode == IqrMode::Global) {
    filter_region(depth, out, 0, 0, depth.height, depth.width, cfg);
    return out;
  }
  for (int y0 = 0; y0 < depth.height; y0 += cfg.window)
    for (int x0 = 0; x0 < depth.width; x0 += cfg.window)
      filter_region(depth, out, y0, x0,
                    std::min(y0 + cfg.window, depth.height),
                    std::min(x0 + cfg.window, depth.width), cfg);
  return out;
}

DepthStats depth_stats(const DepthMap& depth) {
  std::vector<double> vals;
  vals.reserve(depth.values.size());
  for (size_t i = 0; i < depth.values.size(); ++i)
    if (depth.valid[i]) vals.push_back(depth.values[i]);

  if (vals.size() < 2)
    throw Error(ErrorCode::Data, "EmptyDepth: depth_stats needs >= 2 valid pixels");

  DepthStats s;
  s.min = *std::min_element(vals.begin(), vals.end());
  s.max = *std::max_element(vals.begin(), vals.end());
  s.q1 = linear_quantile(vals, 0.25);
  s.median = linear_quantile(vals, 0.5);
  s.q3 = linear_quantile(vals, 0.75);
  s.valid_fraction =
      static_cast<double>(vals.size()) / static_cast<double>(depth.values.size());

  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= static_cast<double>(vals.size());
  double m2 = 0.0, m3 = 0.0;
  for (double v : vals) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= static_cast<double>(vals.size());
  m3 /= static_cast<double>(vals.size());
  s.skewness = m2 > 1e-300 ? m3 / std::pow(m2, 1.5) : 0.0;
  return s;
}

std::string histogram_report(const DepthMap& depth, int bins) {
  if (bins <= 0)
    throw Error(ErrorCode::InvalidArgument, "histogram_report: bins must be > 0");
  const DepthStats s = depth_stats(depth);
  const double lo = s.min;
  const double span = std::max(s.max - s.min, 1e-12);
  std::vector<size_t> counts(static_cast<size_t>(bins), 0);
  for (size_t i = 0; i < depth.values.size(); ++i) {
    if (!depth.valid[i]) continue;
    int b = static_cast<int>((depth.values[i] - lo) / span * bins);
    b = std::clamp(b, 0, bins - 1);
    ++counts[static_cast<size_t>(b)];
  }
  std::ostringstream os;
  os << "bin_lo,bin_hi,count\n";
  for (int b = 0; b < bins; ++b) {
    os << lo + span * b / bins << "," << lo + span * (b + 1) / bins << ","
       << counts[static_cast<size_t>(b)] << "\n";
  }
  return os.str();
}

}  // namespace udgs
