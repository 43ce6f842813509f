#pragma once

#include <cstddef>
#include <vector>

#include "udgs/errors.hpp"

namespace udgs {

// Dense row-major H x W x C raster of doubles. Color images use C=3 with
// values in [0,1]; scalar rasters (depth, alpha, masks) use C=1.
class Image {
 public:
  Image() = default;

  Image(int height, int width, int channels, double fill = 0.0)
      : height_(height), width_(width), channels_(channels),
        data_(static_cast<size_t>(height) * width * channels, fill) {
    if (height < 0 || width < 0 || (channels != 1 && channels != 3))
      throw Error(ErrorCode::InvalidArgument, "Image: bad shape");
  }

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }
  size_t size() const { return data_.size(); }

  double& at(int y, int x, int c = 0) {
    return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
  }
  double at(int y, int x, int c = 0) const {
    return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool same_shape(const Image& other) const {
    return height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_;
  }

  void fill(double v) { data_.assign(data_.size(), v); }

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

}  // namespace udgs
