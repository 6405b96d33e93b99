#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mdda {

/// Raised for malformed dimensions, scale factors, or mismatched shapes.
class InvalidScaleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Dims {
  int height = 0;
  int width = 0;

  friend bool operator==(const Dims&, const Dims&) = default;
};

/// H x W x C image of doubles, row-major with interleaved channels.
///
/// Values are nominally in [0,1]. Intermediate pipeline stages may leave
/// the range; `project` restores it.
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(int height, int width, int channels, double fill = 0.0);
  ImageTensor(int height, int width, int channels, std::vector<double> data);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  Dims dims() const { return {height_, width_}; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& at(int row, int col, int ch) {
    return data_[index(row, col, ch)];
  }
  double at(int row, int col, int ch) const {
    return data_[index(row, col, ch)];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool same_shape(const ImageTensor& other) const {
    return height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_;
  }

  /// Copy of a single channel as a 1-channel image.
  ImageTensor channel(int ch) const;
  void set_channel(int ch, const ImageTensor& plane);

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  std::size_t index(int row, int col, int ch) const {
    return (static_cast<std::size_t>(row) * width_ + col) * channels_ + ch;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// Power-of-two scale factor 2^-n (n may be negative).
class ScaleFactor {
 public:
  constexpr ScaleFactor() = default;
  /// Scale 2^-n.
  static constexpr ScaleFactor from_exponent(int n) { return ScaleFactor(n); }
  /// Parses "1/4", "0.5", "2", ... Throws InvalidScaleError for non powers of two.
  static ScaleFactor parse(const std::string& text);
  static ScaleFactor from_value(double value);

  constexpr int exponent() const { return n_; }
  double value() const;
  constexpr ScaleFactor inverse() const { return ScaleFactor(-n_); }
  /// this / other, still a power of two.
  constexpr ScaleFactor ratio_to(ScaleFactor other) const {
    return ScaleFactor(n_ - other.n_);
  }
  std::string to_string() const;

  friend constexpr auto operator<=>(ScaleFactor a, ScaleFactor b) {
    // Larger exponent means smaller scale.
    return b.n_ <=> a.n_;
  }
  friend constexpr bool operator==(ScaleFactor, ScaleFactor) = default;

 private:
  constexpr explicit ScaleFactor(int n) : n_(n) {}
  int n_ = 0;
};

/// Target dims of `dims` scaled by `factor`; throws if non-integral or empty.
Dims scaled_dims(Dims dims, ScaleFactor factor);

/// Resamples by `factor`: nearest neighbour when shrinking, Catmull-Rom
/// bicubic (reflected borders) when enlarging, exact copy at factor 1.
ImageTensor resize(const ImageTensor& img, ScaleFactor factor);

/// Maps an image produced at `factor` back to `original`.
ImageTensor inverse_resize(const ImageTensor& img, ScaleFactor factor,
                           Dims original);

/// Clamp to [0,1].
ImageTensor project(const ImageTensor& img);
void project_inplace(ImageTensor& img);

double linf_distance(const ImageTensor& a, const ImageTensor& b);
double l2_distance_squared(const ImageTensor& a, const ImageTensor& b);

/// Peak signal-to-noise ratio for unit peak; +inf for identical images.
double psnr(const ImageTensor& img, const ImageTensor& reference);

}  // namespace mdda
