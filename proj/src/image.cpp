#include "mdda/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace mdda {

ImageTensor::ImageTensor(int height, int width, int channels, double fill)
    : ImageTensor(height, width, channels,
                  std::vector<double>(static_cast<std::size_t>(std::max(height, 0)) *
                                          std::max(width, 0) * std::max(channels, 0),
                                      fill)) {}

ImageTensor::ImageTensor(int height, int width, int channels,
                         std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  if (height <= 0 || width <= 0) {
    throw InvalidScaleError("image dimensions must be positive");
  }
  if (channels != 1 && channels != 3) {
    throw std::invalid_argument("channels must be 1 or 3");
  }
  if (data_.size() != static_cast<std::size_t>(height) * width * channels) {
    throw DimensionMismatchError("data length does not match height*width*channels");
  }
}

ImageTensor ImageTensor::channel(int ch) const {
  ImageTensor plane(height_, width_, 1);
  for (std::size_t i = 0, n = plane.size(); i < n; ++i) {
    plane.data_[i] = data_[i * channels_ + ch];
  }
  return plane;
}

void ImageTensor::set_channel(int ch, const ImageTensor& plane) {
  if (plane.height_ != height_ || plane.width_ != width_ || plane.channels_ != 1) {
    throw DimensionMismatchError("plane shape does not match image");
  }
  for (std::size_t i = 0, n = plane.size(); i < n; ++i) {
    data_[i * channels_ + ch] = plane.data_[i];
  }
}

// ---------------------------------------------------------------------------

ScaleFactor ScaleFactor::from_value(double value) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw InvalidScaleError("scale factor must be positive");
  }
  int exp = 0;
  const double mant = std::frexp(value, &exp);
  // value = mant * 2^exp with mant in [0.5,1); a power of two has mant == 0.5.
  if (mant != 0.5) {
    throw InvalidScaleError("scale factor must be a power of two");
  }
  return ScaleFactor(-(exp - 1));
}

ScaleFactor ScaleFactor::parse(const std::string& text) {
  const auto slash = text.find('/');
  double value = 0.0;
  try {
    if (slash == std::string::npos) {
      std::size_t used = 0;
      value = std::stod(text, &used);
      if (used != text.size()) throw InvalidScaleError("bad scale: " + text);
    } else {
      std::size_t used_num = 0, used_den = 0;
      const std::string num = text.substr(0, slash);
      const std::string den = text.substr(slash + 1);
      const double n = std::stod(num, &used_num);
      const double d = std::stod(den, &used_den);
      if (used_num != num.size() || used_den != den.size() || d == 0.0) {
        throw InvalidScaleError("bad scale: " + text);
      }
      value = n / d;
    }
  } catch (const std::logic_error&) {
    throw InvalidScaleError("bad scale: " + text);
  }
  return from_value(value);
}

double ScaleFactor::value() const { return std::ldexp(1.0, -n_); }

std::string ScaleFactor::to_string() const {
  if (n_ > 0) return "1/" + std::to_string(1LL << n_);
  return std::to_string(1LL << (-n_));
}

Dims scaled_dims(Dims dims, ScaleFactor factor) {
  const auto scale_one = [&](int len) {
    const int n = factor.exponent();
    if (n <= 0) {
      const long long out = static_cast<long long>(len) << (-n);
      if (out > std::numeric_limits<int>::max()) {
        throw InvalidScaleError("scaled dimension overflows");
      }
      return static_cast<int>(out);
    }
    const int div = 1 << n;
    if (len % div != 0) {
      std::ostringstream msg;
      msg << "dimension " << len << " is not divisible by " << div;
      throw InvalidScaleError(msg.str());
    }
    return len / div;
  };
  if (dims.height <= 0 || dims.width <= 0) {
    throw InvalidScaleError("dimensions must be positive");
  }
  return {scale_one(dims.height), scale_one(dims.width)};
}

namespace {

// Half-sample symmetric border: ... c b a | a b c ... | c b a ...
int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

double keys_kernel(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

struct Tap {
  std::array<int, 4> index;
  std::array<double, 4> weight;
};

std::vector<Tap> bicubic_taps(int src_len, int dst_len, double factor) {
  std::vector<Tap> taps(static_cast<std::size_t>(dst_len));
  for (int d = 0; d < dst_len; ++d) {
    const double src = (d + 0.5) / factor - 0.5;
    const int base = static_cast<int>(std::floor(src));
    const double frac = src - base;
    Tap& t = taps[static_cast<std::size_t>(d)];
    for (int k = 0; k < 4; ++k) {
      t.index[k] = reflect_index(base - 1 + k, src_len);
      t.weight[k] = keys_kernel(frac - (k - 1));
    }
  }
  return taps;
}

ImageTensor upsample_bicubic(const ImageTensor& img, Dims out, double factor) {
  const int c = img.channels();
  const auto col_taps = bicubic_taps(img.width(), out.width, factor);
  const auto row_taps = bicubic_taps(img.height(), out.height, factor);

  ImageTensor horiz(img.height(), out.width, c);
  for (int r = 0; r < img.height(); ++r) {
    for (int x = 0; x < out.width; ++x) {
      const Tap& t = col_taps[static_cast<std::size_t>(x)];
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) acc += t.weight[k] * img.at(r, t.index[k], ch);
        horiz.at(r, x, ch) = acc;
      }
    }
  }
  ImageTensor result(out.height, out.width, c);
  for (int y = 0; y < out.height; ++y) {
    const Tap& t = row_taps[static_cast<std::size_t>(y)];
    for (int x = 0; x < out.width; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int k = 0; k < 4; ++k) acc += t.weight[k] * horiz.at(t.index[k], x, ch);
        result.at(y, x, ch) = acc;
      }
    }
  }
  return result;
}

ImageTensor downsample_nearest(const ImageTensor& img, Dims out, int shift) {
  ImageTensor result(out.height, out.width, img.channels());
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      for (int ch = 0; ch < img.channels(); ++ch) {
        result.at(y, x, ch) = img.at(y << shift, x << shift, ch);
      }
    }
  }
  return result;
}

void require_same_shape(const ImageTensor& a, const ImageTensor& b) {
  if (!a.same_shape(b)) throw DimensionMismatchError("image shapes differ");
}

}  // namespace

ImageTensor resize(const ImageTensor& img, ScaleFactor factor) {
  const Dims out = scaled_dims(img.dims(), factor);
  const int n = factor.exponent();
  if (n == 0) return img;
  if (n > 0) return downsample_nearest(img, out, n);
  return upsample_bicubic(img, out, factor.value());
}

ImageTensor inverse_resize(const ImageTensor& img, ScaleFactor factor, Dims original) {
  if (scaled_dims(original, factor) != img.dims()) {
    throw InvalidScaleError("image dims do not match original dims at this scale");
  }
  return resize(img, factor.inverse());
}

void project_inplace(ImageTensor& img) {
  for (double& v : img.data()) v = std::clamp(v, 0.0, 1.0);
}

ImageTensor project(const ImageTensor& img) {
  ImageTensor out = img;
  project_inplace(out);
  return out;
}

double linf_distance(const ImageTensor& a, const ImageTensor& b) {
  require_same_shape(a, b);
  double worst = 0.0;
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) worst = std::max(worst, std::abs(da[i] - db[i]));
  return worst;
}

double l2_distance_squared(const ImageTensor& a, const ImageTensor& b) {
  require_same_shape(a, b);
  double acc = 0.0;
  const auto da = a.data();
  const auto db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = da[i] - db[i];
    acc += d * d;
  }
  return acc;
}

double psnr(const ImageTensor& img, const ImageTensor& reference) {
  const double mse = l2_distance_squared(img, reference) / static_cast<double>(img.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

}  // namespace mdda
