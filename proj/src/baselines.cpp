#include "mdda/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mdda {

ImageTensor bit_depth_reduce(const ImageTensor& img, int bits) {
  if (bits < 1 || bits > 8) throw std::invalid_argument("bit depth must be in [1,8]");
  const double levels = static_cast<double>((1 << bits) - 1);
  ImageTensor out = img;
  for (double& v : out.data()) v = std::floor(std::clamp(v, 0.0, 1.0) * levels + 0.5) / levels;
  return out;
}

}  // namespace mdda
