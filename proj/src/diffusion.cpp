#include "mdda/diffusion.hpp"

#include <cmath>
#include <stdexcept>

namespace mdda {

double NoiseConfig::step_variance() const {
  validate();
  return sigma2 / t_prime;
}

void NoiseConfig::validate() const {
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) {
    throw std::invalid_argument("sigma2 must be a finite non-negative number");
  }
  if (t_prime <= 0) throw std::invalid_argument("t_prime must be positive");
}

ImageTensor sample_gaussian_field(int height, int width, int channels, double variance, Rng& rng) {
  if (!(variance >= 0.0) || !std::isfinite(variance)) {
    throw std::invalid_argument("variance must be a finite non-negative number");
  }
  ImageTensor field(height, width, channels, 0.0);
  if (variance == 0.0) return field;
  const double sd = std::sqrt(variance);
  for (double& v : field.data()) v = sd * rng.normal();
  return field;
}

ImageTensor diffuse_step(const ImageTensor& img, const NoiseConfig& cfg, Rng& rng) {
  const ImageTensor noise =
      sample_gaussian_field(img.height(), img.width(), img.channels(), cfg.step_variance(), rng);
  ImageTensor out = img;
  auto dst = out.data();
  const auto src = noise.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  return out;
}

}  // namespace mdda
