#pragma once

#include <cstdint>

#include "mdda/image.hpp"
#include "mdda/rng.hpp"

namespace mdda {

/// Truncated diffusion settings: total variance `sigma2` spread evenly over
/// `t_prime` steps (scaling fixed to 1).
struct NoiseConfig {
  double sigma2 = 0.125;
  int t_prime = 5;
  std::uint64_t seed = 0;

  double step_variance() const;
  void validate() const;
};

/// I.i.d. Normal(0, variance) field shaped like an image.
ImageTensor sample_gaussian_field(int height, int width, int channels, double variance, Rng& rng);

/// img + N(0, sigma2 / t_prime), sampled per pixel and channel. No clamping.
ImageTensor diffuse_step(const ImageTensor& img, const NoiseConfig& cfg, Rng& rng);

}  // namespace mdda
