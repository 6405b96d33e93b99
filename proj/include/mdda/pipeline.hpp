#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mdda/diffusion.hpp"
#include "mdda/image.hpp"
#include "mdda/tv_denoise.hpp"

namespace mdda {

/// Hyperparameters of the multiscale diffusion/denoising/aggregation defense.
struct MddaConfig {
  std::vector<ScaleFactor> scales = {ScaleFactor::from_exponent(2), ScaleFactor::from_exponent(1),
                                     ScaleFactor::from_exponent(0), ScaleFactor::from_exponent(-1)};
  int n_blocks = 5;  ///< number of DDA blocks, also the diffusion step count
  double sigma2 = 0.125;
  std::uint64_t seed = 0;

  // Unset gamma resolves to tv_gamma_coeff / per-step noise std, so heavier
  // noise is smoothed harder. Unset penalty resolves to 2 * gamma.
  std::optional<double> tv_gamma;
  double tv_gamma_coeff = 0.25;
  std::optional<double> tv_penalty;
  double tv_tol = 1e-4;
  int tv_max_iters = 40;
  int tv_sweeps = 2;

  NoiseConfig noise() const { return {sigma2, n_blocks, seed}; }
  /// Resolved TV settings; empty when no gamma is set and sigma2 == 0,
  /// i.e. the gamma -> infinity limit where denoising is the identity.
  std::optional<TvConfig> tv() const;
  void validate() const;
};

struct PyramidLevel {
  ScaleFactor scale;
  ImageTensor image;
};

/// Levels sorted by ascending scale. Neighbours of a level are the levels
/// directly before and after it.
struct ScalePyramid {
  std::vector<PyramidLevel> levels;
  Dims original_dims;

  std::vector<std::size_t> neighbours(std::size_t level) const;
};

ScalePyramid build_pyramid(const ImageTensor& img, const std::vector<ScaleFactor>& scales);

/// Synchronous one-hop averaging: every level becomes the mean of itself and
/// its neighbours resampled to its resolution, all read from the input.
ScalePyramid aggregate(const ScalePyramid& pyramid);

/// Seed of the noise stream for pyramid level `level` at block `t`.
std::uint64_t level_stream_seed(std::uint64_t seed, std::size_t level, int t);

/// One DDA block: per level diffuse -> TV denoise -> project, then aggregate
/// and project again.
ScalePyramid dda_step(const ScalePyramid& pyramid, const MddaConfig& cfg, int t);

/// Maps every level back to the original size, averages, and projects.
ImageTensor collapse(const ScalePyramid& pyramid);

/// Full purification of one image.
ImageTensor purify(const ImageTensor& img, const MddaConfig& cfg);

}  // namespace mdda
