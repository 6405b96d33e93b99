#include "mdda/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mdda {

std::optional<TvConfig> MddaConfig::tv() const {
  double gamma = 0.0;
  if (tv_gamma) {
    gamma = *tv_gamma;
  } else {
    const double step_sd = std::sqrt(noise().step_variance());
    if (step_sd == 0.0) return std::nullopt;
    gamma = tv_gamma_coeff / step_sd;
  }
  TvConfig cfg;
  cfg.gamma = gamma;
  cfg.penalty = tv_penalty.value_or(2.0 * gamma);
  cfg.tol = tv_tol;
  cfg.max_outer_iters = tv_max_iters;
  cfg.gauss_seidel_sweeps = tv_sweeps;
  cfg.validate();
  return cfg;
}

void MddaConfig::validate() const {
  if (scales.empty()) throw std::invalid_argument("scales must not be empty");
  for (std::size_t i = 1; i < scales.size(); ++i) {
    if (!(scales[i - 1] < scales[i])) {
      throw std::invalid_argument("scales must be strictly ascending");
    }
  }
  if (std::find(scales.begin(), scales.end(), ScaleFactor{}) == scales.end()) {
    throw std::invalid_argument("scales must contain 1");
  }
  if (n_blocks <= 0) throw std::invalid_argument("n_blocks must be positive");
  if (!(tv_gamma_coeff > 0.0)) throw std::invalid_argument("tv_gamma_coeff must be positive");
  noise().validate();
  (void)tv();
}

std::vector<std::size_t> ScalePyramid::neighbours(std::size_t level) const {
  std::vector<std::size_t> out;
  if (level > 0) out.push_back(level - 1);
  if (level + 1 < levels.size()) out.push_back(level + 1);
  return out;
}

ScalePyramid build_pyramid(const ImageTensor& img, const std::vector<ScaleFactor>& scales) {
  if (scales.empty()) throw std::invalid_argument("scales must not be empty");
  for (std::size_t i = 1; i < scales.size(); ++i) {
    if (!(scales[i - 1] < scales[i])) {
      throw std::invalid_argument("scales must be strictly ascending");
    }
  }
  ScalePyramid pyramid;
  pyramid.original_dims = img.dims();
  pyramid.levels.reserve(scales.size());
  for (ScaleFactor s : scales) pyramid.levels.push_back({s, resize(img, s)});
  return pyramid;
}

ScalePyramid aggregate(const ScalePyramid& pyramid) {
  ScalePyramid out;
  out.original_dims = pyramid.original_dims;
  out.levels.reserve(pyramid.levels.size());
  for (std::size_t k = 0; k < pyramid.levels.size(); ++k) {
    const PyramidLevel& self = pyramid.levels[k];
    ImageTensor sum = self.image;
    const auto nbrs = pyramid.neighbours(k);
    for (std::size_t n : nbrs) {
      const PyramidLevel& other = pyramid.levels[n];
      const ImageTensor moved = resize(other.image, self.scale.ratio_to(other.scale));
      auto dst = sum.data();
      const auto src = moved.data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
    const double weight = 1.0 / (1.0 + static_cast<double>(nbrs.size()));
    for (double& v : sum.data()) v *= weight;
    out.levels.push_back({self.scale, std::move(sum)});
  }
  return out;
}

std::uint64_t level_stream_seed(std::uint64_t seed, std::size_t level, int t) {
  return derive_seed(seed, {0x6d646461ULL, level, static_cast<std::uint64_t>(t)});
}

ScalePyramid dda_step(const ScalePyramid& pyramid, const MddaConfig& cfg, int t) {
  if (t < 1 || t > cfg.n_blocks) throw std::invalid_argument("dda_step: t out of range");
  const NoiseConfig noise = cfg.noise();
  const std::optional<TvConfig> tv = cfg.tv();

  ScalePyramid stepped;
  stepped.original_dims = pyramid.original_dims;
  stepped.levels.reserve(pyramid.levels.size());
  for (std::size_t k = 0; k < pyramid.levels.size(); ++k) {
    Rng rng(level_stream_seed(cfg.seed, k, t));
    ImageTensor x = diffuse_step(pyramid.levels[k].image, noise, rng);
    if (tv) x = denoise_split_bregman(x, *tv);
    project_inplace(x);
    stepped.levels.push_back({pyramid.levels[k].scale, std::move(x)});
  }
  // Bicubic resampling can overshoot, so the average may leave [0,1].
  ScalePyramid out = aggregate(stepped);
  for (PyramidLevel& level : out.levels) project_inplace(level.image);
  return out;
}

ImageTensor collapse(const ScalePyramid& pyramid) {
  if (pyramid.levels.empty()) throw std::invalid_argument("collapse: empty pyramid");
  ImageTensor acc;
  for (const PyramidLevel& level : pyramid.levels) {
    ImageTensor back = inverse_resize(level.image, level.scale, pyramid.original_dims);
    if (acc.empty()) {
      acc = std::move(back);
      continue;
    }
    auto dst = acc.data();
    const auto src = back.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
  const double weight = 1.0 / static_cast<double>(pyramid.levels.size());
  for (double& v : acc.data()) v *= weight;
  project_inplace(acc);
  return acc;
}

ImageTensor purify(const ImageTensor& img, const MddaConfig& cfg) {
  cfg.validate();
  ScalePyramid pyramid = build_pyramid(img, cfg.scales);
  for (int t = 1; t <= cfg.n_blocks; ++t) pyramid = dda_step(pyramid, cfg, t);
  return collapse(pyramid);
}

}  // namespace mdda
