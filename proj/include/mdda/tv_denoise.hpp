#pragma once

#include "mdda/image.hpp"

namespace mdda {

/// Settings for anisotropic ROF denoising,
///   min_u  TV(u) + gamma/2 * ||u - f||^2,
/// with TV(u) = sum |u(i+1,j) - u(i,j)| + |u(i,j+1) - u(i,j)| and replicated
/// borders.
struct TvConfig {
  double gamma = 1.0;       ///< fidelity weight; smaller smooths more
  double penalty = 2.0;     ///< split-Bregman quadratic penalty
  int max_outer_iters = 40;
  double tol = 1e-4;        ///< relative L2 change of u between outer iterations
  int gauss_seidel_sweeps = 2;

  /// Defaults for a given gamma (penalty = 2 * gamma).
  static TvConfig with_gamma(double gamma);
  void validate() const;
};

/// Anisotropic TV seminorm summed over channels.
double tv_seminorm(const ImageTensor& img);

/// TV(candidate) + gamma/2 * ||candidate - observed||^2.
double rof_objective(const ImageTensor& candidate, const ImageTensor& observed, double gamma);

/// Split-Bregman ROF solver, channels handled independently.
ImageTensor denoise_split_bregman(const ImageTensor& img, const TvConfig& cfg);

/// Reference minimiser for small images (at most 16x16): projected gradient on
/// the dual problem, run until the duality gap is below 1e-13. Slow but
/// shares no code path with the split-Bregman solver.
ImageTensor denoise_brute_force(const ImageTensor& img, const TvConfig& cfg);

}  // namespace mdda
