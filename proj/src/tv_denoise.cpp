#include "mdda/tv_denoise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace mdda {

TvConfig TvConfig::with_gamma(double gamma) {
  TvConfig cfg;
  cfg.gamma = gamma;
  cfg.penalty = 2.0 * gamma;
  return cfg;
}

void TvConfig::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("tv gamma must be > 0");
  if (!(penalty > 0.0) || !std::isfinite(penalty)) {
    throw std::invalid_argument("tv penalty must be > 0");
  }
  if (!(tol > 0.0)) throw std::invalid_argument("tv tol must be > 0");
  if (max_outer_iters <= 0) throw std::invalid_argument("tv max_outer_iters must be positive");
  if (gauss_seidel_sweeps <= 0) throw std::invalid_argument("tv gauss_seidel_sweeps must be positive");
}

namespace {

// One channel stored row-major, H x W.
struct Plane {
  int h = 0;
  int w = 0;
  std::vector<double> v;

  double& operator()(int i, int j) { return v[static_cast<std::size_t>(i) * w + j]; }
  double operator()(int i, int j) const { return v[static_cast<std::size_t>(i) * w + j]; }
};

Plane plane_of(const ImageTensor& img, int ch) {
  const ImageTensor c = img.channel(ch);
  return {img.height(), img.width(), c.values()};
}

double plane_tv(const Plane& u) {
  double tv = 0.0;
  for (int i = 0; i < u.h; ++i) {
    for (int j = 0; j < u.w; ++j) {
      if (j + 1 < u.w) tv += std::abs(u(i, j + 1) - u(i, j));
      if (i + 1 < u.h) tv += std::abs(u(i + 1, j) - u(i, j));
    }
  }
  return tv;
}

double plane_objective(const Plane& u, const Plane& f, double gamma) {
  double fid = 0.0;
  for (std::size_t k = 0; k < u.v.size(); ++k) {
    const double d = u.v[k] - f.v[k];
    fid += d * d;
  }
  return plane_tv(u) + 0.5 * gamma * fid;
}

// Branch-free: the sign of x is close to random on noisy input.
double shrink(double x, double t) { return std::max(x - t, 0.0) + std::min(x + t, 0.0); }

void check_finite(const ImageTensor& img) {
  for (double v : img.data()) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite value in TV denoiser input");
  }
}

// Exact minimisers lie inside [min f, max f]; clamping an approximate
// iterate to that interval lowers both terms of the objective.
void clamp_to_range(Plane& u, const Plane& f) {
  const auto [lo, hi] = std::minmax_element(f.v.begin(), f.v.end());
  for (double& x : u.v) x = std::clamp(x, *lo, *hi);
}

Plane split_bregman_plane(const Plane& f, const TvConfig& cfg) {
  const int h = f.h;
  const int w = f.w;
  const double gamma = cfg.gamma;
  const double lambda = cfg.penalty;
  const double thresh = 1.0 / lambda;

  Plane u = f;
  // Horizontal edges (i,j)->(i,j+1) live in an H x (W-1) grid; vertical
  // edges (i,j)->(i+1,j) in an (H-1) x W grid.
  Plane dx{h, std::max(w - 1, 0), {}};
  Plane bx = dx;
  Plane dy{std::max(h - 1, 0), w, {}};
  Plane by = dy;
  dx.v.assign(static_cast<std::size_t>(dx.h) * dx.w, 0.0);
  bx.v = dx.v;
  dy.v.assign(static_cast<std::size_t>(dy.h) * dy.w, 0.0);
  by.v = dy.v;
  // Start from d = grad f, b = 0: the first u-solve then returns f instead of
  // a heavily smoothed f, which matters when gamma is large.
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j + 1 < w; ++j) dx(i, j) = f(i, j + 1) - f(i, j);
  }
  for (int i = 0; i + 1 < h; ++i) {
    for (int j = 0; j < w; ++j) dy(i, j) = f(i + 1, j) - f(i, j);
  }

  // Per-pixel diagonal of (gamma + penalty * L) under replicate borders.
  std::vector<double> inv_diag(u.v.size());
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const int nbrs = (j > 0) + (j + 1 < w) + (i > 0) + (i + 1 < h);
      inv_diag[static_cast<std::size_t>(i) * w + j] = 1.0 / (gamma + lambda * nbrs);
    }
  }
  std::vector<double> lambda_inv_diag(inv_diag);
  for (double& x : lambda_inv_diag) x *= lambda;

  std::vector<double> prev;
  std::vector<double> rhs(u.v.size());
  for (int outer = 0; outer < cfg.max_outer_iters; ++outer) {
    prev = u.v;

    // (gamma f + penalty div(b - d)) / diag, fixed during the sweeps.
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        double r = 0.0;
        if (j + 1 < w) r -= dx(i, j) - bx(i, j);
        if (j > 0) r += dx(i, j - 1) - bx(i, j - 1);
        if (i + 1 < h) r -= dy(i, j) - by(i, j);
        if (i > 0) r += dy(i - 1, j) - by(i - 1, j);
        const std::size_t k = static_cast<std::size_t>(i) * w + j;
        rhs[k] = (gamma * f(i, j) + lambda * r) * inv_diag[k];
      }
    }

    double* uv = u.v.data();
    for (int sweep = 0; sweep < cfg.gauss_seidel_sweeps; ++sweep) {
      for (int i = 0; i < h; ++i) {
        double* row = uv + static_cast<std::size_t>(i) * w;
        const double* up = i > 0 ? row - w : nullptr;
        const double* down = i + 1 < h ? row + w : nullptr;
        const double* b = rhs.data() + static_cast<std::size_t>(i) * w;
        const double* scale = lambda_inv_diag.data() + static_cast<std::size_t>(i) * w;
        double left = 0.0;  // u(i, j - 1), already updated this sweep
        for (int j = 0; j < w; ++j) {
          double s = j + 1 < w ? row[j + 1] : 0.0;
          if (down) s += down[j];
          if (up) s += up[j];
          left = b[j] + scale[j] * (s + left);
          row[j] = left;
        }
      }
    }

    for (int i = 0; i < h; ++i) {
      for (int j = 0; j + 1 < w; ++j) {
        const double g = u(i, j + 1) - u(i, j) + bx(i, j);
        dx(i, j) = shrink(g, thresh);
        bx(i, j) = g - dx(i, j);
      }
    }
    for (int i = 0; i + 1 < h; ++i) {
      for (int j = 0; j < w; ++j) {
        const double g = u(i + 1, j) - u(i, j) + by(i, j);
        dy(i, j) = shrink(g, thresh);
        by(i, j) = g - dy(i, j);
      }
    }

    // Relative change, measured against the spread of u so the stopping
    // point does not move when a constant is added to the input.
    double mean = 0.0;
    for (double x : u.v) mean += x;
    mean /= static_cast<double>(u.v.size());
    double change = 0.0;
    double spread = 0.0;
    for (std::size_t k = 0; k < u.v.size(); ++k) {
      change += (u.v[k] - prev[k]) * (u.v[k] - prev[k]);
      spread += (u.v[k] - mean) * (u.v[k] - mean);
    }
    if (outer > 0 && (change == 0.0 || (spread > 0.0 && std::sqrt(change / spread) <= cfg.tol))) {
      break;
    }
  }
  clamp_to_range(u, f);
  return u;
}

// Accelerated projected gradient on the dual
//   max_{|p| <= 1}  <p, D f> - |D^T p|^2 / (2 gamma),   u = f - D^T p / gamma,
// stopped on the primal-dual gap, which bounds gamma/2 |u - u*|^2.
Plane dual_projected_gradient_plane(const Plane& f, double gamma) {
  const int h = f.h;
  const int w = f.w;
  const std::size_t nh = static_cast<std::size_t>(h) * (w - 1);
  const std::size_t nv = static_cast<std::size_t>(h - 1) * w;
  std::vector<double> p(nh + nv, 0.0), p_prev = p, y = p;
  const auto hidx = [&](int i, int j) { return static_cast<std::size_t>(i) * (w - 1) + j; };
  const auto vidx = [&](int i, int j) { return nh + static_cast<std::size_t>(i) * w + j; };

  Plane u = f;
  const auto primal_from = [&](const std::vector<double>& q, Plane& out) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        double dtp = 0.0;
        if (j + 1 < w) dtp -= q[hidx(i, j)];
        if (j > 0) dtp += q[hidx(i, j - 1)];
        if (i + 1 < h) dtp -= q[vidx(i, j)];
        if (i > 0) dtp += q[vidx(i - 1, j)];
        out(i, j) = f(i, j) - dtp / gamma;
      }
    }
  };
  const auto gap_at = [&](const std::vector<double>& q, const Plane& uq) {
    // D(p) = <p, D f> - |D^T p|^2/(2 gamma) and D^T p = gamma (f - u).
    double pdf = 0.0;
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        if (j + 1 < w) pdf += q[hidx(i, j)] * (f(i, j + 1) - f(i, j));
        if (i + 1 < h) pdf += q[vidx(i, j)] * (f(i + 1, j) - f(i, j));
      }
    }
    double dtp2 = 0.0;
    for (std::size_t k = 0; k < f.v.size(); ++k) {
      const double d = gamma * (f.v[k] - uq.v[k]);
      dtp2 += d * d;
    }
    return plane_objective(uq, f, gamma) - (pdf - dtp2 / (2.0 * gamma));
  };

  const double step = gamma / 8.0;  // |D|^2 <= 8 for 2-D forward differences
  constexpr double kGapTol = 1e-13;
  constexpr long kMaxIters = 5'000'000;
  double t = 1.0;
  Plane uy = f;
  for (long it = 0; it < kMaxIters; ++it) {
    primal_from(y, uy);
    p_prev = p;
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        if (j + 1 < w) {
          const std::size_t k = hidx(i, j);
          p[k] = std::clamp(y[k] + step * (uy(i, j + 1) - uy(i, j)), -1.0, 1.0);
        }
        if (i + 1 < h) {
          const std::size_t k = vidx(i, j);
          p[k] = std::clamp(y[k] + step * (uy(i + 1, j) - uy(i, j)), -1.0, 1.0);
        }
      }
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double momentum = (t - 1.0) / t_next;
    for (std::size_t k = 0; k < p.size(); ++k) y[k] = p[k] + momentum * (p[k] - p_prev[k]);
    t = t_next;

    if (it % 50 == 0) {
      primal_from(p, u);
      if (gap_at(p, u) <= kGapTol) return u;
    }
  }
  primal_from(p, u);
  return u;
}

}  // namespace

double tv_seminorm(const ImageTensor& img) {
  double total = 0.0;
  for (int ch = 0; ch < img.channels(); ++ch) total += plane_tv(plane_of(img, ch));
  return total;
}

double rof_objective(const ImageTensor& candidate, const ImageTensor& observed, double gamma) {
  if (!candidate.same_shape(observed)) throw DimensionMismatchError("rof_objective: shapes differ");
  return tv_seminorm(candidate) + 0.5 * gamma * l2_distance_squared(candidate, observed);
}

ImageTensor denoise_split_bregman(const ImageTensor& img, const TvConfig& cfg) {
  cfg.validate();
  check_finite(img);
  ImageTensor out(img.height(), img.width(), img.channels());
  for (int ch = 0; ch < img.channels(); ++ch) {
    const Plane u = split_bregman_plane(plane_of(img, ch), cfg);
    out.set_channel(ch, ImageTensor(u.h, u.w, 1, u.v));
  }
  return out;
}

ImageTensor denoise_brute_force(const ImageTensor& img, const TvConfig& cfg) {
  cfg.validate();
  check_finite(img);
  if (img.height() > 16 || img.width() > 16) {
    throw std::invalid_argument("denoise_brute_force: image larger than 16x16");
  }
  ImageTensor out(img.height(), img.width(), img.channels());
  for (int ch = 0; ch < img.channels(); ++ch) {
    const Plane f = plane_of(img, ch);
    const Plane u = (f.h == 1 && f.w == 1) ? f : dual_projected_gradient_plane(f, cfg.gamma);
    out.set_channel(ch, ImageTensor(u.h, u.w, 1, u.v));
  }
  return out;
}

}  // namespace mdda
