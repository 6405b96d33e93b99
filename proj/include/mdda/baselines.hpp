#pragma once

#include "mdda/image.hpp"

namespace mdda {

struct BdrConfig {
  int bits = 3;
};

/// Quantises every sample to 2^bits levels: round-half-up(v * L) / L with
/// L = 2^bits - 1. Input is clamped to [0,1] first. bits must be in [1,8].
ImageTensor bit_depth_reduce(const ImageTensor& img, int bits);

}  // namespace mdda
