#pragma once

#include <cstdint>

#include "mdda/attacks.hpp"
#include "mdda/config.hpp"
#include "mdda/dataset.hpp"
#include "mdda/model.hpp"
#include "mdda/pipeline.hpp"

namespace mdda {

/// The fixed desk-scale experiment: synthetic lesion data, the MLP victim,
/// a PGD attacker and MDDA settings suited to 32x32 inputs. Every random
/// component draws its seed from one master seed.
struct ToySetup {
  std::uint64_t seed = 0;
  SyntheticSpec train_data;
  SyntheticSpec test_data;
  TrainConfig train;
  AttackConfig attack;
  MddaConfig mdda;
  BdrConfig bdr;
};

/// 2000 train / 400 test images, 64 hidden units, PGD-100 at 6/255, and MDDA
/// with sigma2 = 0.125, 3 blocks, scales {1/2, 1, 2} and gamma = 5 / per-step
/// noise std (about 24.5 here). The 1/4 level of a 32x32 image is 8x8, which
/// erases the smaller lesions, and the library's 0.25 coefficient flattens
/// images this small.
ToySetup make_toy_setup(std::uint64_t seed);

/// Overlays the data, model, attack, purification and defense keys of `kv`.
void apply_config(const KeyValueConfig& kv, ToySetup& setup);

}  // namespace mdda
