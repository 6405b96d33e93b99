#include "mdda/toy_setup.hpp"

#include "mdda/rng.hpp"

namespace mdda {

namespace {

enum SeedPath : std::uint64_t { kTrainData = 1, kTestData, kModel, kAttack, kPurify };

}  // namespace

ToySetup make_toy_setup(std::uint64_t seed) {
  ToySetup s;
  s.seed = seed;
  s.train_data = {32, 2000, derive_seed(seed, {kTrainData}), "train"};
  s.test_data = {32, 400, derive_seed(seed, {kTestData}), "test"};
  s.train.seed = derive_seed(seed, {kModel});
  s.attack.method = AttackMethod::pgd;
  s.attack.epsilon = 6.0 / 255.0;
  s.attack.steps = 100;
  s.attack.seed = derive_seed(seed, {kAttack});
  s.mdda.scales = {ScaleFactor::from_exponent(1), ScaleFactor::from_exponent(0),
                   ScaleFactor::from_exponent(-1)};
  s.mdda.sigma2 = 0.125;
  s.mdda.n_blocks = 3;
  s.mdda.tv_gamma_coeff = 5.0;
  s.mdda.seed = derive_seed(seed, {kPurify});
  return s;
}

void apply_config(const KeyValueConfig& kv, ToySetup& setup) {
  if (kv.has("image_size")) setup.train_data.size = setup.test_data.size = kv.get_int("image_size");
  if (kv.has("n_train")) setup.train_data.count = kv.get_int("n_train");
  if (kv.has("n_test")) setup.test_data.count = kv.get_int("n_test");
  apply_config(kv, setup.train);
  apply_config(kv, setup.attack);
  apply_config(kv, setup.mdda);
  apply_config(kv, setup.bdr);
}

}  // namespace mdda
