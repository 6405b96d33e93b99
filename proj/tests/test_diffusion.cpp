#include <cmath>

#include "doctest.h"
#include "mdda/diffusion.hpp"
#include "mdda/rng.hpp"
#include "test_util.hpp"

using namespace mdda;

TEST_CASE("splitmix64 reference values") {
  std::uint64_t state = 0;
  CHECK(splitmix64(state) == 0xe220a8397b1dcdafULL);
  CHECK(splitmix64(state) == 0x6e789e6aa1b965f4ULL);
  CHECK(splitmix64(state) == 0x06c45d188009454fULL);
}

TEST_CASE("xoshiro256** matches the reference recurrence") {
  // Independent re-implementation of the published algorithm.
  std::uint64_t sm = 42;
  std::uint64_t s[4];
  for (auto& x : s) x = splitmix64(sm);
  const auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
  Rng rng(42);
  for (int i = 0; i < 100; ++i) {
    const std::uint64_t expect = rotl(s[1] * 5, 7) * 9;
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    REQUIRE(rng.next_u64() == expect);
  }
}

TEST_CASE("uniforms and indices stay in range") {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    CHECK(rng.uniform_index(3) < 3u);
  }
  CHECK_THROWS(rng.uniform_index(0));
}

TEST_CASE("seeds") {
  CHECK(parse_seed("123") == 123u);
  CHECK(parse_seed("0x1F") == 31u);
  CHECK(parse_seed("18446744073709551615") == ~0ULL);
  CHECK_THROWS(parse_seed("12a"));
  CHECK_THROWS(parse_seed(""));
  CHECK_THROWS(parse_seed("-1"));
  CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
  CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
  CHECK(derive_seed(1, {0}) != derive_seed(1, {0, 0}));
}

TEST_CASE("zero-variance field is zero and negative variance is rejected") {
  Rng rng(1);
  const ImageTensor f = sample_gaussian_field(4, 5, 3, 0.0, rng);
  for (double v : f.values()) CHECK(v == 0.0);
  CHECK_THROWS_AS(sample_gaussian_field(4, 4, 1, -0.1, rng), std::invalid_argument);
}

TEST_CASE("same seed gives identical fields") {
  Rng a(99);
  Rng b(99);
  CHECK(sample_gaussian_field(8, 8, 3, 0.3, a) == sample_gaussian_field(8, 8, 3, 0.3, b));
  Rng c(100);
  Rng d(99);
  CHECK(sample_gaussian_field(8, 8, 3, 0.3, c) != sample_gaussian_field(8, 8, 3, 0.3, d));
}

TEST_CASE("per-step variance") {
  NoiseConfig cfg;
  cfg.sigma2 = 0.125;
  cfg.t_prime = 5;
  CHECK(cfg.step_variance() == doctest::Approx(0.025).epsilon(1e-15));
  cfg.t_prime = 0;
  CHECK_THROWS(cfg.validate());
  cfg.t_prime = 1;
  cfg.sigma2 = -1.0;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("diffuse step") {
  const ImageTensor img = test::random_image(6, 6, 1, 3);
  NoiseConfig cfg;
  cfg.sigma2 = 0.0;
  Rng rng(5);
  CHECK(diffuse_step(img, cfg, rng) == img);

  // Shifting the input shifts the output by the same constant.
  cfg.sigma2 = 0.125;
  ImageTensor shifted = img;
  for (double& v : shifted.values()) v += 0.25;
  Rng r1(8);
  Rng r2(8);
  const ImageTensor a = diffuse_step(img, cfg, r1);
  const ImageTensor b = diffuse_step(shifted, cfg, r2);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(b.values()[k] - a.values()[k] == doctest::Approx(0.25).epsilon(1e-12));
  }

  // Zero-mean noise: the average offset over many draws vanishes.
  double mean = 0.0;
  Rng r3(9);
  const int draws = 2000;
  for (int i = 0; i < draws; ++i) {
    const ImageTensor out = diffuse_step(img, cfg, r3);
    for (std::size_t k = 0; k < out.size(); ++k) mean += out.values()[k] - img.values()[k];
  }
  mean /= static_cast<double>(draws) * static_cast<double>(img.size());
  // Standard error is sqrt(0.025 / 72000) ~ 6e-4.
  CHECK(std::abs(mean) < 3e-3);
}

TEST_CASE("variance adds up over the diffusion steps") {
  NoiseConfig cfg;
  cfg.sigma2 = 0.125;
  cfg.t_prime = 5;
  const ImageTensor zero(1000, 1000, 1);
  ImageTensor acc = zero;
  Rng rng(2024);
  for (int t = 0; t < cfg.t_prime; ++t) acc = diffuse_step(acc, cfg, rng);
  double sum = 0.0;
  double sum2 = 0.0;
  for (double v : acc.values()) {
    sum += v;
    sum2 += v * v;
  }
  const double n = static_cast<double>(acc.size());
  const double var = sum2 / n - (sum / n) * (sum / n);
  CHECK(std::abs(var - 0.125) <= 0.02 * 0.125);
}
