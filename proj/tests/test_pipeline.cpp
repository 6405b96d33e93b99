#include <cmath>

#include "doctest.h"
#include "mdda/pipeline.hpp"
#include "test_util.hpp"

using namespace mdda;

namespace {

std::vector<ScaleFactor> default_scales() { return MddaConfig{}.scales; }

MddaConfig identity_config() {
  MddaConfig cfg;
  cfg.scales = {ScaleFactor{}};
  cfg.n_blocks = 1;
  cfg.sigma2 = 0.0;
  cfg.tv_gamma = 1e6;
  return cfg;
}

}  // namespace

TEST_CASE("default scales") {
  const auto s = default_scales();
  REQUIRE(s.size() == 4);
  CHECK(s[0].to_string() == "1/4");
  CHECK(s[3].to_string() == "2");
}

TEST_CASE("pyramid of a 224x224 image") {
  const ImageTensor img(224, 224, 3, 0.5);
  const ScalePyramid p = build_pyramid(img, default_scales());
  REQUIRE(p.levels.size() == 4);
  CHECK(p.levels[0].image.dims() == Dims{56, 56});
  CHECK(p.levels[1].image.dims() == Dims{112, 112});
  CHECK(p.levels[2].image.dims() == Dims{224, 224});
  CHECK(p.levels[3].image.dims() == Dims{448, 448});
  CHECK(p.levels[2].image == img);
  for (const auto& level : p.levels) {
    for (double v : level.image.values()) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));
  }
}

TEST_CASE("pyramid errors and degenerate pyramid") {
  const ImageTensor odd(10, 10, 1);
  CHECK_THROWS_AS(build_pyramid(odd, default_scales()), InvalidScaleError);
  const ImageTensor img = test::random_image(8, 8, 1, 3);
  const ScalePyramid single = build_pyramid(img, {ScaleFactor{}});
  REQUIRE(single.levels.size() == 1);
  CHECK(single.levels[0].image == img);
  CHECK(collapse(single) == img);
  CHECK_THROWS(build_pyramid(img, {ScaleFactor{}, ScaleFactor::from_exponent(1)}));
}

TEST_CASE("one-hop neighbours") {
  const ScalePyramid p = build_pyramid(ImageTensor(8, 8, 1), default_scales());
  CHECK(p.neighbours(0) == std::vector<std::size_t>{1});
  CHECK(p.neighbours(1) == std::vector<std::size_t>{0, 2});
  CHECK(p.neighbours(2) == std::vector<std::size_t>{1, 3});
  CHECK(p.neighbours(3) == std::vector<std::size_t>{2});
}

TEST_CASE("aggregation weights and synchronous update") {
  // Hand-built pyramid with constant levels 0.1, 0.4, 0.7, 1.0.
  ScalePyramid p;
  p.original_dims = {8, 8};
  const double values[] = {0.1, 0.4, 0.7, 1.0};
  const auto scales = default_scales();
  for (std::size_t k = 0; k < 4; ++k) {
    const Dims d = scaled_dims(p.original_dims, scales[k]);
    p.levels.push_back({scales[k], ImageTensor(d.height, d.width, 1, values[k])});
  }
  const ScalePyramid a = aggregate(p);
  const double expect[] = {(0.1 + 0.4) / 2, (0.1 + 0.4 + 0.7) / 3, (0.4 + 0.7 + 1.0) / 3,
                           (0.7 + 1.0) / 2};
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(a.levels[k].image.dims() == p.levels[k].image.dims());
    for (double v : a.levels[k].image.values()) CHECK(v == doctest::Approx(expect[k]).epsilon(1e-14));
  }
}

TEST_CASE("constant pyramids are conserved") {
  const ImageTensor img(16, 16, 3, 0.6);
  const ScalePyramid p = build_pyramid(img, default_scales());
  const ScalePyramid a = aggregate(p);
  for (const auto& level : a.levels) {
    for (double v : level.image.values()) CHECK(v == doctest::Approx(0.6).epsilon(1e-14));
  }
  const ImageTensor c = collapse(a);
  CHECK(c.dims() == img.dims());
  CHECK(linf_distance(c, img) <= 1e-14);
}

TEST_CASE("smooth image survives aggregation and collapse") {
  const ImageTensor img = test::linear_gradient(32, 32);
  const ScalePyramid p = build_pyramid(img, default_scales());
  const ScalePyramid a = aggregate(p);
  // Measured: 0.0105 for aggregation, 0.0170 for collapse.
  for (std::size_t k = 0; k < p.levels.size(); ++k) {
    CHECK(linf_distance(a.levels[k].image, p.levels[k].image) <= 0.05);
  }
  CHECK(linf_distance(collapse(p), img) <= 0.05);
}

TEST_CASE("config validation and gamma default") {
  MddaConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.sigma2 = 0.125;
  cfg.n_blocks = 5;
  REQUIRE(cfg.tv());
  CHECK(cfg.noise().step_variance() == doctest::Approx(0.025).epsilon(1e-15));
  CHECK(cfg.tv()->gamma == doctest::Approx(1.0 / (4.0 * std::sqrt(0.025))).epsilon(1e-15));
  CHECK(cfg.tv()->penalty == doctest::Approx(2.0 * cfg.tv()->gamma).epsilon(1e-15));
  cfg.tv_gamma_coeff = 5.0;
  CHECK(cfg.tv()->gamma == doctest::Approx(5.0 / std::sqrt(0.025)).epsilon(1e-15));
  cfg.tv_gamma = 7.0;
  CHECK(cfg.tv()->gamma == 7.0);
  cfg.tv_gamma_coeff = 0.0;
  CHECK_THROWS(cfg.validate());
  cfg.tv_gamma_coeff = 0.25;
  cfg.sigma2 = 0.0;
  cfg.tv_gamma.reset();
  CHECK_FALSE(cfg.tv());

  MddaConfig bad;
  bad.scales = {ScaleFactor::from_exponent(1)};
  CHECK_THROWS(bad.validate());
  bad = MddaConfig{};
  bad.scales = {ScaleFactor{}, ScaleFactor{}};
  CHECK_THROWS(bad.validate());
  bad = MddaConfig{};
  bad.n_blocks = 0;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("dda step") {
  const ImageTensor img = test::random_image(8, 8, 1, 2);
  const MddaConfig id = identity_config();
  const ScalePyramid p = build_pyramid(img, id.scales);
  CHECK(linf_distance(dda_step(p, id, 1).levels[0].image, img) <= 1e-3);
  CHECK_THROWS(dda_step(p, id, 0));
  CHECK_THROWS(dda_step(p, id, 2));

  MddaConfig cfg;
  cfg.n_blocks = 3;
  cfg.seed = 11;
  const ScalePyramid q = build_pyramid(img, cfg.scales);
  const ScalePyramid s1 = dda_step(q, cfg, 2);
  const ScalePyramid s2 = dda_step(q, cfg, 2);
  for (std::size_t k = 0; k < q.levels.size(); ++k) {
    CHECK(s1.levels[k].image == s2.levels[k].image);
    for (double v : s1.levels[k].image.values()) CHECK((v >= 0.0 && v <= 1.0));
  }
  CHECK(s1.levels[2].image != dda_step(q, cfg, 1).levels[2].image);
}

TEST_CASE("purify determinism, shape and range") {
  const ImageTensor img = test::random_image(16, 16, 3, 4);
  MddaConfig cfg;
  cfg.n_blocks = 2;
  cfg.seed = 1;
  const ImageTensor a = purify(img, cfg);
  CHECK(a.dims() == img.dims());
  CHECK(a.channels() == 3);
  CHECK(a == purify(img, cfg));
  for (double v : a.values()) CHECK((v >= 0.0 && v <= 1.0));
  cfg.seed = 2;
  const ImageTensor b = purify(img, cfg);
  CHECK(b != a);
  // Two seeds give two samples of the same smoothing: close but not equal.
  CHECK(linf_distance(a, b) < 0.5);
}

TEST_CASE("degenerate configuration is the identity") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ImageTensor img = test::random_image(12, 12, 1, 900 + seed);
    CHECK(linf_distance(purify(img, identity_config()), img) <= 1e-3);
  }
  // Without an explicit gamma, sigma2 = 0 skips denoising altogether.
  MddaConfig cfg = identity_config();
  cfg.tv_gamma.reset();
  const ImageTensor img = test::random_image(12, 12, 1, 1);
  CHECK(purify(img, cfg) == img);
}

TEST_CASE("purification reduces gaussian noise on smooth images") {
  MddaConfig cfg;
  cfg.sigma2 = 0.01;
  cfg.n_blocks = 2;
  cfg.tv_gamma = 20.0;
  int better = 0;
  const int trials = 50;
  for (int i = 0; i < trials; ++i) {
    Rng rng(derive_seed(5, {static_cast<std::uint64_t>(i)}));
    // Smooth fixture: a tilted plane plus a soft bump.
    ImageTensor clean(32, 32, 1);
    const double a = rng.uniform(-0.4, 0.4);
    const double b = rng.uniform(-0.4, 0.4);
    const double cy = rng.uniform(8, 24);
    const double cx = rng.uniform(8, 24);
    for (int y = 0; y < 32; ++y) {
      for (int x = 0; x < 32; ++x) {
        const double r2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
        clean.at(y, x, 0) = 0.5 + a * (y - 16) / 32 + b * (x - 16) / 32 - 0.2 * std::exp(-r2 / 40);
      }
    }
    ImageTensor noisy = clean;
    for (double& v : noisy.values()) v = std::clamp(v + 0.05 * rng.normal(), 0.0, 1.0);
    cfg.seed = static_cast<std::uint64_t>(i);
    if (psnr(purify(noisy, cfg), clean) > psnr(noisy, clean)) ++better;
  }
  CHECK(better >= 45);
}
