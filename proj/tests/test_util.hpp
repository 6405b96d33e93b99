#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include "mdda/image.hpp"
#include "mdda/rng.hpp"

namespace test {

inline mdda::ImageTensor random_image(int h, int w, int c, std::uint64_t seed) {
  mdda::Rng rng(seed);
  mdda::ImageTensor img(h, w, c);
  for (double& v : img.values()) v = rng.uniform();
  return img;
}

/// Diagonal ramp from `lo` in the top-left corner to `hi` in the bottom-right.
inline mdda::ImageTensor linear_gradient(int h, int w, double lo = 0.2, double hi = 0.8) {
  mdda::ImageTensor img(h, w, 1);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      img.at(i, j, 0) = lo + (hi - lo) * static_cast<double>(i + j) / (h + w - 2);
    }
  }
  return img;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("mdda_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace test
