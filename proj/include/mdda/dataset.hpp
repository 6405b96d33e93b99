#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mdda/image.hpp"

namespace mdda {

struct LabeledDataset {
  std::vector<ImageTensor> images;
  std::vector<int> labels;
  std::vector<std::string> class_names;
  std::string split;

  std::size_t size() const { return images.size(); }
  int num_classes() const { return static_cast<int>(class_names.size()); }
  /// Labels in range, one label per image, uniform image shape.
  void validate() const;
};

/// Parameters of the synthetic lesion-like image generator.
struct SyntheticSpec {
  int size = 32;          ///< square image side
  int count = 2000;
  std::uint64_t seed = 0;
  std::string split = "train";
};

/// Grayscale images of a darker blob on a noisy background. The four classes
/// differ in blob shape (small round, large round, elongated, ring) and carry
/// a faint fixed per-class texture.
/// Labels cycle through the classes so every class has count/4 images.
/// Pixels are quantised to multiples of 1/255 so files round-trip exactly.
LabeledDataset generate_lesion_dataset(const SyntheticSpec& spec);

const std::vector<std::string>& lesion_class_names();

/// Writes `dir/NNNNN.pgm` per image plus `dir/labels.csv` (file,label) and
/// `dir/classes.txt`.
void save_dataset(const LabeledDataset& data, const std::filesystem::path& dir);
LabeledDataset load_dataset(const std::filesystem::path& dir);

}  // namespace mdda
