#include "mdda/dataset.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "mdda/image_io.hpp"
#include "mdda/rng.hpp"

namespace mdda {

void LabeledDataset::validate() const {
  if (images.size() != labels.size()) {
    throw std::invalid_argument("dataset: image and label counts differ");
  }
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes()) {
      throw std::invalid_argument("dataset: label out of range");
    }
    if (!images[i].same_shape(images.front())) {
      throw std::invalid_argument("dataset: images differ in shape");
    }
  }
}

const std::vector<std::string>& lesion_class_names() {
  static const std::vector<std::string> names = {"small_round", "large_round", "elongated",
                                                 "ring"};
  return names;
}

namespace {

// Fixed random +-1 texture per class. It is weak (well under the
// usual attack budgets) yet perfectly predictive, so a trained model leans on
// it and an attacker can overwrite it.
double class_pattern(int cls, int y, int x) {
  Rng r(derive_seed(0x7061747465726eULL, {static_cast<std::uint64_t>(cls),
                                         static_cast<std::uint64_t>(y),
                                         static_cast<std::uint64_t>(x)}));
  return r.uniform() < 0.5 ? -1.0 : 1.0;
}

double smooth_step_out(double r, double edge, double softness) {
  return 1.0 / (1.0 + std::exp((r - edge) / softness));
}

ImageTensor render_lesion(int size, int cls, Rng& rng) {
  const double base = rng.uniform(0.62, 0.78);
  const double shade_angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double shade = rng.uniform(0.0, 0.05);
  const double center = 0.5 * (size - 1);
  const double cy = center + rng.uniform(-4.0, 4.0);
  const double cx = center + rng.uniform(-4.0, 4.0);
  const double contrast = rng.uniform(0.17, 0.27);
  const double orientation = rng.uniform(0.0, std::numbers::pi);

  double major = 0.0;
  double minor = 0.0;
  switch (cls) {
    case 0:
      major = minor = rng.uniform(3.5, 5.0);
      break;
    case 1:
      major = minor = rng.uniform(8.0, 10.5);
      break;
    case 2:
      major = rng.uniform(8.0, 10.5);
      minor = major / 2.6;
      break;
    default:
      major = minor = rng.uniform(7.5, 10.0);
      break;
  }
  const double co = std::cos(orientation);
  const double si = std::sin(orientation);

  ImageTensor img(size, size, 1);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double dy = y - cy;
      const double dx = x - cx;
      const double u = (co * dx + si * dy) / major;
      const double v = (-si * dx + co * dy) / minor;
      const double r = std::sqrt(u * u + v * v);
      double depth = smooth_step_out(r, 1.0, 0.12);
      if (cls == 3) depth *= 1.0 - 0.75 * smooth_step_out(r, 0.55, 0.08);
      const double background =
          base + shade * ((x - center) * std::cos(shade_angle) + (y - center) * std::sin(shade_angle)) /
                     size;
      const double texture = 0.03 * rng.normal() + 0.015 * class_pattern(cls, y, x);
      const double value = background - contrast * depth + texture;
      img.at(y, x, 0) = quantize_sample(value) / 255.0;
    }
  }
  return img;
}

}  // namespace

LabeledDataset generate_lesion_dataset(const SyntheticSpec& spec) {
  if (spec.size < 8 || spec.count < 0) throw std::invalid_argument("bad synthetic dataset spec");
  LabeledDataset data;
  data.class_names = lesion_class_names();
  data.split = spec.split;
  const int classes = data.num_classes();
  data.images.reserve(static_cast<std::size_t>(spec.count));
  for (int i = 0; i < spec.count; ++i) {
    const int cls = i % classes;
    Rng rng(derive_seed(spec.seed, {0x6c6573ULL, static_cast<std::uint64_t>(i)}));
    data.images.push_back(render_lesion(spec.size, cls, rng));
    data.labels.push_back(cls);
  }
  return data;
}

void save_dataset(const LabeledDataset& data, const std::filesystem::path& dir) {
  data.validate();
  std::filesystem::create_directories(dir);
  std::ofstream labels(dir / "labels.csv");
  std::ofstream classes(dir / "classes.txt");
  if (!labels || !classes) throw std::runtime_error("cannot write dataset index in " + dir.string());
  labels << "file,label\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%05zu.%s", i, data.images[i].channels() == 1 ? "pgm" : "ppm");
    save_image(data.images[i], dir / name);
    labels << name << ',' << data.labels[i] << '\n';
  }
  for (const auto& n : data.class_names) classes << n << '\n';
}

LabeledDataset load_dataset(const std::filesystem::path& dir) {
  LabeledDataset data;
  data.split = dir.filename().string();
  std::ifstream classes(dir / "classes.txt");
  if (!classes) throw std::runtime_error("missing classes.txt in " + dir.string());
  for (std::string line; std::getline(classes, line);) {
    if (!line.empty()) data.class_names.push_back(line);
  }
  std::ifstream labels(dir / "labels.csv");
  if (!labels) throw std::runtime_error("missing labels.csv in " + dir.string());
  std::string line;
  std::getline(labels, line);  // header
  while (std::getline(labels, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("malformed labels.csv line: " + line);
    data.images.push_back(load_image(dir / line.substr(0, comma)));
    data.labels.push_back(std::stoi(line.substr(comma + 1)));
  }
  data.validate();
  return data;
}

}  // namespace mdda
