#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "mdda/dataset.hpp"
#include "mdda/image.hpp"

namespace mdda {

/// Fully connected layer, weights row-major (outputs x inputs).
struct DenseLayer {
  int inputs = 0;
  int outputs = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  double& w(int out, int in) { return weights[static_cast<std::size_t>(out) * inputs + in]; }
  double w(int out, int in) const { return weights[static_cast<std::size_t>(out) * inputs + in]; }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Multilayer perceptron: flatten -> (dense -> ReLU)* -> dense -> logits.
class ClassifierModel {
 public:
  ClassifierModel() = default;
  /// Zero-initialised network. `hidden` may be empty (linear softmax model).
  ClassifierModel(int height, int width, int channels, std::vector<int> hidden, int classes);

  /// He-normal weights, zero biases, drawn from `seed`.
  static ClassifierModel random(int height, int width, int channels, std::vector<int> hidden,
                                int classes, std::uint64_t seed);

  int input_height() const { return height_; }
  int input_width() const { return width_; }
  int input_channels() const { return channels_; }
  int input_size() const { return height_ * width_ * channels_; }
  int classes() const { return layers_.empty() ? 0 : layers_.back().outputs; }

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  /// Throws DimensionMismatchError if `img` does not fit the input layer.
  void check_input(const ImageTensor& img) const;
  /// Throws if layer shapes do not chain or weights are not finite.
  void validate() const;

  friend bool operator==(const ClassifierModel&, const ClassifierModel&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<DenseLayer> layers_;
};

std::vector<double> forward(const ClassifierModel& model, const ImageTensor& img);

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

/// Gradient w.r.t. the input pixels of  sum_k upstream[k] * logit_k(img).
ImageTensor logits_input_gradient(const ClassifierModel& model, const ImageTensor& img,
                                  std::span<const double> upstream);

struct LossAndGradient {
  double loss = 0.0;
  ImageTensor grad;
};

/// Cross-entropy of softmax(logits) against `label`, and its input gradient.
LossAndGradient loss_and_input_gradient(const ClassifierModel& model, const ImageTensor& img,
                                        int label);

/// argmax of the logits, lowest index on ties.
int predict(const ClassifierModel& model, const ImageTensor& img);
double accuracy(const ClassifierModel& model, const LabeledDataset& data);

struct TrainConfig {
  std::vector<int> hidden = {64};
  int epochs = 60;
  int batch_size = 32;
  double learning_rate = 0.003;
  double momentum = 0.9;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
};

struct TrainResult {
  ClassifierModel model;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;  ///< accuracy on the validation set, if given
};

/// Minibatch SGD with momentum on the cross-entropy loss. Single threaded and
/// fully determined by `cfg.seed`.
TrainResult train(const LabeledDataset& train_set, const TrainConfig& cfg,
                  const LabeledDataset* val_set = nullptr);

class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Little-endian binary format:
///   "MDDAMLP1", u32 height, u32 width, u32 channels, u32 layer_count,
///   then per layer u32 inputs, u32 outputs, f64 weights[outputs*inputs]
///   (row-major), f64 bias[outputs].
void save_model(const ClassifierModel& model, const std::filesystem::path& path);
ClassifierModel load_model(const std::filesystem::path& path);

}  // namespace mdda
