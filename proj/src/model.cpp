#include "mdda/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>

#include "mdda/rng.hpp"

namespace mdda {

ClassifierModel::ClassifierModel(int height, int width, int channels, std::vector<int> hidden,
                                 int classes)
    : height_(height), width_(width), channels_(channels) {
  if (height <= 0 || width <= 0 || (channels != 1 && channels != 3)) {
    throw std::invalid_argument("bad model input shape");
  }
  if (classes <= 0) throw std::invalid_argument("model needs at least one class");
  hidden.push_back(classes);
  int inputs = input_size();
  for (int outputs : hidden) {
    if (outputs <= 0) throw std::invalid_argument("layer width must be positive");
    DenseLayer layer;
    layer.inputs = inputs;
    layer.outputs = outputs;
    layer.weights.assign(static_cast<std::size_t>(inputs) * outputs, 0.0);
    layer.bias.assign(static_cast<std::size_t>(outputs), 0.0);
    layers_.push_back(std::move(layer));
    inputs = outputs;
  }
}

ClassifierModel ClassifierModel::random(int height, int width, int channels,
                                        std::vector<int> hidden, int classes,
                                        std::uint64_t seed) {
  ClassifierModel model(height, width, channels, std::move(hidden), classes);
  Rng rng(derive_seed(seed, {0x696e6974ULL}));
  for (DenseLayer& layer : model.layers_) {
    const double sd = std::sqrt(2.0 / layer.inputs);
    for (double& w : layer.weights) w = sd * rng.normal();
  }
  return model;
}

void ClassifierModel::check_input(const ImageTensor& img) const {
  if (img.height() != height_ || img.width() != width_ || img.channels() != channels_) {
    throw DimensionMismatchError("image shape does not match model input");
  }
}

void ClassifierModel::validate() const {
  if (layers_.empty()) throw std::invalid_argument("model has no layers");
  int inputs = input_size();
  for (const DenseLayer& layer : layers_) {
    if (layer.inputs != inputs || layer.outputs <= 0 ||
        layer.weights.size() != static_cast<std::size_t>(layer.inputs) * layer.outputs ||
        layer.bias.size() != static_cast<std::size_t>(layer.outputs)) {
      throw std::invalid_argument("model layer shapes do not chain");
    }
    const auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(layer.weights.begin(), layer.weights.end(), finite) ||
        !std::all_of(layer.bias.begin(), layer.bias.end(), finite)) {
      throw std::invalid_argument("model weights are not finite");
    }
    inputs = layer.outputs;
  }
}

namespace {

// Activations of every layer; acts[0] is the input, acts[i+1] the output of
// layer i (post-ReLU for hidden layers, raw logits for the last).
std::vector<std::vector<double>> forward_all(const ClassifierModel& model, const ImageTensor& img) {
  model.check_input(img);
  const auto& layers = model.layers();
  std::vector<std::vector<double>> acts;
  acts.reserve(layers.size() + 1);
  acts.emplace_back(img.values());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const DenseLayer& layer = layers[l];
    const std::vector<double>& in = acts.back();
    std::vector<double> out(static_cast<std::size_t>(layer.outputs));
    for (int o = 0; o < layer.outputs; ++o) {
      const double* row = layer.weights.data() + static_cast<std::size_t>(o) * layer.inputs;
      double acc = layer.bias[static_cast<std::size_t>(o)];
      for (int i = 0; i < layer.inputs; ++i) acc += row[i] * in[static_cast<std::size_t>(i)];
      out[static_cast<std::size_t>(o)] = (l + 1 < layers.size()) ? std::max(acc, 0.0) : acc;
    }
    acts.push_back(std::move(out));
  }
  return acts;
}

// Backpropagates d(objective)/d(logits). Returns d/d(input) and, if
// `weight_grads` is non-null, accumulates parameter gradients into it.
std::vector<double> backward(const ClassifierModel& model,
                             const std::vector<std::vector<double>>& acts,
                             std::span<const double> upstream,
                             std::vector<DenseLayer>* weight_grads) {
  const auto& layers = model.layers();
  std::vector<double> delta(upstream.begin(), upstream.end());
  for (std::size_t l = layers.size(); l-- > 0;) {
    const DenseLayer& layer = layers[l];
    const std::vector<double>& in = acts[l];
    if (weight_grads != nullptr) {
      DenseLayer& g = (*weight_grads)[l];
      for (int o = 0; o < layer.outputs; ++o) {
        const double d = delta[static_cast<std::size_t>(o)];
        if (d == 0.0) continue;
        g.bias[static_cast<std::size_t>(o)] += d;
        double* row = g.weights.data() + static_cast<std::size_t>(o) * layer.inputs;
        for (int i = 0; i < layer.inputs; ++i) row[i] += d * in[static_cast<std::size_t>(i)];
      }
    }
    std::vector<double> prev(static_cast<std::size_t>(layer.inputs), 0.0);
    for (int o = 0; o < layer.outputs; ++o) {
      const double d = delta[static_cast<std::size_t>(o)];
      if (d == 0.0) continue;
      const double* row = layer.weights.data() + static_cast<std::size_t>(o) * layer.inputs;
      for (int i = 0; i < layer.inputs; ++i) prev[static_cast<std::size_t>(i)] += d * row[i];
    }
    if (l > 0) {
      // ReLU derivative of the previous layer's output (taken as 0 at 0).
      for (std::size_t i = 0; i < prev.size(); ++i) {
        if (in[i] <= 0.0) prev[i] = 0.0;
      }
    }
    delta = std::move(prev);
  }
  return delta;
}

double cross_entropy(std::span<const double> logits, int label) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - peak);
  return std::log(sum) + peak - logits[static_cast<std::size_t>(label)];
}

// softmax(z) - onehot(label), with the label entry formed as minus the sum of
// the other probabilities so it stays non-zero when softmax saturates.
std::vector<double> ce_logit_gradient(std::span<const double> logits, int label) {
  std::vector<double> g = softmax(logits);
  double others = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (static_cast<int>(j) != label) others += g[j];
  }
  g[static_cast<std::size_t>(label)] = -others;
  return g;
}

}  // namespace

std::vector<double> forward(const ClassifierModel& model, const ImageTensor& img) {
  return forward_all(model, img).back();
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double peak = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (double& v : p) {
    v = std::exp(v - peak);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

ImageTensor logits_input_gradient(const ClassifierModel& model, const ImageTensor& img,
                                  std::span<const double> upstream) {
  if (upstream.size() != static_cast<std::size_t>(model.classes())) {
    throw DimensionMismatchError("upstream gradient size does not match class count");
  }
  const auto acts = forward_all(model, img);
  return ImageTensor(img.height(), img.width(), img.channels(),
                     backward(model, acts, upstream, nullptr));
}

LossAndGradient loss_and_input_gradient(const ClassifierModel& model, const ImageTensor& img,
                                        int label) {
  if (label < 0 || label >= model.classes()) throw std::invalid_argument("label out of range");
  const auto acts = forward_all(model, img);
  const std::vector<double>& logits = acts.back();
  std::vector<double> upstream = ce_logit_gradient(logits, label);
  LossAndGradient out;
  out.loss = cross_entropy(logits, label);
  out.grad = ImageTensor(img.height(), img.width(), img.channels(),
                         backward(model, acts, upstream, nullptr));
  return out;
}

int predict(const ClassifierModel& model, const ImageTensor& img) {
  const auto logits = forward(model, img);
  return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

double accuracy(const ClassifierModel& model, const LabeledDataset& data) {
  if (data.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (predict(model, data.images[i]) == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainResult train(const LabeledDataset& train_set, const TrainConfig& cfg,
                  const LabeledDataset* val_set) {
  if (train_set.size() == 0) throw std::invalid_argument("train: empty training set");
  train_set.validate();
  if (cfg.epochs < 0 || cfg.batch_size <= 0 || !(cfg.learning_rate > 0.0)) {
    throw std::invalid_argument("train: bad hyperparameters");
  }
  const ImageTensor& first = train_set.images.front();
  TrainResult result;
  result.model = ClassifierModel::random(first.height(), first.width(), first.channels(),
                                         cfg.hidden, train_set.num_classes(), cfg.seed);
  ClassifierModel& model = result.model;

  std::vector<DenseLayer> grads = model.layers();
  std::vector<DenseLayer> velocity = model.layers();
  const auto zero = [](std::vector<DenseLayer>& ls) {
    for (DenseLayer& l : ls) {
      std::fill(l.weights.begin(), l.weights.end(), 0.0);
      std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
  };
  zero(velocity);

  Rng rng(derive_seed(cfg.seed, {0x73686666ULL}));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with our own generator keeps the order portable.
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.uniform_index(i)]);
    }
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      zero(grads);
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t idx = order[b];
        const auto acts = forward_all(model, train_set.images[idx]);
        const auto upstream = ce_logit_gradient(acts.back(), train_set.labels[idx]);
        backward(model, acts, upstream, &grads);
      }
      const double scale = 1.0 / static_cast<double>(stop - start);
      auto& layers = model.layers();
      for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto update = [&](std::vector<double>& param, std::vector<double>& vel,
                                const std::vector<double>& grad, double decay) {
          for (std::size_t k = 0; k < param.size(); ++k) {
            vel[k] = cfg.momentum * vel[k] - cfg.learning_rate * (grad[k] * scale + decay * param[k]);
            param[k] += vel[k];
          }
        };
        update(layers[l].weights, velocity[l].weights, grads[l].weights, cfg.weight_decay);
        update(layers[l].bias, velocity[l].bias, grads[l].bias, 0.0);
      }
    }
  }
  model.validate();
  result.train_accuracy = accuracy(model, train_set);
  if (val_set != nullptr) result.val_accuracy = accuracy(model, *val_set);
  return result;
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'M', 'D', 'D', 'A', 'M', 'L', 'P', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void put_f64(std::ostream& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw ModelFormatError("truncated model file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw ModelFormatError("truncated model file");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(v);
}

}  // namespace

void save_model(const ClassifierModel& model, const std::filesystem::path& path) {
  model.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModelFormatError("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof kMagic);
  put_u32(out, static_cast<std::uint32_t>(model.input_height()));
  put_u32(out, static_cast<std::uint32_t>(model.input_width()));
  put_u32(out, static_cast<std::uint32_t>(model.input_channels()));
  put_u32(out, static_cast<std::uint32_t>(model.layers().size()));
  for (const DenseLayer& layer : model.layers()) {
    put_u32(out, static_cast<std::uint32_t>(layer.inputs));
    put_u32(out, static_cast<std::uint32_t>(layer.outputs));
    for (double w : layer.weights) put_f64(out, w);
    for (double b : layer.bias) put_f64(out, b);
  }
  if (!out) throw ModelFormatError("write failed: " + path.string());
}

ClassifierModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelFormatError("cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || !std::equal(magic, magic + 8, kMagic)) {
    throw ModelFormatError("not a model file: " + path.string());
  }
  const auto h = static_cast<int>(get_u32(in));
  const auto w = static_cast<int>(get_u32(in));
  const auto c = static_cast<int>(get_u32(in));
  const auto count = get_u32(in);
  if (count == 0 || count > 64 || h <= 0 || w <= 0 || h > 1 << 14 || w > 1 << 14) {
    throw ModelFormatError("implausible model header in " + path.string());
  }
  std::vector<int> widths;
  std::vector<DenseLayer> layers;
  for (std::uint32_t l = 0; l < count; ++l) {
    DenseLayer layer;
    layer.inputs = static_cast<int>(get_u32(in));
    layer.outputs = static_cast<int>(get_u32(in));
    if (layer.inputs <= 0 || layer.outputs <= 0 || layer.inputs > 1 << 24 || layer.outputs > 1 << 16) {
      throw ModelFormatError("implausible layer shape in " + path.string());
    }
    layer.weights.resize(static_cast<std::size_t>(layer.inputs) * layer.outputs);
    layer.bias.resize(static_cast<std::size_t>(layer.outputs));
    for (double& v : layer.weights) v = get_f64(in);
    for (double& v : layer.bias) v = get_f64(in);
    widths.push_back(layer.outputs);
    layers.push_back(std::move(layer));
  }
  const int classes = widths.back();
  widths.pop_back();
  ClassifierModel model(h, w, c, widths, classes);
  model.layers() = std::move(layers);
  try {
    model.validate();
  } catch (const std::invalid_argument& e) {
    throw ModelFormatError(std::string(e.what()) + " in " + path.string());
  }
  return model;
}

}  // namespace mdda
