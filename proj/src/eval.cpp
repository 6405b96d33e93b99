#include "mdda/eval.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdio>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "mdda/parallel.hpp"
#include "mdda/rng.hpp"

namespace mdda {

DefenseMethod parse_defense_method(const std::string& name) {
  if (name == "none") return DefenseMethod::none;
  if (name == "bdr") return DefenseMethod::bdr;
  if (name == "mdda") return DefenseMethod::mdda;
  throw std::invalid_argument("unknown defense method: " + name);
}

std::string to_string(DefenseMethod method) {
  switch (method) {
    case DefenseMethod::none: return "none";
    case DefenseMethod::bdr: return "bdr";
    case DefenseMethod::mdda: return "mdda";
  }
  return "?";
}

ImageTensor apply_defense(const DefenseSpec& spec, const ImageTensor& img, std::uint64_t stream) {
  switch (spec.method) {
    case DefenseMethod::none:
      return img;
    case DefenseMethod::bdr:
      return bit_depth_reduce(img, spec.bdr.bits);
    case DefenseMethod::mdda: {
      MddaConfig cfg = spec.mdda;
      cfg.seed = derive_seed(spec.mdda.seed, {stream});
      return purify(img, cfg);
    }
  }
  throw std::invalid_argument("unknown defense method");
}

// ---------------------------------------------------------------------------

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> class_names)
    : names_(std::move(class_names)), counts_(names_.size() * names_.size(), 0) {}

void ConfusionMatrix::add(int truth, int predicted) {
  if (truth < 0 || truth >= classes() || predicted < 0 || predicted >= classes()) {
    throw std::invalid_argument("confusion matrix index out of range");
  }
  ++counts_[static_cast<std::size_t>(truth) * names_.size() + static_cast<std::size_t>(predicted)];
}

long ConfusionMatrix::count(int truth, int predicted) const {
  return counts_.at(static_cast<std::size_t>(truth) * names_.size() + static_cast<std::size_t>(predicted));
}

long ConfusionMatrix::row_total(int truth) const {
  long sum = 0;
  for (int p = 0; p < classes(); ++p) sum += count(truth, p);
  return sum;
}

long ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), 0L); }

long ConfusionMatrix::correct() const {
  long sum = 0;
  for (int k = 0; k < classes(); ++k) sum += count(k, k);
  return sum;
}

double ConfusionMatrix::accuracy() const {
  const long n = total();
  return n == 0 ? 0.0 : static_cast<double>(correct()) / static_cast<double>(n);
}

std::string ConfusionMatrix::to_csv() const {
  std::ostringstream out;
  out << "true\\pred";
  for (const auto& n : names_) out << ',' << n;
  out << '\n';
  for (int t = 0; t < classes(); ++t) {
    out << names_[static_cast<std::size_t>(t)];
    for (int p = 0; p < classes(); ++p) out << ',' << count(t, p);
    out << '\n';
  }
  return out.str();
}

std::string ConfusionMatrix::to_ascii() const {
  std::size_t width = 6;
  for (const auto& n : names_) width = std::max(width, n.size());
  std::ostringstream out;
  out << std::setw(static_cast<int>(width)) << "true\\pred";
  for (const auto& n : names_) out << ' ' << std::setw(static_cast<int>(width)) << n;
  out << '\n';
  for (int t = 0; t < classes(); ++t) {
    out << std::setw(static_cast<int>(width)) << names_[static_cast<std::size_t>(t)];
    for (int p = 0; p < classes(); ++p) out << ' ' << std::setw(static_cast<int>(width)) << count(t, p);
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::string model_fingerprint(const ClassifierModel& model) {
  std::uint64_t h = kFnvOffset;
  const int header[3] = {model.input_height(), model.input_width(), model.input_channels()};
  fnv_bytes(h, header, sizeof header);
  for (const DenseLayer& layer : model.layers()) {
    const int shape[2] = {layer.inputs, layer.outputs};
    fnv_bytes(h, shape, sizeof shape);
    for (double w : layer.weights) {
      const auto bits = std::bit_cast<std::uint64_t>(w);
      fnv_bytes(h, &bits, sizeof bits);
    }
    for (double b : layer.bias) {
      const auto bits = std::bit_cast<std::uint64_t>(b);
      fnv_bytes(h, &bits, sizeof bits);
    }
  }
  return hex64(h);
}

nlohmann::ordered_json attack_to_json(const AttackConfig& attack) {
  nlohmann::ordered_json j;
  j["method"] = to_string(attack.method);
  j["epsilon"] = attack.epsilon;
  if (attack.method != AttackMethod::fgsm) j["steps"] = attack.steps;
  if (attack.method == AttackMethod::bim || attack.method == AttackMethod::pgd) {
    j["step_size"] = attack.resolved_step_size();
  }
  if (attack.method == AttackMethod::cw) {
    j["cw_lambda"] = attack.cw_lambda;
    j["cw_lr"] = attack.cw_lr;
    j["cw_margin"] = to_string(attack.cw_margin);
  }
  return j;
}

nlohmann::ordered_json defense_to_json(const DefenseSpec& defense) {
  nlohmann::ordered_json j;
  j["method"] = to_string(defense.method);
  if (defense.method == DefenseMethod::bdr) j["bits"] = defense.bdr.bits;
  if (defense.method == DefenseMethod::mdda) {
    const MddaConfig& m = defense.mdda;
    std::vector<std::string> scales;
    for (ScaleFactor s : m.scales) scales.push_back(s.to_string());
    j["scales"] = scales;
    j["n_blocks"] = m.n_blocks;
    j["sigma2"] = m.sigma2;
    j["seed"] = m.seed;
    j["tv_gamma_coeff"] = m.tv_gamma_coeff;
    if (const auto tv = m.tv()) {
      j["tv_gamma"] = tv->gamma;
      j["tv_penalty"] = tv->penalty;
      j["tv_tol"] = tv->tol;
      j["tv_max_iters"] = tv->max_outer_iters;
      j["tv_sweeps"] = tv->gauss_seidel_sweeps;
    } else {
      j["tv_gamma"] = nullptr;
    }
  }
  return j;
}

std::string EvalReport::config_hash() const {
  nlohmann::ordered_json j;
  j["model_id"] = model_id;
  j["seed"] = seed;
  j["attack"] = attack ? attack_to_json(*attack) : nlohmann::ordered_json();
  j["defense"] = defense_to_json(defense);
  const std::string text = j.dump();
  std::uint64_t h = kFnvOffset;
  fnv_bytes(h, text.data(), text.size());
  return hex64(h);
}

namespace {

nlohmann::ordered_json condition_json(const ConfusionMatrix& cm) {
  nlohmann::ordered_json j;
  j["accuracy"] = cm.accuracy();
  j["correct"] = cm.correct();
  j["total"] = cm.total();
  std::vector<std::vector<long>> rows;
  for (int t = 0; t < cm.classes(); ++t) {
    std::vector<long> row;
    for (int p = 0; p < cm.classes(); ++p) row.push_back(cm.count(t, p));
    rows.push_back(std::move(row));
  }
  j["confusion"] = rows;
  return j;
}

}  // namespace

nlohmann::ordered_json report_to_json(const EvalReport& report, bool include_timing) {
  nlohmann::ordered_json j;
  j["schema_version"] = EvalReport::kSchemaVersion;
  j["model_id"] = report.model_id;
  j["seed"] = report.seed;
  j["config_hash"] = report.config_hash();
  j["attack"] = report.attack ? attack_to_json(*report.attack) : nlohmann::ordered_json();
  j["defense"] = defense_to_json(report.defense);
  j["class_names"] = report.clean.class_names();
  nlohmann::ordered_json conditions;
  conditions["clean"] = condition_json(report.clean);
  if (report.attacked) conditions["attacked"] = condition_json(*report.attacked);
  if (report.defended_clean) conditions["defended_clean"] = condition_json(*report.defended_clean);
  if (report.defended_attacked) {
    conditions["defended_attacked"] = condition_json(*report.defended_attacked);
  }
  j["conditions"] = conditions;
  if (include_timing) {
    j["timing"] = {{"attack_seconds_per_image", report.attack_seconds_per_image},
                   {"defense_seconds_per_image", report.defense_seconds_per_image}};
  }
  return j;
}

// ---------------------------------------------------------------------------

std::uint64_t attack_stream_seed(std::uint64_t seed, std::size_t image_index) {
  return derive_seed(seed, {0x61747461636bULL, image_index});
}

std::vector<ImageTensor> attack_dataset(const ClassifierModel& model, const LabeledDataset& data,
                                        const AttackConfig& attack, const EvalOptions& options,
                                        double* seconds_per_image) {
  attack.validate();
  std::vector<ImageTensor> adversarial(data.size());
  const auto start = std::chrono::steady_clock::now();
  parallel_for(data.size(), options.jobs, [&](std::size_t i) {
    AttackConfig cfg = attack;
    cfg.seed = attack_stream_seed(options.seed, i);
    adversarial[i] = run_attack(model, data.images[i], data.labels[i], cfg);
  });
  if (seconds_per_image != nullptr && data.size() > 0) {
    *seconds_per_image = seconds_since(start) / static_cast<double>(data.size());
  }
  return adversarial;
}

namespace {

// `def_clean_cache`, when non-empty, holds defended-clean predictions from an
// earlier call with the same defense; otherwise it is filled in.
EvalReport evaluate_impl(const ClassifierModel& model, const LabeledDataset& data,
                         const std::optional<AttackConfig>& attack,
                         const std::vector<ImageTensor>* adversarial, const DefenseSpec& defense,
                         const EvalOptions& options, std::vector<int>& def_clean_cache) {
  data.validate();
  if (data.num_classes() != model.classes()) {
    throw std::invalid_argument("dataset class count does not match model");
  }
  if (data.size() > 0) model.check_input(data.images.front());
  if (attack && (adversarial == nullptr || adversarial->size() != data.size())) {
    throw std::invalid_argument("adversarial set missing or wrong size");
  }
  if (defense.method == DefenseMethod::mdda) defense.mdda.validate();
  if (defense.method == DefenseMethod::bdr && (defense.bdr.bits < 1 || defense.bdr.bits > 8)) {
    throw std::invalid_argument("bdr bits must be in [1,8]");
  }

  const std::size_t n = data.size();
  const bool defended = defense.method != DefenseMethod::none;
  const bool cached = def_clean_cache.size() == n && n > 0;
  std::vector<int> pred_clean(n), pred_attacked(n), pred_def_attacked(n);
  std::vector<int>& pred_def_clean = def_clean_cache;
  if (!cached) pred_def_clean.assign(n, 0);
  const auto start = std::chrono::steady_clock::now();
  parallel_for(n, options.jobs, [&](std::size_t i) {
    const ImageTensor& x = data.images[i];
    pred_clean[i] = predict(model, x);
    if (attack) pred_attacked[i] = predict(model, (*adversarial)[i]);
    if (defended) {
      if (!cached) pred_def_clean[i] = predict(model, apply_defense(defense, x, 2 * i));
      if (attack) {
        pred_def_attacked[i] = predict(model, apply_defense(defense, (*adversarial)[i], 2 * i + 1));
      }
    }
  });
  const double elapsed = seconds_since(start);

  EvalReport report;
  report.model_id = model_fingerprint(model);
  report.seed = options.seed;
  report.attack = attack;
  report.defense = defense;
  report.clean = ConfusionMatrix(data.class_names);
  if (attack) report.attacked = ConfusionMatrix(data.class_names);
  if (defended) {
    report.defended_clean = ConfusionMatrix(data.class_names);
    if (attack) report.defended_attacked = ConfusionMatrix(data.class_names);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const int y = data.labels[i];
    report.clean.add(y, pred_clean[i]);
    if (report.attacked) report.attacked->add(y, pred_attacked[i]);
    if (report.defended_clean) report.defended_clean->add(y, pred_def_clean[i]);
    if (report.defended_attacked) report.defended_attacked->add(y, pred_def_attacked[i]);
  }
  if (defended && n > 0) {
    const std::size_t defended_images = n * ((attack ? 1 : 0) + (cached ? 0 : 1));
    if (defended_images > 0) {
      report.defense_seconds_per_image = elapsed / static_cast<double>(defended_images);
    }
  }
  return report;
}

}  // namespace

EvalReport evaluate_with_adversarial(const ClassifierModel& model, const LabeledDataset& data,
                                     const std::optional<AttackConfig>& attack,
                                     const std::vector<ImageTensor>* adversarial,
                                     const DefenseSpec& defense, const EvalOptions& options) {
  std::vector<int> def_clean;
  return evaluate_impl(model, data, attack, adversarial, defense, options, def_clean);
}

EvalReport evaluate(const ClassifierModel& model, const LabeledDataset& data,
                    const std::optional<AttackConfig>& attack, const DefenseSpec& defense,
                    const EvalOptions& options) {
  std::vector<ImageTensor> adversarial;
  double attack_time = 0.0;
  if (attack) adversarial = attack_dataset(model, data, *attack, options, &attack_time);
  EvalReport report = evaluate_with_adversarial(model, data, attack, attack ? &adversarial : nullptr,
                                                defense, options);
  report.attack_seconds_per_image = attack_time;
  return report;
}

double mean_accuracy(std::span<const double> accuracies) {
  if (accuracies.empty()) throw std::invalid_argument("mean_accuracy: no conditions");
  return std::accumulate(accuracies.begin(), accuracies.end(), 0.0) /
         static_cast<double>(accuracies.size());
}

// ---------------------------------------------------------------------------

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string AccuracyTable::to_csv() const {
  std::ostringstream out;
  out << "defense,clean";
  for (const auto& a : attack_names) out << ',' << a;
  out << ",mean_acc\n";
  for (const Row& row : rows) {
    out << row.defense << ',' << fixed(row.clean);
    for (double a : row.attacked) out << ',' << fixed(a);
    out << ',' << fixed(row.mean) << '\n';
  }
  return out.str();
}

AccuracyTable evaluate_table(const ClassifierModel& model, const LabeledDataset& data,
                             const std::vector<AttackConfig>& attacks,
                             const std::vector<DefenseSpec>& defenses, const EvalOptions& options) {
  AccuracyTable table;
  std::vector<std::vector<ImageTensor>> adversarial;
  std::vector<double> attack_times;
  for (const AttackConfig& a : attacks) {
    table.attack_names.push_back(to_string(a.method));
    double t = 0.0;
    adversarial.push_back(attack_dataset(model, data, a, options, &t));
    attack_times.push_back(t);
  }
  for (const DefenseSpec& d : defenses) {
    AccuracyTable::Row row;
    row.defense = to_string(d.method);
    std::vector<int> def_clean;
    if (attacks.empty()) {
      EvalReport r = evaluate_impl(model, data, std::nullopt, nullptr, d, options, def_clean);
      row.clean = r.defended_clean ? r.defended_clean->accuracy() : r.clean.accuracy();
      table.reports.push_back(std::move(r));
    }
    for (std::size_t k = 0; k < attacks.size(); ++k) {
      EvalReport r = evaluate_impl(model, data, attacks[k], &adversarial[k], d, options, def_clean);
      r.attack_seconds_per_image = attack_times[k];
      if (k == 0) row.clean = r.defended_clean ? r.defended_clean->accuracy() : r.clean.accuracy();
      row.attacked.push_back(r.defended_attacked ? r.defended_attacked->accuracy()
                                                 : r.attacked->accuracy());
      table.reports.push_back(std::move(r));
    }
    std::vector<double> all{row.clean};
    all.insert(all.end(), row.attacked.begin(), row.attacked.end());
    row.mean = mean_accuracy(all);
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::uint64_t sweep_point_seed(std::uint64_t seed, int n_blocks) {
  return derive_seed(seed, {0x7377656570ULL, static_cast<std::uint64_t>(n_blocks)});
}

std::vector<SweepRow> sensitivity_sweep(const ClassifierModel& model, const LabeledDataset& data,
                                        const SweepGrid& grid, const MddaConfig& base,
                                        const AttackConfig& attack, const EvalOptions& options) {
  if (grid.sigma2.empty() || grid.n_blocks.empty()) throw std::invalid_argument("empty sweep grid");
  for (double s : grid.sigma2) {
    if (!(s >= 0.0)) throw std::invalid_argument("sweep sigma2 must be >= 0");
  }
  for (int nb : grid.n_blocks) {
    if (nb <= 0) throw std::invalid_argument("sweep block counts must be positive");
  }
  const auto adversarial = attack_dataset(model, data, attack, options);
  std::vector<SweepRow> rows;
  for (std::size_t si = 0; si < grid.sigma2.size(); ++si) {
    for (int nb : grid.n_blocks) {
      DefenseSpec defense;
      defense.method = DefenseMethod::mdda;
      defense.mdda = base;
      defense.mdda.sigma2 = grid.sigma2[si];
      defense.mdda.n_blocks = nb;
      defense.mdda.seed = sweep_point_seed(options.seed, nb);
      const EvalReport r =
          evaluate_with_adversarial(model, data, attack, &adversarial, defense, options);
      SweepRow row;
      row.sigma2 = grid.sigma2[si];
      row.n_blocks = nb;
      row.seed = defense.mdda.seed;
      row.clean = r.clean.accuracy();
      row.attacked = r.attacked->accuracy();
      row.defended_clean = r.defended_clean->accuracy();
      row.defended_attacked = r.defended_attacked->accuracy();
      const double pair[2] = {row.defended_clean, row.defended_attacked};
      row.mean = mean_accuracy(pair);
      rows.push_back(row);
    }
  }
  return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "sigma2,n_blocks,seed,clean,attacked,defended_clean,defended_attacked,mean_defended\n";
  for (const SweepRow& r : rows) {
    out << fixed(r.sigma2, 4) << ',' << r.n_blocks << ',' << hex64(r.seed) << ',' << fixed(r.clean)
        << ',' << fixed(r.attacked) << ',' << fixed(r.defended_clean) << ','
        << fixed(r.defended_attacked) << ',' << fixed(r.mean) << '\n';
  }
  return out.str();
}

}  // namespace mdda
