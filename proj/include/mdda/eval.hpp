#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mdda/attacks.hpp"
#include "mdda/baselines.hpp"
#include "mdda/dataset.hpp"
#include "mdda/model.hpp"
#include "mdda/pipeline.hpp"

namespace mdda {

enum class DefenseMethod { none, bdr, mdda };

DefenseMethod parse_defense_method(const std::string& name);
std::string to_string(DefenseMethod method);

/// A preprocessing defense and its settings.
struct DefenseSpec {
  DefenseMethod method = DefenseMethod::none;
  BdrConfig bdr;
  MddaConfig mdda;
};

/// Applies the defense. For MDDA the noise seed is derived from
/// `spec.mdda.seed` and `stream`, so every image gets its own noise.
ImageTensor apply_defense(const DefenseSpec& spec, const ImageTensor& img, std::uint64_t stream);

/// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<std::string> class_names);

  void add(int truth, int predicted);
  long count(int truth, int predicted) const;
  long row_total(int truth) const;
  long total() const;
  long correct() const;
  double accuracy() const;
  int classes() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& class_names() const { return names_; }

  std::string to_csv() const;
  std::string to_ascii() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<long> counts_;
};

struct EvalReport {
  static constexpr int kSchemaVersion = 1;

  std::string model_id;
  std::uint64_t seed = 0;
  std::optional<AttackConfig> attack;
  DefenseSpec defense;

  ConfusionMatrix clean;
  std::optional<ConfusionMatrix> attacked;
  std::optional<ConfusionMatrix> defended_clean;
  std::optional<ConfusionMatrix> defended_attacked;

  // Wall-clock, seconds per image. Not part of the deterministic report.
  double attack_seconds_per_image = 0.0;
  double defense_seconds_per_image = 0.0;

  std::string config_hash() const;
};

struct EvalOptions {
  std::uint64_t seed = 0;  ///< master seed for per-image attack streams
  int jobs = 1;
};

/// Per-image seed of the attack stream.
std::uint64_t attack_stream_seed(std::uint64_t seed, std::size_t image_index);

/// Adversarial copy of every image in `data`.
std::vector<ImageTensor> attack_dataset(const ClassifierModel& model, const LabeledDataset& data,
                                        const AttackConfig& attack, const EvalOptions& options,
                                        double* seconds_per_image = nullptr);

/// Classifies clean images and, if given, attacked and defended versions.
/// With a defense, both the clean and the attacked images are defended.
EvalReport evaluate(const ClassifierModel& model, const LabeledDataset& data,
                    const std::optional<AttackConfig>& attack, const DefenseSpec& defense,
                    const EvalOptions& options);

/// As `evaluate`, reusing precomputed adversarial images.
EvalReport evaluate_with_adversarial(const ClassifierModel& model, const LabeledDataset& data,
                                     const std::optional<AttackConfig>& attack,
                                     const std::vector<ImageTensor>* adversarial,
                                     const DefenseSpec& defense, const EvalOptions& options);

/// Arithmetic mean; throws on empty input.
double mean_accuracy(std::span<const double> accuracies);

/// Stable 16-hex-digit FNV-1a hash of the model weights.
std::string model_fingerprint(const ClassifierModel& model);

nlohmann::ordered_json attack_to_json(const AttackConfig& attack);
nlohmann::ordered_json defense_to_json(const DefenseSpec& defense);
nlohmann::ordered_json report_to_json(const EvalReport& report, bool include_timing = false);

/// One defense per row, clean column followed by one column per attack and
/// the mean over all columns (clean included).
struct AccuracyTable {
  std::vector<std::string> attack_names;
  struct Row {
    std::string defense;
    double clean = 0.0;
    std::vector<double> attacked;
    double mean = 0.0;
  };
  std::vector<Row> rows;
  std::vector<EvalReport> reports;

  std::string to_csv() const;
};

AccuracyTable evaluate_table(const ClassifierModel& model, const LabeledDataset& data,
                             const std::vector<AttackConfig>& attacks,
                             const std::vector<DefenseSpec>& defenses, const EvalOptions& options);

struct SweepGrid {
  std::vector<double> sigma2;
  std::vector<int> n_blocks;
};

struct SweepRow {
  double sigma2 = 0.0;
  int n_blocks = 0;
  std::uint64_t seed = 0;
  double clean = 0.0;
  double attacked = 0.0;
  double defended_clean = 0.0;
  double defended_attacked = 0.0;
  double mean = 0.0;  ///< mean of defended-clean and defended-attacked
};

/// Purification seed for a grid column. Every sigma2 at the same block count
/// shares it, so the rows along sigma2 see the same standard-normal draws
/// scaled differently and differ by noise level alone.
std::uint64_t sweep_point_seed(std::uint64_t seed, int n_blocks);

/// Evaluates MDDA over the (sigma2 x n_blocks) grid against one attack. The
/// adversarial set is computed once and shared by every grid point.
std::vector<SweepRow> sensitivity_sweep(const ClassifierModel& model, const LabeledDataset& data,
                                        const SweepGrid& grid, const MddaConfig& base,
                                        const AttackConfig& attack, const EvalOptions& options);

std::string sweep_to_csv(const std::vector<SweepRow>& rows);

}  // namespace mdda
