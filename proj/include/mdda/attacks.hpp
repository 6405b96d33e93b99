#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "mdda/image.hpp"
#include "mdda/model.hpp"

namespace mdda {

enum class AttackMethod { fgsm, bim, pgd, cw };

/// Which competing logit the CW margin uses: the strongest rival (canonical)
/// or the weakest one, as the formula is printed in the original write-up.
enum class CwMargin { canonical, literal };

struct AttackConfig {
  AttackMethod method = AttackMethod::pgd;
  double epsilon = 6.0 / 255.0;  ///< L-inf budget in [0,1] pixel units
  int steps = 100;
  std::optional<double> step_size;  ///< default 2.5 * epsilon / steps
  double cw_lambda = 1.0;
  double cw_lr = 0.01;
  CwMargin cw_margin = CwMargin::canonical;
  std::uint64_t seed = 0;  ///< PGD random start

  double resolved_step_size() const;
  void validate() const;
};

AttackMethod parse_attack_method(const std::string& name);
std::string to_string(AttackMethod method);
CwMargin parse_cw_margin(const std::string& name);
std::string to_string(CwMargin margin);

/// Parses "6/255", "0.0235", ... into a value in [0,1].
double parse_epsilon(const std::string& text);

/// x + eps * sign(grad of the loss), clipped to [0,1]. sign(0) = 0.
ImageTensor fgsm(const ClassifierModel& model, const ImageTensor& img, int label, double epsilon);

/// BIM (start at x) or PGD (uniform random start in the eps-ball): `steps`
/// signed-gradient steps, each projected onto the eps-ball and [0,1].
ImageTensor iterative_attack(const ClassifierModel& model, const ImageTensor& img, int label,
                             const AttackConfig& cfg);

/// Gradient descent on |x' - x|^2 + lambda * max(z_y - z_rival, 0) over the
/// logits z, projected to [0,1]. Returns the misclassified iterate with the
/// lowest objective, or the final iterate if none was misclassified.
ImageTensor cw_attack(const ClassifierModel& model, const ImageTensor& img, int label,
                      const AttackConfig& cfg);

ImageTensor run_attack(const ClassifierModel& model, const ImageTensor& img, int label,
                       const AttackConfig& cfg);

}  // namespace mdda
