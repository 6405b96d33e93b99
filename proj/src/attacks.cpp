#include "mdda/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mdda/rng.hpp"

namespace mdda {

double AttackConfig::resolved_step_size() const {
  return step_size.value_or(2.5 * epsilon / std::max(steps, 1));
}

void AttackConfig::validate() const {
  if (!(epsilon >= 0.0) || epsilon > 1.0) throw std::invalid_argument("epsilon must be in [0,1]");
  if (steps <= 0) throw std::invalid_argument("steps must be positive");
  if (step_size && !(*step_size > 0.0)) throw std::invalid_argument("step size must be positive");
  if (!(cw_lambda >= 0.0)) throw std::invalid_argument("cw lambda must be >= 0");
  if (!(cw_lr > 0.0)) throw std::invalid_argument("cw learning rate must be > 0");
}

AttackMethod parse_attack_method(const std::string& name) {
  if (name == "fgsm") return AttackMethod::fgsm;
  if (name == "bim") return AttackMethod::bim;
  if (name == "pgd") return AttackMethod::pgd;
  if (name == "cw") return AttackMethod::cw;
  throw std::invalid_argument("unknown attack method: " + name);
}

std::string to_string(AttackMethod method) {
  switch (method) {
    case AttackMethod::fgsm: return "fgsm";
    case AttackMethod::bim: return "bim";
    case AttackMethod::pgd: return "pgd";
    case AttackMethod::cw: return "cw";
  }
  return "?";
}

CwMargin parse_cw_margin(const std::string& name) {
  if (name == "canonical") return CwMargin::canonical;
  if (name == "literal") return CwMargin::literal;
  throw std::invalid_argument("unknown cw margin: " + name);
}

std::string to_string(CwMargin margin) {
  return margin == CwMargin::canonical ? "canonical" : "literal";
}

double parse_epsilon(const std::string& text) {
  double value = 0.0;
  try {
    std::size_t used = 0;
    const auto slash = text.find('/');
    if (slash == std::string::npos) {
      value = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
    } else {
      const std::string num = text.substr(0, slash);
      const std::string den = text.substr(slash + 1);
      std::size_t used_den = 0;
      const double n = std::stod(num, &used);
      const double d = std::stod(den, &used_den);
      if (used != num.size() || used_den != den.size() || d == 0.0) throw std::invalid_argument(text);
      value = n / d;
    }
  } catch (const std::logic_error&) {
    throw std::invalid_argument("bad epsilon: " + text);
  }
  if (!(value >= 0.0) || value > 1.0) throw std::invalid_argument("epsilon out of [0,1]: " + text);
  return value;
}

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

ImageTensor fgsm(const ClassifierModel& model, const ImageTensor& img, int label, double epsilon) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be >= 0");
  const ImageTensor grad = loss_and_input_gradient(model, img, label).grad;
  ImageTensor adv = img;
  auto x = adv.data();
  const auto g = grad.data();
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += epsilon * sign(g[i]);
  project_inplace(adv);
  return adv;
}

ImageTensor iterative_attack(const ClassifierModel& model, const ImageTensor& img, int label,
                             const AttackConfig& cfg) {
  cfg.validate();
  if (cfg.method != AttackMethod::bim && cfg.method != AttackMethod::pgd) {
    throw std::invalid_argument("iterative_attack needs method bim or pgd");
  }
  model.check_input(img);
  const auto origin = img.data();
  std::vector<double> lo(origin.size()), hi(origin.size());
  for (std::size_t i = 0; i < origin.size(); ++i) {
    lo[i] = std::max(origin[i] - cfg.epsilon, 0.0);
    hi[i] = std::min(origin[i] + cfg.epsilon, 1.0);
  }

  ImageTensor adv = img;
  if (cfg.method == AttackMethod::pgd) {
    Rng rng(cfg.seed);
    auto x = adv.data();
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = std::clamp(x[i] + rng.uniform(-cfg.epsilon, cfg.epsilon), lo[i], hi[i]);
    }
  }
  const double alpha = cfg.resolved_step_size();
  for (int step = 0; step < cfg.steps; ++step) {
    const ImageTensor grad = loss_and_input_gradient(model, adv, label).grad;
    auto x = adv.data();
    const auto g = grad.data();
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = std::clamp(x[i] + alpha * sign(g[i]), lo[i], hi[i]);
    }
  }
  return adv;
}

ImageTensor cw_attack(const ClassifierModel& model, const ImageTensor& img, int label,
                      const AttackConfig& cfg) {
  cfg.validate();
  model.check_input(img);
  if (label < 0 || label >= model.classes()) throw std::invalid_argument("label out of range");
  const int classes = model.classes();

  ImageTensor x = img;
  ImageTensor best;
  double best_objective = std::numeric_limits<double>::infinity();
  std::vector<double> upstream(static_cast<std::size_t>(classes));

  // Evaluates the objective at x, records x if it is a better misclassified
  // point, and returns the rival class index (-1 if the margin is inactive).
  const auto evaluate = [&](const ImageTensor& cand) {
    const auto z = forward(model, cand);
    int rival = -1;
    for (int j = 0; j < classes; ++j) {
      if (j == label) continue;
      const bool better = cfg.cw_margin == CwMargin::canonical
                              ? (rival < 0 || z[static_cast<std::size_t>(j)] > z[static_cast<std::size_t>(rival)])
                              : (rival < 0 || z[static_cast<std::size_t>(j)] < z[static_cast<std::size_t>(rival)]);
      if (better) rival = j;
    }
    const double margin =
        rival < 0 ? 0.0 : z[static_cast<std::size_t>(label)] - z[static_cast<std::size_t>(rival)];
    const double objective = l2_distance_squared(cand, img) + cfg.cw_lambda * std::max(margin, 0.0);
    const auto top = std::max_element(z.begin(), z.end()) - z.begin();
    if (top != label && objective < best_objective) {
      best_objective = objective;
      best = cand;
    }
    return margin > 0.0 ? rival : -1;
  };

  for (int step = 0; step < cfg.steps; ++step) {
    const int rival = evaluate(x);
    ImageTensor grad(x.height(), x.width(), x.channels());
    if (rival >= 0 && cfg.cw_lambda > 0.0) {
      std::fill(upstream.begin(), upstream.end(), 0.0);
      upstream[static_cast<std::size_t>(label)] = cfg.cw_lambda;
      upstream[static_cast<std::size_t>(rival)] = -cfg.cw_lambda;
      grad = logits_input_gradient(model, x, upstream);
    }
    auto xv = x.data();
    const auto x0 = img.data();
    const auto g = grad.data();
    for (std::size_t i = 0; i < xv.size(); ++i) {
      xv[i] = std::clamp(xv[i] - cfg.cw_lr * (g[i] + 2.0 * (xv[i] - x0[i])), 0.0, 1.0);
    }
  }
  evaluate(x);
  return best.empty() ? x : best;
}

ImageTensor run_attack(const ClassifierModel& model, const ImageTensor& img, int label,
                       const AttackConfig& cfg) {
  switch (cfg.method) {
    case AttackMethod::fgsm:
      cfg.validate();
      return fgsm(model, img, label, cfg.epsilon);
    case AttackMethod::bim:
    case AttackMethod::pgd:
      return iterative_attack(model, img, label, cfg);
    case AttackMethod::cw:
      return cw_attack(model, img, label, cfg);
  }
  throw std::invalid_argument("unknown attack method");
}

}  // namespace mdda
