// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. An optional argument names the directory for
// the sweep CSV (default: current directory).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "mdda/attacks.hpp"
#include "mdda/config.hpp"
#include "mdda/diffusion.hpp"
#include "mdda/eval.hpp"
#include "mdda/model.hpp"
#include "mdda/pipeline.hpp"
#include "mdda/toy_setup.hpp"
#include "mdda/tv_denoise.hpp"

using namespace mdda;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ImageTensor uniform_image(int h, int w, Rng& rng) {
  ImageTensor img(h, w, 1);
  for (double& v : img.values()) v = rng.uniform();
  return img;
}

void tv_oracle() {
  const auto t0 = Clock::now();
  Rng rng(101);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const ImageTensor img = uniform_image(5, 5, rng);
    for (double gamma : {2.0, 8.0, 32.0}) {
      const TvConfig cfg = TvConfig::with_gamma(gamma);
      worst = std::max(worst, linf_distance(denoise_split_bregman(img, cfg), denoise_brute_force(img, cfg)));
    }
  }
  const double secs = seconds_since(t0);
  report(1, worst <= 1e-2 && secs < 60.0,
         fmt("split-Bregman vs reference on 60 solves, worst Linf %.3g (<= 1e-2), %.2f s (< 60)", worst, secs));
}

void tv_soundness() {
  Rng rng(102);
  int violations = 0;
  const double gammas[] = {0.5, 2.0, 8.0, 32.0};
  for (int i = 0; i < 100; ++i) {
    const ImageTensor img = uniform_image(16, 16, rng);
    const double gamma = gammas[i % 4];
    const ImageTensor out = denoise_split_bregman(img, TvConfig::with_gamma(gamma));
    if (!(rof_objective(out, img, gamma) <= rof_objective(img, img, gamma))) ++violations;
  }
  report(2, violations == 0, fmt("objective not increased on 100 images, %d violations", violations));
}

void noise_statistics() {
  Rng rng(103);
  const double target = 0.025;
  const ImageTensor field = sample_gaussian_field(1000, 1000, 1, target, rng);
  double sum = 0.0;
  for (double v : field.values()) sum += v;
  const double n = static_cast<double>(field.size());
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : field.values()) ss += (v - mean) * (v - mean);
  const double var = ss / (n - 1.0);
  const double rel = std::abs(var - target) / target;
  report(3, std::abs(mean) <= 1e-3 && rel <= 0.01,
         fmt("1e6 samples: mean %.2e (|.| <= 1e-3), variance %.6f, rel err %.2e (<= 1e-2)", mean, var, rel));
}

void gradient_check() {
  const double h = 1e-5;
  const std::vector<std::vector<int>> archs = {{}, {64}, {32, 16}, {128}, {24, 24, 24}};
  Rng rng(104);
  double worst = 0.0;
  int checked = 0;
  for (std::size_t a = 0; a < archs.size(); ++a) {
    const auto m = ClassifierModel::random(32, 32, 1, archs[a], 4, 200 + a);
    const ImageTensor x = uniform_image(32, 32, rng);
    const int y = static_cast<int>(rng.uniform_index(4));
    const auto g = loss_and_input_gradient(m, x, y).grad;
    for (int k = 0; k < 20; ++k) {
      const std::size_t i = rng.uniform_index(x.size());
      ImageTensor xp = x;
      ImageTensor xm = x;
      xp.values()[i] += h;
      xm.values()[i] -= h;
      const double fd = (loss_and_input_gradient(m, xp, y).loss - loss_and_input_gradient(m, xm, y).loss) / (2 * h);
      const double an = g.values()[i];
      worst = std::max(worst, std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-8}));
      ++checked;
    }
  }
  report(4, worst <= 1e-4, fmt("%d coordinates over 5 models, worst relative error %.2e (<= 1e-4)", checked, worst));
}

void mean_convention() {
  // Published ResNet50 no-defense row at eps 2/255: clean then six attacks.
  const double row[] = {82.0, 0.99, 0.0, 0.0, 0.0, 0.04, 0.0};
  const double m = mean_accuracy(row);
  report(9, std::abs(m - 11.9) <= 0.05, fmt("mean of published row %.4f (11.9 +- 0.05)", m));
}

void degenerate_identity() {
  MddaConfig cfg;
  cfg.scales = {ScaleFactor::from_exponent(0)};
  cfg.n_blocks = 1;
  cfg.sigma2 = 0.0;
  cfg.tv_gamma = 1e6;
  Rng rng(105);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const ImageTensor img = uniform_image(32, 32, rng);
    cfg.seed = static_cast<std::uint64_t>(i);
    worst = std::max(worst, linf_distance(purify(img, cfg), img));
  }
  report(11, worst <= 1e-3, fmt("purify with no noise and gamma 1e6 on 20 images, worst Linf %.2e (<= 1e-3)", worst));
}

struct Toy {
  ToySetup setup;
  LabeledDataset test;
  ClassifierModel model;
  double train_seconds = 0.0;
};

Toy build_toy(std::uint64_t seed) {
  Toy t{make_toy_setup(seed), {}, {}, 0.0};
  const auto t0 = Clock::now();
  const auto train_set = generate_lesion_dataset(t.setup.train_data);
  t.test = generate_lesion_dataset(t.setup.test_data);
  t.model = train(train_set, t.setup.train).model;
  t.train_seconds = seconds_since(t0);
  return t;
}

AttackConfig with_method(AttackConfig a, AttackMethod m) {
  a.method = m;
  return a;
}

DefenseSpec mdda_defense(const ToySetup& s) {
  DefenseSpec d;
  d.method = DefenseMethod::mdda;
  d.mdda = s.mdda;
  return d;
}

bool is_monotone_enough(const std::vector<double>& seq, int& inversions, double& worst_rise) {
  inversions = 0;
  worst_rise = 0.0;
  for (std::size_t k = 1; k < seq.size(); ++k) {
    const double rise = seq[k] - seq[k - 1];
    if (rise > 0.0) {
      ++inversions;
      worst_rise = std::max(worst_rise, rise);
    }
  }
  return inversions == 0 || (inversions == 1 && worst_rise <= 0.01 + 1e-12);
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path out_dir = argc > 1 ? argv[1] : ".";
  const auto start = Clock::now();

  tv_oracle();
  tv_soundness();
  noise_statistics();
  gradient_check();

  const std::uint64_t seed = 0;
  const EvalOptions options{seed, 1};
  const Toy toy = build_toy(seed);
  const ToySetup& s = toy.setup;
  std::printf("toy setup: %zu test images, trained in %.1f s\n", toy.test.size(), toy.train_seconds);

  const AttackConfig fgsm_cfg = with_method(s.attack, AttackMethod::fgsm);
  const AttackConfig bim_cfg = with_method(s.attack, AttackMethod::bim);
  const AttackConfig pgd_cfg = with_method(s.attack, AttackMethod::pgd);
  const AttackConfig cw_cfg = with_method(s.attack, AttackMethod::cw);
  AttackConfig bim1_cfg = bim_cfg;
  bim1_cfg.steps = 1;

  const auto pgd_t0 = Clock::now();
  const auto adv_pgd = attack_dataset(toy.model, toy.test, pgd_cfg, options);
  const double pgd_secs = seconds_since(pgd_t0);
  const auto adv_fgsm = attack_dataset(toy.model, toy.test, fgsm_cfg, options);
  const auto adv_bim = attack_dataset(toy.model, toy.test, bim_cfg, options);
  const auto adv_bim1 = attack_dataset(toy.model, toy.test, bim1_cfg, options);
  const auto adv_cw = attack_dataset(toy.model, toy.test, cw_cfg, options);

  {
    long bad = 0;
    long total = 0;
    const double eps = s.attack.epsilon;
    for (const auto* set : {&adv_fgsm, &adv_bim, &adv_pgd}) {
      for (std::size_t i = 0; i < set->size(); ++i) {
        const ImageTensor& a = (*set)[i];
        bool ok = linf_distance(a, toy.test.images[i]) <= eps + 1e-12;
        for (double v : a.values()) ok = ok && v >= 0.0 && v <= 1.0;
        bad += ok ? 0 : 1;
        ++total;
      }
    }
    const bool same = adv_bim1 == adv_fgsm;
    report(5, bad == 0 && same,
           fmt("%ld/%ld FGSM/BIM/PGD outputs inside the eps-ball and [0,1]; BIM(1 step) %s FGSM on all %zu images",
               total - bad, total, same ? "equals" : "DIFFERS FROM", toy.test.size()));
  }

  const DefenseSpec none;
  const DefenseSpec mdda_def = mdda_defense(s);
  const EvalReport pgd_none = evaluate_with_adversarial(toy.model, toy.test, pgd_cfg, &adv_pgd, none, options);
  const double clean = pgd_none.clean.accuracy();
  const double pgd_acc = pgd_none.attacked->accuracy();
  report(6, clean >= 0.90 && pgd_acc <= 0.10 && pgd_secs < 300.0,
         fmt("clean %.4f (>= 0.90), PGD-100 at eps 6/255 %.4f (<= 0.10), attack time %.1f s (< 300)", clean, pgd_acc,
             pgd_secs));

  const EvalReport pgd_mdda = evaluate_with_adversarial(toy.model, toy.test, pgd_cfg, &adv_pgd, mdda_def, options);
  {
    const double def_att = pgd_mdda.defended_attacked->accuracy();
    const double def_clean = pgd_mdda.defended_clean->accuracy();
    const double gain = def_att - pgd_acc;
    const double cost = clean - def_clean;
    report(7, gain >= 0.30 && cost <= 0.25,
           fmt("MDDA (sigma2 %.3f, N %d): PGD %.4f -> %.4f, gain %.1f points (>= 30); clean %.4f -> %.4f, cost %.1f "
               "points (<= 25)",
               s.mdda.sigma2, s.mdda.n_blocks, pgd_acc, def_att, 100 * gain, clean, def_clean, 100 * cost));
  }

  {
    std::vector<double> defended;
    std::string detail = "defended-attacked";
    const std::pair<const char*, std::pair<const AttackConfig*, const std::vector<ImageTensor>*>> runs[] = {
        {"fgsm", {&fgsm_cfg, &adv_fgsm}},
        {"bim", {&bim_cfg, &adv_bim}},
        {"pgd", {&pgd_cfg, &adv_pgd}},
        {"cw", {&cw_cfg, &adv_cw}}};
    for (const auto& [name, run] : runs) {
      const double acc =
          run.first == &pgd_cfg
              ? pgd_mdda.defended_attacked->accuracy()
              : evaluate_with_adversarial(toy.model, toy.test, *run.first, run.second, mdda_def, options)
                    .defended_attacked->accuracy();
      defended.push_back(acc);
      detail += fmt(" %s %.4f", name, acc);
    }
    const auto [lo, hi] = std::minmax_element(defended.begin(), defended.end());
    const double span = *hi - *lo;
    report(8, span <= 0.15, detail + fmt(", span %.1f points (<= 15)", 100 * span));
  }

  {
    // A second run from the same master seed, rebuilt from nothing.
    const Toy again = build_toy(seed);
    const EvalReport r = evaluate(again.model, again.test, pgd_cfg, mdda_defense(again.setup), options);
    const std::string a = report_to_json(pgd_mdda).dump(2);
    const std::string b = report_to_json(r).dump(2);
    report(10, a == b, fmt("two runs from master seed %llu give %s reports (%zu bytes)",
                           static_cast<unsigned long long>(seed), a == b ? "byte-identical" : "DIFFERENT", a.size()));
  }

  mean_convention();
  degenerate_identity();

  {
    const SweepGrid grid{parse_real_grid("0.05:0.175:0.025"), parse_int_grid("1:7")};
    const auto t0 = Clock::now();
    const auto rows = sensitivity_sweep(toy.model, toy.test, grid, s.mdda, pgd_cfg, options);
    const std::string csv = sweep_to_csv(rows);
    const double secs = seconds_since(t0);
    std::filesystem::create_directories(out_dir);
    const auto csv_path = out_dir / "acceptance_sweep.csv";
    std::ofstream(csv_path) << csv;

    bool ok = rows.size() == grid.sigma2.size() * grid.n_blocks.size() && secs < 1800.0;
    std::string detail = fmt("%zu grid rows in %.0f s (< 1800), written to %s; defended-clean along sigma2:",
                             rows.size(), secs, csv_path.string().c_str());
    for (int nb : grid.n_blocks) {
      std::vector<double> seq;
      for (const SweepRow& r : rows) {
        if (r.n_blocks == nb) seq.push_back(r.defended_clean);
      }
      int inversions = 0;
      double rise = 0.0;
      const bool mono = is_monotone_enough(seq, inversions, rise);
      ok = ok && mono;
      detail += fmt(" N=%d %d inversion(s)", nb, inversions);
      if (inversions > 0) detail += fmt(" max rise %.2f pt", 100 * rise);
      if (!mono) detail += " [too many]";
      detail += nb == grid.n_blocks.back() ? "" : ",";
    }
    report(12, ok, detail);
  }

  std::printf("%d criteria failed, total %.0f s\n", failures, seconds_since(start));
  return failures == 0 ? 0 : 1;
}
