// Command-line front end: data generation, training, attacks, defenses,
// evaluation reports and sensitivity sweeps on the toy setup.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 runtime error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mdda/attacks.hpp"
#include "mdda/baselines.hpp"
#include "mdda/config.hpp"
#include "mdda/dataset.hpp"
#include "mdda/eval.hpp"
#include "mdda/image_io.hpp"
#include "mdda/model.hpp"
#include "mdda/parallel.hpp"
#include "mdda/pipeline.hpp"
#include "mdda/rng.hpp"
#include "mdda/toy_setup.hpp"

namespace fs = std::filesystem;
using namespace mdda;

namespace {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Globals {
  std::string seed;
  std::string config;
  std::string out;
  int jobs = 0;
};

struct Context {
  std::uint64_t seed = 0;
  int jobs = 1;
  KeyValueConfig kv;
  ToySetup setup;
  fs::path out;
};

// Command line beats the config file, which beats the built-in defaults.
Context make_context(const Globals& g, const std::string& default_out) {
  Context c;
  if (!g.config.empty()) {
    c.kv = KeyValueConfig::from_file(g.config);
    c.kv.check_known_keys();
  }
  if (!g.seed.empty()) {
    c.seed = parse_seed(g.seed);
  } else if (c.kv.has("seed")) {
    c.seed = parse_seed(c.kv.get("seed"));
  }
  if (g.jobs > 0) {
    c.jobs = g.jobs;
  } else if (c.kv.has("jobs")) {
    c.jobs = c.kv.get_int("jobs");
    if (c.jobs <= 0) throw ConfigError("jobs must be positive");
  }
  c.setup = make_toy_setup(c.seed);
  apply_config(c.kv, c.setup);
  c.out = g.out.empty() ? fs::path(default_out) : fs::path(g.out);
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

ClassifierModel obtain_model(const Context& c, const std::string& model_path) {
  if (!model_path.empty()) return load_model(model_path);
  std::fprintf(stderr, "no --model given; training the toy model from seed %llu\n",
               static_cast<unsigned long long>(c.seed));
  return train(generate_lesion_dataset(c.setup.train_data), c.setup.train).model;
}

LabeledDataset obtain_test_set(const Context& c, const std::string& data_dir) {
  if (!data_dir.empty()) return load_dataset(data_dir);
  return generate_lesion_dataset(c.setup.test_data);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : text + ",") {
    if (ch == ',') {
      const auto b = cur.find_first_not_of(" \t");
      const auto e = cur.find_last_not_of(" \t");
      if (b != std::string::npos) parts.push_back(cur.substr(b, e - b + 1));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  return parts;
}

DefenseSpec defense_from(const Context& c, const std::string& name) {
  DefenseSpec d;
  d.method = parse_defense_method(name);
  d.bdr = c.setup.bdr;
  d.mdda = c.setup.mdda;
  return d;
}

struct AttackFlags {
  std::string method;
  std::string eps;
  int steps = 0;
};

void override_attack(AttackConfig& a, const AttackFlags& f) {
  if (!f.method.empty()) a.method = parse_attack_method(f.method);
  if (!f.eps.empty()) a.epsilon = parse_epsilon(f.eps);
  if (f.steps > 0) a.steps = f.steps;
  a.validate();
}

// ---------------------------------------------------------------------------

int cmd_gen_data(const Globals& g) {
  const Context c = make_context(g, "data");
  const auto train_set = generate_lesion_dataset(c.setup.train_data);
  const auto test_set = generate_lesion_dataset(c.setup.test_data);
  save_dataset(train_set, c.out / "train");
  save_dataset(test_set, c.out / "test");
  std::printf("wrote %zu train and %zu test images to %s\n", train_set.size(), test_set.size(),
              c.out.string().c_str());
  return 0;
}

int cmd_train(const Globals& g, const std::string& data_dir) {
  const Context c = make_context(g, "model");
  const auto train_set =
      data_dir.empty() ? generate_lesion_dataset(c.setup.train_data) : load_dataset(fs::path(data_dir) / "train");
  const auto test_set =
      data_dir.empty() ? generate_lesion_dataset(c.setup.test_data) : load_dataset(fs::path(data_dir) / "test");
  const auto t0 = std::chrono::steady_clock::now();
  const TrainResult r = train(train_set, c.setup.train, &test_set);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  fs::create_directories(c.out);
  save_model(r.model, c.out / "model.bin");
  nlohmann::ordered_json j;
  j["seed"] = c.seed;
  j["model_id"] = model_fingerprint(r.model);
  j["train_accuracy"] = r.train_accuracy;
  j["test_accuracy"] = r.val_accuracy;
  j["train_seconds"] = secs;
  write_text(c.out / "train.json", j.dump(2) + "\n");
  std::printf("train accuracy %.4f, test accuracy %.4f, %.1f s; model in %s\n", r.train_accuracy, r.val_accuracy,
              secs, (c.out / "model.bin").string().c_str());
  return 0;
}

int cmd_attack(const Globals& g, const std::string& model_path, const std::string& data_dir, const AttackFlags& f) {
  Context c = make_context(g, "adversarial");
  override_attack(c.setup.attack, f);
  const auto model = obtain_model(c, model_path);
  const auto data = obtain_test_set(c, data_dir);
  double secs = 0.0;
  LabeledDataset adv = data;
  adv.images = attack_dataset(model, data, c.setup.attack, {c.seed, c.jobs}, &secs);
  adv.split = "adversarial";
  save_dataset(adv, c.out);
  std::printf("%s eps %.6f: clean accuracy %.4f, attacked accuracy %.4f (%.2f ms/image); images in %s\n",
              to_string(c.setup.attack.method).c_str(), c.setup.attack.epsilon, accuracy(model, data),
              accuracy(model, adv), 1000 * secs, c.out.string().c_str());
  std::printf("note: saved images are rounded to 8 bits\n");
  return 0;
}

int cmd_defend(const Globals& g, const std::string& method, int bits, const std::string& data_dir,
               const std::string& model_path) {
  Context c = make_context(g, "defended");
  if (bits > 0) c.setup.bdr.bits = bits;
  const DefenseSpec d = defense_from(c, method);
  if (d.method == DefenseMethod::none) throw UsageError("--method must be bdr or mdda");
  const auto data = obtain_test_set(c, data_dir);
  LabeledDataset out = data;
  parallel_for(data.size(), c.jobs, [&](std::size_t i) { out.images[i] = apply_defense(d, data.images[i], i); });
  out.split = "defended";
  save_dataset(out, c.out);
  std::printf("defended %zu images with %s; written to %s\n", data.size(), method.c_str(), c.out.string().c_str());
  if (!model_path.empty()) {
    const auto model = load_model(model_path);
    std::printf("accuracy before %.4f, after %.4f\n", accuracy(model, data), accuracy(model, out));
  }
  return 0;
}

int cmd_purify(const Globals& g, const std::string& in) {
  if (g.out.empty()) throw UsageError("purify needs --out <image>");
  const Context c = make_context(g, "");
  const ImageTensor img = load_image(in);
  const ImageTensor rev = purify(img, c.setup.mdda);
  save_image(rev, c.out);
  std::printf("%s -> %s (Linf change %.4f)\n", in.c_str(), c.out.string().c_str(), linf_distance(rev, img));
  return 0;
}

int cmd_evaluate(const Globals& g, const std::string& model_path, const std::string& data_dir,
                 const std::string& attacks, const std::string& defenses, const AttackFlags& f) {
  Context c = make_context(g, "results");
  AttackFlags base_flags = f;
  base_flags.method.clear();
  override_attack(c.setup.attack, base_flags);
  std::vector<AttackConfig> atks;
  for (const auto& name : split_list(attacks.empty() ? to_string(c.setup.attack.method) : attacks)) {
    AttackConfig a = c.setup.attack;
    a.method = parse_attack_method(name);
    atks.push_back(a);
  }
  std::vector<DefenseSpec> defs;
  const std::string def_text = !defenses.empty() ? defenses : c.kv.has("defense") ? c.kv.get("defense") : "none,mdda";
  for (const auto& name : split_list(def_text)) defs.push_back(defense_from(c, name));
  if (atks.empty() || defs.empty()) throw UsageError("need at least one attack and one defense");

  const auto model = obtain_model(c, model_path);
  const auto data = obtain_test_set(c, data_dir);
  const AccuracyTable table = evaluate_table(model, data, atks, defs, {c.seed, c.jobs});

  nlohmann::ordered_json reports = nlohmann::ordered_json::array();
  nlohmann::ordered_json timing = nlohmann::ordered_json::array();
  for (const EvalReport& r : table.reports) {
    reports.push_back(report_to_json(r));
    const std::string tag = to_string(r.defense.method) + "_" + to_string(r.attack->method);
    timing.push_back({{"condition", tag},
                      {"attack_seconds_per_image", r.attack_seconds_per_image},
                      {"defense_seconds_per_image", r.defense_seconds_per_image}});
    const fs::path cm_dir = c.out / "confusion";
    write_text(cm_dir / (tag + "_clean.csv"), r.clean.to_csv());
    write_text(cm_dir / (tag + "_attacked.csv"), r.attacked->to_csv());
    if (r.defended_clean) write_text(cm_dir / (tag + "_defended_clean.csv"), r.defended_clean->to_csv());
    if (r.defended_attacked) write_text(cm_dir / (tag + "_defended_attacked.csv"), r.defended_attacked->to_csv());
  }
  write_text(c.out / "report.json", reports.dump(2) + "\n");
  write_text(c.out / "report.csv", table.to_csv());
  write_text(c.out / "timing.json", timing.dump(2) + "\n");

  std::printf("%s", table.to_csv().c_str());
  const EvalReport& last = table.reports.back();
  std::printf("\nconfusion, %s defense under %s:\n%s", to_string(last.defense.method).c_str(),
              to_string(last.attack->method).c_str(),
              (last.defended_attacked ? *last.defended_attacked : *last.attacked).to_ascii().c_str());
  std::printf("reports in %s\n", c.out.string().c_str());
  return 0;
}

int cmd_sweep(const Globals& g, const std::string& model_path, const std::string& data_dir, std::string sigma2,
              std::string blocks, const AttackFlags& f) {
  Context c = make_context(g, "sweep");
  override_attack(c.setup.attack, f);
  if (sigma2.empty()) sigma2 = c.kv.has("sweep_sigma2") ? c.kv.get("sweep_sigma2") : "0.05:0.175:0.025";
  if (blocks.empty()) blocks = c.kv.has("sweep_blocks") ? c.kv.get("sweep_blocks") : "1:7";
  const SweepGrid grid{parse_real_grid(sigma2), parse_int_grid(blocks)};
  const auto model = obtain_model(c, model_path);
  const auto data = obtain_test_set(c, data_dir);
  const auto t0 = std::chrono::steady_clock::now();
  const auto rows = sensitivity_sweep(model, data, grid, c.setup.mdda, c.setup.attack, {c.seed, c.jobs});
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const std::string csv = sweep_to_csv(rows);
  write_text(c.out / "sweep.csv", csv);
  std::printf("%s%zu grid points in %.1f s; written to %s\n", csv.c_str(), rows.size(), secs,
              (c.out / "sweep.csv").string().c_str());
  return 0;
}

void add_attack_flags(CLI::App* cmd, AttackFlags& f) {
  cmd->add_option("--method", f.method, "fgsm, bim, pgd or cw");
  cmd->add_option("--eps", f.eps, "L-inf budget, e.g. 6/255 or 0.0235");
  cmd->add_option("--steps", f.steps, "iterations for bim, pgd and cw")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiscale diffusion-denoising purification on a toy lesion classifier"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "master seed, decimal or 0x-hex (default 0)");
  app.add_option("--config", g.config, "key = value configuration file");
  app.add_option("--out", g.out, "output directory (output image for purify)");
  app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber);

  std::string model_path, data_dir, in_path, method, attacks, defenses, sigma2, blocks;
  int bits = 0;
  AttackFlags attack_flags;

  auto* gen = app.add_subcommand("gen-data", "write the synthetic train/test datasets");
  auto* tr = app.add_subcommand("train-toy", "train the toy classifier");
  tr->add_option("--data", data_dir, "directory made by gen-data (default: generate)");
  auto* atk = app.add_subcommand("attack", "attack a dataset and save the adversarial images");
  atk->add_option("--model", model_path, "model file (default: train from the seed)");
  atk->add_option("--data", data_dir, "dataset directory (default: generated test split)");
  add_attack_flags(atk, attack_flags);
  auto* def = app.add_subcommand("defend", "apply a preprocessing defense to a dataset");
  def->add_option("--method", method, "bdr or mdda")->required();
  def->add_option("--bits", bits, "bit depth for bdr")->check(CLI::Range(1, 8));
  def->add_option("--data", data_dir, "dataset directory (default: generated test split)");
  def->add_option("--model", model_path, "report accuracy before and after with this model");
  auto* pur = app.add_subcommand("purify", "purify one image");
  pur->add_option("--in", in_path, "input PNG/PGM/PPM")->required();
  auto* ev = app.add_subcommand("evaluate", "accuracy and confusion reports");
  ev->add_option("--model", model_path, "model file (default: train from the seed)");
  ev->add_option("--data", data_dir, "dataset directory (default: generated test split)");
  ev->add_option("--attacks", attacks, "comma list (default: config `attack`)");
  ev->add_option("--defenses", defenses, "comma list of none, bdr, mdda (default: none,mdda)");
  ev->add_option("--eps", attack_flags.eps, "L-inf budget, e.g. 6/255");
  ev->add_option("--steps", attack_flags.steps, "iterations for bim, pgd and cw")->check(CLI::PositiveNumber);
  auto* sw = app.add_subcommand("sweep", "sigma2 x block-count sensitivity sweep");
  sw->add_option("--model", model_path, "model file (default: train from the seed)");
  sw->add_option("--data", data_dir, "dataset directory (default: generated test split)");
  sw->add_option("--sigma2", sigma2, "grid, lo:hi:step or a comma list (default 0.05:0.175:0.025)");
  sw->add_option("--blocks", blocks, "grid, lo:hi or a comma list (default 1:7)");
  add_attack_flags(sw, attack_flags);
  for (auto* sub : {gen, tr, atk, def, pur, ev, sw}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(g);
    if (tr->parsed()) return cmd_train(g, data_dir);
    if (atk->parsed()) return cmd_attack(g, model_path, data_dir, attack_flags);
    if (def->parsed()) return cmd_defend(g, method, bits, data_dir, model_path);
    if (pur->parsed()) return cmd_purify(g, in_path);
    if (ev->parsed()) return cmd_evaluate(g, model_path, data_dir, attacks, defenses, attack_flags);
    if (sw->parsed()) return cmd_sweep(g, model_path, data_dir, sigma2, blocks, attack_flags);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
