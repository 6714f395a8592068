// Command-line front end: dataset synthesis, dual-cycle training, split
// evaluation, the noise-injection scenario lab, and the VAE capacity sweep.
//
// Config precedence: explicit flags > --config file > built-in defaults.
// Every command writes the fully-resolved config.json into its output
// directory; rerunning with --config <that file> reproduces the run.
//
// Exit codes: 0 success, 1 usage/config error, 2 runtime failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "data/dataset.hpp"
#include "data/synthetic.hpp"
#include "eval/metrics.hpp"
#include "lab/scenarios.hpp"
#include "train/checkpoint.hpp"
#include "train/trainer.hpp"
#include "vae/vae.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace dualcycle;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Any key in the user config must exist in the fully-populated reference;
// nested objects are checked recursively.
void check_keys(const json& user, const json& reference,
                const std::string& path) {
  if (!user.is_object()) return;
  std::vector<std::string> unknown;
  for (const auto& [k, v] : user.items()) {
    if (!reference.contains(k)) {
      unknown.push_back(path + k);
    } else if (v.is_object()) {
      check_keys(v, reference.at(k), path + k + ".");
    }
  }
  if (!unknown.empty()) {
    std::ostringstream os;
    os << "unknown config key(s):";
    for (const auto& k : unknown) os << ' ' << k;
    throw ConfigError(os.str());
  }
}

void merge_config(json& base, const json& patch) {
  for (const auto& [k, v] : patch.items()) {
    if (v.is_object() && base.contains(k) && base.at(k).is_object()) {
      merge_config(base.at(k), v);
    } else {
      base[k] = v;
    }
  }
}

// Resolves defaults -> config file -> explicitly-set flags.
json resolve_config(const json& defaults, const std::string& config_file,
                    const json& flag_patch) {
  json resolved = defaults;
  if (!config_file.empty()) {
    std::ifstream in(config_file);
    if (!in) throw ConfigError("cannot open config file: " + config_file);
    json file_cfg;
    try {
      file_cfg = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("malformed config file: ") + e.what());
    }
    file_cfg.erase("command");  // emitted for humans, not an input
    check_keys(file_cfg, defaults, "");
    merge_config(resolved, file_cfg);
  }
  merge_config(resolved, flag_patch);
  return resolved;
}

// Records flag values for options the user actually passed.
class FlagPatch {
 public:
  template <typename T>
  void set(const CLI::Option* opt, const std::string& pointer, const T& value) {
    if (opt != nullptr && opt->count() > 0) {
      j_[json::json_pointer(pointer)] = value;
    }
  }
  const json& patch() const { return j_; }

 private:
  json j_ = json::object();
};

fs::path resolve_out_dir(const std::string& out) {
  fs::path p(out);
  const char* root = std::getenv("DUALCYCLE_OUTPUT_ROOT");
  if (root && *root && p.is_relative()) {
    return fs::path(root) / p;
  }
  return p;
}

void write_resolved_config(const fs::path& out_dir, json cfg,
                           const std::string& command) {
  cfg["command"] = command;
  fs::create_directories(out_dir);
  std::ofstream out(out_dir / "config.json");
  out << cfg.dump(2) << "\n";
}

std::vector<data::SamplePair> load_pairs(const std::string& dir) {
  fs::path root(dir);
  std::optional<fs::path> manifest;
  if (fs::exists(root / "manifest.json")) manifest = root / "manifest.json";
  return data::load_dataset(root, manifest);
}

std::vector<torch::Tensor> masks_of(const std::vector<data::SamplePair>& ps) {
  std::vector<torch::Tensor> masks;
  masks.reserve(ps.size());
  for (const auto& p : ps) masks.push_back(p.mask);
  return masks;
}

// ---------------------------------------------------------------- synth --

struct SynthConfig {
  std::string out = "synth_data";
  int64_t n = 100;
  int64_t size = 64;
  double noise_level = 0.6;
  uint64_t seed = 7;
};

void to_json(json& j, const SynthConfig& c) {
  j = json{{"out", c.out},
           {"n", c.n},
           {"size", c.size},
           {"noise_level", c.noise_level},
           {"seed", c.seed}};
}

void from_json(const json& j, SynthConfig& c) {
  j.at("out").get_to(c.out);
  j.at("n").get_to(c.n);
  j.at("size").get_to(c.size);
  j.at("noise_level").get_to(c.noise_level);
  j.at("seed").get_to(c.seed);
}

int run_synth(const json& resolved, bool force) {
  SynthConfig cfg = resolved.get<SynthConfig>();
  if (cfg.n < 1) throw ConfigError("synth: --n must be >= 1");
  if (cfg.size < 16) throw ConfigError("synth: --size must be >= 16");
  fs::path out = resolve_out_dir(cfg.out);
  if (fs::exists(out) && !fs::is_empty(out) && !force) {
    throw ConfigError("output directory " + out.string() +
                      " is not empty (use --force to overwrite)");
  }
  auto samples = data::synthesize_ellipse_dataset(cfg.n, cfg.size,
                                                  cfg.noise_level, cfg.seed);
  data::write_dataset_pngs(out, samples);
  write_resolved_config(out, resolved, "synth");
  std::cout << "wrote " << samples.size() << " image/mask pairs to " << out
            << "\n";
  return 0;
}

// ---------------------------------------------------------------- train --

struct TrainCommandConfig {
  std::string dataset;
  data::SplitRatios ratios;
  uint64_t split_seed = 1;
  train::TrainerConfig trainer;
};

void to_json(json& j, const TrainCommandConfig& c) {
  j = json{{"dataset", c.dataset},
           {"split_ratios", c.ratios},
           {"split_seed", c.split_seed},
           {"trainer", c.trainer}};
}

void from_json(const json& j, TrainCommandConfig& c) {
  j.at("dataset").get_to(c.dataset);
  j.at("split_ratios").get_to(c.ratios);
  j.at("split_seed").get_to(c.split_seed);
  j.at("trainer").get_to(c.trainer);
}

int run_train(const json& resolved, const std::string& resume) {
  TrainCommandConfig cfg = resolved.get<TrainCommandConfig>();
  if (cfg.dataset.empty()) throw ConfigError("train: --data is required");
  cfg.trainer.out_dir = resolve_out_dir(cfg.trainer.out_dir).string();
  try {
    cfg.trainer.validate();
    cfg.ratios.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  auto pairs = load_pairs(cfg.dataset);
  if (pairs.empty()) throw ConfigError("train: dataset is empty");

  fs::path out_dir(cfg.trainer.out_dir);
  fs::create_directories(out_dir);
  data::DatasetSplits splits;
  if (!resume.empty()) {
    splits = data::apply_split_ids(out_dir / "splits.json", pairs);
  } else {
    splits = data::split_dataset(pairs, cfg.ratios, cfg.split_seed);
    data::save_split_ids(out_dir / "splits.json", splits);
  }

  json final_cfg = cfg;
  write_resolved_config(out_dir, final_cfg, "train");

  std::optional<fs::path> resume_from;
  if (!resume.empty()) resume_from = fs::path(resume);
  train::run_training(cfg.trainer, splits, resume_from);
  std::cout << "run directory: " << out_dir << "\n";
  return 0;
}

// ----------------------------------------------------------------- eval --

struct EvalConfig {
  std::string checkpoint;
  std::string dataset;
  std::string split = "test";
  std::string splits_file;
  double threshold = 0.0;
  int64_t resize_to = 0;  // 0: take it from the run's config.json
  std::string model_tag;
  std::string out;
};

void to_json(json& j, const EvalConfig& c) {
  j = json{{"checkpoint", c.checkpoint}, {"dataset", c.dataset},
           {"split", c.split},           {"splits_file", c.splits_file},
           {"threshold", c.threshold},   {"resize_to", c.resize_to},
           {"model_tag", c.model_tag},   {"out", c.out}};
}

void from_json(const json& j, EvalConfig& c) {
  j.at("checkpoint").get_to(c.checkpoint);
  j.at("dataset").get_to(c.dataset);
  j.at("split").get_to(c.split);
  j.at("splits_file").get_to(c.splits_file);
  j.at("threshold").get_to(c.threshold);
  j.at("resize_to").get_to(c.resize_to);
  j.at("model_tag").get_to(c.model_tag);
  j.at("out").get_to(c.out);
}

int run_eval(const json& resolved) {
  EvalConfig cfg = resolved.get<EvalConfig>();
  if (cfg.checkpoint.empty()) throw ConfigError("eval: --checkpoint required");
  if (cfg.dataset.empty()) throw ConfigError("eval: --data required");
  if (!fs::exists(cfg.checkpoint)) {
    throw ConfigError("eval: checkpoint not found: " + cfg.checkpoint);
  }
  fs::path run_dir = fs::path(cfg.checkpoint).parent_path().parent_path();
  if (cfg.splits_file.empty()) {
    cfg.splits_file = (run_dir / "splits.json").string();
  }
  if (cfg.resize_to == 0 && fs::exists(run_dir / "config.json")) {
    std::ifstream in(run_dir / "config.json");
    json rc = json::parse(in);
    if (rc.contains("trainer")) {
      cfg.resize_to =
          rc.at("trainer").at("preprocess").at("resize_to").get<int64_t>();
    }
  }

  auto st = train::load_checkpoint(cfg.checkpoint);
  if (cfg.resize_to == 0) cfg.resize_to = st.gen_spec.input_size;
  if (cfg.model_tag.empty()) {
    cfg.model_tag = fs::path(cfg.checkpoint).stem().string();
  }
  if (cfg.out.empty()) cfg.out = (run_dir / ("eval_" + cfg.split)).string();
  fs::path out_dir = resolve_out_dir(cfg.out);

  auto pairs = load_pairs(cfg.dataset);
  auto splits = data::apply_split_ids(cfg.splits_file, pairs);
  const auto& subset = [&]() -> const std::vector<data::SamplePair>& {
    switch (data::split_from_string(cfg.split)) {
      case data::Split::Train: return splits.train;
      case data::Split::Val: return splits.val;
      default: return splits.test;
    }
  }();

  // Images and ground truth go through the same deterministic geometry.
  std::vector<data::SamplePair> prepared;
  prepared.reserve(subset.size());
  for (const auto& s : subset) {
    prepared.push_back(data::preprocess(s, cfg.resize_to,
                                        st.gen_spec.input_size, false, 0));
  }
  auto forward = [&](const torch::Tensor& image) {
    return st.generator->forward_image(image.unsqueeze(0)).squeeze(0);
  };
  auto report = eval::evaluate_split(forward, prepared, cfg.threshold,
                                     cfg.model_tag, cfg.split);
  eval::export_report({report}, out_dir);
  write_resolved_config(out_dir, json(cfg), "eval");
  std::cout << cfg.model_tag << " " << cfg.split << ": mean dice "
            << report.mean_dice << ", mean JC " << report.mean_jaccard << " ("
            << report.count << " samples)\n";
  return 0;
}

// ------------------------------------------------------------ scenarios --

struct ScenariosConfig {
  std::string dataset;
  std::string out = "scenario_lab";
  int64_t budget = 30;
  uint64_t seed = 11;
  int64_t samples = 64;
  int64_t width = 16;
  int64_t depth = 3;
  double lr = 2e-4;
  std::vector<std::string> which = {"A", "B", "C", "D", "E"};
};

void to_json(json& j, const ScenariosConfig& c) {
  j = json{{"dataset", c.dataset}, {"out", c.out},     {"budget", c.budget},
           {"seed", c.seed},       {"samples", c.samples}, {"width", c.width},
           {"depth", c.depth},     {"lr", c.lr},       {"which", c.which}};
}

void from_json(const json& j, ScenariosConfig& c) {
  j.at("dataset").get_to(c.dataset);
  j.at("out").get_to(c.out);
  j.at("budget").get_to(c.budget);
  j.at("seed").get_to(c.seed);
  j.at("samples").get_to(c.samples);
  j.at("width").get_to(c.width);
  j.at("depth").get_to(c.depth);
  j.at("lr").get_to(c.lr);
  j.at("which").get_to(c.which);
}

int run_scenarios(const json& resolved) {
  ScenariosConfig cfg = resolved.get<ScenariosConfig>();
  if (cfg.dataset.empty()) throw ConfigError("scenarios: --data required");
  auto pairs = load_pairs(cfg.dataset);
  if (pairs.empty()) throw ConfigError("scenarios: dataset is empty");
  auto masks = masks_of(pairs);

  fs::path out_dir = resolve_out_dir(cfg.out);
  write_resolved_config(out_dir, resolved, "scenarios");

  json summary = json::array();
  for (const auto& name : cfg.which) {
    auto id = lab::scenario_from_string(name);
    lab::ScenarioRunOptions options;
    options.n_samples = cfg.samples;
    options.gen_base_width = cfg.width;
    options.gen_depth = cfg.depth;
    options.disc_base_width = cfg.width;
    options.disc_depth = cfg.depth;
    options.lr0 = cfg.lr;
    options.out_dir = out_dir / lab::to_string(id);
    auto report = lab::run_scenario(id, masks, cfg.budget, cfg.seed, options);
    std::cout << lab::to_string(id) << ": mean residual "
              << report.mean_residual << ", degenerate "
              << report.degenerate_fraction
              << (report.diverged ? " (diverged)" : "") << "\n";
    summary.push_back(json(report));
  }
  std::ofstream sum(out_dir / "summary.json");
  sum << summary.dump(2) << "\n";
  return 0;
}

// ------------------------------------------------------------------ vae --

struct VaeCommandConfig {
  std::string dataset;
  std::string out = "vae_probe";
  std::vector<int64_t> sizes = {2, 3, 4, 8, 16, 32};
  uint64_t seed = 5;
  int64_t epochs = 50;
  double lr = 1e-3;
  double kl_weight = 1.0;
  int64_t batch_size = 16;
  int64_t width = 16;
  int64_t depth = 4;
};

void to_json(json& j, const VaeCommandConfig& c) {
  j = json{{"dataset", c.dataset},   {"out", c.out},
           {"sizes", c.sizes},       {"seed", c.seed},
           {"epochs", c.epochs},     {"lr", c.lr},
           {"kl_weight", c.kl_weight}, {"batch_size", c.batch_size},
           {"width", c.width},       {"depth", c.depth}};
}

void from_json(const json& j, VaeCommandConfig& c) {
  j.at("dataset").get_to(c.dataset);
  j.at("out").get_to(c.out);
  j.at("sizes").get_to(c.sizes);
  j.at("seed").get_to(c.seed);
  j.at("epochs").get_to(c.epochs);
  j.at("lr").get_to(c.lr);
  j.at("kl_weight").get_to(c.kl_weight);
  j.at("batch_size").get_to(c.batch_size);
  j.at("width").get_to(c.width);
  j.at("depth").get_to(c.depth);
}

int run_vae(const json& resolved) {
  VaeCommandConfig cfg = resolved.get<VaeCommandConfig>();
  if (cfg.dataset.empty()) throw ConfigError("vae: --data required");
  if (cfg.sizes.empty()) throw ConfigError("vae: --sizes must be non-empty");
  auto pairs = load_pairs(cfg.dataset);
  if (pairs.empty()) throw ConfigError("vae: dataset is empty");
  auto masks = masks_of(pairs);

  vae::VAEConfig base;
  base.image_size = masks.front().size(-1);
  base.base_width = cfg.width;
  base.depth = cfg.depth;
  base.epochs = cfg.epochs;
  base.lr = cfg.lr;
  base.kl_weight = cfg.kl_weight;
  base.batch_size = cfg.batch_size;

  fs::path out_dir = resolve_out_dir(cfg.out);
  write_resolved_config(out_dir, resolved, "vae");

  auto table = vae::sweep_latents(masks, cfg.sizes, base, cfg.seed);
  vae::write_capacity_table(out_dir, table);
  for (const auto& row : table.rows) {
    std::cout << "latent " << row.latent_size << ": dice "
              << (row.ok ? std::to_string(row.dice) : row.error) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dual-cycle conditional GAN for mask segmentation"};
  app.require_subcommand(1);

  // synth
  SynthConfig synth_def;
  std::string synth_config_file;
  bool synth_force = false;
  auto* synth = app.add_subcommand("synth", "generate an ellipse dataset");
  synth->add_option("--config", synth_config_file, "JSON config file");
  auto* sy_out = synth->add_option("--out", synth_def.out);
  auto* sy_n = synth->add_option("--n", synth_def.n);
  auto* sy_size = synth->add_option("--size", synth_def.size);
  auto* sy_noise = synth->add_option("--noise-level", synth_def.noise_level);
  auto* sy_seed = synth->add_option("--seed", synth_def.seed);
  synth->add_flag("--force", synth_force, "overwrite non-empty output dir");

  // train
  TrainCommandConfig train_def;
  train_def.trainer.out_dir = "runs/train";
  std::string train_config_file, train_mode, train_resume;
  auto* traincmd = app.add_subcommand("train", "train the dual-cycle model");
  traincmd->add_option("--config", train_config_file, "JSON config file");
  auto* t_data = traincmd->add_option("--data", train_def.dataset);
  auto* t_out = traincmd->add_option("--out", train_def.trainer.out_dir);
  auto* t_mode = traincmd->add_option(
      "--mode", train_mode, "dynamic | pix2pix (noise cycle off)");
  auto* t_epochs =
      traincmd->add_option("--epochs", train_def.trainer.schedule.total_epochs);
  auto* t_const = traincmd->add_option(
      "--constant-epochs", train_def.trainer.schedule.constant_epochs);
  auto* t_lr = traincmd->add_option("--lr", train_def.trainer.schedule.lr0);
  auto* t_batch = traincmd->add_option("--batch-size",
                                       train_def.trainer.schedule.batch_size);
  auto* t_alpha = traincmd->add_option("--alpha", train_def.trainer.weights.alpha);
  auto* t_beta = traincmd->add_option("--beta", train_def.trainer.weights.beta);
  auto* t_seed = traincmd->add_option("--seed", train_def.trainer.seed);
  auto* t_splitseed =
      traincmd->add_option("--split-seed", train_def.split_seed);
  auto* t_input = traincmd->add_option("--input-size",
                                       train_def.trainer.generator.input_size);
  auto* t_resize = traincmd->add_option("--resize-to",
                                        train_def.trainer.preprocess.resize_to);
  auto* t_width =
      traincmd->add_option("--width", train_def.trainer.generator.base_width);
  auto* t_depth =
      traincmd->add_option("--depth", train_def.trainer.generator.depth);
  auto* t_dwidth = traincmd->add_option(
      "--disc-width", train_def.trainer.discriminator.base_width);
  auto* t_ddepth = traincmd->add_option("--disc-depth",
                                        train_def.trainer.discriminator.depth);
  auto* t_ckpt = traincmd->add_option("--checkpoint-every",
                                      train_def.trainer.checkpoint_every);
  auto* t_sample =
      traincmd->add_option("--sample-every", train_def.trainer.sample_every);
  auto* t_stop = traincmd->add_option("--stop-after-epoch",
                                      train_def.trainer.stop_after_epoch);
  traincmd->add_option("--resume", train_resume, "checkpoint to resume from");

  // eval
  EvalConfig eval_def;
  std::string eval_config_file;
  auto* evalcmd = app.add_subcommand("eval", "score a checkpoint on a split");
  evalcmd->add_option("--config", eval_config_file, "JSON config file");
  auto* e_ckpt = evalcmd->add_option("--checkpoint", eval_def.checkpoint);
  auto* e_data = evalcmd->add_option("--data", eval_def.dataset);
  auto* e_split = evalcmd->add_option("--split", eval_def.split);
  auto* e_splits = evalcmd->add_option("--splits-file", eval_def.splits_file);
  auto* e_thresh = evalcmd->add_option("--threshold", eval_def.threshold);
  auto* e_resize = evalcmd->add_option("--resize-to", eval_def.resize_to);
  auto* e_tag = evalcmd->add_option("--model-tag", eval_def.model_tag);
  auto* e_out = evalcmd->add_option("--out", eval_def.out);

  // scenarios
  ScenariosConfig scen_def;
  std::string scen_config_file;
  auto* scencmd =
      app.add_subcommand("scenarios", "run the noise-injection scenario lab");
  scencmd->add_option("--config", scen_config_file, "JSON config file");
  auto* s_data = scencmd->add_option("--data", scen_def.dataset);
  auto* s_out = scencmd->add_option("--out", scen_def.out);
  auto* s_budget = scencmd->add_option("--budget", scen_def.budget);
  auto* s_seed = scencmd->add_option("--seed", scen_def.seed);
  auto* s_samples = scencmd->add_option("--samples", scen_def.samples);
  auto* s_width = scencmd->add_option("--width", scen_def.width);
  auto* s_depth = scencmd->add_option("--depth", scen_def.depth);
  auto* s_lr = scencmd->add_option("--lr", scen_def.lr);
  auto* s_which = scencmd->add_option("--scenario", scen_def.which,
                                      "subset of A B C D E (default all)");

  // vae
  VaeCommandConfig vae_def;
  std::string vae_config_file;
  auto* vaecmd = app.add_subcommand("vae", "latent-capacity sweep on masks");
  vaecmd->add_option("--config", vae_config_file, "JSON config file");
  auto* v_data = vaecmd->add_option("--data", vae_def.dataset);
  auto* v_out = vaecmd->add_option("--out", vae_def.out);
  auto* v_sizes = vaecmd->add_option("--sizes", vae_def.sizes)->delimiter(',');
  auto* v_seed = vaecmd->add_option("--seed", vae_def.seed);
  auto* v_epochs = vaecmd->add_option("--epochs", vae_def.epochs);
  auto* v_lr = vaecmd->add_option("--lr", vae_def.lr);
  auto* v_kl = vaecmd->add_option("--kl-weight", vae_def.kl_weight);
  auto* v_batch = vaecmd->add_option("--batch-size", vae_def.batch_size);
  auto* v_width = vaecmd->add_option("--width", vae_def.width);
  auto* v_depth = vaecmd->add_option("--depth", vae_def.depth);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) {
      FlagPatch flags;
      flags.set(sy_out, "/out", synth_def.out);
      flags.set(sy_n, "/n", synth_def.n);
      flags.set(sy_size, "/size", synth_def.size);
      flags.set(sy_noise, "/noise_level", synth_def.noise_level);
      flags.set(sy_seed, "/seed", synth_def.seed);
      auto resolved = resolve_config(json(SynthConfig{}), synth_config_file,
                                     flags.patch());
      return run_synth(resolved, synth_force);
    }

    if (traincmd->parsed()) {
      FlagPatch flags;
      flags.set(t_data, "/dataset", train_def.dataset);
      flags.set(t_out, "/trainer/out_dir", train_def.trainer.out_dir);
      flags.set(t_epochs, "/trainer/schedule/total_epochs",
                train_def.trainer.schedule.total_epochs);
      flags.set(t_const, "/trainer/schedule/constant_epochs",
                train_def.trainer.schedule.constant_epochs);
      flags.set(t_lr, "/trainer/schedule/lr0", train_def.trainer.schedule.lr0);
      flags.set(t_batch, "/trainer/schedule/batch_size",
                train_def.trainer.schedule.batch_size);
      flags.set(t_alpha, "/trainer/weights/alpha",
                train_def.trainer.weights.alpha);
      flags.set(t_beta, "/trainer/weights/beta", train_def.trainer.weights.beta);
      flags.set(t_seed, "/trainer/seed", train_def.trainer.seed);
      flags.set(t_splitseed, "/split_seed", train_def.split_seed);
      flags.set(t_input, "/trainer/generator/input_size",
                train_def.trainer.generator.input_size);
      flags.set(t_resize, "/trainer/preprocess/resize_to",
                train_def.trainer.preprocess.resize_to);
      flags.set(t_width, "/trainer/generator/base_width",
                train_def.trainer.generator.base_width);
      flags.set(t_depth, "/trainer/generator/depth",
                train_def.trainer.generator.depth);
      flags.set(t_dwidth, "/trainer/discriminator/base_width",
                train_def.trainer.discriminator.base_width);
      flags.set(t_ddepth, "/trainer/discriminator/depth",
                train_def.trainer.discriminator.depth);
      flags.set(t_ckpt, "/trainer/checkpoint_every",
                train_def.trainer.checkpoint_every);
      flags.set(t_sample, "/trainer/sample_every",
                train_def.trainer.sample_every);
      flags.set(t_stop, "/trainer/stop_after_epoch",
                train_def.trainer.stop_after_epoch);
      if (t_mode->count() > 0) {
        if (train_mode == "dynamic") {
          flags.set(t_mode, "/trainer/policy/noise_cycle_enabled", true);
        } else if (train_mode == "pix2pix") {
          flags.set(t_mode, "/trainer/policy/noise_cycle_enabled", false);
        } else {
          throw ConfigError("train: unknown --mode '" + train_mode + "'");
        }
      }

      TrainCommandConfig def;
      def.trainer.out_dir = "runs/train";
      def.trainer.preprocess.resize_to = 0;  // 0: auto, input_size * 9/8
      auto resolved =
          resolve_config(json(def), train_config_file, flags.patch());

      // Geometry that follows the generator input size unless overridden.
      const int64_t input =
          resolved.at("trainer").at("generator").at("input_size").get<int64_t>();
      resolved["trainer"]["preprocess"]["crop_to"] = input;
      if (resolved.at("trainer").at("preprocess").at("resize_to").get<int64_t>() ==
          0) {
        resolved["trainer"]["preprocess"]["resize_to"] = (input * 9) / 8;
      }
      resolved["trainer"]["noise"]["target_size"] = input;
      resolved["trainer"]["discriminator"]["input_size"] = input;
      return run_train(resolved, train_resume);
    }

    if (evalcmd->parsed()) {
      FlagPatch flags;
      flags.set(e_ckpt, "/checkpoint", eval_def.checkpoint);
      flags.set(e_data, "/dataset", eval_def.dataset);
      flags.set(e_split, "/split", eval_def.split);
      flags.set(e_splits, "/splits_file", eval_def.splits_file);
      flags.set(e_thresh, "/threshold", eval_def.threshold);
      flags.set(e_resize, "/resize_to", eval_def.resize_to);
      flags.set(e_tag, "/model_tag", eval_def.model_tag);
      flags.set(e_out, "/out", eval_def.out);
      auto resolved =
          resolve_config(json(EvalConfig{}), eval_config_file, flags.patch());
      return run_eval(resolved);
    }

    if (scencmd->parsed()) {
      FlagPatch flags;
      flags.set(s_data, "/dataset", scen_def.dataset);
      flags.set(s_out, "/out", scen_def.out);
      flags.set(s_budget, "/budget", scen_def.budget);
      flags.set(s_seed, "/seed", scen_def.seed);
      flags.set(s_samples, "/samples", scen_def.samples);
      flags.set(s_width, "/width", scen_def.width);
      flags.set(s_depth, "/depth", scen_def.depth);
      flags.set(s_lr, "/lr", scen_def.lr);
      flags.set(s_which, "/which", scen_def.which);
      auto resolved = resolve_config(json(ScenariosConfig{}), scen_config_file,
                                     flags.patch());
      return run_scenarios(resolved);
    }

    if (vaecmd->parsed()) {
      FlagPatch flags;
      flags.set(v_data, "/dataset", vae_def.dataset);
      flags.set(v_out, "/out", vae_def.out);
      flags.set(v_sizes, "/sizes", vae_def.sizes);
      flags.set(v_seed, "/seed", vae_def.seed);
      flags.set(v_epochs, "/epochs", vae_def.epochs);
      flags.set(v_lr, "/lr", vae_def.lr);
      flags.set(v_kl, "/kl_weight", vae_def.kl_weight);
      flags.set(v_batch, "/batch_size", vae_def.batch_size);
      flags.set(v_width, "/width", vae_def.width);
      flags.set(v_depth, "/depth", vae_def.depth);
      auto resolved =
          resolve_config(json(VaeCommandConfig{}), vae_config_file, flags.patch());
      return run_vae(resolved);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
