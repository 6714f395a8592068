#include "train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "core/rng.hpp"
#include "data/png_io.hpp"
#include "train/curves.hpp"

namespace dualcycle::train {

namespace fs = std::filesystem;

void CyclePolicy::validate() const {
  if (!image_cycle_enabled && !noise_cycle_enabled) {
    throw std::invalid_argument("cycle policy: at least one cycle must run");
  }
}

namespace {

std::string to_string(CyclePolicy::RealPairSource s) {
  return s == CyclePolicy::RealPairSource::ImageGtPair ? "image_gt_pair"
                                                       : "noise_gt_pair";
}

CyclePolicy::RealPairSource real_pair_source_from_string(const std::string& s) {
  if (s == "image_gt_pair") return CyclePolicy::RealPairSource::ImageGtPair;
  if (s == "noise_gt_pair") return CyclePolicy::RealPairSource::NoiseGtPair;
  throw std::invalid_argument("unknown real pair source: " + s);
}

}  // namespace

void to_json(nlohmann::json& j, const CyclePolicy& p) {
  j = nlohmann::json{
      {"image_cycle_enabled", p.image_cycle_enabled},
      {"noise_cycle_enabled", p.noise_cycle_enabled},
      {"noise_real_pair_source", to_string(p.noise_real_pair_source)},
      {"noise_route", models::to_string(p.noise_route)}};
}

void from_json(const nlohmann::json& j, CyclePolicy& p) {
  j.at("image_cycle_enabled").get_to(p.image_cycle_enabled);
  j.at("noise_cycle_enabled").get_to(p.noise_cycle_enabled);
  p.noise_real_pair_source =
      real_pair_source_from_string(j.at("noise_real_pair_source"));
  p.noise_route = models::path_mode_from_string(j.at("noise_route"));
}

void to_json(nlohmann::json& j, const PreprocessConfig& p) {
  j = nlohmann::json{{"resize_to", p.resize_to}, {"crop_to", p.crop_to}};
}

void from_json(const nlohmann::json& j, PreprocessConfig& p) {
  j.at("resize_to").get_to(p.resize_to);
  j.at("crop_to").get_to(p.crop_to);
}

void TrainerConfig::validate() const {
  generator.validate();
  discriminator.validate();
  schedule.validate();
  weights.validate();
  policy.validate();
  noise.validate();
  if (preprocess.crop_to != generator.input_size) {
    throw std::invalid_argument(
        "trainer config: preprocess crop size must equal generator input "
        "size");
  }
  if (noise.target_size != generator.input_size) {
    throw std::invalid_argument(
        "trainer config: noise target size must equal generator input size");
  }
  if (out_dir.empty()) {
    throw std::invalid_argument("trainer config: out_dir not set");
  }
}

void to_json(nlohmann::json& j, const TrainerConfig& c) {
  j = nlohmann::json{{"generator", c.generator},
                     {"discriminator", c.discriminator},
                     {"schedule", c.schedule},
                     {"weights", c.weights},
                     {"policy", c.policy},
                     {"noise", c.noise},
                     {"preprocess", c.preprocess},
                     {"seed", c.seed},
                     {"checkpoint_every", c.checkpoint_every},
                     {"sample_every", c.sample_every},
                     {"stop_after_epoch", c.stop_after_epoch},
                     {"out_dir", c.out_dir}};
}

void from_json(const nlohmann::json& j, TrainerConfig& c) {
  j.at("generator").get_to(c.generator);
  j.at("discriminator").get_to(c.discriminator);
  j.at("schedule").get_to(c.schedule);
  j.at("weights").get_to(c.weights);
  j.at("policy").get_to(c.policy);
  j.at("noise").get_to(c.noise);
  j.at("preprocess").get_to(c.preprocess);
  j.at("seed").get_to(c.seed);
  j.at("checkpoint_every").get_to(c.checkpoint_every);
  j.at("sample_every").get_to(c.sample_every);
  j.at("stop_after_epoch").get_to(c.stop_after_epoch);
  j.at("out_dir").get_to(c.out_dir);
}

Batch make_batch(const std::vector<data::SamplePair>& samples) {
  if (samples.empty()) {
    throw std::invalid_argument("make_batch: empty batch");
  }
  std::vector<torch::Tensor> images, masks;
  images.reserve(samples.size());
  masks.reserve(samples.size());
  for (const auto& s : samples) {
    images.push_back(s.image);
    masks.push_back(s.mask);
  }
  return Batch{torch::stack(images), torch::stack(masks)};
}

DualCycleTrainer::DualCycleTrainer(TrainerConfig config)
    : config_(std::move(config)),
      state_(make_train_state(config_.generator, config_.discriminator,
                              config_.seed, Adam::Options{config_.schedule.lr0})) {
  config_.validate();
}

DualCycleTrainer::DualCycleTrainer(TrainerConfig config, TrainState state)
    : config_(std::move(config)), state_(std::move(state)) {
  config_.validate();
}

void DualCycleTrainer::check_finite(double v, const char* term) const {
  if (!std::isfinite(v)) {
    throw std::runtime_error(std::string("non-finite loss term '") + term +
                             "' at iteration " +
                             std::to_string(state_.iteration));
  }
}

namespace {

torch::Tensor scores(const torch::Tensor& logits) {
  return torch::sigmoid(logits);
}

}  // namespace

double DualCycleTrainer::discriminator_step_image(const Batch& b) {
  auto fake = state_.generator->forward_image(b.images).detach();
  auto real_p = scores(state_.discriminator->forward(b.images, b.masks));
  auto fake_p = scores(state_.discriminator->forward(b.images, fake));

  auto real_term = -0.5 * real_p.to(torch::kFloat64)
                              .clamp(losses::kProbFloor, 1.0 - losses::kProbFloor)
                              .log()
                              .mean();
  auto loss = losses::discriminator_loss(real_p, fake_p);
  last_components_.real_term = real_term.item<double>();
  last_components_.fake_term = loss.item<double>() - last_components_.real_term;

  state_.d_opt->zero_grad();
  loss.backward();
  state_.d_opt->step();
  return loss.item<double>();
}

std::pair<double, double> DualCycleTrainer::generator_step_image(
    const Batch& b) {
  auto out = state_.generator->forward_image(b.images);
  auto fake_p = scores(state_.discriminator->forward(b.images, out));
  auto g_adv = losses::generator_adversarial_loss(fake_p);
  auto l1 = losses::l1_loss(out, b.masks);
  auto total = config_.weights.alpha * l1 + config_.weights.beta * g_adv;

  state_.g_opt->zero_grad();
  total.backward();
  state_.g_opt->step();
  return {g_adv.item<double>(), l1.item<double>()};
}

double DualCycleTrainer::discriminator_step_noise(const Batch& b,
                                                  const torch::Tensor& noise) {
  auto fake = state_.generator->forward(noise, config_.policy.noise_route)
                  .detach();
  torch::Tensor real_logits;
  if (config_.policy.noise_real_pair_source ==
      CyclePolicy::RealPairSource::ImageGtPair) {
    real_logits = state_.discriminator->forward(b.images, b.masks);
  } else {
    real_logits = state_.discriminator->forward(noise, b.masks);
  }
  auto real_p = scores(real_logits);
  auto fake_p = scores(state_.discriminator->forward(noise, fake));
  auto loss = losses::discriminator_loss(real_p, fake_p);

  state_.d_opt->zero_grad();
  loss.backward();
  state_.d_opt->step();
  return loss.item<double>();
}

double DualCycleTrainer::generator_step_noise(const torch::Tensor& noise) {
  auto out = state_.generator->forward(noise, config_.policy.noise_route);
  auto fake_p = scores(state_.discriminator->forward(noise, out));
  auto g_adv = losses::generator_adversarial_loss(fake_p);
  auto total = config_.weights.beta * g_adv;

  state_.g_opt->zero_grad();
  total.backward();
  state_.g_opt->step();
  return g_adv.item<double>();
}

torch::Tensor DualCycleTrainer::sample_noise_for_iteration(int64_t batch_size) {
  return data::sample_noise_batch(
      config_.noise, batch_size,
      core::derive_seed(state_.master_seed, "iter_noise", {state_.iteration}));
}

losses::LossRecord DualCycleTrainer::train_iteration(const Batch& b) {
  losses::LossRecord rec;
  rec.iteration = state_.iteration;
  last_components_ = DiscComponents{state_.iteration, 0.0, 0.0};

  if (config_.policy.image_cycle_enabled) {
    rec.d_image = discriminator_step_image(b);
    check_finite(rec.d_image, "d_image");
    auto [g_adv, l1] = generator_step_image(b);
    rec.g_adv_image = g_adv;
    rec.l1 = l1;
    check_finite(rec.g_adv_image, "g_adv_image");
    check_finite(rec.l1, "l1");
  }

  if (config_.policy.noise_cycle_enabled) {
    auto noise = sample_noise_for_iteration(b.images.size(0));
    rec.d_noise = discriminator_step_noise(b, noise);
    check_finite(rec.d_noise, "d_noise");
    rec.g_adv_noise = generator_step_noise(noise);
    check_finite(rec.g_adv_noise, "g_adv_noise");
  }

  rec.g_total = losses::total_generator_objective(
      rec.l1, rec.g_adv_image, rec.g_adv_noise, config_.weights);
  state_.iteration += 1;
  state_.history.push_back(rec);
  last_components_.iteration = rec.iteration;
  state_.component_history.push_back(last_components_);
  return rec;
}

void DualCycleTrainer::write_history_csv() const {
  std::ofstream csv(fs::path(config_.out_dir) / "losses.csv",
                    std::ios::trunc);
  csv << losses::loss_csv_header() << "\n";
  for (const auto& r : state_.history) {
    csv << losses::to_csv_row(r) << "\n";
  }
}

void DualCycleTrainer::emit_samples(const data::DatasetSplits& data,
                                    int64_t epoch) {
  torch::NoGradGuard no_grad;
  const auto& pool = data.val.empty() ? data.train : data.val;
  const int64_t n_show = std::min<int64_t>(4, pool.size());

  std::vector<torch::Tensor> image_tiles;
  for (int64_t i = 0; i < n_show; ++i) {
    auto p = data::preprocess(pool[i], config_.preprocess.resize_to,
                              config_.preprocess.crop_to, false, 0);
    auto out = state_.generator->forward_image(p.image.unsqueeze(0)).squeeze(0);
    image_tiles.push_back(p.image);
    image_tiles.push_back(out);
    image_tiles.push_back(p.mask);
  }
  fs::path samples_dir = fs::path(config_.out_dir) / "samples";
  if (!image_tiles.empty()) {
    data::write_contact_sheet(
        samples_dir / ("epoch_" + std::to_string(epoch) + "_imagepath.png"),
        image_tiles, 3);
  }

  std::vector<torch::Tensor> noise_tiles;
  for (int64_t i = 0; i < 8; ++i) {
    auto noise = data::sample_noise(
        config_.noise,
        core::derive_seed(state_.master_seed, "viz_noise", {epoch, i}));
    auto out = state_.generator
                   ->forward(noise.unsqueeze(0), config_.policy.noise_route)
                   .squeeze(0);
    noise_tiles.push_back(out);
  }
  data::write_contact_sheet(
      samples_dir / ("epoch_" + std::to_string(epoch) + "_noisepath.png"),
      noise_tiles, 4);
}

void DualCycleTrainer::run(const data::DatasetSplits& data) {
  if (data.train.empty()) {
    throw std::invalid_argument("run: empty training split");
  }
  fs::create_directories(config_.out_dir);
  fs::create_directories(fs::path(config_.out_dir) / "checkpoints");

  // Authoritative history lives in the state; rewrite the CSV so resumed
  // runs produce exactly the file an uninterrupted run would.
  write_history_csv();
  std::ofstream csv(fs::path(config_.out_dir) / "losses.csv", std::ios::app);

  const int64_t total = config_.schedule.total_epochs;
  const int64_t stop = config_.stop_after_epoch > 0
                           ? std::min(config_.stop_after_epoch, total)
                           : total;

  for (int64_t epoch = state_.epoch; epoch < stop; ++epoch) {
    const double lr = lr_at(epoch, config_.schedule);
    state_.g_opt->set_lr(lr);
    state_.d_opt->set_lr(lr);

    std::vector<size_t> order(data.train.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng(
        core::derive_seed(state_.master_seed, "order", {epoch}));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    for (size_t start = 0; start < order.size();
         start += config_.schedule.batch_size) {
      const size_t end = std::min(order.size(),
                                  start + config_.schedule.batch_size);
      std::vector<data::SamplePair> samples;
      samples.reserve(end - start);
      for (size_t k = start; k < end; ++k) {
        const auto idx = static_cast<int64_t>(order[k]);
        samples.push_back(data::preprocess(
            data.train[order[k]], config_.preprocess.resize_to,
            config_.preprocess.crop_to, true,
            core::derive_seed(state_.master_seed, "crop", {epoch, idx})));
      }
      auto rec = train_iteration(make_batch(samples));
      csv << losses::to_csv_row(rec) << "\n";
      csv.flush();
    }

    state_.epoch = epoch + 1;
    const bool last = state_.epoch == stop;
    if (last || (config_.checkpoint_every > 0 &&
                 state_.epoch % config_.checkpoint_every == 0)) {
      save_checkpoint(fs::path(config_.out_dir) / "checkpoints" /
                          ("epoch_" + std::to_string(state_.epoch) + ".ckpt"),
                      state_);
    }
    if (config_.sample_every > 0 &&
        (last || state_.epoch % config_.sample_every == 0)) {
      emit_samples(data, state_.epoch);
    }
  }

  write_training_curves_png(fs::path(config_.out_dir) / "training_curves.png",
                            state_.history, state_.component_history);
}

std::filesystem::path run_training(
    const TrainerConfig& config, const data::DatasetSplits& data,
    const std::optional<std::filesystem::path>& resume_from) {
  config.validate();
  fs::create_directories(config.out_dir);
  fs::path config_path = fs::path(config.out_dir) / "config.json";
  if (!fs::exists(config_path)) {
    nlohmann::json j = config;
    std::ofstream out(config_path);
    out << j.dump(2) << "\n";
  }

  if (resume_from) {
    auto st = load_checkpoint(*resume_from, config.generator,
                              config.discriminator);
    DualCycleTrainer trainer(config, std::move(st));
    trainer.run(data);
    return config.out_dir;
  }
  DualCycleTrainer trainer(config);
  trainer.run(data);
  return config.out_dir;
}

}  // namespace dualcycle::train
