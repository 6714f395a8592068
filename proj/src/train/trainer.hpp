#ifndef DUALCYCLE_TRAIN_TRAINER_HPP
#define DUALCYCLE_TRAIN_TRAINER_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "data/dataset.hpp"
#include "data/noise.hpp"
#include "losses/losses.hpp"
#include "models/discriminator.hpp"
#include "models/generator.hpp"
#include "train/checkpoint.hpp"
#include "train/schedule.hpp"

namespace dualcycle::train {

// Which cycles run each iteration and how the noise cycle builds its "real"
// discriminator pair. noise_route exists for the scenario ablations that
// push noise down the image path.
struct CyclePolicy {
  bool image_cycle_enabled = true;
  bool noise_cycle_enabled = true;
  enum class RealPairSource { ImageGtPair, NoiseGtPair };
  RealPairSource noise_real_pair_source = RealPairSource::ImageGtPair;
  models::PathMode noise_route = models::PathMode::NoisePath;

  void validate() const;
};

void to_json(nlohmann::json& j, const CyclePolicy& p);
void from_json(const nlohmann::json& j, CyclePolicy& p);

struct PreprocessConfig {
  int64_t resize_to = 288;
  int64_t crop_to = 256;
};

void to_json(nlohmann::json& j, const PreprocessConfig& p);
void from_json(const nlohmann::json& j, PreprocessConfig& p);

struct TrainerConfig {
  models::GeneratorSpec generator;
  models::DiscriminatorSpec discriminator;
  TrainSchedule schedule;
  losses::LossWeights weights;
  CyclePolicy policy;
  data::NoiseSpec noise;
  PreprocessConfig preprocess;
  uint64_t seed = 0;
  int64_t checkpoint_every = 10;  // epochs between checkpoints, 0 = final only
  int64_t sample_every = 10;      // epochs between sample sheets, 0 = never
  int64_t stop_after_epoch = 0;   // pause the run early, 0 = run to the end
  std::string out_dir;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainerConfig& c);
void from_json(const nlohmann::json& j, TrainerConfig& c);

struct Batch {
  torch::Tensor images;  // [B, C, S, S]
  torch::Tensor masks;   // [B, 1, S, S]
};

Batch make_batch(const std::vector<data::SamplePair>& samples);

// Runs the per-iteration two-cycle procedure. The four sub-steps are public
// so the freeze-alternation guarantees can be checked directly.
class DualCycleTrainer {
 public:
  explicit DualCycleTrainer(TrainerConfig config);
  DualCycleTrainer(TrainerConfig config, TrainState state);

  // Image cycle: generator frozen while the discriminator learns on
  // (image, gt) vs (image, detached output); then roles swap.
  double discriminator_step_image(const Batch& b);
  // Returns (g_adv_image, l1).
  std::pair<double, double> generator_step_image(const Batch& b);

  // Noise cycle, analogous, with fresh noise per batch element. Only the
  // decoder and noise bottleneck can move when the encoder stop is active.
  double discriminator_step_noise(const Batch& b, const torch::Tensor& noise);
  double generator_step_noise(const torch::Tensor& noise);

  losses::LossRecord train_iteration(const Batch& b);

  // Full run over the train split: per-epoch shuffles and crops, the lr
  // schedule applied to both optimizers, CSV/checkpoint/sample emission.
  void run(const data::DatasetSplits& data);

  torch::Tensor sample_noise_for_iteration(int64_t batch_size);

  TrainState& state() { return state_; }
  const TrainerConfig& config() const { return config_; }

 private:
  void check_finite(double v, const char* term) const;
  void emit_samples(const data::DatasetSplits& data, int64_t epoch);
  void write_history_csv() const;

  TrainerConfig config_;
  TrainState state_;
  DiscComponents last_components_;
};

// Convenience wrapper: fresh trainer (or resumed when `resume_from` is set),
// full run, returns the run directory.
std::filesystem::path run_training(
    const TrainerConfig& config, const data::DatasetSplits& data,
    const std::optional<std::filesystem::path>& resume_from = std::nullopt);

}  // namespace dualcycle::train

#endif
