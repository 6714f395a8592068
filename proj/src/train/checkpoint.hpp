#ifndef DUALCYCLE_TRAIN_CHECKPOINT_HPP
#define DUALCYCLE_TRAIN_CHECKPOINT_HPP

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "losses/losses.hpp"
#include "models/discriminator.hpp"
#include "models/generator.hpp"
#include "train/adam.hpp"

namespace dualcycle::train {

// Discriminator loss split into its real and fake halves, kept per iteration
// for the training-curve plot.
struct DiscComponents {
  int64_t iteration = 0;
  double real_term = 0.0;
  double fake_term = 0.0;
};

// Everything a run needs to continue exactly where it stopped. All other
// randomness (shuffles, crops, noise draws) is derived statelessly from
// master_seed plus the epoch/iteration counters, so those two counters are
// the entire RNG state.
struct TrainState {
  int64_t epoch = 0;      // completed epochs
  int64_t iteration = 0;  // completed iterations across all epochs
  uint64_t master_seed = 0;
  models::GeneratorSpec gen_spec;
  models::DiscriminatorSpec disc_spec;
  models::DualPathUNet generator{nullptr};
  models::PatchDiscriminator discriminator{nullptr};
  std::shared_ptr<Adam> g_opt;
  std::shared_ptr<Adam> d_opt;
  std::vector<losses::LossRecord> history;
  std::vector<DiscComponents> component_history;
};

TrainState make_train_state(const models::GeneratorSpec& gen_spec,
                            const models::DiscriminatorSpec& disc_spec,
                            uint64_t seed, const Adam::Options& adam);

// Single-file archive: JSON header (specs, counters, loss history, tensor
// manifest) followed by the raw tensor payload. Writes are atomic
// (temp + rename); loads either return a fully constructed state or throw.
void save_checkpoint(const std::filesystem::path& path, const TrainState& st);
TrainState load_checkpoint(const std::filesystem::path& path);

// Same as load_checkpoint but rejects files whose embedded specs differ from
// the expected ones.
TrainState load_checkpoint(const std::filesystem::path& path,
                           const models::GeneratorSpec& expected_gen,
                           const models::DiscriminatorSpec& expected_disc);

}  // namespace dualcycle::train

#endif
