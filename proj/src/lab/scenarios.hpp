#ifndef DUALCYCLE_LAB_SCENARIOS_HPP
#define DUALCYCLE_LAB_SCENARIOS_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "data/noise.hpp"
#include "models/generator.hpp"
#include "train/trainer.hpp"

namespace dualcycle::lab {

// The five noise-injection setups, all trained as plain noise -> mask GANs
// (no image cycle, no L1, unconditional discriminator):
//   A: full-size i.i.d. noise straight down the image path, live skips.
//   B: 4x4 noise upsampled to input size, still down the image path.
//   C: full-size i.i.d. noise through the noise bottleneck but live skips.
//   D: 4x4 upsampled noise through the bottleneck with code-injected skips.
//   E: D plus a frozen encoder.
enum class ScenarioId {
  A_RawNoiseInput,
  B_UpsampledLowDim,
  C_HighDimPlusBottleneck,
  D_LowDimPlusBottleneck,
  E_FrozenEncoderPlusD
};

std::string to_string(ScenarioId id);
ScenarioId scenario_from_string(const std::string& s);
std::vector<ScenarioId> all_scenarios();

struct ScenarioPreset {
  ScenarioId id;
  models::GeneratorSpec generator;
  train::CyclePolicy policy;
  data::NoiseSpec noise;
  bool freeze_encoder = false;
};

ScenarioPreset configure_scenario(ScenarioId id,
                                  const models::GeneratorSpec& base);

// Quantifies how well sampled outputs match the target mask family.
struct DistributionFitReport {
  std::string scenario;
  int64_t budget_epochs = 0;
  int64_t n_samples = 0;
  bool diverged = false;
  std::vector<double> residuals;
  double mean_residual = 1.0;
  double median_residual = 1.0;
  double mean_foreground_fraction = 0.0;
  double std_foreground_fraction = 0.0;
  double mean_components = 0.0;
  // Outputs that are (almost) all background or all foreground.
  double degenerate_fraction = 0.0;
};

void to_json(nlohmann::json& j, const DistributionFitReport& r);

struct ScenarioRunOptions {
  int64_t n_samples = 64;
  int64_t gen_base_width = 16;
  int64_t gen_depth = 3;
  int64_t disc_base_width = 16;
  int64_t disc_depth = 3;
  double lr0 = 2e-4;
  int64_t batch_size = 1;
  std::filesystem::path out_dir;
};

// Trains the preset against the mask collection for `budget` epochs
// (budget 0 scores the untrained model), then samples n_samples noise
// outputs and writes report.json plus a contact sheet. Training divergence
// is recorded in the report rather than thrown.
DistributionFitReport run_scenario(ScenarioId id,
                                   const std::vector<torch::Tensor>& masks,
                                   int64_t budget_epochs, uint64_t seed,
                                   const ScenarioRunOptions& options);

// Same, but with an explicit base generator spec instead of one sized from
// the masks.
DistributionFitReport run_scenario_with_base(
    ScenarioId id, const models::GeneratorSpec& base,
    const std::vector<torch::Tensor>& masks, int64_t budget_epochs,
    uint64_t seed, const ScenarioRunOptions& options);

}  // namespace dualcycle::lab

#endif
