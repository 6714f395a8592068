#ifndef DUALCYCLE_LOSSES_HPP
#define DUALCYCLE_LOSSES_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

namespace dualcycle::losses {

// Relative weighting of the generator objective: alpha scales the L1 term,
// beta scales both adversarial terms.
struct LossWeights {
  double alpha = 10.0;
  double beta = 1.0;

  void validate() const;
};

void to_json(nlohmann::json& j, const LossWeights& w);
void from_json(const nlohmann::json& j, LossWeights& w);

// Probabilities are clamped to [kProbFloor, 1 - kProbFloor] before any log,
// so early-training saturation cannot produce -inf.
inline constexpr double kProbFloor = 1e-7;

// Binary cross-entropy discriminator objective on patch score grids:
//   -1/2 mean(log real) - 1/2 mean(log(1 - fake)).
// Scores are probabilities in (0, 1); means run over batch and patches.
// Computation is carried out in float64 regardless of input dtype. The
// returned 0-dim tensor stays differentiable w.r.t. both inputs.
torch::Tensor discriminator_loss(const torch::Tensor& real_scores,
                                 const torch::Tensor& fake_scores);

// Non-saturating generator objective: -mean(log fake).
torch::Tensor generator_adversarial_loss(const torch::Tensor& fake_scores);

// Mean absolute difference over all elements. Shapes must match.
torch::Tensor l1_loss(const torch::Tensor& prediction,
                      const torch::Tensor& target);

// alpha * l1 + beta * adv_image + beta * adv_noise.
double total_generator_objective(double l1, double g_adv_image,
                                 double g_adv_noise, const LossWeights& w);

// One training iteration's logged losses. g_total is always the weighted
// combination of the other generator fields.
struct LossRecord {
  int64_t iteration = 0;
  double d_image = 0.0;
  double g_adv_image = 0.0;
  double l1 = 0.0;
  double d_noise = 0.0;
  double g_adv_noise = 0.0;
  double g_total = 0.0;
};

std::string loss_csv_header();
// Values are printed with max_digits10 so a parse round-trips exactly.
std::string to_csv_row(const LossRecord& r);
LossRecord parse_csv_row(const std::string& line);

}  // namespace dualcycle::losses

#endif
