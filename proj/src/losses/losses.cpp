#include "losses/losses.hpp"

#include <charconv>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dualcycle::losses {

void LossWeights::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0)) {
    throw std::invalid_argument("loss weights must be non-negative");
  }
}

void to_json(nlohmann::json& j, const LossWeights& w) {
  j = nlohmann::json{{"alpha", w.alpha}, {"beta", w.beta}};
}

void from_json(const nlohmann::json& j, LossWeights& w) {
  j.at("alpha").get_to(w.alpha);
  j.at("beta").get_to(w.beta);
}

namespace {

torch::Tensor checked_probs(const torch::Tensor& scores, const char* name) {
  if (!scores.defined() || scores.numel() == 0) {
    throw std::invalid_argument(std::string(name) + ": empty score grid");
  }
  if (!torch::isfinite(scores).all().item<bool>()) {
    throw std::invalid_argument(std::string(name) +
                                ": non-finite score values");
  }
  return scores.to(torch::kFloat64).clamp(kProbFloor, 1.0 - kProbFloor);
}

}  // namespace

torch::Tensor discriminator_loss(const torch::Tensor& real_scores,
                                 const torch::Tensor& fake_scores) {
  auto real = checked_probs(real_scores, "real_scores");
  auto fake = checked_probs(fake_scores, "fake_scores");
  return -0.5 * real.log().mean() - 0.5 * (1.0 - fake).log().mean();
}

torch::Tensor generator_adversarial_loss(const torch::Tensor& fake_scores) {
  auto fake = checked_probs(fake_scores, "fake_scores");
  return -fake.log().mean();
}

torch::Tensor l1_loss(const torch::Tensor& prediction,
                      const torch::Tensor& target) {
  if (prediction.sizes() != target.sizes()) {
    std::ostringstream os;
    os << "l1_loss shape mismatch: " << prediction.sizes() << " vs "
       << target.sizes();
    throw std::invalid_argument(os.str());
  }
  return (prediction.to(torch::kFloat64) - target.to(torch::kFloat64))
      .abs()
      .mean();
}

double total_generator_objective(double l1, double g_adv_image,
                                 double g_adv_noise, const LossWeights& w) {
  w.validate();
  if (!std::isfinite(l1) || !std::isfinite(g_adv_image) ||
      !std::isfinite(g_adv_noise)) {
    throw std::invalid_argument("total_generator_objective: non-finite input");
  }
  return w.alpha * l1 + w.beta * g_adv_image + w.beta * g_adv_noise;
}

std::string loss_csv_header() {
  return "iteration,d_image,g_adv_image,l1,d_noise,g_adv_noise,g_total";
}

std::string to_csv_row(const LossRecord& r) {
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10);
  os << r.iteration << ',' << r.d_image << ',' << r.g_adv_image << ',' << r.l1
     << ',' << r.d_noise << ',' << r.g_adv_noise << ',' << r.g_total;
  return os.str();
}

LossRecord parse_csv_row(const std::string& line) {
  std::istringstream is(line);
  std::string field;
  std::vector<double> vals;
  while (std::getline(is, field, ',')) {
    vals.push_back(std::stod(field));
  }
  if (vals.size() != 7) {
    throw std::invalid_argument("loss CSV row needs 7 fields, got " +
                                std::to_string(vals.size()));
  }
  LossRecord r;
  r.iteration = static_cast<int64_t>(vals[0]);
  r.d_image = vals[1];
  r.g_adv_image = vals[2];
  r.l1 = vals[3];
  r.d_noise = vals[4];
  r.g_adv_noise = vals[5];
  r.g_total = vals[6];
  return r;
}

}  // namespace dualcycle::losses
